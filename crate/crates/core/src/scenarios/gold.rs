/// Sequence length of the degree-5 Gold family.
pub const GOLD_LENGTH: usize = 31;

/// Preferred pair of degree-5 primitive polynomials, octal notation:
/// `45 = x⁵ + x² + 1` and `75 = x⁵ + x⁴ + x³ + x² + 1`.
pub const GOLD_POLY_A: u32 = 0o45;
pub const GOLD_POLY_B: u32 = 0o75;

/// One period of the binary m-sequence of a degree-5 polynomial given in
/// octal notation (bit `i` is the coefficient of `xⁱ`), from the state
/// `00001`.
pub fn m_sequence(poly: u32) -> Vec<u8> {
    let degree = 5;
    // a_{n+5} = Σ_{i<5} c_i a_{n+i}  (mod 2)
    let mut a: Vec<u8> = vec![0, 0, 0, 0, 1];
    while a.len() < GOLD_LENGTH {
        let n = a.len() - degree;
        let mut next = 0;
        for i in 0..degree {
            if (poly >> i) & 1 == 1 {
                next ^= a[n + i];
            }
        }
        a.push(next);
    }
    a
}

fn bipolar(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

/// The 33 sequences of the length-31 Gold family, as `±1` chips:
/// the two m-sequences followed by `a ⊕ Tⁱb` for every shift `i`.
pub fn gold_family() -> Vec<Vec<f64>> {
    let a = m_sequence(GOLD_POLY_A);
    let b = m_sequence(GOLD_POLY_B);
    let mut family = vec![bipolar(&a), bipolar(&b)];
    for shift in 0..GOLD_LENGTH {
        let bits: Vec<u8> = (0..GOLD_LENGTH)
            .map(|j| a[j] ^ b[(j + shift) % GOLD_LENGTH])
            .collect();
        family.push(bipolar(&bits));
    }
    family
}

/// Periodic correlation `Σ_j x_j y_{(j+lag) mod L}`.
pub fn periodic_correlation(x: &[f64], y: &[f64], lag: usize) -> f64 {
    let l = x.len();
    (0..l).map(|j| x[j] * y[(j + lag) % l]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_sequences_are_balanced_and_maximal() {
        for poly in [GOLD_POLY_A, GOLD_POLY_B] {
            let s = m_sequence(poly);
            assert_eq!(s.iter().filter(|&&b| b == 1).count(), 16);
            let x = bipolar(&s);
            for lag in 1..GOLD_LENGTH {
                assert_eq!(periodic_correlation(&x, &x, lag), -1.0);
            }
        }
    }

    #[test]
    fn family_shape() {
        let f = gold_family();
        assert_eq!(f.len(), 33);
        for s in &f {
            assert_eq!(s.len(), 31);
            assert_eq!(periodic_correlation(s, s, 0), 31.0);
        }
    }
}
