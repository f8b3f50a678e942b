use krrapsp::linalg::{
    build_krylov_basis, build_krylov_basis_counted, condition_number, dot, lanczos_mults, norm, project_half_space,
    project_subspace, r_norm, symmetric_eigenvalues, BasisMatrix, DenseVector, HalfSpace, SymMatrix,
};
use krrapsp::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gauss(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..n).map(|_| gauss(rng, n)).collect();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[k][i] * a[k][j]).sum::<f64>() + if i == j { 0.1 } else { 0.0 }).collect())
        .collect()
}

fn naive_matvec(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows.len()];
    for i in 0..rows.len() {
        for j in 0..x.len() {
            out[i] += rows[i][j] * x[j];
        }
    }
    out
}

/// Cyclic Jacobi eigenvalue iteration.
fn jacobi_eigenvalues(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut a = rows.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

#[test]
fn matvec_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [1, 2, 5, 13] {
        let rows = random_sym(&mut rng, n);
        let r = SymMatrix::from_rows(&rows).unwrap();
        let x = gauss(&mut rng, n);
        let got = r.matvec(&x).unwrap();
        let want = naive_matvec(&rows, &x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
        assert!((r.quad_form(&x).unwrap() - dot(&x, &want)).abs() < 1e-10);
    }
}

#[test]
fn toeplitz_matvec_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let row = gauss(&mut rng, 9);
    let t = SymMatrix::toeplitz(row.clone()).unwrap();
    let dense: Vec<Vec<f64>> = (0..9usize).map(|i| (0..9usize).map(|j| row[i.abs_diff(j)]).collect()).collect();
    let x = gauss(&mut rng, 9);
    let got = t.matvec(&x).unwrap();
    for (a, b) in got.iter().zip(naive_matvec(&dense, &x)) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(t.is_toeplitz());
    assert_eq!(t.to_rows(), dense);
}

#[test]
fn from_rows_rejects_asymmetry() {
    assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]]).is_err());
}

/// Power sequence `p, Rp, …` orthonormalized by modified Gram-Schmidt.
fn power_gram_schmidt(rows: &[Vec<f64>], p: &[f64], d: usize) -> Vec<Vec<f64>> {
    let mut seq = vec![p.to_vec()];
    for _ in 1..d {
        let last = seq.last().unwrap().clone();
        seq.push(naive_matvec(rows, &last));
    }
    let mut q: Vec<Vec<f64>> = Vec::new();
    for mut v in seq {
        for c in &q {
            let coef = dot(c, &v);
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= coef * b);
        }
        let nv = norm(&v);
        q.push(v.iter().map(|a| a / nv).collect());
    }
    q
}

#[test]
fn krylov_basis_spans_power_sequence() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [3, 6, 10] {
        let rows = random_sym(&mut rng, n);
        let r = SymMatrix::from_rows(&rows).unwrap();
        let p = gauss(&mut rng, n);
        for d in 1..=3.min(n) {
            let s = build_krylov_basis(&r, &p, d, 1e-12).unwrap();
            assert_eq!(s.rank(), d);
            assert!(s.orthonormality_error() <= 1e-10);
            let oracle = power_gram_schmidt(&rows, &p, d);
            // Same subspace: every oracle vector is reproduced by SSᵀ.
            for v in &oracle {
                let back = s.project(v).unwrap();
                let err: f64 = back.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-8, "n={n} d={d} err={err}");
            }
            // The first column is p/‖p‖ and the columns keep the Krylov order.
            let first = s.column(0);
            for (a, b) in first.iter().zip(&oracle[0]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn krylov_truncates_on_invariant_subspace() {
    // p is an eigenvector: K_D(R, p) = span{p} for every D.
    let r = SymMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0]);
    let s = build_krylov_basis(&r, &[0.0, 1.0, 0.0, 0.0], 3, 1e-12).unwrap();
    assert_eq!(s.rank(), 1);
    // p spread over two eigenvectors: rank 2.
    let s = build_krylov_basis(&r, &[1.0, 1.0, 0.0, 0.0], 4, 1e-12).unwrap();
    assert_eq!(s.rank(), 2);
}

#[test]
fn krylov_rejects_degenerate_p() {
    let r = SymMatrix::identity(3);
    assert!(matches!(
        build_krylov_basis(&r, &[0.0; 3], 2, 1e-12),
        Err(Error::DegenerateCrossCorrelation(_))
    ));
    assert!(build_krylov_basis(&r, &[1.0, 0.0, 0.0], 4, 1e-12).is_err());
}

#[test]
fn krylov_counted_cost_matches_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (n, d) in [(5, 1), (8, 3), (12, 5)] {
        let rows = random_sym(&mut rng, n);
        let r = SymMatrix::from_rows(&rows).unwrap();
        let (s, cost) = build_krylov_basis_counted(&r, &gauss(&mut rng, n), d, 1e-12, 7).unwrap();
        assert_eq!(s.rank(), d);
        assert_eq!(s.build_tag(), 7);
        let (n, d) = (n as u64, d as u64);
        // Hand expansion: ‖p‖ and scaling, then per new column a matvec,
        // its norm, two Gram-Schmidt passes, the residual norm and scaling.
        let mut want = n + 1 + n;
        for j in 1..d {
            want += n * n + n + 4 * j * n + n + 1 + n;
        }
        assert_eq!(cost, want);
        assert_eq!(cost, lanczos_mults(n, d));
    }
}

#[test]
fn subspace_projection_matches_qr_projector() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, d) = (7, 3);
    let vectors: Vec<Vec<f64>> = (0..d).map(|_| gauss(&mut rng, n)).collect();
    let s = BasisMatrix::orthonormalize(n, &vectors, 0).unwrap();
    let a = DMatrix::from_fn(n, d, |i, j| vectors[j][i]);
    let q = a.qr().q();
    let proj = &q * q.transpose();
    let x = gauss(&mut rng, n);
    let want = &proj * DMatrix::from_column_slice(n, 1, &x);
    let got = project_subspace(&x, &s).unwrap();
    for (a, b) in got.iter().zip(want.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn half_space_projection_closed_form() {
    // {x : x₀ + x₁ ≤ 1}; the projection of (2, 2) is (0.5, 0.5).
    let h = HalfSpace::new(DenseVector::new(vec![1.0, 1.0]).unwrap(), -1.0, DenseVector::zeros(2)).unwrap();
    assert_eq!(h.rhs(), 1.0);
    let p = project_half_space(&[2.0, 2.0], &h).unwrap();
    assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    // Inside points do not move.
    assert_eq!(project_half_space(&[0.0, 0.0], &h).unwrap().as_slice(), &[0.0, 0.0]);
    // A zero normal with a violation has no projection.
    let bad = HalfSpace::new(DenseVector::zeros(2), 1.0, DenseVector::zeros(2)).unwrap();
    assert!(matches!(project_half_space(&[0.0, 0.0], &bad), Err(Error::InconsistentHalfSpace(_))));
}

#[test]
fn eigenvalues_match_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in [1, 3, 8] {
        let rows = random_sym(&mut rng, n);
        let r = SymMatrix::from_rows(&rows).unwrap();
        let got = symmetric_eigenvalues(&r);
        let want = jacobi_eigenvalues(&rows);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{got:?} vs {want:?}");
        }
        let kappa = condition_number(&r).unwrap();
        assert!((kappa - want[n - 1] / want[0]).abs() < 1e-7 * kappa);
    }
    assert!(condition_number(&SymMatrix::diagonal(&[1.0, 0.0])).is_err());
}

#[test]
fn r_norm_rejects_indefinite() {
    let r = SymMatrix::diagonal(&[1.0, -1.0]);
    assert!(r_norm(&[0.0, 1.0], &r).is_err());
    assert_eq!(r_norm(&[3.0, 0.0], &r).unwrap(), 3.0);
}

#[test]
fn non_finite_entries_rejected() {
    assert!(matches!(DenseVector::new(vec![1.0, f64::NAN]), Err(Error::NonFinite(1))));
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_nonexpansive(seed in any::<u64>(), n in 2usize..10, dfrac in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 1 + ((n - 1) as f64 * dfrac) as usize;
        let vectors: Vec<Vec<f64>> = (0..d).map(|_| gauss(&mut rng, n)).collect();
        let s = BasisMatrix::orthonormalize(n, &vectors, 0).unwrap();
        prop_assert!(s.orthonormality_error() <= 1e-10);
        let x = gauss(&mut rng, n);
        let p = s.project(&x).unwrap();
        let pp = s.project(&p).unwrap();
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + norm(&x)));
        }
        prop_assert!(norm(&p) <= norm(&x) * (1.0 + 1e-12));
    }

    #[test]
    fn krylov_basis_is_orthonormal(seed in any::<u64>(), n in 2usize..12, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = random_sym(&mut rng, n);
        let r = SymMatrix::from_rows(&rows).unwrap();
        let s = build_krylov_basis(&r, &gauss(&mut rng, n), d.min(n), 1e-12).unwrap();
        prop_assert!(s.rank() >= 1 && s.rank() <= d.min(n));
        prop_assert!(s.orthonormality_error() <= 1e-10);
    }

    #[test]
    fn half_space_projection_lands_inside(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = DenseVector::new(gauss(&mut rng, n)).unwrap();
        let h = HalfSpace::new(normal, rng.sample(StandardNormal), DenseVector::new(gauss(&mut rng, n)).unwrap()).unwrap();
        let x = gauss(&mut rng, n);
        let p = project_half_space(&x, &h).unwrap();
        prop_assert!(h.violation(p.as_slice()) <= 1e-10 * (1.0 + norm(&x)));
        // Projections onto convex sets are firmly nonexpansive towards members.
        let inside = project_half_space(&gauss(&mut rng, n), &h).unwrap();
        let before: f64 = x.iter().zip(inside.iter()).map(|(a, b)| (a - b).powi(2)).sum();
        let after: f64 = p.iter().zip(inside.iter()).map(|(a, b)| (a - b).powi(2)).sum();
        prop_assert!(after <= before + 1e-9);
    }
}
