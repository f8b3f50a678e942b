//! Closed-form multiplication counts per iteration.

use std::fmt;

use num_rational::Ratio;

/// Exact rational count.
pub type Count = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Nlms,
    Rls,
    Cgrrf,
    /// KRR-APSP on one processor.
    KrrSingle,
    /// KRR-APSP, per processor, with one processor per projection.
    KrrParallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityParams {
    pub n: u64,
    pub d: u64,
    pub q: u64,
    pub r: u64,
    pub m: u64,
}

/// `α(q, r, m) = (q + r + m − 2)/m`: average number of `S_kᵀu` products per
/// step over one refresh period, divided by `D N`.
pub fn alpha(q: u64, r: u64, m: u64) -> Count {
    Count::new(q + r + m - 2, m)
}

/// `β(r, m) = (r + m − 1)/m`: the per-processor counterpart of [`alpha`].
pub fn beta(r: u64, m: u64) -> Count {
    Count::new(r + m - 1, m)
}

/// `a N + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearCount {
    pub per_n: Count,
    pub constant: Count,
}

impl LinearCount {
    pub fn at(&self, n: u64) -> Count {
        self.per_n * n + self.constant
    }
}

impl fmt::Display for LinearCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}N + {}", self.per_n, self.constant)
    }
}

/// Filter-update share of KRR-APSP (everything except the basis and the
/// correlation estimates):
///
/// single processor: `α(q,r,m) D N + (4q + 2r) D + (r + 7) q + 2`;
/// per processor: `β(r,m) D N + (2r + 4) D + r + 9`.
pub fn krr_filter_update(p: ComplexityParams, parallel: bool) -> LinearCount {
    let ComplexityParams { d, q, r, m, .. } = p;
    if parallel {
        LinearCount {
            per_n: beta(r, m) * d,
            constant: Count::from_integer((2 * r + 4) * d + r + 9),
        }
    } else {
        LinearCount {
            per_n: alpha(q, r, m) * d,
            constant: Count::from_integer((4 * q + 2 * r) * d + (r + 7) * q + 2),
        }
    }
}

/// Average multiplications per iteration.
///
/// | algorithm | count |
/// |---|---|
/// | NLMS | `3N + 2` |
/// | RLS | `4N² + 4N + 1` |
/// | CGRRF | `(D−1)N²/m + [(5D−4)/m + 4]N + 2(D−1)` |
/// | KRR-APSP | CGRRF count + [`krr_filter_update`] |
pub fn complexity_count(alg: Algorithm, p: ComplexityParams) -> Count {
    let ComplexityParams { n, d, m, .. } = p;
    let int = Count::from_integer;
    let cgrrf = Count::new((d - 1) * n * n, m)
        + (Count::new(5 * d - 4, m) + int(4)) * n
        + int(2 * (d - 1));
    match alg {
        Algorithm::Nlms => int(3 * n + 2),
        Algorithm::Rls => int(4 * n * n + 4 * n + 1),
        Algorithm::Cgrrf => cgrrf,
        Algorithm::KrrSingle => cgrrf + krr_filter_update(p, false).at(n),
        Algorithm::KrrParallel => cgrrf + krr_filter_update(p, true).at(n),
    }
}

/// Multiplications of the Toeplitz-mode correlation update.
pub fn estimator_count(n: u64) -> u64 {
    4 * n
}
