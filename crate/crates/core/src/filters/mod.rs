//! Adaptive filters driven one sample at a time.

mod apsp;
mod cgrrf;
mod krr;
mod nlms;
mod rls;

pub use apsp::{apsp_update, ApspOutcome, ProjectionSet};
pub use cgrrf::{conjugate_gradient, CgResult, CgrrfFilter, CgrrfParams};
pub use krr::{H0Mode, KrrDiagnostics, KrrFilter, KrrParams, KrrStepInfo, MultBreakdown};
pub use nlms::NlmsFilter;
pub use rls::RlsFilter;

use crate::error::Result;
use crate::linalg::DenseVector;

/// Result of consuming one `(u_k, d_k)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// A-priori output `y_k` computed with the coefficients in force before
    /// the update.
    pub y: f64,
    /// Whether the coefficients were asked to move this step. For KRR-APSP
    /// this is "some `‖e_ι‖² > ρ`".
    pub updated: bool,
    /// Full-length coefficient vector after the step.
    pub h_full: DenseVector,
    /// Multiplications (divisions included) consumed by the step.
    pub mults: u64,
}

/// Common streaming interface.
pub trait AdaptiveFilter: Send {
    /// Short identifier used in CSV output.
    fn name(&self) -> String;

    /// Input length `N`.
    fn dim(&self) -> usize;

    fn step(&mut self, u: &[f64], d: f64) -> Result<StepOutput>;

    /// Current full-length coefficients (`S_k h̃_k` for reduced filters).
    fn full_coefficients(&self) -> DenseVector;
}
