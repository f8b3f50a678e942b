//! Seeded data generators: colored-input system identification and
//! synchronous-chip CDMA with Gold signatures.
//!
//! Every trial draws from ChaCha8 sub-streams of one 64-bit seed. The stream
//! number is `(trial << 8) | purpose`, so the system, the coloring filter,
//! the input, the noise and so on never share random numbers and a trial's
//! samples do not depend on which thread produced them.

mod cdma;
mod gold;
mod sysid;

pub use cdma::{CdmaConfig, CdmaScenario, CdmaStream};
pub use gold::{gold_family, m_sequence, periodic_correlation, GOLD_LENGTH, GOLD_POLY_A, GOLD_POLY_B};
pub use sysid::{SysIdConfig, SysIdScenario, SysIdStream, FIR_LENGTH};

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::DenseVector;

/// Independent random stream for one purpose within one trial.
pub fn substream(seed: u64, trial: u64, purpose: u8) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 8) | purpose as u64);
    rng
}

/// Hidden ground truth attached to a sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    /// The unknown system in force at this sample.
    System(Arc<DenseVector>),
    /// The desired user's transmitted bit.
    Bit(f64),
}

/// One `(u_k, d_k)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSample {
    pub k: usize,
    pub u: Vec<f64>,
    pub d: f64,
    pub truth: Truth,
}

/// Flat `key=value` description for provenance headers.
pub trait KeyValues {
    fn key_values(&self) -> Vec<(String, String)>;
}

/// Renders `key=value` pairs one per line.
pub fn render_key_values(kv: &[(String, String)]) -> String {
    kv.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Parses lines produced by [`render_key_values`]; blank lines are ignored.
pub fn parse_key_values(text: &str) -> crate::Result<Vec<(String, String)>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| crate::Error::Inconsistent(format!("not a key=value line: {l}")))
        })
        .collect()
}

pub(crate) fn opt_to_string<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}
