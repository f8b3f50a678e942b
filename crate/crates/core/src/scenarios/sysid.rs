use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{opt_to_string, substream, KeyValues, StreamSample, Truth};
use crate::error::{Error, Result};
use crate::linalg::{dot, DenseVector, SymMatrix};

/// Length of the input coloring filter.
pub const FIR_LENGTH: usize = 30;

const SYSTEM: u8 = 1;
const FIR: u8 = 2;
const INPUT: u8 = 3;
const NOISE: u8 = 4;
const SYSTEM_POST: u8 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SysIdConfig {
    pub n: usize,
    /// `None` gives noiseless data, `d_k = u_kᵀh*`.
    pub snr_db: Option<f64>,
    /// Sample index at which the unknown system is replaced.
    pub change_at: Option<usize>,
    pub seed: u64,
    pub trial: u64,
}

impl Default for SysIdConfig {
    fn default() -> Self {
        Self {
            n: 50,
            snr_db: Some(15.0),
            change_at: None,
            seed: 1,
            trial: 0,
        }
    }
}

/// `d_k = u_kᵀh* + n_k` with `u_k` the last `N` samples of white Gaussian
/// noise passed through a random length-30 FIR filter.
///
/// `h*` has i.i.d. standard normal entries scaled to unit norm. The coloring
/// filter also has standard normal taps and is scaled to unit norm, so the
/// input has unit power. The noise variance is `E{z²}/10^(SNR/10)` with
/// `E{z²} = h*ᵀR h*` evaluated from the exact input autocorrelation.
#[derive(Debug, Clone)]
pub struct SysIdScenario {
    pub config: SysIdConfig,
    pub h_star: Arc<DenseVector>,
    pub h_star_post: Option<Arc<DenseVector>>,
    pub coloring_fir: Vec<f64>,
    /// `E{z_k²}` for the initial system.
    pub signal_power: f64,
    pub noise_var: f64,
}

fn unit_normal_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let nv = crate::linalg::norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

impl SysIdScenario {
    pub fn new(config: SysIdConfig) -> Result<Self> {
        if config.n == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        if let Some(s) = config.snr_db {
            if !s.is_finite() {
                return Err(Error::param("snr_db", "must be finite"));
            }
        }
        let n = config.n;
        let (seed, trial) = (config.seed, config.trial);
        let h_star = unit_normal_vector(&mut substream(seed, trial, SYSTEM), n);
        let coloring_fir = unit_normal_vector(&mut substream(seed, trial, FIR), FIR_LENGTH);
        let h_star_post = config
            .change_at
            .map(|_| unit_normal_vector(&mut substream(seed, trial, SYSTEM_POST), n));

        let r = SymMatrix::toeplitz(fir_autocorrelation(&coloring_fir, n))?;
        let signal_power = r.quad_form(&h_star)?;
        let noise_var = match config.snr_db {
            Some(snr) => signal_power / 10f64.powf(snr / 10.0),
            None => 0.0,
        };
        Ok(Self {
            config,
            h_star: Arc::new(DenseVector::new(h_star)?),
            h_star_post: h_star_post.map(DenseVector::new).transpose()?.map(Arc::new),
            coloring_fir,
            signal_power,
            noise_var,
        })
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    /// The system in force at sample `k`.
    pub fn system_at(&self, k: usize) -> &Arc<DenseVector> {
        match (&self.h_star_post, self.config.change_at) {
            (Some(post), Some(at)) if k >= at => post,
            _ => &self.h_star,
        }
    }

    /// Exact autocorrelation matrix of the input regressor.
    pub fn input_autocorrelation(&self) -> SymMatrix {
        SymMatrix::toeplitz(fir_autocorrelation(&self.coloring_fir, self.n()))
            .expect("finite taps")
    }

    pub fn stream(&self) -> SysIdStream {
        let (seed, trial) = (self.config.seed, self.config.trial);
        let mut input = substream(seed, trial, INPUT);
        let mut white: VecDeque<f64> = VecDeque::with_capacity(FIR_LENGTH);
        let mut regressor: VecDeque<f64> = VecDeque::with_capacity(self.n());
        // Fill the delay lines so u_0 is already stationary.
        for _ in 0..FIR_LENGTH + self.n() {
            let x = next_colored(&mut input, &mut white, &self.coloring_fir);
            regressor.push_front(x);
            regressor.truncate(self.n());
        }
        SysIdStream {
            scenario: self.clone(),
            input,
            noise: substream(seed, trial, NOISE),
            noise_std: self.noise_var.sqrt(),
            white,
            regressor,
            k: 0,
        }
    }
}

/// `r_j = Σ_i c_i c_{i+j}` for `j < n` (unit-variance white input).
fn fir_autocorrelation(c: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| if j < c.len() { dot(&c[..c.len() - j], &c[j..]) } else { 0.0 })
        .collect()
}

fn next_colored(rng: &mut ChaCha8Rng, white: &mut VecDeque<f64>, fir: &[f64]) -> f64 {
    white.push_front(rng.sample(StandardNormal));
    white.truncate(fir.len());
    white.iter().zip(fir).map(|(w, c)| w * c).sum()
}

impl KeyValues for SysIdScenario {
    fn key_values(&self) -> Vec<(String, String)> {
        vec![
            ("scenario".into(), "sysid".into()),
            ("N".into(), self.config.n.to_string()),
            ("snr_db".into(), opt_to_string(&self.config.snr_db)),
            ("change_at".into(), opt_to_string(&self.config.change_at)),
            ("fir_length".into(), FIR_LENGTH.to_string()),
            ("noise_calibration".into(), "exact_input_autocorrelation".into()),
        ]
    }
}

/// Sample iterator of a [`SysIdScenario`]. The input sequence does not depend
/// on the change event; only `d_k` switches systems.
pub struct SysIdStream {
    scenario: SysIdScenario,
    input: ChaCha8Rng,
    noise: ChaCha8Rng,
    noise_std: f64,
    white: VecDeque<f64>,
    regressor: VecDeque<f64>,
    k: usize,
}

impl Iterator for SysIdStream {
    type Item = StreamSample;

    fn next(&mut self) -> Option<StreamSample> {
        let k = self.k;
        if k > 0 {
            let x = next_colored(&mut self.input, &mut self.white, &self.scenario.coloring_fir);
            self.regressor.push_front(x);
            self.regressor.truncate(self.scenario.n());
        }
        let u: Vec<f64> = self.regressor.iter().copied().collect();
        let h = self.scenario.system_at(k).clone();
        let z = dot(&u, &h);
        let noise: f64 = self.noise.sample(StandardNormal);
        let d = if self.noise_std > 0.0 { z + self.noise_std * noise } else { z };
        self.k += 1;
        Some(StreamSample {
            k,
            u,
            d,
            truth: Truth::System(h),
        })
    }
}
