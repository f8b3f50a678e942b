use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::gold::{gold_family, GOLD_LENGTH};
use super::{opt_to_string, substream, KeyValues, StreamSample, Truth};
use crate::error::{Error, Result};
use crate::linalg::DenseVector;

const CODES: u8 = 1;
const SHIFTS: u8 = 2;
const BITS: u8 = 3;
const NOISE: u8 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CdmaConfig {
    /// Active users `K`, the desired user included.
    pub users: usize,
    /// Active users after the change event, the desired user included. All
    /// earlier interferers leave and new ones join.
    pub users_post: Option<usize>,
    pub change_at: Option<usize>,
    /// Desired user's `A₁²/σ²`; `None` gives noiseless data.
    pub snr_db: Option<f64>,
    /// Interferer amplitude relative to the desired user.
    pub interferer_amplitude: f64,
    pub seed: u64,
    pub trial: u64,
}

impl Default for CdmaConfig {
    fn default() -> Self {
        Self {
            users: 8,
            users_post: None,
            change_at: None,
            snr_db: Some(15.0),
            interferer_amplitude: 1.0,
            seed: 1,
            trial: 0,
        }
    }
}

impl CdmaConfig {
    /// Static case: eight equal-power users at 15 dB.
    pub fn static_case(seed: u64, trial: u64) -> Self {
        Self {
            seed,
            trial,
            ..Default::default()
        }
    }

    /// Dynamic case: four users, switching to two at bit 1000, interferers
    /// at twice the desired amplitude, 10 dB.
    pub fn dynamic_case(seed: u64, trial: u64) -> Self {
        Self {
            users: 4,
            users_post: Some(2),
            change_at: Some(1000),
            snr_db: Some(10.0),
            interferer_amplitude: 2.0,
            seed,
            trial,
        }
    }
}

/// A group of simultaneously active users.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSet {
    /// Unit-norm signatures; entry 0 is the desired user.
    pub signatures: Vec<Vec<f64>>,
    pub amplitudes: Vec<f64>,
    /// Gold family index of each signature.
    pub codes: Vec<usize>,
    /// Cyclic shift applied to each code (0 for the desired user).
    pub shifts: Vec<usize>,
}

/// Chip-synchronous CDMA in training mode:
/// `u_k = Σ_j A_j b_{j,k} s_j + w_k`, `d_k = b_{1,k}`.
///
/// Signatures are drawn without replacement from the length-31 Gold family
/// and scaled to unit norm. Each interferer's code is cyclically shifted by
/// a random amount, which models code asynchrony. `w_k` is white Gaussian
/// with variance `A₁²/10^(SNR/10)`.
#[derive(Debug, Clone)]
pub struct CdmaScenario {
    pub config: CdmaConfig,
    pub pre: UserSet,
    pub post: Option<UserSet>,
    pub noise_var: f64,
}

impl CdmaScenario {
    pub fn new(config: CdmaConfig) -> Result<Self> {
        let family = gold_family();
        let post_users = match (config.users_post, config.change_at) {
            (Some(k), Some(_)) => Some(k),
            (None, None) => None,
            _ => {
                return Err(Error::param(
                    "users_post",
                    "a change needs both the new user count and the change index",
                ))
            }
        };
        if config.users == 0 || post_users == Some(0) {
            return Err(Error::param("users", "at least the desired user must be active"));
        }
        let needed = config.users + post_users.map_or(0, |k| k - 1);
        if needed > family.len() {
            return Err(Error::param(
                "users",
                format!("{needed} distinct codes needed, the Gold family has {}", family.len()),
            ));
        }
        if !(config.interferer_amplitude > 0.0 && config.interferer_amplitude.is_finite()) {
            return Err(Error::param("interferer_amplitude", "must be positive"));
        }
        if let Some(s) = config.snr_db {
            if !s.is_finite() {
                return Err(Error::param("snr_db", "must be finite"));
            }
        }

        let (seed, trial) = (config.seed, config.trial);
        let codes = sample(&mut substream(seed, trial, CODES), family.len(), needed).into_vec();
        let mut shifts_rng = substream(seed, trial, SHIFTS);
        let mut make = |codes: &[usize], with_desired: bool| {
            let shifts: Vec<usize> = codes
                .iter()
                .enumerate()
                .map(|(j, _)| if with_desired && j == 0 { 0 } else { shifts_rng.random_range(0..GOLD_LENGTH) })
                .collect();
            let scale = 1.0 / (GOLD_LENGTH as f64).sqrt();
            let signatures = codes
                .iter()
                .zip(&shifts)
                .map(|(&c, &s)| (0..GOLD_LENGTH).map(|i| family[c][(i + s) % GOLD_LENGTH] * scale).collect())
                .collect();
            let amplitudes = (0..codes.len())
                .map(|j| if with_desired && j == 0 { 1.0 } else { config.interferer_amplitude })
                .collect();
            UserSet {
                signatures,
                amplitudes,
                codes: codes.to_vec(),
                shifts,
            }
        };
        let pre = make(&codes[..config.users], true);
        let post = post_users.map(|_| {
            let newcomers = make(&codes[config.users..], false);
            let mut set = UserSet {
                signatures: vec![pre.signatures[0].clone()],
                amplitudes: vec![pre.amplitudes[0]],
                codes: vec![pre.codes[0]],
                shifts: vec![0],
            };
            set.signatures.extend(newcomers.signatures);
            set.amplitudes.extend(newcomers.amplitudes);
            set.codes.extend(newcomers.codes);
            set.shifts.extend(newcomers.shifts);
            set
        });
        let noise_var = config.snr_db.map_or(0.0, |s| 1.0 / 10f64.powf(s / 10.0));
        Ok(Self {
            config,
            pre,
            post,
            noise_var,
        })
    }

    /// The desired user's unit-norm signature.
    pub fn desired_signature(&self) -> DenseVector {
        DenseVector::new(self.pre.signatures[0].clone()).expect("finite chips")
    }

    pub fn users_at(&self, k: usize) -> &UserSet {
        match (&self.post, self.config.change_at) {
            (Some(post), Some(at)) if k >= at => post,
            _ => &self.pre,
        }
    }

    pub fn stream(&self) -> CdmaStream {
        let (seed, trial) = (self.config.seed, self.config.trial);
        CdmaStream {
            scenario: self.clone(),
            bits: substream(seed, trial, BITS),
            noise: substream(seed, trial, NOISE),
            noise_std: self.noise_var.sqrt(),
            max_users: self
                .config
                .users
                .max(self.post.as_ref().map_or(0, |p| p.codes.len())),
            k: 0,
        }
    }
}

impl KeyValues for CdmaScenario {
    fn key_values(&self) -> Vec<(String, String)> {
        vec![
            ("scenario".into(), "cdma".into()),
            ("N".into(), GOLD_LENGTH.to_string()),
            ("users".into(), self.config.users.to_string()),
            ("users_post".into(), opt_to_string(&self.config.users_post)),
            ("change_at".into(), opt_to_string(&self.config.change_at)),
            ("snr_db".into(), opt_to_string(&self.config.snr_db)),
            ("interferer_amplitude".into(), self.config.interferer_amplitude.to_string()),
            ("gold_polynomials_octal".into(), "45,75".into()),
            ("code_asynchrony".into(), "static_random_cyclic_shift".into()),
        ]
    }
}

pub struct CdmaStream {
    scenario: CdmaScenario,
    bits: ChaCha8Rng,
    noise: ChaCha8Rng,
    noise_std: f64,
    max_users: usize,
    k: usize,
}

impl Iterator for CdmaStream {
    type Item = StreamSample;

    fn next(&mut self) -> Option<StreamSample> {
        let k = self.k;
        let users = self.scenario.users_at(k);
        // Draw bits for the largest user set every time so the desired
        // user's bits do not depend on the change event.
        let bits: Vec<f64> = (0..self.max_users)
            .map(|_| if self.bits.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut u = vec![0.0; GOLD_LENGTH];
        for ((s, a), b) in users.signatures.iter().zip(&users.amplitudes).zip(&bits) {
            let g = a * b;
            for (ui, si) in u.iter_mut().zip(s) {
                *ui += g * si;
            }
        }
        for ui in u.iter_mut() {
            let w: f64 = self.noise.sample(StandardNormal);
            *ui += self.noise_std * w;
        }
        self.k += 1;
        Some(StreamSample {
            k,
            u,
            d: bits[0],
            truth: Truth::Bit(bits[0]),
        })
    }
}
