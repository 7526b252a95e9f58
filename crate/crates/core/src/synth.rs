//! Synthetic paired-sample generation for the benchmark harness.
//!
//! The generative model couples the second measurement to the first through
//! a correlation coefficient and adds a mean shift to a trailing block of
//! features:
//!
//! ```text
//! x_ik ~ Normal(0, std^2)
//! y_ik = rho * x_ik + sqrt(1 - rho^2) * e_ik + delta_k,   e_ik ~ Normal(0, std^2)
//! ```
//!
//! so each feature of y has the same marginal variance as x and correlation
//! `rho` with it. `delta_k` equals `shift` for the last
//! `round(shifted_fraction * d)` features and 0 elsewhere.
//!
//! All randomness comes from a ChaCha8 stream seeded per scenario, with
//! normal deviates produced by inverting the normal CDF on uniform draws, so
//! every sample is reproducible bit for bit from `(config, seed)` on any
//! platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::num::normal_quantile;
use crate::sample::PairedSample;

/// Full description of one synthetic scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of pairs.
    pub n: usize,
    /// Number of features.
    pub d: usize,
    /// Marginal standard deviation of every feature.
    pub std: f64,
    /// Correlation between paired measurements, in [-1, 1].
    pub rho: f64,
    /// Mean shift applied to the trailing block of features.
    pub shift: f64,
    /// Fraction of features shifted, rounded half-up to a feature count.
    pub shifted_fraction: f64,
    /// Stream seed for this scenario's draws.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n: 30,
            d: 10,
            std: 1.0,
            rho: 0.5,
            shift: 0.0,
            shifted_fraction: 0.1,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument {
                message: format!("scenario needs at least 2 pairs, got n = {}", self.n),
            });
        }
        if self.d == 0 {
            return Err(Error::InvalidArgument {
                message: "scenario needs at least 1 feature".into(),
            });
        }
        if !(self.std > 0.0 && self.std.is_finite()) {
            return Err(Error::InvalidArgument {
                message: format!("std must be positive and finite, got {}", self.std),
            });
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidArgument {
                message: format!("rho must lie in [-1, 1], got {}", self.rho),
            });
        }
        if !self.shift.is_finite() {
            return Err(Error::InvalidArgument {
                message: format!("shift must be finite, got {}", self.shift),
            });
        }
        if !(0.0..=1.0).contains(&self.shifted_fraction) {
            return Err(Error::InvalidArgument {
                message: format!(
                    "shifted_fraction must lie in [0, 1], got {}",
                    self.shifted_fraction
                ),
            });
        }
        Ok(())
    }

    /// Number of trailing features that receive the shift:
    /// round-half-up of `shifted_fraction * d`.
    pub fn shifted_dims(&self) -> usize {
        (self.shifted_fraction * self.d as f64 + 0.5).floor() as usize
    }
}

/// Derives a child seed from a master seed and a tag path (for example
/// scenario, shift and trial indices) by chaining the SplitMix64 mixer.
/// Small, structured inputs land on statistically unrelated streams.
pub fn derive_stream_seed(master: u64, tags: &[u64]) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut s = splitmix64(master);
    for &t in tags {
        s = splitmix64(s ^ t);
    }
    s
}

/// Standard-normal stream: uniform 64-bit draws mapped through the inverse
/// normal CDF. The uniform lies strictly inside (0, 1), so the quantile is
/// always finite.
struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    fn new(seed: u64) -> Self {
        GaussianStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn next(&mut self) -> f64 {
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0);
        normal_quantile(u).expect("uniform draw lies strictly inside (0, 1)")
    }
}

/// Generates one paired sample from the scenario model. Features are named
/// f1..fd; the shifted block is the trailing `shifted_dims()` features.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<PairedSample> {
    cfg.validate()?;
    let (n, d) = (cfg.n, cfg.d);
    let first_shifted = d - cfg.shifted_dims();
    let cross = (1.0 - cfg.rho * cfg.rho).sqrt();
    let mut stream = GaussianStream::new(cfg.seed);
    let mut x = Matrix::zeros(n, d);
    let mut y = Matrix::zeros(n, d);
    for k in 0..d {
        let delta = if k >= first_shifted { cfg.shift } else { 0.0 };
        for i in 0..n {
            x[(i, k)] = cfg.std * stream.next();
        }
        for i in 0..n {
            y[(i, k)] = cfg.rho * x[(i, k)] + cross * cfg.std * stream.next() + delta;
        }
    }
    let names = (1..=d).map(|k| format!("f{k}")).collect();
    PairedSample::new(x, y, names)
}
