//! Monte Carlo estimate of expected surprise.
//!
//! The generator is SplitMix64 seeded with the raw `u64` seed as its state.
//! Uniforms in `[0, 1)` take the top 53 bits of each output:
//! `(x >> 11) · 2^-53`. Those two rules are enough to reproduce every draw in
//! another language.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::objective::{surprise_profile, ProbabilityVector};

/// The crate's seeded generator.
pub type SurpriseRng = SplitMix64;

pub fn rng_from_seed(seed: u64) -> SurpriseRng {
    SplitMix64::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)` from the top 53 bits.
pub fn unit_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in the open interval `(0, 1)`: `((x >> 12) + 0.5) · 2^-52`.
pub fn open_unit_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub samples: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(samples: u64, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        Ok(Self { samples, seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationResult {
    pub mean: f64,
    /// Sample standard deviation over `√n`; zero when `n = 1`.
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl SimulationResult {
    /// The estimate in the sign of the reduced objective, `−mean`.
    pub fn signed_objective(&self) -> f64 {
        // 0 - x keeps a zero estimate from printing as -0
        0.0 - self.mean
    }

    /// `(mean − target) / std_error`; zero when both the gap and the error vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = self.mean - target;
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }
}

/// Inverse-CDF draw of a 1-based day. Days with zero probability are never
/// returned.
pub fn sample_day<R: RngCore + ?Sized>(p: &ProbabilityVector, rng: &mut R) -> usize {
    let u = unit_uniform(rng);
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &prob) in p.as_slice().iter().enumerate() {
        if prob > 0.0 {
            cumulative += prob;
            last_positive = i;
            if u < cumulative {
                return i + 1;
            }
        }
    }
    // the cumulative sum fell just short of u
    last_positive + 1
}

pub fn estimate_expected_surprise(
    p: &ProbabilityVector,
    config: SimulationConfig,
) -> SimulationResult {
    let profile = surprise_profile(p);
    let mut rng = rng_from_seed(config.seed);

    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for n in 1..=config.samples {
        let day = sample_day(p, &mut rng);
        let x = profile[day - 1].expect("sampled days have positive probability");
        let delta = x - mean;
        mean += delta / n as f64;
        m2 += delta * (x - mean);
    }
    let n = config.samples as f64;
    let std_error = if config.samples > 1 {
        (m2 / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    SimulationResult {
        mean,
        std_error,
        samples: config.samples,
        seed: config.seed,
    }
}
