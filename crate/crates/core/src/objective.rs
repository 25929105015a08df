//! Surprise objectives on the probability simplex.
//!
//! For a distribution `p` over `m` days the tail mass `T_j = p_j + ... + p_m`
//! is the probability that the exam has not happened before day `j`. The
//! reduced objective is
//!
//! ```text
//! S̃(p) = Σ_j p_j (ln p_j − ln T_j)
//! ```
//!
//! and the full objective adds the constant `ln m − 1`. Terms with `p_j = 0`
//! contribute exactly zero. All logarithms are natural.

use crate::error::{Error, Result};

/// Accepted deviation of `Σ p_j` from 1. Inputs are used as given, never
/// renormalized.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A point on the probability simplex over `m ≥ 1` days.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidEntry { index, value });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::NotNormalized {
                sum,
                tolerance: SIMPLEX_TOLERANCE,
            });
        }
        Ok(Self(values))
    }

    /// Uniform distribution over `days` days.
    pub fn uniform(days: usize) -> Result<Self> {
        if days == 0 {
            return Err(Error::InvalidDays(days));
        }
        Ok(Self(vec![1.0 / days as f64; days]))
    }

    /// All mass on day `day` (1-based).
    pub fn point_mass(days: usize, day: usize) -> Result<Self> {
        if days == 0 {
            return Err(Error::InvalidDays(days));
        }
        if day == 0 || day > days {
            return Err(Error::DayOutOfRange { day, days });
        }
        let mut values = vec![0.0; days];
        values[day - 1] = 1.0;
        Ok(Self(values))
    }

    pub fn days(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Probability of day `day` (1-based).
    pub fn get(&self, day: usize) -> Option<f64> {
        day.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }
}

impl AsRef<[f64]> for ProbabilityVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `T_j = Σ_{i ≥ j} p_i`, stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct TailMasses(Vec<f64>);

impl TailMasses {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Objective values at one distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    /// Reduced objective `S̃`.
    pub sm2: f64,
    /// Full objective `S̃ + ln m − 1`.
    pub sm1: f64,
    /// `−S̃`, the expected realized surprise.
    pub expected_surprise: f64,
}

impl ObjectiveValue {
    pub fn at(p: &ProbabilityVector) -> Self {
        let sm2 = eval_sm2(p);
        Self {
            sm2,
            sm1: sm1_from_sm2(sm2, p.days()),
            expected_surprise: -sm2,
        }
    }
}

pub fn tail_masses(p: &ProbabilityVector) -> TailMasses {
    TailMasses(tails_of(p.as_slice()))
}

// Right-to-left, so the last tail equals the last entry exactly.
pub(crate) fn tails_of(values: &[f64]) -> Vec<f64> {
    let mut tails = vec![0.0; values.len()];
    let mut acc = 0.0;
    for (tail, &v) in tails.iter_mut().zip(values).rev() {
        acc += v;
        *tail = acc;
    }
    tails
}

/// Reduced objective for any nonnegative vector, with no simplex check.
pub(crate) fn sm2_of(values: &[f64]) -> f64 {
    let tails = tails_of(values);
    values
        .iter()
        .zip(&tails)
        .filter(|(&v, _)| v > 0.0)
        .map(|(&v, &t)| v * (v.ln() - t.ln()))
        .sum()
}

pub fn eval_sm2(p: &ProbabilityVector) -> f64 {
    sm2_of(p.as_slice())
}

fn sm1_from_sm2(sm2: f64, days: usize) -> f64 {
    sm2 + (days as f64).ln() - 1.0
}

pub fn eval_sm1(p: &ProbabilityVector) -> f64 {
    sm1_from_sm2(eval_sm2(p), p.days())
}

/// Unconstrained partial derivatives of `S̃` at an interior point:
///
/// ```text
/// ∂S̃/∂p_j = ln p_j + 1 − ln T_j − Σ_{k ≤ j} p_k / T_k
/// ```
pub fn gradient_sm2(p: &ProbabilityVector) -> Result<Vec<f64>> {
    gradient_of(p.as_slice())
}

pub(crate) fn gradient_of(values: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = values.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!(
            "gradient needs an interior point, entry {} is {}",
            i, values[i]
        )));
    }
    let tails = tails_of(values);
    let mut hazard_sum = 0.0;
    Ok(values
        .iter()
        .zip(&tails)
        .map(|(&v, &t)| {
            hazard_sum += v / t;
            v.ln() + 1.0 - t.ln() - hazard_sum
        })
        .collect())
}

/// `ln(T_j / p_j)` for the exam falling on day `day` (1-based). Always ≥ 0.
pub fn realized_surprise(p: &ProbabilityVector, day: usize) -> Result<f64> {
    let days = p.days();
    if day == 0 || day > days {
        return Err(Error::DayOutOfRange { day, days });
    }
    let prob = p.as_slice()[day - 1];
    if prob <= 0.0 {
        return Err(Error::Domain(format!("day {day} has zero probability")));
    }
    let tail: f64 = p.as_slice()[day - 1..].iter().rev().sum();
    Ok(tail.ln() - prob.ln())
}

/// Realized surprise for every day, `None` where `p_j = 0`.
pub fn surprise_profile(p: &ProbabilityVector) -> Vec<Option<f64>> {
    let tails = tails_of(p.as_slice());
    p.as_slice()
        .iter()
        .zip(&tails)
        .map(|(&v, &t)| (v > 0.0).then(|| t.ln() - v.ln()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_vectors() {
        assert_eq!(
            ProbabilityVector::new(vec![]),
            Err(Error::EmptyDistribution)
        );
        assert!(matches!(
            ProbabilityVector::new(vec![0.5, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            ProbabilityVector::new(vec![1.5, -0.5]),
            Err(Error::InvalidEntry { index: 1, .. })
        ));
        assert!(matches!(
            ProbabilityVector::new(vec![f64::NAN, 1.0]),
            Err(Error::InvalidEntry { index: 0, .. })
        ));
        // within tolerance, kept as-is
        let p = pv(&[0.5, 0.5 + 5e-10]);
        assert_eq!(p.as_slice()[1], 0.5 + 5e-10);
    }

    #[test]
    fn tails() {
        assert_eq!(tail_masses(&pv(&[0.5, 0.5])).as_slice(), &[1.0, 0.5]);
        assert_eq!(
            tail_masses(&pv(&[1.0, 0.0, 0.0])).as_slice(),
            &[1.0, 0.0, 0.0]
        );
        let p = pv(&[0.2, 0.3, 0.1, 0.4]);
        let t = tail_masses(&p);
        assert_eq!(t.as_slice()[3], 0.4);
        assert!(t.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sm2_examples() {
        assert_eq!(eval_sm2(&pv(&[1.0])), 0.0);
        assert!((eval_sm2(&pv(&[0.5, 0.5])) - (-0.34657359027997264)).abs() < 1e-15);
        let a = (-1.0f64).exp();
        assert!((eval_sm2(&pv(&[a, 1.0 - a])) + 1.0 / E).abs() < 1e-15);
        for k in 1..=5 {
            assert_eq!(eval_sm2(&ProbabilityVector::point_mass(5, k).unwrap()), 0.0);
        }
    }

    #[test]
    fn sm1_examples() {
        assert_eq!(eval_sm1(&pv(&[1.0])), -1.0);
        assert!((eval_sm1(&pv(&[0.5, 0.5])) - (-0.6534264097200273)).abs() < 1e-15);
        let o = ObjectiveValue::at(&pv(&[0.5, 0.5]));
        assert_eq!(o.expected_surprise, -o.sm2);
    }

    #[test]
    fn gradient_examples() {
        let a = (-1.0f64).exp();
        let g = gradient_sm2(&pv(&[a, 1.0 - a])).unwrap();
        for c in g {
            assert!((c + 1.0 / E).abs() < 1e-15);
        }
        let g = gradient_sm2(&pv(&[0.5, 0.5])).unwrap();
        assert!((g[0] - (-0.1931471805599453)).abs() < 1e-15);
        assert!((g[1] - (-0.5)).abs() < 1e-15);
        assert!(matches!(
            gradient_sm2(&pv(&[1.0, 0.0])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn realized_surprise_examples() {
        let a = (-1.0f64).exp();
        let p = pv(&[a, 1.0 - a]);
        assert_eq!(realized_surprise(&p, 2).unwrap(), 0.0);
        assert!((realized_surprise(&p, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((realized_surprise(&pv(&[0.5, 0.5]), 1).unwrap() - LN_2).abs() < 1e-15);
        assert!(matches!(
            realized_surprise(&pv(&[1.0, 0.0]), 2),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            realized_surprise(&p, 3),
            Err(Error::DayOutOfRange { day: 3, days: 2 })
        ));
    }

    #[test]
    fn profile_skips_zero_days() {
        let p = pv(&[0.0, 0.5, 0.5]);
        assert_eq!(surprise_profile(&p), vec![None, Some(LN_2), Some(0.0)]);
    }
}
