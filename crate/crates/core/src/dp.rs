//! Closed-form solution of the day-by-day allocation problem.
//!
//! The budget-allocation view: one unit of mass is spent over days `1..=m`.
//! On day `j` with `r` units left, spending `x` earns `x ln x − x ln r`, and
//! the value function satisfies
//!
//! ```text
//! V_j(r) = opt_{0 ≤ x ≤ r} { x ln x − x ln r + V_{j+1}(r − x) },   V_m(r) = 0.
//! ```
//!
//! The stationary policy is `x*(j, r) = r·e^{−γ_j}` with
//! `γ_m = 0, γ_{j−1} = γ_j + e^{−γ_j}`, and `V_j(r) = −r (γ_{j−1} − 1)`.
//!
//! The stage reward is convex in `x`, so `x*` is the interior *minimizer* of
//! each stage. Equivalently it maximizes the negated form
//! `W_j(r) = −V_j(r)`, the expected surprise still to come.

use crate::error::{Error, Result};
use crate::objective::{ObjectiveValue, ProbabilityVector};

/// Number of days `m ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Days(usize);

impl Days {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            Err(Error::InvalidDays(m))
        } else {
            Ok(Self(m))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Days {
    type Error = Error;

    fn try_from(m: usize) -> Result<Self> {
        Self::new(m)
    }
}

/// `γ_0, …, γ_m`, indexed by day.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSequence {
    gammas: Vec<f64>,
}

impl GammaSequence {
    /// Runs `γ_{j−1} = γ_j + e^{−γ_j}` from `γ_m = 0` down to `γ_0`, in
    /// strict order, so the result is bit-reproducible.
    pub fn new(days: Days) -> Self {
        let m = days.get();
        let mut gammas = vec![0.0f64; m + 1];
        for j in (1..=m).rev() {
            gammas[j - 1] = gammas[j] + (-gammas[j]).exp();
        }
        Self { gammas }
    }

    pub fn days(&self) -> usize {
        self.gammas.len() - 1
    }

    /// `γ_j` for `0 ≤ j ≤ m`.
    pub fn gamma(&self, j: usize) -> f64 {
        self.gammas[j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gammas
    }

    /// Optimal expected surprise `γ_0 − 1`.
    pub fn expected_surprise(&self) -> f64 {
        self.gammas[0] - 1.0
    }

    /// Fraction of the remaining budget spent on day `day`: `e^{−γ_day}`.
    pub fn hazard(&self, day: usize) -> Result<f64> {
        self.check_day(day)?;
        Ok((-self.gammas[day]).exp())
    }

    fn check_day(&self, day: usize) -> Result<()> {
        let days = self.days();
        if day == 0 || day > days {
            Err(Error::DayOutOfRange { day, days })
        } else {
            Ok(())
        }
    }

    fn check_budget(budget: f64) -> Result<()> {
        if (0.0..=1.0).contains(&budget) {
            Ok(())
        } else {
            Err(Error::BudgetOutOfRange(budget))
        }
    }

    /// Optimal spend on day `day` with `budget` left: `budget·e^{−γ_day}`.
    pub fn policy(&self, day: usize, budget: f64) -> Result<f64> {
        Self::check_budget(budget)?;
        Ok(budget * self.hazard(day)?)
    }

    /// `V_day(budget) = −budget·(γ_{day−1} − 1)`.
    ///
    /// This is the telescoped form of `−Σ_{i=day}^{m−1} budget·e^{−γ_i}`.
    /// `V_m` is exactly zero because `γ_{m−1} = 1`.
    pub fn value(&self, day: usize, budget: f64) -> Result<f64> {
        self.check_day(day)?;
        Self::check_budget(budget)?;
        Ok(-budget * (self.gammas[day - 1] - 1.0))
    }

    /// Right-hand side of the optimality equation at decision `spend`,
    /// using [`value`](Self::value) for the continuation. Defined for
    /// `1 ≤ day ≤ m − 1`.
    pub fn bellman_rhs(&self, day: usize, budget: f64, spend: f64) -> Result<f64> {
        self.check_stage(day)?;
        Self::check_budget(budget)?;
        if !(0.0..=budget).contains(&spend) {
            if budget == 0.0 && spend > 0.0 {
                return Err(Error::Domain(format!(
                    "cannot spend {spend} from an empty budget"
                )));
            }
            return Err(Error::DecisionOutOfRange {
                decision: spend,
                budget,
            });
        }
        let stage = if spend > 0.0 {
            spend * (spend / budget).ln()
        } else {
            0.0
        };
        // rounding can push budget - spend a hair below zero
        let rest = (budget - spend).max(0.0);
        Ok(stage + self.value(day + 1, rest)?)
    }

    fn check_stage(&self, day: usize) -> Result<()> {
        let days = self.days();
        if day == 0 || day >= days {
            Err(Error::DayOutOfRange {
                day,
                days: days.saturating_sub(1),
            })
        } else {
            Ok(())
        }
    }

    /// Derivative of [`bellman_rhs`](Self::bellman_rhs) in the spend,
    /// `ln(x/r) + γ_day`, evaluated at the optimal spend. Zero up to rounding.
    pub fn stationarity_residual(&self, day: usize, budget: f64) -> Result<f64> {
        let spend = self.policy(day, budget)?;
        self.stationarity_residual_at(day, budget, spend)
    }

    /// Same derivative at an arbitrary positive spend.
    pub fn stationarity_residual_at(&self, day: usize, budget: f64, spend: f64) -> Result<f64> {
        self.check_stage(day)?;
        if !(budget > 0.0) || !(spend > 0.0) {
            return Err(Error::Domain(format!(
                "derivative needs positive budget and spend, got {budget} and {spend}"
            )));
        }
        Ok((spend / budget).ln() + self.gammas[day])
    }

    /// `Σ_{i=k}^{m−1} e^{−γ_i} − (γ_{k−1} − 1)`, for `1 ≤ k ≤ m`.
    pub fn telescope_residual(&self, k: usize) -> Result<f64> {
        self.check_day(k)?;
        let m = self.days();
        let tail: f64 = (k..m).map(|i| (-self.gammas[i]).exp()).sum();
        Ok(tail - (self.gammas[k - 1] - 1.0))
    }
}

/// One day of the rolled-out policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyRow {
    pub day: usize,
    pub gamma: f64,
    pub hazard: f64,
    pub remaining_before: f64,
    pub allocation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    pub rows: Vec<PolicyRow>,
}

impl PolicyTable {
    pub fn allocations(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.allocation).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub policy: PolicyTable,
    pub gamma: GammaSequence,
    pub objective: ObjectiveValue,
    /// `V_1(1) = 1 − γ_0`.
    pub value_at_root: f64,
}

impl SolveResult {
    pub fn days(&self) -> usize {
        self.policy.rows.len()
    }

    pub fn distribution(&self) -> ProbabilityVector {
        ProbabilityVector::new(self.policy.allocations())
            .expect("rollout allocations lie on the simplex")
    }
}

/// Applies the per-day policy to the shrinking budget, starting from 1.
pub fn rollout(days: Days) -> SolveResult {
    let gamma = GammaSequence::new(days);
    let mut remaining = 1.0;
    let mut rows = Vec::with_capacity(days.get());
    for day in 1..=days.get() {
        let hazard = (-gamma.gamma(day)).exp();
        let allocation = remaining * hazard;
        rows.push(PolicyRow {
            day,
            gamma: gamma.gamma(day),
            hazard,
            remaining_before: remaining,
            allocation,
        });
        remaining -= allocation;
    }
    let policy = PolicyTable { rows };
    let distribution = ProbabilityVector::new(policy.allocations())
        .expect("rollout allocations lie on the simplex");
    let objective = ObjectiveValue::at(&distribution);
    let value_at_root = gamma
        .value(1, 1.0)
        .expect("day 1 and budget 1 are in range");
    SolveResult {
        policy,
        gamma,
        objective,
        value_at_root,
    }
}
