//! Numerical cross-checks that never touch the γ recursion while searching:
//! exhaustive lattice search over the simplex, exponentiated-gradient descent
//! on `S̃`, central finite differences, and a brute-force scan of one
//! optimality-equation stage.

use crate::dp::{rollout, Days, GammaSequence};
use crate::error::{Error, Result};
use crate::objective::{gradient_of, sm2_of, ProbabilityVector};
use crate::simulator::{open_unit_uniform, rng_from_seed};

/// Largest lattice the grid search will enumerate.
pub const GRID_POINT_CAP: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSense {
    /// Smallest `S̃`, i.e. largest expected surprise. This is where the
    /// closed form lives.
    MinimizeSm2,
    /// Largest `S̃`. Every vertex ties at zero.
    MaximizeSm2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    /// Lattice denominator `N ≥ 2`.
    pub resolution: u32,
    pub sense: GridSense,
}

impl GridSpec {
    pub fn new(resolution: u32, sense: GridSense) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid resolution must be at least 2, got {resolution}"
            )));
        }
        Ok(Self { resolution, sense })
    }

    /// Agreement tolerance for comparing a lattice optimum with the closed
    /// form: two lattice steps.
    pub fn tolerance(&self) -> f64 {
        2.0 / self.resolution as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub best_point: ProbabilityVector,
    /// `S̃` at `best_point`.
    pub best_value: f64,
    pub closed_form_point: ProbabilityVector,
    pub linf_gap: f64,
    pub tolerance: f64,
    pub agrees: bool,
    pub converged: bool,
    pub iterations: u64,
}

impl OracleReport {
    fn new(
        best_point: Vec<f64>,
        best_value: f64,
        closed_form_point: ProbabilityVector,
        tolerance: f64,
        converged: bool,
        iterations: u64,
    ) -> Self {
        let linf_gap = linf_distance(&best_point, closed_form_point.as_slice());
        let best_point = ProbabilityVector::new(best_point).expect("oracle points are normalized");
        Self {
            best_point,
            best_value,
            closed_form_point,
            linf_gap,
            tolerance,
            agrees: converged && linf_gap <= tolerance,
            converged,
            iterations,
        }
    }
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `C(n + m − 1, m − 1)`, saturating at `cap + 1`.
pub fn composition_count(days: usize, resolution: u32, cap: u128) -> u128 {
    let n = resolution as u128;
    let k = days as u128 - 1;
    let mut count: u128 = 1;
    for i in 1..=k {
        // exact at every step: count · (n + i) is divisible by i
        count = count * (n + i) / i;
        if count > cap {
            return cap + 1;
        }
    }
    count
}

/// Exhaustive search over the lattice `{k/N : Σk = N}`.
///
/// Points are visited in lexicographic order of `k` and only strict
/// improvements replace the incumbent, so ties go to the lexicographically
/// smallest point.
pub fn grid_search(days: Days, spec: GridSpec) -> Result<OracleReport> {
    let m = days.get();
    let count = composition_count(m, spec.resolution, GRID_POINT_CAP);
    if count > GRID_POINT_CAP {
        return Err(Error::GridTooLarge {
            count,
            cap: GRID_POINT_CAP,
        });
    }
    let n = spec.resolution;
    let scale = n as f64;
    let better = |candidate: f64, incumbent: f64| match spec.sense {
        GridSense::MinimizeSm2 => candidate < incumbent,
        GridSense::MaximizeSm2 => candidate > incumbent,
    };

    let mut ks = vec![0u32; m];
    ks[m - 1] = n;
    let mut point = vec![0.0; m];
    let mut best_ks = ks.clone();
    let mut best_value = f64::NAN;
    let mut visited = 0u64;
    loop {
        for (x, &k) in point.iter_mut().zip(&ks) {
            *x = k as f64 / scale;
        }
        let value = sm2_of(&point);
        visited += 1;
        if best_value.is_nan() || better(value, best_value) {
            best_value = value;
            best_ks.copy_from_slice(&ks);
        }
        if !next_composition(&mut ks) {
            break;
        }
    }
    let best_point = best_ks.iter().map(|&k| k as f64 / scale).collect();
    let closed_form = rollout(days).distribution();
    Ok(OracleReport::new(
        best_point,
        best_value,
        closed_form,
        spec.tolerance(),
        true,
        visited,
    ))
}

// Lexicographic successor among compositions with a fixed total; the last
// part always holds the remainder.
fn next_composition(ks: &mut [u32]) -> bool {
    let Some(last) = ks.len().checked_sub(1) else {
        return false;
    };
    if last == 0 {
        return false;
    }
    if ks[last] > 0 {
        ks[last - 1] += 1;
        ks[last] -= 1;
        return true;
    }
    // carry: the rightmost nonzero free part moves one unit left
    match (1..last).rev().find(|&j| ks[j] > 0) {
        Some(j) => {
            ks[last] = ks[j] - 1;
            ks[j] = 0;
            ks[j - 1] += 1;
            true
        }
        None => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    pub max_iterations: u64,
    /// Initial step `η`; halved within an iteration until `−S̃` does not drop.
    pub step_size: f64,
    /// Random interior starts on top of the uniform start.
    pub restarts: u32,
    /// Stop when the per-iteration L∞ change falls below this.
    pub convergence_tol: f64,
    /// Restart `i` draws from the generator seeded with `seed + i`.
    pub seed: u64,
    /// L∞ tolerance for agreement with the closed form.
    pub agreement_tol: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            step_size: 0.5,
            restarts: 8,
            convergence_tol: 1e-12,
            seed: 0,
            agreement_tol: 1e-6,
        }
    }
}

impl AscentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidConfig("step_size must be positive".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "convergence_tol must be positive".into(),
            ));
        }
        if !(self.agreement_tol >= 0.0) {
            return Err(Error::InvalidConfig(
                "agreement_tol must be nonnegative".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Flat draw from the simplex interior via normalized exponentials.
pub fn random_interior_point(days: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut draws: Vec<f64> = (0..days)
        .map(|_| -open_unit_uniform(&mut rng).ln())
        .collect();
    let total: f64 = draws.iter().sum();
    for d in &mut draws {
        *d /= total;
    }
    draws
}

struct AscentRun {
    point: Vec<f64>,
    value: f64,
    converged: bool,
    iterations: u64,
}

// Multiplicative-weights step p_j ← p_j·exp(−η g_j) / Z with backtracking on η.
fn ascend_from(start: Vec<f64>, config: &AscentConfig) -> AscentRun {
    let mut point = start;
    let mut value = sm2_of(&point);
    let mut candidate = vec![0.0; point.len()];
    for iteration in 1..=config.max_iterations {
        let Ok(grad) = gradient_of(&point) else {
            return AscentRun {
                point,
                value,
                converged: false,
                iterations: iteration,
            };
        };
        let mut step = config.step_size;
        let mut candidate_value;
        loop {
            // shift by the minimum so the largest factor is 1
            let g_min = grad.iter().copied().fold(f64::INFINITY, f64::min);
            for ((c, &p), &g) in candidate.iter_mut().zip(&point).zip(&grad) {
                *c = p * (-step * (g - g_min)).exp();
            }
            let z: f64 = candidate.iter().sum();
            for c in &mut candidate {
                *c /= z;
            }
            candidate_value = sm2_of(&candidate);
            if candidate_value <= value || step < 1e-30 {
                break;
            }
            step *= 0.5;
        }
        let change = linf_distance(&point, &candidate);
        std::mem::swap(&mut point, &mut candidate);
        value = candidate_value;
        if change < config.convergence_tol {
            return AscentRun {
                point,
                value,
                converged: true,
                iterations: iteration,
            };
        }
    }
    AscentRun {
        point,
        value,
        converged: false,
        iterations: config.max_iterations,
    }
}

/// Exponentiated-gradient ascent on the expected surprise `−S̃`.
///
/// Runs from the uniform point and `config.restarts` random interior points
/// and keeps the best endpoint. A run that hits `max_iterations` is reported
/// with `converged = false` and `agrees = false`.
pub fn ascent_optimize(days: Days, config: &AscentConfig) -> Result<OracleReport> {
    config.validate()?;
    let m = days.get();
    let closed_form = rollout(days).distribution();
    if m == 1 {
        return Ok(OracleReport::new(
            vec![1.0],
            0.0,
            closed_form,
            config.agreement_tol,
            true,
            0,
        ));
    }

    let starts = std::iter::once(vec![1.0 / m as f64; m]).chain(
        (0..config.restarts as u64).map(|i| random_interior_point(m, config.seed.wrapping_add(i))),
    );
    let mut best: Option<AscentRun> = None;
    let mut all_converged = true;
    let mut iterations = 0;
    for start in starts {
        let run = ascend_from(start, config);
        all_converged &= run.converged;
        iterations += run.iterations;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least the uniform start runs");
    Ok(OracleReport::new(
        best.point,
        best.value,
        closed_form,
        config.agreement_tol,
        all_converged,
        iterations,
    ))
}

/// Central differences of `S̃` along each coordinate axis, without
/// renormalizing the perturbed points.
pub fn finite_diff_gradient(p: &ProbabilityVector, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let values = p.as_slice();
    if let Some(i) = values
        .iter()
        .position(|&v| !(v - step > 0.0 && v + step < 1.0))
    {
        return Err(Error::Domain(format!(
            "perturbing entry {} = {} by {} leaves (0, 1)",
            i, values[i], step
        )));
    }
    let mut probe = values.to_vec();
    Ok((0..values.len())
        .map(|j| {
            probe[j] = values[j] + step;
            let up = sm2_of(&probe);
            probe[j] = values[j] - step;
            let down = sm2_of(&probe);
            probe[j] = values[j];
            (up - down) / (2.0 * step)
        })
        .collect())
}

/// Result of brute-force scanning one stage of the optimality equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageScan {
    pub best_spend: f64,
    /// Maximum of `x ln r − x ln x + W_{day+1}(r − x)` on the grid.
    pub best_value: f64,
    /// Grid spacing `r / (points − 1)`.
    pub cell: f64,
}

/// Scans `points` evenly spaced spends in `[0, budget]` and maximizes the
/// negated stage objective `−(x ln x − x ln r) − V_{day+1}(r − x)`.
pub fn scan_stage(
    gamma: &GammaSequence,
    day: usize,
    budget: f64,
    points: usize,
) -> Result<StageScan> {
    if points < 2 {
        return Err(Error::InvalidConfig("scan needs at least 2 points".into()));
    }
    if !(budget > 0.0) {
        return Err(Error::Domain(format!(
            "scan needs a positive budget, got {budget}"
        )));
    }
    let cell = budget / (points - 1) as f64;
    let mut best = StageScan {
        best_spend: 0.0,
        best_value: f64::NEG_INFINITY,
        cell,
    };
    for i in 0..points {
        let spend = if i == points - 1 {
            budget
        } else {
            i as f64 * cell
        };
        let value = -gamma.bellman_rhs(day, budget, spend)?;
        if value > best.best_value {
            best.best_value = value;
            best.best_spend = spend;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn days(m: usize) -> Days {
        Days::new(m).unwrap()
    }

    fn all_compositions(m: usize, n: u32) -> Vec<Vec<u32>> {
        // independent recursive enumeration
        fn rec(prefix: &mut Vec<u32>, left: u32, slots: usize, out: &mut Vec<Vec<u32>>) {
            if slots == 1 {
                prefix.push(left);
                out.push(prefix.clone());
                prefix.pop();
                return;
            }
            for k in 0..=left {
                prefix.push(k);
                rec(prefix, left - k, slots - 1, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), n, m, &mut out);
        out
    }

    #[test]
    fn successor_walks_every_composition_in_order() {
        for (m, n) in [(1, 4), (2, 5), (3, 4), (4, 3), (5, 2)] {
            let expected = all_compositions(m, n);
            let mut ks = vec![0; m];
            ks[m - 1] = n;
            let mut seen = vec![ks.clone()];
            while next_composition(&mut ks) {
                seen.push(ks.clone());
            }
            assert_eq!(seen, expected, "m={m} n={n}");
            assert_eq!(
                composition_count(m, n, u128::MAX - 1),
                expected.len() as u128
            );
        }
    }

    #[test]
    fn composition_count_caps() {
        assert_eq!(composition_count(3, 1000, GRID_POINT_CAP), 501_501);
        assert_eq!(composition_count(20, 1000, 10), 11);
    }

    #[test]
    fn grid_rejects_huge_lattices() {
        let spec = GridSpec::new(1000, GridSense::MinimizeSm2).unwrap();
        assert!(matches!(
            grid_search(days(10), spec),
            Err(Error::GridTooLarge { .. })
        ));
        assert!(GridSpec::new(1, GridSense::MinimizeSm2).is_err());
    }

    #[test]
    fn grid_two_days_both_senses() {
        let min = grid_search(
            days(2),
            GridSpec::new(10_000, GridSense::MinimizeSm2).unwrap(),
        )
        .unwrap();
        assert_eq!(min.best_point.as_slice(), &[0.3679, 0.6321]);
        assert!(min.linf_gap <= 1e-4);
        assert!(min.agrees);

        let max = grid_search(
            days(2),
            GridSpec::new(10_000, GridSense::MaximizeSm2).unwrap(),
        )
        .unwrap();
        assert_eq!(max.best_point.as_slice(), &[0.0, 1.0]);
        assert_eq!(max.best_value, 0.0);
        assert!(!max.agrees);
    }

    #[test]
    fn grid_single_day() {
        let r = grid_search(days(1), GridSpec::new(5, GridSense::MinimizeSm2).unwrap()).unwrap();
        assert_eq!(r.best_point.as_slice(), &[1.0]);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn ascent_single_day() {
        let r = ascent_optimize(days(1), &AscentConfig::default()).unwrap();
        assert_eq!(r.best_point.as_slice(), &[1.0]);
        assert!(r.agrees);
    }

    #[test]
    fn ascent_two_days() {
        let cfg = AscentConfig {
            restarts: 0,
            ..AscentConfig::default()
        };
        let r = ascent_optimize(days(2), &cfg).unwrap();
        assert!(r.converged);
        assert!(r.linf_gap <= 1e-8, "gap {}", r.linf_gap);
    }

    #[test]
    fn ascent_config_validation() {
        let bad = AscentConfig {
            step_size: 0.0,
            ..AscentConfig::default()
        };
        assert!(ascent_optimize(days(3), &bad).is_err());
        let bad = AscentConfig {
            convergence_tol: -1.0,
            ..AscentConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ascent_reports_non_convergence() {
        let cfg = AscentConfig {
            max_iterations: 2,
            restarts: 0,
            ..AscentConfig::default()
        };
        let r = ascent_optimize(days(6), &cfg).unwrap();
        assert!(!r.converged);
        assert!(!r.agrees);
    }

    #[test]
    fn random_points_are_interior_and_seeded() {
        let a = random_interior_point(7, 11);
        assert_eq!(a, random_interior_point(7, 11));
        assert_ne!(a, random_interior_point(7, 12));
        assert!(a.iter().all(|&x| x > 0.0));
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_examples() {
        let p = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        let g = finite_diff_gradient(&p, 1e-6).unwrap();
        assert!((g[0] + 0.19314718).abs() < 1e-5);
        assert!((g[1] + 0.5).abs() < 1e-5);

        let star = rollout(days(2)).distribution();
        for c in finite_diff_gradient(&star, 1e-6).unwrap() {
            assert!((c + 0.36787944).abs() < 1e-5);
        }

        let one = ProbabilityVector::new(vec![1.0]).unwrap();
        assert!(matches!(
            finite_diff_gradient(&one, 1e-6),
            Err(Error::Domain(_))
        ));
        assert!(finite_diff_gradient(&p, 0.0).is_err());
    }

    #[test]
    fn stage_scan_hits_policy() {
        let g = GammaSequence::new(days(5));
        for day in 1..5 {
            let scan = scan_stage(&g, day, 0.8, 10_000).unwrap();
            let x = g.policy(day, 0.8).unwrap();
            assert!((scan.best_spend - x).abs() <= scan.cell);
            assert!((scan.best_value + g.value(day, 0.8).unwrap()).abs() <= 1e-6);
        }
    }
}
