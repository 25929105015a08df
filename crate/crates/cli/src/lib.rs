//! Rendering and command logic behind the `surprise` binary.
//!
//! Every renderer returns the exact bytes written to stdout. Floats are
//! printed with the shortest decimal that round-trips to the same binary64
//! value, so output is stable across runs and loses nothing.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use surprise_core::oracle::linf_distance;
use surprise_core::{
    ascent_optimize, estimate_expected_surprise, gradient_sm2, grid_search, rollout, tail_masses,
    AscentConfig, Days, GammaSequence, GridSense, GridSpec, ObjectiveValue, ProbabilityVector,
    SimulationConfig, SimulationResult, SolveResult,
};
use thiserror::Error;

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const MISMATCH: i32 = 2;
    pub const PARSE: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Mismatch(String),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Mismatch(_) => exit::MISMATCH,
            CliError::Parse { .. } => exit::PARSE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// `--days` argument: a single count `5` or an inclusive range `2..8`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayRange {
    pub first: usize,
    pub last: usize,
}

impl DayRange {
    pub fn iter(&self) -> RangeInclusive<usize> {
        self.first..=self.last
    }

    /// The single day count, or a usage error for a proper range.
    pub fn single(&self) -> Result<Days, CliError> {
        if self.first != self.last {
            return Err(CliError::Usage(format!(
                "expected a single day count, got range {}..{}",
                self.first, self.last
            )));
        }
        to_days(self.first)
    }
}

impl FromStr for DayRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{t}' is not a nonnegative integer"))
        };
        let (first, last) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let m = parse(s)?;
                (m, m)
            }
        };
        if first > last {
            return Err(format!("empty range {first}..{last}"));
        }
        Ok(Self { first, last })
    }
}

fn to_days(m: usize) -> Result<Days, CliError> {
    Days::new(m).map_err(|e| CliError::Usage(e.to_string()))
}

/// Shortest round-trip decimal, no exponent.
fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Serialize)]
struct ObjectiveJson {
    sm1: f64,
    sm2: f64,
    expected_surprise: f64,
}

impl From<ObjectiveValue> for ObjectiveJson {
    fn from(o: ObjectiveValue) -> Self {
        Self {
            sm1: o.sm1,
            sm2: o.sm2,
            expected_surprise: o.expected_surprise,
        }
    }
}

#[derive(Serialize)]
struct SolveJson {
    m: usize,
    gamma0: f64,
    gamma: Vec<f64>,
    p: Vec<f64>,
    objective: ObjectiveJson,
    value_at_root: f64,
}

impl From<&SolveResult> for SolveJson {
    fn from(r: &SolveResult) -> Self {
        Self {
            m: r.days(),
            gamma0: r.gamma.gamma(0),
            gamma: r.gamma.as_slice()[1..].to_vec(),
            p: r.policy.allocations(),
            objective: r.objective.into(),
            value_at_root: r.value_at_root,
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain structs serialize");
    s.push('\n');
    s
}

pub const SOLVE_CSV_HEADER: &str = "j,gamma,hazard,p,remaining_before";

fn policy_rows_csv(out: &mut String, result: &SolveResult, prefix: Option<usize>) {
    for row in &result.policy.rows {
        if let Some(m) = prefix {
            let _ = write!(out, "{m},");
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.day,
            num(row.gamma),
            num(row.hazard),
            num(row.allocation),
            num(row.remaining_before)
        );
    }
}

pub fn render_solve(result: &SolveResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(&SolveJson::from(result)),
        OutputFormat::Csv => {
            let mut out = String::new();
            out.push_str(SOLVE_CSV_HEADER);
            out.push('\n');
            policy_rows_csv(&mut out, result, None);
            out
        }
    }
}

pub fn run_solve(days: Days, format: OutputFormat) -> String {
    render_solve(&rollout(days), format)
}

/// Policy tables for every `m` in the range, ascending.
pub fn run_table(range: &DayRange, format: OutputFormat) -> Result<String, CliError> {
    let results = range
        .iter()
        .map(|m| to_days(m).map(rollout))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match format {
        OutputFormat::Json => {
            let all: Vec<SolveJson> = results.iter().map(SolveJson::from).collect();
            to_json(&all)
        }
        OutputFormat::Csv => {
            let mut out = format!("m,{SOLVE_CSV_HEADER}\n");
            for r in &results {
                policy_rows_csv(&mut out, r, Some(r.days()));
            }
            out
        }
    })
}

/// A distribution read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFile {
    pub path: PathBuf,
    pub distribution: ProbabilityVector,
}

impl DistributionFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse {
            path: shown.clone(),
            message: format!("cannot read: {e}"),
        })?;
        let distribution = parse_distribution(&text).map_err(|message| CliError::Parse {
            path: shown,
            message,
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            distribution,
        })
    }
}

/// Parses a JSON array of numbers, or one decimal per line. The format is
/// chosen by the first non-whitespace byte (`[` means JSON). Blank lines in
/// the line format are skipped.
pub fn parse_distribution(text: &str) -> Result<ProbabilityVector, String> {
    let trimmed = text.trim_start();
    let (values, origin): (Vec<f64>, Vec<String>) = if trimmed.starts_with('[') {
        let values: Vec<f64> = serde_json::from_str(text).map_err(|e| {
            format!(
                "invalid JSON array at line {} column {}: {e}",
                e.line(),
                e.column()
            )
        })?;
        let origin = (1..=values.len()).map(|i| format!("field {i}")).collect();
        (values, origin)
    } else {
        let mut values = Vec::new();
        let mut origin = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let field = line.trim();
            if field.is_empty() {
                continue;
            }
            let v = field
                .parse::<f64>()
                .map_err(|_| format!("line {}: '{field}' is not a number", lineno + 1))?;
            values.push(v);
            origin.push(format!("line {}", lineno + 1));
        }
        (values, origin)
    };
    ProbabilityVector::new(values).map_err(|e| match e {
        surprise_core::Error::InvalidEntry { index, value } => format!(
            "{}: {value} is not a probability (must be finite and nonnegative)",
            origin[index]
        ),
        surprise_core::Error::EmptyDistribution => "no probabilities found".to_string(),
        other => other.to_string(),
    })
}

#[derive(Serialize)]
struct EvalJson {
    m: usize,
    sm1: f64,
    sm2: f64,
    expected_surprise: f64,
    tail: Vec<f64>,
}

/// Objective values and tail masses of a distribution.
pub fn run_eval(file: &DistributionFile, format: OutputFormat) -> String {
    let p = &file.distribution;
    let o = ObjectiveValue::at(p);
    let tail = tail_masses(p).into_inner();
    match format {
        OutputFormat::Json => to_json(&EvalJson {
            m: p.days(),
            sm1: o.sm1,
            sm2: o.sm2,
            expected_surprise: o.expected_surprise,
            tail,
        }),
        OutputFormat::Csv => {
            let mut out = String::from("field,value\n");
            let _ = writeln!(out, "m,{}", p.days());
            let _ = writeln!(out, "sm1,{}", num(o.sm1));
            let _ = writeln!(out, "sm2,{}", num(o.sm2));
            let _ = writeln!(out, "expected_surprise,{}", num(o.expected_surprise));
            for (j, t) in tail.iter().enumerate() {
                let _ = writeln!(out, "tail_{},{}", j + 1, num(*t));
            }
            out
        }
    }
}

/// Tolerances for `verify`, other than the ascent agreement tolerance which
/// lives in [`AscentConfig`].
pub mod tolerance {
    pub const STATIONARITY: f64 = 1e-12;
    /// Per day; multiplied by `m`.
    pub const TELESCOPE_PER_DAY: f64 = 1e-12;
    pub const GRADIENT_SPREAD: f64 = 1e-9;
    pub const VALUE_CONSISTENCY: f64 = 1e-10;
    pub const ASCENT_OBJECTIVE: f64 = 1e-10;
}

/// Largest `m` the grid oracle runs on during `verify`.
pub const VERIFY_GRID_MAX_DAYS: usize = 3;
pub const VERIFY_GRID_DEFAULT: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub m: usize,
    pub check: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub max_ascent_linf_gap: f64,
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&CheckRow> {
        self.rows.iter().find(|r| !r.pass)
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Csv => {
                let mut out = String::from("m,check,value,tolerance,pass\n");
                for r in &self.rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.m,
                        r.check,
                        num(r.value),
                        num(r.tolerance),
                        r.pass
                    );
                }
                let _ = writeln!(
                    out,
                    "all,max_ascent_linf_gap,{},{},{}",
                    num(self.max_ascent_linf_gap),
                    num(self
                        .rows
                        .iter()
                        .find(|r| r.check == "ascent_linf_gap")
                        .map_or(0.0, |r| r.tolerance)),
                    self.ok
                );
                out
            }
        }
    }
}

fn check(m: usize, check: &'static str, value: f64, tolerance: f64) -> CheckRow {
    CheckRow {
        m,
        check,
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

// budgets at which the stationarity residual is probed
const PROBE_BUDGETS: [f64; 3] = [0.25, 0.5, 1.0];

fn closed_form_checks(m: usize, result: &SolveResult, rows: &mut Vec<CheckRow>) {
    let gamma: &GammaSequence = &result.gamma;

    let stationarity = (1..m)
        .flat_map(|j| PROBE_BUDGETS.iter().map(move |&r| (j, r)))
        .map(|(j, r)| gamma.stationarity_residual(j, r).expect("in range").abs())
        .fold(0.0, f64::max);
    rows.push(check(
        m,
        "stationarity_residual",
        stationarity,
        tolerance::STATIONARITY,
    ));

    let telescope = (1..=m)
        .map(|k| gamma.telescope_residual(k).expect("in range").abs())
        .fold(0.0, f64::max);
    rows.push(check(
        m,
        "telescope_residual",
        telescope,
        tolerance::TELESCOPE_PER_DAY * m as f64,
    ));

    let consistency = (result.objective.sm2 - (1.0 - gamma.gamma(0))).abs();
    rows.push(check(
        m,
        "value_consistency",
        consistency,
        tolerance::VALUE_CONSISTENCY,
    ));

    let spread = if m > 1 {
        let g = gradient_sm2(&result.distribution()).expect("rollout is interior");
        let hi = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    } else {
        0.0
    };
    rows.push(check(
        m,
        "gradient_spread",
        spread,
        tolerance::GRADIENT_SPREAD,
    ));
}

/// Runs every check for each `m` in the range: closed-form residuals, the
/// ascent oracle, and the grid oracle for `m ≤ 3`.
pub fn run_verify(
    range: &DayRange,
    grid_resolution: u32,
    ascent: &AscentConfig,
) -> Result<VerifyReport, CliError> {
    ascent
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = GridSpec::new(grid_resolution, GridSense::MinimizeSm2)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut rows = Vec::new();
    let mut max_gap: f64 = 0.0;
    for m in range.iter() {
        let days = to_days(m)?;
        let result = rollout(days);
        closed_form_checks(m, &result, &mut rows);

        let report = ascent_optimize(days, ascent).map_err(|e| CliError::Usage(e.to_string()))?;
        let gap = if report.converged {
            report.linf_gap
        } else {
            f64::INFINITY
        };
        max_gap = max_gap.max(gap);
        rows.push(check(m, "ascent_linf_gap", gap, report.tolerance));
        rows.push(check(
            m,
            "ascent_objective_gap",
            (report.best_value - result.objective.sm2).abs(),
            tolerance::ASCENT_OBJECTIVE,
        ));

        if m <= VERIFY_GRID_MAX_DAYS {
            let g = grid_search(days, grid).map_err(|e| CliError::Usage(e.to_string()))?;
            let gap = linf_distance(g.best_point.as_slice(), g.closed_form_point.as_slice());
            rows.push(check(m, "grid_linf_gap", gap, g.tolerance));
        }
    }
    let ok = rows.iter().all(|r| r.pass);
    Ok(VerifyReport {
        ok,
        max_ascent_linf_gap: max_gap,
        rows,
    })
}

#[derive(Serialize)]
struct SimulateJson {
    m: usize,
    samples: u64,
    seed: u64,
    mean: f64,
    std_error: f64,
    analytic: f64,
    z_gap: f64,
    signed_mean: f64,
}

/// Simulates realized surprise at the closed-form optimum and compares the
/// mean with `γ_0 − 1`.
pub fn run_simulate(
    days: Days,
    samples: u64,
    seed: u64,
    format: OutputFormat,
) -> Result<String, CliError> {
    let config =
        SimulationConfig::new(samples, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let solved = rollout(days);
    let analytic = solved.gamma.expected_surprise();
    let sim: SimulationResult = estimate_expected_surprise(&solved.distribution(), config);
    let z_gap = sim.z_score(analytic);
    let row = SimulateJson {
        m: days.get(),
        samples: sim.samples,
        seed: sim.seed,
        mean: sim.mean,
        std_error: sim.std_error,
        analytic,
        z_gap,
        signed_mean: sim.signed_objective(),
    };
    Ok(match format {
        OutputFormat::Json => to_json(&row),
        OutputFormat::Csv => format!(
            "m,samples,seed,mean,std_error,analytic,z_gap,signed_mean\n{},{},{},{},{},{},{},{}\n",
            row.m,
            row.samples,
            row.seed,
            num(row.mean),
            num(row.std_error),
            num(row.analytic),
            num(row.z_gap),
            num(row.signed_mean)
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_ranges() {
        assert_eq!(
            "5".parse::<DayRange>().unwrap(),
            DayRange { first: 5, last: 5 }
        );
        assert_eq!(
            "2..8".parse::<DayRange>().unwrap(),
            DayRange { first: 2, last: 8 }
        );
        assert_eq!(
            "2..=8".parse::<DayRange>().unwrap(),
            DayRange { first: 2, last: 8 }
        );
        assert!("8..2".parse::<DayRange>().is_err());
        assert!("x".parse::<DayRange>().is_err());
        assert!("-1".parse::<DayRange>().is_err());
        assert!(matches!(
            "2..3".parse::<DayRange>().unwrap().single(),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            "0".parse::<DayRange>().unwrap().single(),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn solve_one_day_csv() {
        let out = run_solve(Days::new(1).unwrap(), OutputFormat::Csv);
        assert_eq!(out, "j,gamma,hazard,p,remaining_before\n1,0,1,1,1\n");
    }

    #[test]
    fn solve_two_days_json() {
        let out = run_solve(Days::new(2).unwrap(), OutputFormat::Json);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let p: Vec<f64> = serde_json::from_value(v["p"].clone()).unwrap();
        assert_eq!(p, vec![0.36787944117144233, 0.6321205588285577]);
        let keys: Vec<&str> = [
            "\"m\"",
            "\"gamma0\"",
            "\"gamma\"",
            "\"p\"",
            "\"objective\"",
            "\"value_at_root\"",
        ]
        .to_vec();
        let positions: Vec<usize> = keys.iter().map(|k| out.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn parse_both_formats() {
        let a = parse_distribution("[0.5, 0.5]").unwrap();
        let b = parse_distribution("  0.5\n\n0.5\n").unwrap();
        assert_eq!(a, b);
        let err = parse_distribution("[0.5, 0.6]").unwrap_err();
        assert!(err.contains("sum 1.1 exceeds tolerance"), "{err}");
        let err = parse_distribution("0.5\nhalf\n").unwrap_err();
        assert!(err.starts_with("line 2:"), "{err}");
        let err = parse_distribution("[0.5, -0.1, 0.6]").unwrap_err();
        assert!(err.starts_with("field 2:"), "{err}");
        let err = parse_distribution("0.2\n\n1.5\n-0.7").unwrap_err();
        assert!(err.starts_with("line 4:"), "{err}");
        assert!(parse_distribution("").is_err());
        assert!(parse_distribution("[0.5, ").is_err());
    }

    #[test]
    fn eval_half_half() {
        let file = DistributionFile {
            path: "x".into(),
            distribution: parse_distribution("[0.5, 0.5]").unwrap(),
        };
        let out = run_eval(&file, OutputFormat::Csv);
        assert!(out.contains("sm2,-0.34657359027997264\n"), "{out}");
        assert!(out.contains("tail_1,1\ntail_2,0.5\n"), "{out}");
    }

    #[test]
    fn table_rows() {
        let out = run_table(&"1..3".parse().unwrap(), OutputFormat::Csv).unwrap();
        assert_eq!(out.lines().count(), 1 + 1 + 2 + 3);
        assert!(out.starts_with("m,j,gamma,hazard,p,remaining_before\n1,1,0,1,1,1\n"));
        assert!(run_table(&"0..2".parse().unwrap(), OutputFormat::Csv).is_err());
    }

    #[test]
    fn verify_trivial() {
        let r = run_verify(&"1..1".parse().unwrap(), 100, &AscentConfig::default()).unwrap();
        assert!(r.ok);
        assert!(r.first_failure().is_none());
    }

    #[test]
    fn verify_flags_tight_tolerance() {
        let cfg = AscentConfig {
            agreement_tol: 0.0,
            convergence_tol: 1e-3,
            ..AscentConfig::default()
        };
        let r = run_verify(&"4..4".parse().unwrap(), 100, &cfg).unwrap();
        assert!(!r.ok);
        assert_eq!(r.first_failure().unwrap().check, "ascent_linf_gap");
    }

    #[test]
    fn simulate_single_day() {
        let out = run_simulate(Days::new(1).unwrap(), 10, 7, OutputFormat::Csv).unwrap();
        assert_eq!(
            out,
            "m,samples,seed,mean,std_error,analytic,z_gap,signed_mean\n1,10,7,0,0,0,0,0\n"
        );
        assert!(run_simulate(Days::new(1).unwrap(), 0, 7, OutputFormat::Csv).is_err());
    }
}
