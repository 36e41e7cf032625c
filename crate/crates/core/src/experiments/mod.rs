//! Runnable checks, each producing an [`ExperimentReport`].
//!
//! Every record row states its own pass rule (`|value| ≤ bound` or
//! `|value| ≥ bound`), so a row's flag can be recomputed from the CSV alone.
//! Reports are deterministic functions of their parameters: sampling uses
//! seeded ChaCha streams drawn sequentially, evaluation is parallel but
//! order-preserving.

mod boundedness;
mod ctilde;
mod density;
mod growth;
mod pv;
mod reflectionless;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::geometry::ComplexPoint;

pub use boundedness::{boundedness_sweep, compare_depths, sup_ratio, SweepSpec};
pub use ctilde::{compute_ctilde, ctilde_experiment, ctilde_grid_oracle, ctilde_one_d, CtildeReport, CTILDE};
pub use density::density_decay;
pub use growth::{measure_properties, MASS_TOL};
pub use pv::{pv_failure, pv_oscillation_svg, PvSpec, ADDITIVITY_TOL};
pub use reflectionless::check_reflectionless;

/// How a record's `pass` flag follows from its `value` and `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    /// `|value| ≤ bound`
    #[serde(rename = "abs<=bound")]
    AtMost,
    /// `|value| ≥ bound`
    #[serde(rename = "abs>=bound")]
    AtLeast,
}

impl Rule {
    pub fn holds(self, value: Complex64, bound: f64) -> bool {
        match self {
            Rule::AtMost => value.norm() <= bound,
            Rule::AtLeast => value.norm() >= bound,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Rule::AtMost => "abs<=bound",
            Rule::AtLeast => "abs>=bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub experiment: String,
    pub level: Option<usize>,
    pub z: ComplexPoint,
    pub radius: f64,
    pub value: Complex64,
    pub bound: f64,
    pub rule: Rule,
    pub pass: bool,
}

impl Record {
    pub fn new(experiment: &str, level: Option<usize>, z: ComplexPoint, radius: f64, value: Complex64, bound: f64, rule: Rule) -> Self {
        Self {
            experiment: experiment.to_string(),
            level,
            z,
            radius,
            value,
            bound,
            rule,
            pass: rule.holds(value, bound),
        }
    }
}

/// A named pass/fail verdict with a one-line explanation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Parameters {
    pub schedule: Option<Vec<u64>>,
    pub depth: Option<usize>,
    pub seed: Option<u64>,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Summary {
    pub passed: bool,
    /// Measured constants (c̃, C₀, sup|T1|, c₀, ...).
    pub constants: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: Parameters,
    pub records: Vec<Record>,
    pub summary: Summary,
}

pub const CSV_HEADER: &str = "experiment,level,z.re,z.im,radius,value.re,value.im,bound,pass,rule";

impl ExperimentReport {
    pub fn new(name: &str, parameters: Parameters) -> Self {
        Self {
            name: name.to_string(),
            parameters,
            records: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.summary.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.summary.constants.insert(name.to_string(), value);
    }

    /// Sets `summary.passed` from the checks.
    pub fn finish(mut self) -> Self {
        self.summary.passed = self.summary.checks.iter().all(|c| c.passed);
        self
    }

    pub fn passed(&self) -> bool {
        self.summary.passed
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.summary.checks.iter().filter(|c| !c.passed)
    }

    /// Records with pass flags recomputed from their rule, value and bound.
    pub fn records_consistent(&self) -> bool {
        self.records.iter().all(|r| r.pass == r.rule.holds(r.value, r.bound))
    }

    /// One row per record. Floats use Rust's shortest round-trip format.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.records.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let level = r.level.map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.experiment,
                level,
                r.z.re,
                r.z.im,
                r.radius,
                r.value.re,
                r.value.im,
                r.bound,
                r.pass,
                r.rule.as_str()
            );
        }
        s
    }

    /// Name, parameters and summary (records go to the CSV).
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            name: &'a str,
            parameters: &'a Parameters,
            records: usize,
            failed_records: usize,
            summary: &'a Summary,
        }
        let v = View {
            name: &self.name,
            parameters: &self.parameters,
            records: self.records.len(),
            failed_records: self.records.iter().filter(|r| !r.pass).count(),
            summary: &self.summary,
        };
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}
