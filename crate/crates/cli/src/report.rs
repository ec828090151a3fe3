use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde::{Deserialize, Serialize};

use crate::config::{Format, Suite, STDOUT};
use crate::{CliError, Result};

/// Bumped whenever a report field or CSV column changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str = "suite,check_id,status,value,tolerance,comparator,provenance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }
}

/// How `value` is compared against `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "==")]
    Eq,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Lt => "<",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Eq => "==",
        }
    }

    /// NaN never holds.
    pub fn holds(self, value: f64, tolerance: f64) -> bool {
        match self {
            Comparator::Le => value <= tolerance,
            Comparator::Lt => value < tolerance,
            Comparator::Ge => value >= tolerance,
            Comparator::Gt => value > tolerance,
            Comparator::Eq => value == tolerance,
        }
    }
}

/// Where a check's expected value comes from: stated in the source theory,
/// derived by an independent calculation, or true by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Paper,
    Derived,
    Trivial,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Paper => "paper",
            Provenance::Derived => "derived",
            Provenance::Trivial => "trivial",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check_id: String,
    pub status: Status,
    pub value: f64,
    pub tolerance: f64,
    pub comparator: Comparator,
    pub provenance: Provenance,
}

impl Check {
    pub fn new(id: impl Into<String>, value: f64, comparator: Comparator, tolerance: f64, provenance: Provenance) -> Self {
        let status = if comparator.holds(value, tolerance) {
            Status::Pass
        } else {
            Status::Fail
        };
        Check {
            check_id: id.into(),
            status,
            value,
            tolerance,
            comparator,
            provenance,
        }
    }

    /// Same row, but never counted as pass or fail.
    pub fn skipped(mut self) -> Self {
        self.status = Status::Skip;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: Suite,
    pub seed: u64,
    pub samples: usize,
    /// Sorted by `check_id`.
    pub checks: Vec<Check>,
    pub wall_time_secs: f64,
}

impl SuiteReport {
    /// True iff every non-skipped check passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                self.suite.name(),
                c.check_id,
                c.status.name(),
                number(c.value),
                number(c.tolerance),
                c.comparator.symbol(),
                c.provenance.name()
            );
        }
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Same spelling as the JSON report, so both formats carry identical digits.
fn number(v: f64) -> String {
    serde_json::to_string(&v).expect("f64 serializes")
}

/// Opens (and truncates) the report destination so an unwritable path fails
/// before any suite runs.
pub fn open_output(path: &str) -> Result<Box<dyn Write>> {
    if path == STDOUT {
        return Ok(Box::new(io::stdout()));
    }
    File::create(path)
        .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
        .map_err(|e| CliError::OutputUnwritable {
            path: path.to_string(),
            reason: e.to_string(),
        })
}

pub fn write_report(report: &SuiteReport, format: Format, out: &mut dyn Write, path: &str) -> Result<()> {
    out.write_all(report.render(format).as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::OutputUnwritable {
            path: path.to_string(),
            reason: e.to_string(),
        })
}
