//! Reports: JSON documents, CSV sample tables and gnuplot data files.

use polylab_core::modalgreen::fit::{DecayFit, Sample};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Uncertified,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// Fitted samples attached to a case for CSV and plot output.
#[derive(Clone, Debug)]
pub struct SampleTable {
    pub abscissa: String,
    pub samples: Vec<Sample>,
}

impl From<&DecayFit> for SampleTable {
    fn from(f: &DecayFit) -> Self {
        SampleTable { abscissa: f.abscissa.to_string(), samples: f.samples.clone() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Case {
    pub module: String,
    pub id: String,
    pub status: Status,
    pub detail: String,
    pub payload: Value,
    #[serde(skip)]
    pub table: Option<SampleTable>,
    #[serde(skip)]
    pub seconds: f64,
}

impl Case {
    pub fn new(module: &str, id: String, status: Status, detail: String, payload: Value) -> Self {
        Case { module: module.into(), id, status, detail, payload, table: None, seconds: 0.0 }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub uncertified: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
}

impl Default for Environment {
    fn default() -> Self {
        Environment { version: env!("CARGO_PKG_VERSION"), os: std::env::consts::OS, arch: std::env::consts::ARCH }
    }
}

/// Wall-clock data; the only part of a report that varies between runs.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timing {
    pub jobs: usize,
    pub total_seconds: f64,
    pub cases: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub config: Value,
    pub summary: Summary,
    pub cases: Vec<Case>,
    pub environment: Environment,
    pub timing: Timing,
}

impl Report {
    pub fn new(suite: &str, config: Value, cases: Vec<Case>, jobs: usize, total_seconds: f64) -> Self {
        let mut summary = Summary::default();
        for c in &cases {
            match c.status {
                Status::Pass => summary.pass += 1,
                Status::Fail => summary.fail += 1,
                Status::Uncertified => summary.uncertified += 1,
            }
        }
        let timing = Timing {
            jobs,
            total_seconds,
            cases: cases.iter().map(|c| (format!("{}/{}", c.module, c.id), c.seconds)).collect(),
        };
        Report { suite: suite.into(), config, summary, cases, environment: Environment::default(), timing }
    }

    pub fn failed(&self) -> bool {
        self.summary.fail > 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn write_csv(&self, path: &Path, with_case: bool) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["x_r", "y_r", "cos_angle", "value", "predicted_bound"];
        if with_case {
            header.insert(0, "case");
        }
        w.write_record(&header)?;
        for c in &self.cases {
            let Some(t) = &c.table else { continue };
            for s in &t.samples {
                let mut row: Vec<String> = [s.x_r, s.y_r, s.cos_angle, s.value, s.predicted_bound]
                    .iter()
                    .map(|v| format!("{v:e}"))
                    .collect();
                if with_case {
                    row.insert(0, c.id.clone());
                }
                w.write_record(&row)?;
            }
        }
        w.flush()
    }

    /// Two columns per fit, `log10(scale)` against `log10|value|` (or the
    /// log-law abscissa against the value), one gnuplot index per fit.
    pub fn write_plot_data(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut first = true;
        for c in &self.cases {
            let Some(t) = &c.table else { continue };
            if !first {
                writeln!(f, "\n")?;
            }
            first = false;
            let log_law = t.abscissa.starts_with("log(");
            if log_law {
                writeln!(f, "# {} : {} vs value", c.id, t.abscissa)?;
            } else {
                writeln!(f, "# {} : log10 {} vs log10 |value|", c.id, t.abscissa)?;
            }
            for s in &t.samples {
                if log_law {
                    writeln!(f, "{:e} {:e}", s.predicted_bound, s.value)?;
                } else {
                    writeln!(f, "{:e} {:e}", s.scale.log10(), s.value.abs().log10())?;
                }
            }
        }
        f.flush()
    }
}
