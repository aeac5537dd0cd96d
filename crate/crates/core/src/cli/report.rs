//! Reports: echoed inputs, results, declared checks.

use serde::{Deserialize, Serialize};

use super::config::{Command, JobConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value < tolerance`.
    Below,
    /// `value > tolerance`.
    Above,
    /// `value == tolerance`, for counts.
    Equal,
    /// `tolerance.0 <= value <= tolerance.1`, stored as `bound` and `upper`.
    Within,
}

/// One declared check with the number it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub value: f64,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), relation: Relation::Below, value, bound, upper: None, pass: value < bound }
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), relation: Relation::Above, value, bound, upper: None, pass: value > bound }
    }

    pub fn equal(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), relation: Relation::Equal, value, bound, upper: None, pass: value == bound }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), relation: Relation::Within, value, bound: lo, upper: Some(hi), pass: lo <= value && value <= hi }
    }

    /// A yes/no fact, recorded as `1 == 1` or `0 == 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::equal(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

/// What a command produced, before it is wrapped into a [`Report`].
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    /// Extra files (name suffix, contents) such as CSV spectra.
    pub attachments: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Command,
    pub version: String,
    pub inputs: JobConfig,
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Kept out of the payload so that reruns compare byte for byte.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(command: Command, inputs: JobConfig, outcome: &Outcome, wall_time_s: f64) -> Self {
        Report {
            command,
            version: version(),
            inputs,
            results: outcome.results.clone(),
            pass: outcome.checks.iter().all(|c| c.pass),
            checks: outcome.checks.clone(),
            wall_time_s,
        }
    }

    /// The deterministic part of the report as pretty JSON.
    pub fn payload_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Crate version and the source revision it was built from.
pub fn version() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), option_env!("CONIC_SPECTRA_REV").unwrap_or("unknown"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(Check::below("a", 1.0, 2.0).pass);
        assert!(!Check::below("a", 2.0, 2.0).pass);
        assert!(!Check::below("a", f64::NAN, 2.0).pass);
        assert!(Check::above("a", 1e-3, 0.0).pass);
        assert!(Check::within("r", 2.5, 2.0, 6.0).pass && !Check::within("r", 7.0, 2.0, 6.0).pass);
        assert!(Check::holds("x", true).pass && !Check::holds("x", false).pass);
    }

    #[test]
    fn wall_time_not_in_payload() {
        let o = Outcome { results: serde_json::json!({"x": 1.5}), checks: vec![Check::holds("ok", true)], ..Default::default() };
        let a = Report::new(Command::Periods, JobConfig::default(), &o, 1.0);
        let b = Report::new(Command::Periods, JobConfig::default(), &o, 2.0);
        assert_eq!(a.payload_json(), b.payload_json());
        assert!(!a.payload_json().contains("wall"));
        assert!(a.pass);
    }
}
