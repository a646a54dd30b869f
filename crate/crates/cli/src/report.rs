//! Run reports: named checks with values and tolerances, serialized as
//! JSON. Reports carry no wall-clock data, so identical configs produce
//! byte-identical files; timing goes to the verbose console output only.

use std::path::Path;

use serde::Serialize;

use crate::config::ScenarioConfig;
use contacton::Result;

/// One pass/fail measurement. `value` is the measured quantity, compared
/// against `tolerance` by whatever rule the check's constructor encodes;
/// `pass` stores the outcome so the report is self-contained.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when the value stays at or below the tolerance.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
        }
    }

    /// Passes when the value stays at or above the bound; for margins and
    /// rates. The bound is recorded in the tolerance slot.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: bound,
            pass: value.is_finite() && value >= bound,
        }
    }

    /// Passes when |value - target| <= tolerance; the report stores the
    /// raw value and the half-width, with the target named in the label.
    pub fn near(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value.is_finite() && (value - target).abs() <= tolerance,
        }
    }

    /// Boolean condition; value 1 = holds.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: 1.0,
            pass: ok,
        }
    }

    /// A computation that failed outright; the error text lands in the
    /// name so the report stays one flat list.
    pub fn error(name: impl Into<String>, err: &contacton::Error) -> Self {
        Self {
            name: format!("{} [error: {err}]", name.into()),
            value: f64::NAN,
            tolerance: 0.0,
            pass: false,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    /// The configuration as parsed, before any path resolution.
    pub config: ScenarioConfig,
    pub checks: Vec<Check>,
    /// File names written next to the report, relative to the run dir.
    pub artifacts: Vec<String>,
    /// Conjunction of the per-check outcomes.
    pub pass: bool,
}

impl RunReport {
    pub fn new(config: &ScenarioConfig, checks: Vec<Check>, artifacts: Vec<String>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            scenario: config.scenario.clone(),
            config: config.clone(),
            checks,
            artifacts,
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports always serialize");
        text.push('\n');
        text
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        Ok(std::fs::write(dir.join("report.json"), self.to_json())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_rules() {
        assert!(Check::below("a", 1e-9, 1e-8).pass);
        assert!(!Check::below("a", 2e-8, 1e-8).pass);
        assert!(!Check::below("a", f64::NAN, 1e-8).pass);
        assert!(Check::at_least("m", 1.0, 1e-6).pass);
        assert!(Check::near("o", 2.13, 2.0, 0.3).pass);
        assert!(!Check::near("o", 2.4, 2.0, 0.3).pass);
        assert!(!Check::holds("flag", false).pass);
    }

    #[test]
    fn report_pass_is_conjunction() {
        let cfg = ScenarioConfig {
            scenario: "reeb-strip".into(),
            ..ScenarioConfig::default()
        };
        let good = RunReport::new(&cfg, vec![Check::holds("x", true)], vec![]);
        assert!(good.pass);
        let bad = RunReport::new(
            &cfg,
            vec![Check::holds("x", true), Check::holds("y", false)],
            vec![],
        );
        assert!(!bad.pass);
    }

    #[test]
    fn json_is_deterministic() {
        let cfg = ScenarioConfig {
            scenario: "relax".into(),
            ..ScenarioConfig::default()
        };
        let r1 = RunReport::new(&cfg, vec![Check::below("r", 1e-7, 1e-6)], vec!["a.csv".into()]);
        let r2 = RunReport::new(&cfg, vec![Check::below("r", 1e-7, 1e-6)], vec!["a.csv".into()]);
        assert_eq!(r1.to_json(), r2.to_json());
    }
}
