//! Metric records and their CSV form.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// How a value is compared with its target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// `|value - target| <= tol`.
    Within(f64),
    /// `value <= target`.
    AtMost,
    /// `value >= target`.
    AtLeast,
}

impl Bound {
    fn label(&self) -> String {
        match self {
            Bound::Within(t) => format!("{t}"),
            Bound::AtMost => "<=".to_string(),
            Bound::AtLeast => ">=".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub case: String,
    pub metric: String,
    pub value: f64,
    pub target: f64,
    pub bound: Bound,
    pub pass: bool,
    /// What the number means, for people reading the table.
    pub note: String,
}

impl MetricReport {
    pub fn new(case: impl Into<String>, metric: impl Into<String>, value: f64, target: f64, bound: Bound) -> Self {
        let pass = value.is_finite()
            && match bound {
                Bound::Within(tol) => (value - target).abs() <= tol,
                Bound::AtMost => value <= target,
                Bound::AtLeast => value >= target,
            };
        Self {
            case: case.into(),
            metric: metric.into(),
            value,
            target,
            bound,
            pass,
            note: String::new(),
        }
    }

    pub fn within(case: impl Into<String>, metric: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self::new(case, metric, value, target, Bound::Within(tol))
    }

    pub fn at_most(case: impl Into<String>, metric: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(case, metric, value, limit, Bound::AtMost)
    }

    pub fn at_least(case: impl Into<String>, metric: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(case, metric, value, limit, Bound::AtLeast)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cmp = match self.bound {
            Bound::Within(t) => format!("{} ± {}", self.target, t),
            Bound::AtMost => format!("<= {}", self.target),
            Bound::AtLeast => format!(">= {}", self.target),
        };
        write!(
            f,
            "[{}] {} {}: {:.6e} (target {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.case,
            self.metric,
            self.value,
            cmp
        )?;
        if !self.note.is_empty() {
            write!(f, " - {}", self.note)?;
        }
        Ok(())
    }
}

/// Writes `case,metric,value,target,tolerance,pass` rows. One-sided bounds
/// put `<=` or `>=` in the tolerance column.
pub fn write_csv(path: &Path, reports: &[MetricReport]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "case,metric,value,target,tolerance,pass").map_err(io)?;
    for r in reports {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.case,
            r.metric,
            r.value,
            r.target,
            r.bound.label(),
            r.pass
        )
        .map_err(io)?;
    }
    f.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(MetricReport::within("c", "m", 1.05, 1.0, 0.1).pass);
        assert!(!MetricReport::within("c", "m", 1.2, 1.0, 0.1).pass);
        assert!(MetricReport::at_most("c", "m", -41.0, -40.0).pass);
        assert!(!MetricReport::at_least("c", "m", 1.9, 2.0).pass);
        assert!(!MetricReport::at_most("c", "m", f64::NAN, 1.0).pass);
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let rows = [
            MetricReport::within("sine", "freq", 440.2, 440.0, 1.0),
            MetricReport::at_most("noise", "mod_db", -41.0, -40.0),
        ];
        write_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "case,metric,value,target,tolerance,pass");
        assert_eq!(lines[1], "sine,freq,440.2,440,1,true");
        assert_eq!(lines[2], "noise,mod_db,-41,-40,<=,true");
    }
}
