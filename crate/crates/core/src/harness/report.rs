//! Append-only experiment reports: key-value text plus CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
enum Line {
    Text(String, String),
    Metric(String, f64, String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    lines: Vec<Line>,
    checks: Vec<Check>,
    tables: Vec<(String, String)>,
    dumps: Vec<(String, String)>,
    wall_clock: Option<f64>,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            lines: Vec::new(),
            checks: Vec::new(),
            tables: Vec::new(),
            dumps: Vec::new(),
            wall_clock: None,
        }
    }

    pub fn text(&mut self, key: &str, value: impl ToString) {
        self.lines.push(Line::Text(key.into(), value.to_string()));
    }

    /// Appends raw `key = value` lines (for example a config echo or certificate).
    pub fn block(&mut self, text: &str) {
        for l in text.lines() {
            if let Some((k, v)) = l.split_once(" = ") {
                self.text(k.trim(), v.trim());
            }
        }
    }

    /// A measured value and the tolerance or criterion it is read against.
    pub fn metric(&mut self, key: &str, value: f64, tolerance: &str) {
        self.lines.push(Line::Metric(key.into(), value, tolerance.into()));
    }

    pub fn check_at_most(&mut self, name: &str, value: f64, threshold: f64) -> bool {
        self.push_check(name, value, threshold, Comparison::AtMost)
    }

    pub fn check_at_least(&mut self, name: &str, value: f64, threshold: f64) -> bool {
        self.push_check(name, value, threshold, Comparison::AtLeast)
    }

    /// A boolean criterion, recorded as `1 >= 1` or `0 >= 1`.
    pub fn check_flag(&mut self, name: &str, ok: bool) -> bool {
        self.push_check(name, if ok { 1.0 } else { 0.0 }, 1.0, Comparison::AtLeast)
    }

    fn push_check(&mut self, name: &str, value: f64, threshold: f64, comparison: Comparison) -> bool {
        let pass = match comparison {
            Comparison::AtMost => value <= threshold,
            Comparison::AtLeast => value >= threshold,
        };
        self.checks.push(Check { name: name.into(), value, threshold, comparison, pass });
        pass
    }

    pub fn table(&mut self, name: &str, csv: String) {
        self.tables.push((name.into(), csv));
    }

    pub fn dump(&mut self, file: &str, content: String) {
        self.dumps.push((file.into(), content));
    }

    pub fn set_wall_clock(&mut self, seconds: f64) {
        self.wall_clock = Some(seconds);
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn tables(&self) -> &[(String, String)] {
        &self.tables
    }

    /// Value of the last text line with this key.
    pub fn get(&self, key: &str) -> Option<String> {
        self.lines.iter().rev().find_map(|l| match l {
            Line::Text(k, v) if k == key => Some(v.clone()),
            Line::Metric(k, v, _) if k == key => Some(format!("{v:.6e}")),
            _ => None,
        })
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// The report without the wall-clock line.
    pub fn render_deterministic(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment = {}", self.experiment);
        for l in &self.lines {
            match l {
                Line::Text(k, v) => {
                    let _ = writeln!(s, "{k} = {v}");
                }
                Line::Metric(k, v, t) => {
                    let _ = writeln!(s, "{k} = {v:.6e}  [tol: {t}]");
                }
            }
        }
        for c in &self.checks {
            let op = match c.comparison {
                Comparison::AtMost => "<=",
                Comparison::AtLeast => ">=",
            };
            let verdict = if c.pass { "pass" } else { "FAIL" };
            let _ = writeln!(s, "check.{} = {:.6e} {op} {:.6e} : {verdict}", c.name, c.value, c.threshold);
        }
        for (name, _) in &self.tables {
            let _ = writeln!(s, "table = {name}.csv");
        }
        let _ = writeln!(s, "passed = {}", self.passed());
        s
    }

    pub fn render(&self) -> String {
        let mut s = self.render_deterministic();
        if let Some(t) = self.wall_clock {
            let _ = writeln!(s, "wall_clock_s = {t:.3}");
        }
        s
    }

    /// Writes `report.txt`, one CSV per table and any field dumps into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), self.render())?;
        for (name, csv) in &self.tables {
            std::fs::write(dir.join(format!("{name}.csv")), csv)?;
        }
        for (file, content) in &self.dumps {
            std::fs::write(dir.join(file), content)?;
        }
        Ok(())
    }
}
