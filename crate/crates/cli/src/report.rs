//! Check records, suite reports and their JSON / CSV encodings.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde_json::{json, Map, Number, Value};

use crate::error::CliResult;

/// Decimal text with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// JSON number with 17 significant digits; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&fmt_num(x)).expect("formatted float parses"))
    } else {
        Value::String(x.to_string())
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Runs `f` and returns its value with the elapsed wall time in seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed().as_secs_f64())
}

/// Gates decide the exit status; records are reported only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Gate,
    Record,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub criterion: Option<u8>,
    pub role: Role,
    pub comparison: Comparison,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub runtime_seconds: f64,
    pub detail: Vec<(String, f64)>,
    pub note: Option<String>,
}

impl Check {
    fn new(name: &str, anchor: &str, comparison: Comparison, measured: f64, tolerance: f64) -> Self {
        let passed = match comparison {
            Comparison::AtMost => measured <= tolerance,
            Comparison::AtLeast => measured >= tolerance,
        };
        Self {
            name: name.into(),
            anchor: anchor.into(),
            criterion: None,
            role: Role::Gate,
            comparison,
            measured,
            tolerance,
            passed,
            runtime_seconds: 0.0,
            detail: Vec::new(),
            note: None,
        }
    }

    /// Passes when `measured ≤ tolerance`; NaN fails.
    pub fn at_most(name: &str, anchor: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(name, anchor, Comparison::AtMost, measured, tolerance)
    }

    /// Passes when `measured ≥ threshold`; NaN fails.
    pub fn at_least(name: &str, anchor: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, anchor, Comparison::AtLeast, measured, threshold)
    }

    pub fn criterion(mut self, c: u8) -> Self {
        self.criterion = Some(c);
        self
    }

    pub fn record(mut self) -> Self {
        self.role = Role::Record;
        self
    }

    pub fn runtime(mut self, seconds: f64) -> Self {
        self.runtime_seconds = seconds;
        self
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.detail.push((key.into(), value));
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.note = Some(text.into());
        self
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "pass"
        } else {
            "fail"
        }
    }

    pub fn to_json(&self, with_timing: bool) -> Value {
        let mut o = Map::new();
        o.insert("name".into(), json!(self.name));
        o.insert("anchor".into(), json!(self.anchor));
        o.insert("criterion".into(), self.criterion.map_or(Value::Null, |c| json!(c)));
        o.insert("role".into(), json!(if self.role == Role::Gate { "gate" } else { "record" }));
        o.insert("status".into(), json!(self.status()));
        o.insert(
            "comparison".into(),
            json!(if self.comparison == Comparison::AtMost { "at_most" } else { "at_least" }),
        );
        o.insert("measured".into(), num(self.measured));
        o.insert("tolerance".into(), num(self.tolerance));
        if with_timing {
            o.insert("runtime_seconds".into(), num(self.runtime_seconds));
        }
        if !self.detail.is_empty() {
            let d: Map<String, Value> = self.detail.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
            o.insert("detail".into(), Value::Object(d));
        }
        if let Some(n) = &self.note {
            o.insert("note".into(), json!(n));
        }
        Value::Object(o)
    }
}

/// All checks of one suite run.
#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub suite: String,
    pub m: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub runtime_seconds: f64,
}

impl SuiteReport {
    pub fn new(suite: &str, m: usize, seed: u64) -> Self {
        Self { suite: suite.into(), m, seed, ..Self::default() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: SuiteReport) {
        self.checks.extend(other.checks);
        self.runtime_seconds += other.runtime_seconds;
    }

    pub fn gates(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.role == Role::Gate)
    }

    pub fn passed(&self) -> bool {
        self.gates().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.gates().filter(|c| !c.passed).collect()
    }

    /// `None` when no gate carries the criterion.
    pub fn criterion_passed(&self, criterion: u8) -> Option<bool> {
        let mut gates = self.gates().filter(|c| c.criterion == Some(criterion)).peekable();
        gates.peek()?;
        Some(gates.all(|c| c.passed))
    }

    pub fn to_json(&self, with_timing: bool) -> Value {
        let mut o = Map::new();
        o.insert("suite".into(), json!(self.suite));
        o.insert("m".into(), json!(self.m));
        o.insert("seed".into(), json!(self.seed));
        o.insert("status".into(), json!(if self.passed() { "pass" } else { "fail" }));
        if with_timing {
            o.insert("runtime_seconds".into(), num(self.runtime_seconds));
        }
        o.insert("checks".into(), Value::Array(self.checks.iter().map(|c| c.to_json(with_timing)).collect()));
        Value::Object(o)
    }

    /// Markdown table mapping each check to its anchor and criterion.
    pub fn traceability_markdown(reports: &[SuiteReport]) -> String {
        let mut out = String::from("| suite | m | check | anchor | criterion | role | status |\n");
        out.push_str("|---|---|---|---|---|---|---|\n");
        for r in reports {
            for c in &r.checks {
                out.push_str(&format!(
                    "| {} | {} | `{}` | {} | {} | {} | {} |\n",
                    r.suite,
                    r.m,
                    c.name,
                    c.anchor,
                    c.criterion.map_or("-".to_string(), |x| x.to_string()),
                    if c.role == Role::Gate { "gate" } else { "record" },
                    c.status()
                ));
            }
        }
        out
    }
}

/// Writes `bytes` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV text with a header row; floats use [`fmt_num`].
pub fn csv_text(header: &[String], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_digits() {
        let text = serde_json::to_string(&num(0.1)).unwrap();
        assert_eq!(text, "1.0000000000000001e-1");
        let back: f64 = text.parse().unwrap();
        assert_eq!(back, 0.1);
        assert_eq!(num(f64::NAN), json!("NaN"));
    }

    #[test]
    fn criterion_needs_all_gates() {
        let mut r = SuiteReport::new("t", 2, 1);
        r.push(Check::at_most("a", "x", 0.0, 1.0).criterion(3));
        r.push(Check::at_most("b", "x", 2.0, 1.0).criterion(3).record());
        assert_eq!(r.criterion_passed(3), Some(true));
        r.push(Check::at_least("c", "x", 0.5, 1.0).criterion(3));
        assert_eq!(r.criterion_passed(3), Some(false));
        assert_eq!(r.criterion_passed(4), None);
    }
}
