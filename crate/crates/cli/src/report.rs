//! Report records and their JSON, text and CSV renderings.

use std::collections::BTreeMap;
use std::io::Write;

use pacing_core::Tolerances;
use serde::Serialize;
use serde_json::{json, Value};

/// One computed-versus-expected comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub computed: Value,
    pub expected: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Where the expected value comes from.
    pub provenance: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub kind: String,
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub result: Value,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<BTreeMap<String, Value>>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<f64>,
}

impl Report {
    pub fn new(kind: &str, name: &str) -> Self {
        Self {
            kind: kind.into(),
            name: name.into(),
            params: BTreeMap::new(),
            tolerances: Tolerances::default(),
            seed: None,
            result: Value::Null,
            checks: Vec::new(),
            rows: Vec::new(),
            passed: true,
            wall_clock_ms: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.params.insert(key.into(), to_value(value));
        self
    }

    /// Record a comparison of `computed` against `expected` within `tol`.
    pub fn check_close(&mut self, name: &str, computed: f64, expected: f64, tol: f64, provenance: &str) -> bool {
        let passed = (computed - expected).abs() <= tol;
        self.push(name, num(computed), num(expected), Some(tol), provenance, passed)
    }

    /// Record a check whose outcome is decided by the caller.
    pub fn check(&mut self, name: &str, computed: impl Serialize, expected: impl Serialize, provenance: &str, passed: bool) -> bool {
        self.push(name, to_value(computed), to_value(expected), None, provenance, passed)
    }

    fn push(&mut self, name: &str, computed: Value, expected: Value, tolerance: Option<f64>, provenance: &str, passed: bool) -> bool {
        self.checks.push(Check { name: name.into(), computed, expected, tolerance, provenance: provenance.into(), passed });
        self.passed &= passed;
        passed
    }

    pub fn emit(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)
            }
            Format::Text => self.write_text(out),
            Format::Csv => self.write_csv(out),
        }
    }

    fn write_text(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.kind, self.name)?;
        for (k, v) in &self.params {
            writeln!(out, "  {k} = {v}")?;
        }
        if let Some(seed) = self.seed {
            writeln!(out, "  seed = {seed}")?;
        }
        if !self.result.is_null() {
            writeln!(out, "result:")?;
            let pretty = serde_json::to_string_pretty(&self.result).unwrap_or_default();
            for line in pretty.lines() {
                writeln!(out, "  {line}")?;
            }
        }
        if !self.rows.is_empty() {
            writeln!(out, "rows: {}", self.rows.len())?;
        }
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let tol = c.tolerance.map(|t| format!(" (tol {t:e})")).unwrap_or_default();
            writeln!(out, "[{tag}] {}: computed {} expected {}{tol} [{}]", c.name, c.computed, c.expected, c.provenance)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        writeln!(out, "{} of {} checks passed", self.checks.len() - failed, self.checks.len())?;
        if let Some(ms) = self.wall_clock_ms {
            writeln!(out, "wall clock {ms:.1} ms")?;
        }
        Ok(())
    }

    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record(["name", "computed", "expected", "tolerance", "provenance", "passed"])?;
            for c in &self.checks {
                let tol = c.tolerance.map(|t| t.to_string()).unwrap_or_default();
                w.write_record([&c.name, &cell(&c.computed), &cell(&c.expected), &tol, &c.provenance, &c.passed.to_string()])?;
            }
        } else {
            let mut header: Vec<&String> = Vec::new();
            for row in &self.rows {
                for k in row.keys() {
                    if !header.contains(&k) {
                        header.push(k);
                    }
                }
            }
            w.write_record(&header)?;
            for row in &self.rows {
                w.write_record(header.iter().map(|k| row.get(*k).map(cell).unwrap_or_default()))?;
            }
        }
        w.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
    Csv,
}

/// JSON number, with non-finite values spelled as strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).unwrap_or_else(|e| json!(format!("unserializable: {e}")))
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}
