//! Law-check reports and their JSON / CSV encodings.
//!
//! JSON output is deterministic: struct fields are emitted in declaration
//! order and every float is written with 17 significant digits.

use std::io;

use serde::ser::Serialize;
use serde::Serialize as DeriveSerialize;

use crate::error::Result;

pub const SCHEMA_VERSION: &str = "1";

/// Parameters at which the largest residual of a law was observed.
#[derive(Clone, Copy, Debug, Default, PartialEq, DeriveSerialize)]
pub struct Witness {
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
}

impl Witness {
    pub fn none() -> Self {
        Witness::default()
    }

    pub fn st(s: f64, t: f64) -> Self {
        Witness {
            r: None,
            s: Some(s),
            t: Some(t),
        }
    }

    pub fn rst(r: f64, s: f64, t: f64) -> Self {
        Witness {
            r: Some(r),
            s: Some(s),
            t: Some(t),
        }
    }

    pub fn at(s: f64) -> Self {
        Witness {
            r: None,
            s: Some(s),
            t: None,
        }
    }
}

/// One law evaluated over one path (or one test case).
#[derive(Clone, Debug, DeriveSerialize)]
pub struct LawEntry {
    pub law: String,
    pub path: String,
    pub grid: Vec<f64>,
    pub max_residual: f64,
    pub witness: Witness,
    pub tol: f64,
    pub pass: bool,
    /// Diagnostic entries are recorded but do not affect the overall verdict.
    pub informational: bool,
    pub note: Option<String>,
}

/// Running maximum of a residual over a grid.
#[derive(Clone, Debug)]
pub struct LawCheck {
    law: String,
    path: String,
    grid: Vec<f64>,
    tol: f64,
    max: f64,
    witness: Witness,
    informational: bool,
    note: Option<String>,
}

impl LawCheck {
    pub fn new(law: impl Into<String>, path: impl Into<String>, tol: f64) -> Self {
        LawCheck {
            law: law.into(),
            path: path.into(),
            grid: Vec::new(),
            tol,
            max: 0.0,
            witness: Witness::none(),
            informational: false,
            note: None,
        }
    }

    pub fn grid(mut self, grid: &[f64]) -> Self {
        self.grid = grid.to_vec();
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.note = Some(note.into());
    }

    /// Records a residual; NaN counts as an infinite residual.
    pub fn observe(&mut self, residual: f64, witness: Witness) {
        let r = if residual.is_nan() { f64::INFINITY } else { residual };
        if r > self.max || (self.witness == Witness::none() && r >= self.max) {
            self.max = r;
            self.witness = witness;
        }
    }

    /// Records an evaluation failure as an infinite residual.
    pub fn observe_result(&mut self, residual: Result<f64>, witness: Witness) {
        match residual {
            Ok(r) => self.observe(r, witness),
            Err(e) => {
                if self.note.is_none() {
                    self.note = Some(e.to_string());
                }
                self.observe(f64::INFINITY, witness);
            }
        }
    }

    pub fn finish(self) -> LawEntry {
        LawEntry {
            pass: self.max <= self.tol,
            law: self.law,
            path: self.path,
            grid: self.grid,
            max_residual: self.max,
            witness: self.witness,
            tol: self.tol,
            informational: self.informational,
            note: self.note,
        }
    }
}

#[derive(Clone, Debug, DeriveSerialize)]
pub struct LawReport {
    pub schema_version: String,
    pub entries: Vec<LawEntry>,
}

impl Default for LawReport {
    fn default() -> Self {
        LawReport {
            schema_version: SCHEMA_VERSION.to_string(),
            entries: Vec::new(),
        }
    }
}

impl LawReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: LawEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, other: LawReport) {
        self.entries.extend(other.entries);
    }

    /// True when every non-informational entry passes.
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass || e.informational)
    }

    pub fn failing(&self) -> Vec<&LawEntry> {
        self.entries
            .iter()
            .filter(|e| !e.pass && !e.informational)
            .collect()
    }

    pub fn entries_for<'a>(&'a self, law: &'a str) -> impl Iterator<Item = &'a LawEntry> + 'a {
        self.entries.iter().filter(move |e| e.law == law)
    }

    /// Largest residual of `law` across all entries, `None` if the law was not checked.
    pub fn max_residual(&self, law: &str) -> Option<f64> {
        self.entries_for(law).map(|e| e.max_residual).reduce(f64::max)
    }

    pub fn law_passed(&self, law: &str) -> Option<bool> {
        let mut any = false;
        let mut ok = true;
        for e in self.entries_for(law) {
            any = true;
            ok &= e.pass;
        }
        any.then_some(ok)
    }

    /// JSON with a summary: `schema_version`, `passed`, `failing` law names, `entries`.
    pub fn to_json(&self) -> Result<String> {
        #[derive(DeriveSerialize)]
        struct Summary<'a> {
            schema_version: &'a str,
            passed: bool,
            failing: Vec<&'a str>,
            entries: &'a [LawEntry],
        }
        let mut failing: Vec<&str> = self.failing().iter().map(|e| e.law.as_str()).collect();
        failing.dedup();
        to_json_string(&Summary {
            schema_version: &self.schema_version,
            passed: self.passed(),
            failing,
            entries: &self.entries,
        })
    }

    /// CSV rows `law,path,s,t,residual,pass`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["law", "path", "s", "t", "residual", "pass"])?;
        for e in &self.entries {
            w.write_record([
                e.law.as_str(),
                e.path.as_str(),
                &opt_float(e.witness.s),
                &opt_float(e.witness.t),
                &format_float(e.max_residual),
                if e.pass { "true" } else { "false" },
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// 17 significant digits in scientific notation; non-finite values as `inf`/`nan`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }
}

/// Serializes with fixed field order and 17-significant-digit floats.
/// Non-finite floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("json output is utf-8"))
}
