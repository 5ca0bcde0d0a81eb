//! Verification records, their JSON/CSV/text renderings, merging, and the
//! claim × parameter-set coverage matrix.

mod suites;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub use suites::{run_suite, run_suites, tower_summary, Suite, TowerSummary};

/// Version tag of the report document layout.
pub const SCHEMA: &str = "omodule-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// How an expected value is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// A closed formula in the parameters.
    ClosedForm,
    /// Computed independently of the checked code path.
    Derived,
    /// Immediate from the definitions.
    Trivial,
}

/// Parameters of one run.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Parameters {
    pub p: u32,
    pub f: u32,
    pub q: u32,
    pub n: u32,
    pub m: u32,
    pub precision: i64,
    pub seed: u64,
}

impl Parameters {
    /// `q=..,n=..,m=..`, the column label in the coverage matrix.
    pub fn label(&self) -> String {
        format!("q={},n={},m={}", self.q, self.n, self.m)
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    /// The mathematical statement being checked.
    pub claim: String,
    pub parameters: Parameters,
    pub computed: Value,
    pub expected: Value,
    pub source: Source,
    pub status: Status,
    /// Present for every failure.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Value>,
}

impl VerificationReport {
    pub fn key(&self) -> (String, Parameters) {
        (self.check.clone(), self.parameters.clone())
    }
}

/// A report file: one run, or several merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub reports: Vec<VerificationReport>,
}

impl ReportDocument {
    pub fn new(mut reports: Vec<VerificationReport>) -> Self {
        reports.sort_by_key(VerificationReport::key);
        ReportDocument { schema: SCHEMA.to_string(), reports }
    }

    pub fn failures(&self) -> usize {
        self.reports.iter().filter(|r| r.status == Status::Fail).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(raw).map_err(|e| Error::SchemaMismatch(e.to_string()))?;
        match v.get("schema").and_then(Value::as_str) {
            Some(SCHEMA) => {}
            other => return Err(Error::SchemaMismatch(format!("schema {other:?}, expected {SCHEMA:?}"))),
        }
        serde_json::from_value(v).map_err(|e| Error::SchemaMismatch(e.to_string()))
    }

    /// One row per report: `check, claim, p, f, q, n, m, precision, seed,
    /// status, source, computed, expected, witness`, the last three as
    /// compact JSON.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "check", "claim", "p", "f", "q", "n", "m", "precision", "seed", "status", "source", "computed", "expected", "witness",
        ])
        .map_err(io)?;
        for r in &self.reports {
            let p = &r.parameters;
            let source = serde_json::to_value(r.source).unwrap();
            let status = serde_json::to_value(r.status).unwrap();
            w.write_record([
                r.check.clone(),
                r.claim.clone(),
                p.p.to_string(),
                p.f.to_string(),
                p.q.to_string(),
                p.n.to_string(),
                p.m.to_string(),
                p.precision.to_string(),
                p.seed.to_string(),
                status.as_str().unwrap().to_string(),
                source.as_str().unwrap().to_string(),
                r.computed.to_string(),
                r.expected.to_string(),
                r.witness.as_ref().map(Value::to_string).unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            let status = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            let _ = writeln!(out, "{status} {:<28} {:<18} computed {} expected {}", r.check, r.parameters.label(), r.computed, r.expected);
            if let Some(w) = &r.witness {
                let _ = writeln!(out, "     witness: {w}");
            }
        }
        let _ = writeln!(out, "{} checks, {} failed", self.reports.len(), self.failures());
        out
    }
}

/// Union of documents. Identical duplicates collapse; duplicates that
/// differ in status or computed value are a schema error.
pub fn merge(docs: &[ReportDocument]) -> Result<ReportDocument> {
    let mut by_key: BTreeMap<(String, Parameters), VerificationReport> = BTreeMap::new();
    for doc in docs {
        if doc.schema != SCHEMA {
            return Err(Error::SchemaMismatch(format!("schema {:?}, expected {SCHEMA:?}", doc.schema)));
        }
        for r in &doc.reports {
            match by_key.get(&r.key()) {
                Some(old) if old.status != r.status || old.computed != r.computed => {
                    return Err(Error::SchemaMismatch(format!(
                        "conflicting results for {} at {}: {:?} vs {:?}",
                        r.check,
                        r.parameters.label(),
                        old.status,
                        r.status
                    )));
                }
                Some(_) => {}
                None => {
                    by_key.insert(r.key(), r.clone());
                }
            }
        }
    }
    Ok(ReportDocument::new(by_key.into_values().collect()))
}

/// Claim × parameter-set table of statuses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageMatrix {
    pub claims: Vec<String>,
    pub parameter_sets: Vec<String>,
    /// `cells[claim][parameter set]`; failures dominate passes when several
    /// checks share a claim.
    pub cells: BTreeMap<String, BTreeMap<String, Status>>,
}

impl CoverageMatrix {
    pub fn from_document(doc: &ReportDocument) -> Self {
        let mut cells: BTreeMap<String, BTreeMap<String, Status>> = BTreeMap::new();
        let mut sets: Vec<(Parameters, String)> = Vec::new();
        for r in &doc.reports {
            let label = r.parameters.label();
            if !sets.iter().any(|(_, l)| *l == label) {
                sets.push((r.parameters.clone(), label.clone()));
            }
            let cell = cells.entry(r.claim.clone()).or_default().entry(label).or_insert(r.status);
            *cell = worst(*cell, r.status);
        }
        sets.sort();
        CoverageMatrix {
            claims: cells.keys().cloned().collect(),
            parameter_sets: sets.into_iter().map(|(_, l)| l).collect(),
            cells,
        }
    }

    pub fn to_text(&self) -> String {
        let width = self.claims.iter().map(|c| c.chars().count()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<width$}", "claim");
        for s in &self.parameter_sets {
            let _ = write!(out, " | {s:<14}");
        }
        out.push('\n');
        for c in &self.claims {
            let _ = write!(out, "{c:<width$}");
            for s in &self.parameter_sets {
                let cell = match self.cells[c].get(s) {
                    Some(Status::Pass) => "pass",
                    Some(Status::Fail) => "FAIL",
                    Some(Status::Skipped) => "skipped",
                    None => "-",
                };
                let _ = write!(out, " | {cell:<14}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut header = vec!["claim".to_string()];
        header.extend(self.parameter_sets.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for c in &self.claims {
            let mut row = vec![c.clone()];
            for s in &self.parameter_sets {
                row.push(self.cells[c].get(s).map(|st| serde_json::to_value(st).unwrap().as_str().unwrap().to_string()).unwrap_or_default());
            }
            w.write_record(&row).map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
    }
}

fn worst(a: Status, b: Status) -> Status {
    match (a, b) {
        (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
        (Status::Pass, _) | (_, Status::Pass) => Status::Pass,
        _ => Status::Skipped,
    }
}

/// Validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub p: u32,
    pub f: u32,
    pub n: u32,
    pub m: u32,
    pub precision: i64,
    pub degree_cap: u64,
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
}

/// Smallest working precision accepted.
pub const MIN_PRECISION: i64 = 16;

impl RunConfig {
    pub fn q(&self) -> u32 {
        self.p.pow(self.f)
    }

    /// Checks primality of `p`, `q <= 256`, `n >= 1`, `precision >= 16` and
    /// `q^{nm} <= degree_cap`.
    pub fn validate(&self) -> Result<()> {
        crate::algebra::FieldSpec::standard(self.p, self.f)?;
        if (self.p as u64).checked_pow(self.f).is_none_or(|q| q > 256) {
            return Err(Error::Invalid(format!("q = {}^{} exceeds 256", self.p, self.f)));
        }
        if self.n == 0 {
            return Err(Error::Invalid("n must be at least 1".into()));
        }
        if self.precision < MIN_PRECISION {
            return Err(Error::Invalid(format!("precision {} is below {MIN_PRECISION}", self.precision)));
        }
        let size = (self.q() as u64).checked_pow(self.n * self.m).unwrap_or(u64::MAX);
        if size > self.degree_cap {
            return Err(Error::CapExceeded { what: "q^(nm)", value: size, cap: self.degree_cap });
        }
        Ok(())
    }

    pub fn parameters(&self) -> Parameters {
        Parameters { p: self.p, f: self.f, q: self.q(), n: self.n, m: self.m, precision: self.precision, seed: self.seed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn report(check: &str, m: u32, status: Status) -> VerificationReport {
        VerificationReport {
            check: check.into(),
            claim: format!("claim of {check}"),
            parameters: Parameters { p: 2, f: 1, q: 2, n: 2, m, precision: 40, seed: 0 },
            computed: json!(1),
            expected: json!(1),
            source: Source::Trivial,
            status,
            witness: (status == Status::Fail).then(|| json!("w")),
        }
    }

    #[test]
    fn merge_disjoint_and_duplicates() {
        let a = ReportDocument::new(vec![report("x", 1, Status::Pass)]);
        let b = ReportDocument::new(vec![report("y", 2, Status::Pass), report("x", 1, Status::Pass)]);
        let merged = merge(&[a.clone(), b]).unwrap();
        assert_eq!(merged.reports.len(), 2);
        let cov = CoverageMatrix::from_document(&merged);
        assert_eq!(cov.parameter_sets, vec!["q=2,n=2,m=1", "q=2,n=2,m=2"]);
        let c = ReportDocument::new(vec![report("x", 1, Status::Fail)]);
        assert!(matches!(merge(&[a, c]), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn json_round_trip_and_schema_check() {
        let doc = ReportDocument::new(vec![report("x", 1, Status::Fail)]);
        let back = ReportDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert!(ReportDocument::from_json("{\"schema\":\"other\",\"reports\":[]}").is_err());
        let csv = doc.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(doc.to_text().contains("FAIL"));
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig { p: 2, f: 1, n: 2, m: 2, precision: 40, degree_cap: 4096, cache_dir: None, seed: 0 };
        assert!(c.validate().is_ok());
        c.precision = 8;
        assert!(c.validate().is_err());
        c.precision = 40;
        c.p = 4;
        assert!(c.validate().is_err());
        c.p = 2;
        c.m = 7;
        assert!(matches!(c.validate(), Err(Error::CapExceeded { .. })));
    }
}
