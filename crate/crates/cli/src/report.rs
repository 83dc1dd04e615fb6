use std::fmt::Write as _;

use multisym_core::fieldop::CheckVerdict;
use multisym_core::{Evidence, ZeroCheck};
use serde::Serialize;

pub const SCHEMA: &str = "multisym-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceKind {
    Structural,
    Probabilistic,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Norm {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<(String, f64)>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EvidenceKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub norms: Vec<Norm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Check {
    pub fn new(name: &str, pass: bool, evidence: EvidenceKind) -> Check {
        Check {
            name: name.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            evidence: Some(evidence),
            detail: None,
            norms: vec![],
            witness: None,
        }
    }

    pub fn skipped(name: &str, why: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            status: Status::Skipped,
            evidence: None,
            detail: Some(why.into()),
            norms: vec![],
            witness: None,
        }
    }

    /// From a zero test; a failing probabilistic test carries its witness.
    pub fn zero(name: &str, z: &ZeroCheck) -> Check {
        let mut c = Check::new(
            name,
            z.zero,
            if z.structural() {
                EvidenceKind::Structural
            } else {
                EvidenceKind::Probabilistic
            },
        );
        if let Evidence::Witness { point, value } = &z.evidence {
            c.witness = Some(Witness {
                point: point.iter().map(|(s, v)| (s.to_string(), *v)).collect(),
                value: *value,
            });
        }
        c
    }

    pub fn verdict(name: &str, v: &CheckVerdict) -> Check {
        let ev = if v.evidence == "structural" {
            EvidenceKind::Structural
        } else {
            EvidenceKind::Probabilistic
        };
        Check::new(name, v.pass, ev).detail_opt(v.detail.clone())
    }

    pub fn detail(mut self, d: impl Into<String>) -> Check {
        self.detail = Some(d.into());
        self
    }

    pub fn detail_opt(mut self, d: Option<String>) -> Check {
        self.detail = d;
        self
    }

    pub fn norm(mut self, name: &str, value: f64) -> Check {
        self.norms.push(Norm {
            name: name.to_string(),
            value,
        });
        self
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub model: String,
    pub seed: u64,
    pub samples: usize,
    /// Facts that are not checks (classification, rendered H, artifact paths).
    pub facts: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: &str, model: &str, seed: u64, samples: usize) -> Report {
        Report {
            schema: SCHEMA,
            tool: "multisym",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            model: model.to_string(),
            seed,
            samples,
            facts: vec![],
            checks: vec![],
            summary: Summary {
                pass: 0,
                fail: 0,
                skipped: 0,
            },
        }
    }

    pub fn fact(&mut self, k: &str, v: impl Into<String>) {
        self.facts.push((k.to_string(), v.into()));
    }

    pub fn push(&mut self, c: Check) {
        debug_assert!(
            self.checks.iter().all(|o| o.name != c.name),
            "duplicate check {}",
            c.name
        );
        match c.status {
            Status::Pass => self.summary.pass += 1,
            Status::Fail => self.summary.fail += 1,
            Status::Skipped => self.summary.skipped += 1,
        }
        self.checks.push(c);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} (seed {}, {} samples)",
            self.command, self.model, self.seed, self.samples
        );
        for (k, v) in &self.facts {
            let _ = writeln!(out, "  {k}: {v}");
        }
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            let ev = match c.evidence {
                Some(EvidenceKind::Structural) => " [structural]",
                Some(EvidenceKind::Probabilistic) => " [probabilistic]",
                Some(EvidenceKind::Numeric) => " [numeric]",
                None => "",
            };
            let _ = write!(out, "{tag} {}{ev}", c.name);
            for n in &c.norms {
                let _ = write!(out, " {}={:.3e}", n.name, n.value);
            }
            if let Some(d) = &c.detail {
                let _ = write!(out, " — {d}");
            }
            if let Some(w) = &c.witness {
                let pts: Vec<String> = w.point.iter().map(|(s, v)| format!("{s}={v:.4}")).collect();
                let _ = write!(out, " (witness {} → {:.3e})", pts.join(", "), w.value);
            }
            out.push('\n');
        }
        let s = &self.summary;
        let _ = writeln!(out, "{} passed, {} failed, {} skipped", s.pass, s.fail, s.skipped);
        out
    }
}
