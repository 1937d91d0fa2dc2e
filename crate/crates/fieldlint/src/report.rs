//! Structured verdict reports shared by the library, the scenario catalog
//! and the CLI. Serialization is deterministic: struct field order is fixed
//! and check lists keep insertion order.

use serde::Serialize;

#[derive(Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

#[derive(Serialize, Clone, Debug)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Check {
    pub fn new(name: &str, verdict: Verdict) -> Self {
        Check {
            name: name.to_string(),
            verdict,
            witness: None,
            value: None,
            tolerance: None,
        }
    }

    pub fn pass(name: &str) -> Self {
        Check::new(name, Verdict::Pass)
    }

    pub fn fail(name: &str) -> Self {
        Check::new(name, Verdict::Fail)
    }

    pub fn info(name: &str) -> Self {
        Check::new(name, Verdict::Info)
    }

    pub fn of(name: &str, ok: bool) -> Self {
        Check::new(name, if ok { Verdict::Pass } else { Verdict::Fail })
    }

    pub fn witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    pub fn value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn tolerance(mut self, t: f64) -> Self {
        self.tolerance = Some(t);
        self
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct Report {
    pub artifact_version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub checks: Vec<Check>,
    pub timing_ms: u64,
}

impl Report {
    pub fn new(command: &str, id: Option<&str>) -> Self {
        Report {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            id: id.map(|s| s.to_string()),
            checks: Vec::new(),
            timing_ms: 0,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// True when no check failed (info checks do not count against).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Line-stable text rendering (timing intentionally omitted).
    pub fn to_text(&self, color: bool) -> String {
        let mut out = String::new();
        let head = match &self.id {
            Some(id) => format!("fieldlint {} {}", self.command, id),
            None => format!("fieldlint {}", self.command),
        };
        out.push_str(&head);
        out.push('\n');
        for c in &self.checks {
            let tag = match c.verdict {
                Verdict::Pass => {
                    if color {
                        "\x1b[32mpass\x1b[0m"
                    } else {
                        "pass"
                    }
                }
                Verdict::Fail => {
                    if color {
                        "\x1b[31mFAIL\x1b[0m"
                    } else {
                        "FAIL"
                    }
                }
                Verdict::Info => "info",
            };
            out.push_str(&format!("  [{tag}] {}", c.name));
            if let Some(v) = c.value {
                out.push_str(&format!("  value={v:.9e}"));
            }
            if let Some(t) = c.tolerance {
                out.push_str(&format!("  tol={t:.1e}"));
            }
            if let Some(w) = &c.witness {
                out.push_str(&format!("  {w}"));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "result: {} ({} checks)\n",
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks.len()
        ));
        out
    }
}
