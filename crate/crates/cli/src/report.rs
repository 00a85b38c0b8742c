use serde::{Deserialize, Serialize};

/// One checked property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub name: String,
    /// The measured quantity compared against `tolerance`.
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Case {
    /// Passes when `value ≤ tolerance` and `value` is not NaN.
    pub fn check(name: impl Into<String>, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), max_rel_err: value, tolerance, pass: value <= tolerance, detail: detail.into() }
    }

    /// A case that could not be evaluated.
    pub fn error(name: impl Into<String>, tolerance: f64, err: impl std::fmt::Display) -> Self {
        Self { name: name.into(), max_rel_err: f64::INFINITY, tolerance, pass: false, detail: format!("error: {err}") }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub cases: Vec<Case>,
    pub summary: Summary,
}

impl Report {
    /// Sorts the cases by name and fills in the summary.
    pub fn new(command: impl Into<String>, seed: u64, mut cases: Vec<Case>) -> Self {
        cases.sort_by(|a, b| a.name.cmp(&b.name));
        let summary = Summary { total: cases.len(), passed: cases.iter().filter(|c| c.pass).count() };
        Self { command: command.into(), seed, cases, summary }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.passed == self.summary.total
    }

    pub fn case(&self, name: &str) -> Option<&Case> {
        self.cases.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Short human-readable summary, one line per case.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        for c in &self.cases {
            let mark = if c.pass { "ok  " } else { "FAIL" };
            out.push_str(&format!("{mark} {:<28} {:>11.3e} (tol {:.1e})\n", c.name, c.max_rel_err, c.tolerance));
        }
        out.push_str(&format!("{}: {}/{} passed\n", self.command, self.summary.passed, self.summary.total));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_counts_and_ordering() {
        let r = Report::new(
            "x",
            3,
            vec![Case::check("b", 1.0, 0.5, ""), Case::check("a", 0.1, 0.5, ""), Case::check("c", f64::NAN, 1.0, "")],
        );
        assert_eq!(r.cases.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(r.summary, Summary { total: 3, passed: 1 });
        assert!(!r.all_passed());
    }

    #[test]
    fn json_round_trip() {
        let r = Report::new("verify-table", 7, vec![Case::check("sin", 1e-14, 1e-5, "d")]);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
