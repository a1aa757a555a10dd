use std::fmt;

/// Outcome of one check, serialized as a small key/value text block.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub name: String,
    pub params: Vec<(String, String)>,
    /// False when the check's preconditions do not hold; such a report
    /// passes vacuously.
    pub applicable: bool,
    pub passed: bool,
    pub extremes: Vec<(String, f64)>,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Report {
            name: name.into(),
            params: Vec::new(),
            applicable: true,
            passed: true,
            extremes: Vec::new(),
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn extreme(&mut self, key: &str, value: f64) {
        self.extremes.push((key.to_string(), value));
    }

    pub fn violation(&mut self, msg: impl Into<String>) {
        self.passed = false;
        self.violations.push(msg.into());
    }

    pub fn inapplicable(mut self, why: impl Into<String>) -> Self {
        self.applicable = false;
        self.notes.push(why.into());
        self
    }

    pub fn extreme_value(&self, key: &str) -> Option<f64> {
        self.extremes
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "check: {}", self.name)?;
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        writeln!(f, "params: {}", params.join(" "))?;
        writeln!(f, "applicable: {}", self.applicable)?;
        writeln!(f, "status: {}", if self.passed { "pass" } else { "fail" })?;
        for (k, v) in &self.extremes {
            writeln!(f, "extreme: {k}={v:.16e}")?;
        }
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        writeln!(f, "violations: {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Concatenates reports separated by blank lines.
pub fn render_reports(reports: &[Report]) -> String {
    reports
        .iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_text_block() {
        let mut r = Report::new("kappa-ratio").param("lambda", 2).param("n", 50);
        r.extreme("min_ratio", 0.5);
        r.violation("x=3: ratio 0.01 < 0.03");
        let text = r.to_string();
        assert!(text.starts_with("check: kappa-ratio\nparams: lambda=2 n=50\n"));
        assert!(text.contains("status: fail\n"));
        assert!(text.contains("extreme: min_ratio=5.0000000000000000e-1\n"));
        assert!(text.contains("violations: 1\n  - x=3"));
        assert_eq!(r.extreme_value("min_ratio"), Some(0.5));
    }
}
