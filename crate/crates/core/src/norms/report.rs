use std::fmt::Write as _;

/// Labeled norm values with a grid echo, written as `label,value` CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormReport {
    pub entries: Vec<(String, f64)>,
    pub grid: Vec<(String, String)>,
}

impl NormReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: impl Into<String>, value: f64) {
        assert!(value.is_finite() && value >= 0.0, "norm values are finite and nonnegative");
        self.entries.push((label.into(), value));
    }

    pub fn echo(&mut self, key: impl Into<String>, value: impl ToString) {
        self.grid.push((key.into(), value.to_string()));
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.iter().find(|(l, _)| l == label).map(|(_, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,value\n");
        for (label, value) in &self.entries {
            let _ = writeln!(out, "{label},{}", format_sig17(*value));
        }
        for (key, value) in &self.grid {
            let _ = writeln!(out, "grid.{key},{value}");
        }
        out
    }
}

/// 17 significant digits in scientific notation.
pub fn format_sig17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = NormReport::new();
        r.push("lq", 0.1);
        r.echo("nt", 4);
        assert_eq!(r.to_csv(), "label,value\nlq,1.0000000000000001e-1\ngrid.nt,4\n");
        let parsed: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(parsed, 0.1);
    }
}
