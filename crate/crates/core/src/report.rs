//! CSV formatting shared by every table the binary emits.

use std::fmt::Write as _;

/// Nine significant digits, period decimal separator.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.8e}");
    let parsed: f64 = s.parse().unwrap_or(v);
    let mag = parsed.abs().log10().floor() as i32;
    if (-4..9).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        let mut t = format!("{parsed:.decimals$}");
        if t.contains('.') {
            t = t.trim_end_matches('0').trim_end_matches('.').to_string();
        }
        t
    } else {
        s
    }
}

/// Empty cell for `None`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

/// Quotes a field when it holds a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_field(c)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt_sig(123456.789123), "123456.789");
        assert_eq!(fmt_sig(-3.25e-7), "-3.25000000e-7");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(9.9999999999), "10");
    }

    #[test]
    fn table_rendering() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["1".into(), "x, y".into()]);
        t.push(vec![fmt_opt(None), "say \"hi\"".into()]);
        assert_eq!(t.render(), "a,b\n1,\"x, y\"\n,\"say \"\"hi\"\"\"\n");
    }
}
