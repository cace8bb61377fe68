//! Deterministic plain-text report writer: nested key-value lines, two
//! spaces per indent level, floats in Rust's shortest round-trip form.
//! Identical inputs produce identical bytes.

pub struct Report {
    lines: Vec<String>,
    indent: usize,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Report {
            lines: vec![title.to_string()],
            indent: 0,
        }
    }

    fn pad(&self) -> String {
        "  ".repeat(self.indent)
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        let pad = self.pad();
        self.lines.push(format!("{pad}{name}:"));
        self.indent += 1;
        self
    }

    pub fn end_section(&mut self) -> &mut Self {
        self.indent = self.indent.saturating_sub(1);
        self
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let pad = self.pad();
        self.lines.push(format!("{pad}{key}: {value}"));
        self
    }

    pub fn kv_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.kv(key, fmt_f64(value))
    }

    pub fn kv_floats(&mut self, key: &str, values: &[f64]) -> &mut Self {
        self.kv(key, fmt_floats(values))
    }

    pub fn kv_usizes(&mut self, key: &str, values: &[usize]) -> &mut Self {
        let body = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        self.kv(key, format!("[{body}]"))
    }

    pub fn item_open(&mut self, head: &str) -> &mut Self {
        let pad = self.pad();
        self.lines.push(format!("{pad}- {head}"));
        self.indent += 1;
        self
    }

    pub fn item_close(&mut self) -> &mut Self {
        self.end_section()
    }

    pub fn render(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn fmt_floats(values: &[f64]) -> String {
    let body = values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ");
    format!("[{body}]")
}

/// Two-column CSV with a header, LF line endings.
pub fn csv_table(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}
