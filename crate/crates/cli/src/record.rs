//! Run records and their CSV / key-value renderings.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Keyvalue,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub command: String,
    pub params: Vec<(String, String)>,
    pub derived: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(String, String)>,
    /// Set when the run completed but its checks failed; the record is still
    /// written and the exit code becomes 3.
    pub failure: Option<String>,
}

impl RunRecord {
    pub fn new(command: &str, header: &[&str]) -> Self {
        Self { command: command.into(), header: header.iter().map(|s| s.to_string()).collect(), ..Self::default() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn derive(&mut self, key: &str, value: impl ToString) {
        self.derived.push((key.into(), value.to_string()));
    }

    pub fn summarize(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn csv(&self) -> String {
        let mut s = String::new();
        let line = |s: &mut String, cells: &[String]| {
            let escaped: Vec<String> = cells.iter().map(|c| escape(c)).collect();
            s.push_str(&escaped.join(","));
            s.push('\n');
        };
        line(&mut s, &self.header);
        for r in &self.rows {
            line(&mut s, r);
        }
        s
    }

    /// Everything except the rows, one `section.key=value` per line.
    pub fn keyvalue(&self) -> String {
        let mut s = format!("command={}\n", self.command);
        for (section, pairs) in [("param", &self.params), ("derived", &self.derived), ("summary", &self.summary)] {
            for (k, v) in pairs {
                let _ = writeln!(s, "{section}.{k}={v}");
            }
        }
        let _ = writeln!(s, "rows={}", self.rows.len());
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Keyvalue => self.keyvalue(),
        }
    }
}

fn escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Half-width of the normal-approximation 95% interval for a proportion.
pub fn half_width(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let p = successes as f64 / trials as f64;
    1.96 * (p * (1.0 - p) / trials as f64).sqrt()
}
