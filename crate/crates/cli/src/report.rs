use std::fmt::Display;
use std::time::Duration;

/// Key-value text. Entries under `[timings]` depend on the machine and are
/// the only part allowed to change between identical runs.
#[derive(Debug, Default)]
pub struct Report {
    body: Vec<(String, String)>,
    timings: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Self::default();
        r.put("command", command);
        r
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl Display) {
        self.body.push((key.into(), value.to_string()));
    }

    pub fn time(&mut self, key: &str, d: Duration) {
        self.timings
            .push((format!("{key}_s"), format!("{:.6}", d.as_secs_f64())));
    }

    pub fn put_timing(&mut self, key: &str, value: impl Display) {
        self.timings.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.body {
            out.push_str(&format!("{k} = {v}\n"));
        }
        if !self.timings.is_empty() {
            out.push_str("\n[timings]\n");
            for (k, v) in &self.timings {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}
