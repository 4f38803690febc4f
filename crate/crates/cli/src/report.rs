//! Text report printed after every successful run.

use std::path::PathBuf;

use pvrfid_core::numfmt::sig6;
use sha2::{Digest, Sha256};

/// Summary of one invocation. Rendering is a pure function of the inputs,
/// so identical runs print identical reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 over the effective configuration, flags and input files.
    pub input_digest: String,
    /// Headline numbers, in print order.
    pub fields: Vec<(String, String)>,
    /// Keys of `fields` repeated on the summary line.
    pub headline: Vec<&'static str>,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn new(command: &str, input_digest: String) -> Self {
        Self {
            command: command.to_string(),
            input_digest,
            fields: Vec::new(),
            headline: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn num(&mut self, key: &str, x: f64) -> &mut Self {
        self.fields.push((key.to_string(), sig6(x)));
        self
    }

    pub fn text(&mut self, key: &str, s: impl Into<String>) -> &mut Self {
        self.fields.push((key.to_string(), s.into()));
        self
    }

    pub fn headline(&mut self, keys: &[&'static str]) -> &mut Self {
        self.headline = keys.to_vec();
        self
    }

    fn field(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// One summary line, then a `key=value` block.
    pub fn render(&self) -> String {
        let summary: Vec<String> = self
            .headline
            .iter()
            .filter_map(|k| self.field(k).map(|v| format!("{k}={v}")))
            .collect();
        let mut out = format!("pvrfid {}: {}\n", self.command, summary.join(" "));
        out.push_str(&format!("command={}\n", self.command));
        out.push_str(&format!("input_sha256={}\n", self.input_digest));
        for (k, v) in &self.fields {
            out.push_str(&format!("{k}={v}\n"));
        }
        for p in &self.outputs {
            out.push_str(&format!("output={}\n", p.display()));
        }
        out
    }
}

/// Hex SHA-256 of the given parts, each length-prefixed so that part
/// boundaries are unambiguous.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}
