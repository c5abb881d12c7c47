//! Deterministic output plumbing: metadata headers, CSV/JSON emission, and
//! the FNV hashes recorded in every file so reruns are verifiable.

use std::fs;
use std::io::Write;
use std::path::Path;

/// FNV-1a over arbitrary bytes; used for config and source fingerprints.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Fingerprint of a probability table: hash of the exact cell bit patterns.
pub fn source_hash(cells: &[f64]) -> u64 {
    let mut bytes = Vec::with_capacity(cells.len() * 8);
    for c in cells {
        bytes.extend_from_slice(&c.to_bits().to_le_bytes());
    }
    fnv1a64(&bytes)
}

/// 9-significant-digit scientific notation, '.' decimal separator.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

/// Ordered key/value metadata lines for file headers.
#[derive(Debug, Default, Clone)]
pub struct Meta {
    pairs: Vec<(String, String)>,
}

impl Meta {
    pub fn new(config_repr: &str) -> Self {
        let mut m = Self::default();
        m.push("version", env!("CARGO_PKG_VERSION"));
        m.push(
            "config_hash",
            format!("{:016x}", fnv1a64(config_repr.as_bytes())),
        );
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }
}

/// One CSV cell.
pub enum Field {
    F(f64),
    I(u64),
    S(String),
    Empty,
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::F(x) => num(*x),
            Field::I(i) => i.to_string(),
            Field::S(s) => s.clone(),
            Field::Empty => String::new(),
        }
    }
}

/// CSV with `# key: value` metadata lines, a header row, and '\n' endings.
pub fn render_csv(meta: &Meta, header: &[&str], rows: &[Vec<Field>]) -> String {
    let mut out = String::new();
    for (k, v) in meta.pairs() {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(Field::render).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// JSON with the metadata embedded as an object.
pub fn render_json(meta: &Meta, body: serde_json::Value) -> String {
    let mut meta_obj = serde_json::Map::new();
    for (k, v) in meta.pairs() {
        meta_obj.insert(k.clone(), serde_json::Value::String(v.clone()));
    }
    let doc = serde_json::json!({ "meta": meta_obj, "data": body });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable document");
    s.push('\n');
    s
}

/// Writes to the path or stdout when no path is given.
pub fn emit(path: Option<&Path>, content: &str) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())
        }
    }
}
