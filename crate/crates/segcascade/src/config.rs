//! Shared parsing for flat key-value configuration files.
//!
//! One `key value` pair per line; the value is everything after the first
//! whitespace run. Blank lines and lines starting with `#` are ignored.

use crate::error::{Error, Result};

/// Splits configuration text into `(line number, key, value)` triples.
pub fn key_value_lines(text: &str) -> Result<Vec<(usize, &str, &str)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once(char::is_whitespace) {
            Some((key, value)) => out.push((idx + 1, key, value.trim())),
            None => {
                return Err(Error::parse(idx + 1, format!("expected 'key value', got '{line}'")));
            }
        }
    }
    Ok(out)
}

/// Parses a single configuration value, attributing failures to its line.
pub fn parse_value<T: std::str::FromStr>(lineno: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(lineno, format!("bad value '{value}' for key '{key}'")))
}
