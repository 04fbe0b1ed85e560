//! Flat `key = value` files with `[section]` headers.
//!
//! Keys are addressed as `section.key`; keys before the first header live in
//! the root section and are addressed by their bare name. `#` starts a
//! comment. Every lookup error carries the line of the offending entry.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
    /// Directory relative paths are resolved against.
    base: PathBuf,
}

fn config_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Config { line, message: message.into() }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(line, "unterminated section header"))?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(config_err(line, format!("bad section name {name:?}")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `key = value`, found {content:?}")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(config_err(line, "empty key"));
            }
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            let entry = Entry { value: value.trim().to_string(), line };
            if let Some(prev) = entries.insert(full.clone(), entry) {
                return Err(config_err(line, format!("`{full}` already set on line {}", prev.line)));
            }
        }
        Ok(Self { entries, base: PathBuf::new() })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn required_str(&self, key: &str) -> Result<&str> {
        self.str(key).ok_or_else(|| CliError::Input(format!("missing required key `{key}`")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| config_err(e.line, format!("`{key}`: cannot parse {:?}", e.value))),
        }
    }

    pub fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| CliError::Input(format!("missing required key `{key}`")))
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(e) = self.entries.get(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| config_err(e.line, format!("`{key}`: cannot parse {s:?}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Rows separated by `;`, entries by `,`.
    pub fn matrix(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        let Some(e) = self.entries.get(key) else { return Ok(None) };
        let rows = e
            .value
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|s| s.trim().parse().map_err(|_| config_err(e.line, format!("`{key}`: cannot parse {s:?}"))))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(config_err(e.line, format!("`{key}` must be square")));
        }
        Ok(Some(rows))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.str(key).map(|p| self.base.join(p))
    }

    /// Error for a present key whose value is out of range.
    pub fn invalid(&self, key: &str, message: impl Into<String>) -> CliError {
        let message = format!("`{key}`: {}", message.into());
        match self.line(key) {
            Some(line) => config_err(line, message),
            None => CliError::Input(message),
        }
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, e) in &self.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(config_err(e.line, format!("unknown key `{k}`")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
kind = elliptic   # trailing comment
[mesh]
cells = 16
domain = 0, 2
[coefficients]
coupling = 1, 0.5; 0.5, 2
";

    #[test]
    fn sections_and_values() {
        let c = RawConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.str("kind"), Some("elliptic"));
        assert_eq!(c.required::<usize>("mesh.cells").unwrap(), 16);
        assert_eq!(c.list::<f64>("mesh.domain").unwrap(), Some(vec![0.0, 2.0]));
        assert_eq!(c.matrix("coefficients.coupling").unwrap().unwrap()[1], vec![0.5, 2.0]);
        assert_eq!(c.line("mesh.cells"), Some(4));
        assert_eq!(c.or("time.dt", 0.5).unwrap(), 0.5);
    }

    #[test]
    fn errors_carry_lines() {
        let c = RawConfig::parse(SAMPLE).unwrap();
        assert!(matches!(c.get::<usize>("mesh.domain"), Err(CliError::Config { line: 5, .. })));
        assert!(matches!(c.check_keys(&["kind"]), Err(CliError::Config { .. })));
        assert!(matches!(c.required::<f64>("time.dt"), Err(CliError::Input(_))));
        assert!(matches!(RawConfig::parse("a = 1\n[x\n"), Err(CliError::Config { line: 2, .. })));
        assert!(matches!(RawConfig::parse("a = 1\nnonsense\n"), Err(CliError::Config { line: 2, .. })));
        assert!(matches!(RawConfig::parse("a = 1\na = 2\n"), Err(CliError::Config { line: 2, .. })));
        let bad = RawConfig::parse("[c]\nm = 1, 2; 3\n").unwrap();
        assert!(matches!(bad.matrix("c.m"), Err(CliError::Config { line: 2, .. })));
    }
}
