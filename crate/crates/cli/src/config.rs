//! `key = value` run files. Blank lines and `#` comments are skipped; keys
//! are the long flag names without dashes.

use std::collections::BTreeMap;
use std::str::FromStr;

pub const KEYS: &[&str] = &[
    "theta", "beta", "lambda", "freq", "phase", "branch", "size", "tail", "tol", "seed", "trials", "model",
    "system", "input", "out", "format", "quick", "deterministic",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value, got '{raw}'", no + 1))?;
            let (key, v) = (k.trim().replace('-', "_"), v.trim().to_string());
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("config line {}: unknown key '{}'", no + 1, k.trim()));
            }
            values.insert(key, v);
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// The flag value if given, else the file's, parsed.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, String> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| format!("config: bad value for {key}: '{v}'")),
        }
    }

    /// Switches are on if either the flag or the file says so.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, String> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let c = ConfigFile::parse("theta = 4\n# note\nsize=16  # trailing\nquick = true\n").unwrap();
        assert_eq!(c.pick::<f64>(None, "theta").unwrap(), Some(4.0));
        assert_eq!(c.pick(Some(1.0f64), "theta").unwrap(), Some(1.0));
        assert_eq!(c.pick::<usize>(None, "size").unwrap(), Some(16));
        assert_eq!(c.pick::<u64>(None, "seed").unwrap(), None);
        assert!(c.switch(false, "quick").unwrap());
        assert!(!c.switch(false, "deterministic").unwrap());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(ConfigFile::parse("colour = red").unwrap_err().contains("unknown key"));
        assert!(ConfigFile::parse("theta").unwrap_err().contains("key = value"));
        let c = ConfigFile::parse("theta = abc").unwrap();
        assert!(c.pick::<f64>(None, "theta").is_err());
    }
}
