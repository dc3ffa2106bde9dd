//! Flat `key=value` run configuration: file values first, flags on top.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{origin}:{}: expected key=value, got `{line}`",
                    n + 1
                ))
            })?;
            let key = k.trim().replace('-', "_");
            if key.is_empty() {
                return Err(CliError::Usage(format!("{origin}:{}: empty key", n + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Missing(format!("config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Overrides `key` when the flag was given.
    pub fn set_flag<T: ToString>(&mut self, key: &str, flag: Option<T>) {
        if let Some(v) = flag {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Typed value of `key`, falling back to `default` (which is then recorded).
    pub fn get_or<T: FromStr + ToString>(&mut self, key: &str, default: T) -> Result<T, CliError> {
        match self.values.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid value `{v}` for `{key}`"))),
            None => {
                self.values.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Usage(format!("invalid value `{v}` for `{key}`")))
            })
            .transpose()
    }

    pub fn to_text(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

/// `WxH`, e.g. `1280x800`.
pub fn parse_size(s: &str) -> Result<(usize, usize), CliError> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::Usage(format!("display size `{s}` is not WxH")))?;
    let parse = |v: &str| v.trim().parse::<usize>().ok().filter(|n| *n > 0);
    match (parse(w), parse(h)) {
        (Some(w), Some(h)) => Ok((w, h)),
        _ => Err(CliError::Usage(format!(
            "display size `{s}` needs positive integers"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut c = RunConfig::parse(
            "# comment\nseed = 4\nsamples-per-class=2 # trailing\n\n",
            "t",
        )
        .unwrap();
        assert_eq!(c.raw("samples_per_class"), Some("2"));
        c.set_flag("seed", Some(9u64));
        c.set_flag::<u64>("classes", None);
        assert_eq!(c.get_or("seed", 0u64).unwrap(), 9);
        assert_eq!(c.get_or("classes", 15usize).unwrap(), 15);
        assert_eq!(c.to_text(), "classes=15\nsamples_per_class=2\nseed=9\n");
        assert!(RunConfig::parse("novalue", "t").is_err());
    }

    #[test]
    fn sizes() {
        assert_eq!(parse_size("1280x800").unwrap(), (1280, 800));
        assert!(parse_size("0x5").is_err());
        assert!(parse_size("12").is_err());
    }
}
