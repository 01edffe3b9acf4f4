//! Optional key=value configuration files. Precedence is CLI flag >
//! config file > built-in default; commands consult the file only for
//! flags the user did not pass.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("config file {}: {e}", path.display())))?;
        let mut values = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config file {} line {}: expected `key = value`",
                    path.display(),
                    i + 1
                ))
            })?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    /// Resolve a setting: explicit flag value, else config-file entry,
    /// else default.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw.parse().map_err(|e| {
                CliError::Usage(format!("config key `{key}`: bad value `{raw}` ({e})"))
            }),
            None => Ok(default),
        }
    }
}

/// Comma-separated train/dev/test ratios, e.g. `0.9,0.05,0.05`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios(pub [f64; 3]);

impl FromStr for SplitRatios {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated ratios, got `{s}`"));
        }
        let mut r = [0.0; 3];
        for (slot, p) in r.iter_mut().zip(&parts) {
            *slot = p
                .trim()
                .parse()
                .map_err(|e| format!("bad ratio `{p}`: {e}"))?;
        }
        Ok(SplitRatios(r))
    }
}

impl Display for SplitRatios {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Comma-separated per-order minimum counts, e.g. `1,1,2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCounts(pub Vec<u64>);

impl FromStr for MinCounts {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let counts: Result<Vec<u64>, _> = s.split(',').map(|p| p.trim().parse()).collect();
        counts
            .map(MinCounts)
            .map_err(|e| format!("bad min-counts `{s}`: {e}"))
    }
}

impl Display for MinCounts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}
