//! Flat `key=value` config files merged under command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every key a config file may set. Flags use the same names with `-` for `_`.
pub const KNOWN_KEYS: &[&str] = &[
    "graph",
    "n",
    "gamma",
    "replicas",
    "seed",
    "horizon",
    "out",
    "workers",
    "tolerance",
    "gammas",
    "ks",
    "times",
    "cv_threshold",
    "init",
    "trace",
    "points",
    "t_max",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Flag,
    File { line: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    entries: BTreeMap<String, (String, Source)>,
}

/// Parses config text. Blank lines and lines starting with `#` are skipped.
pub fn parse_config(text: &str, origin: &str) -> Result<Settings, CliError> {
    let mut s = Settings::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some((k, v)) = t.split_once('=') else {
            return Err(CliError::Usage(format!("{origin}:{line}: expected key=value, got {t:?}")));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KNOWN_KEYS.contains(&k) {
            return Err(CliError::Usage(format!(
                "{origin}:{line}: unknown key {k:?}; known keys: {}",
                KNOWN_KEYS.join(", ")
            )));
        }
        if v.is_empty() {
            return Err(CliError::Usage(format!("{origin}:{line}: empty value for {k}")));
        }
        if let Some((_, Source::File { line: first })) = s.entries.get(k) {
            return Err(CliError::Usage(format!("{origin}:{line}: {k} already set on line {first}")));
        }
        s.entries.insert(k.to_string(), (v.to_string(), Source::File { line }));
    }
    Ok(s)
}

pub fn load_config(path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

impl Settings {
    /// Flag values replace file values.
    pub fn overlay_flags(&mut self, flags: impl IntoIterator<Item = (&'static str, String)>) {
        for (k, v) in flags {
            self.entries.insert(k.to_string(), (v, Source::Flag));
        }
    }

    /// Drops keys that do not apply to a subcommand: a shared config file
    /// may set them, a flag may not.
    pub fn restrict(&mut self, allowed: &[&str], command: &str) -> Result<(), CliError> {
        if let Some((k, _)) = self.entries.iter().find(|(k, (_, src))| *src == Source::Flag && !allowed.contains(&k.as_str())) {
            return Err(CliError::Usage(format!(
                "--{} does not apply to {command}; accepted: {}",
                k.replace('_', "-"),
                allowed.iter().map(|a| format!("--{}", a.replace('_', "-"))).collect::<Vec<_>>().join(" ")
            )));
        }
        self.entries.retain(|k, _| allowed.contains(&k.as_str()));
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn set_default(&mut self, key: &str, value: impl Display) {
        self.entries.entry(key.to_string()).or_insert((value.to_string(), Source::Flag));
    }

    fn where_(&self, key: &str) -> String {
        match self.entries.get(key) {
            Some((_, Source::File { line })) => format!("config line {line}: "),
            _ => String::new(),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| {
                    CliError::Usage(format!("{}invalid value {v:?} for {}: {e}", self.where_(key), key.replace('_', "-")))
                })
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required --{}", key.replace('_', "-"))))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: Display,
    {
        let Some(v) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|p| {
                p.trim().parse::<T>().map_err(|e| {
                    CliError::Usage(format!("{}invalid entry {p:?} in {}: {e}", self.where_(key), key.replace('_', "-")))
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Positive finite float.
    pub fn positive(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.get::<f64>(key)? {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(CliError::Usage(format!(
                "{}--{} must be finite and positive, got {x}",
                self.where_(key),
                key.replace('_', "-")
            ))),
            x => Ok(x),
        }
    }

    /// The resolved settings, for provenance lines and JSON summaries.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }
}
