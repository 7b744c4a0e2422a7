//! Flat `key=value` configuration. Values come from, in increasing
//! priority, the per-command defaults, a config file and the command line.
//! List values are comma-separated.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
}

pub const fn key(name: &'static str, default: Option<&'static str>) -> Key {
    Key { name, default }
}

/// Keys every command accepts.
pub const GLOBAL_KEYS: &[Key] = &[key("seed", Some("1")), key("threads", None), key("out", None)];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

pub fn parse_config_text(text: &str, origin: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line).trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("{origin}:{}: expected key=value", i + 1)))?;
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::usage(format!("{origin}:{}: `{k}` set twice", i + 1)));
        }
    }
    Ok(out)
}

/// Reads a flat config file, or the `config` object of a run manifest when
/// the file is JSON.
pub fn read_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let origin = path.display().to_string();
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{origin}: {e}")))?;
        let obj = v
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| CliError::usage(format!("{origin}: no `config` object")))?;
        obj.iter()
            .map(|(k, v)| match v.as_str() {
                Some(s) => Ok((k.clone(), s.to_string())),
                None => Err(CliError::usage(format!("{origin}: `{k}` is not a string"))),
            })
            .collect()
    } else {
        parse_config_text(&text, &origin)
    }
}

impl Settings {
    pub fn resolve(
        keys: &[Key],
        file: Option<BTreeMap<String, String>>,
        cli: Vec<(&'static str, String)>,
    ) -> CliResult<Settings> {
        let known = |k: &str| GLOBAL_KEYS.iter().chain(keys).any(|key| key.name == k);
        let mut values = BTreeMap::new();
        for k in GLOBAL_KEYS.iter().chain(keys) {
            if let Some(d) = k.default {
                values.insert(k.name.to_string(), d.to_string());
            }
        }
        for (k, v) in file.into_iter().flatten() {
            if !known(&k) {
                return Err(CliError::usage(format!("unknown config key `{k}`")));
            }
            values.insert(k, v);
        }
        for (k, v) in cli {
            values.insert(k.to_string(), v);
        }
        Ok(Settings { values })
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn require(&self, name: &str) -> CliResult<&str> {
        self.get(name)
            .ok_or_else(|| CliError::usage(format!("missing required setting `{name}`")))
    }

    pub fn parse<T: FromStr>(&self, name: &str) -> CliResult<Option<T>> {
        self.get(name)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::usage(format!("`{name}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn parse_required<T: FromStr>(&self, name: &str) -> CliResult<T> {
        self.parse(name)?
            .ok_or_else(|| CliError::usage(format!("missing required setting `{name}`")))
    }

    pub fn flag(&self, name: &str) -> CliResult<bool> {
        match self.get(name) {
            None | Some("false") | Some("0") | Some("no") => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some(v) => Err(CliError::usage(format!("`{name}`: expected true or false, got `{v}`"))),
        }
    }

    pub fn list(&self, name: &str) -> Vec<String> {
        self.get(name)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// The settings as a flat config file.
    pub fn to_config_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Joins repeated command-line values into one list setting.
pub fn join_list(values: &[String]) -> Option<String> {
    (!values.is_empty()).then(|| values.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: &[Key] = &[key("chains", Some("3")), key("model", Some("smjm"))];

    #[test]
    fn command_line_beats_file_beats_default() {
        let file = parse_config_text("# comment\nchains = 5\r\nmodel=mrf\n", "f").unwrap();
        let s = Settings::resolve(KEYS, Some(file), vec![("model", "smjm".into())]).unwrap();
        assert_eq!(s.get("chains"), Some("5"));
        assert_eq!(s.get("model"), Some("smjm"));
        assert_eq!(s.get("seed"), Some("1"));
    }

    #[test]
    fn unknown_and_repeated_keys_are_rejected() {
        let file = parse_config_text("color=red\n", "f").unwrap();
        assert!(Settings::resolve(KEYS, Some(file), vec![]).is_err());
        assert!(parse_config_text("a=1\na=2\n", "f").is_err());
        assert!(parse_config_text("novalue\n", "f").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let s = Settings::resolve(KEYS, None, vec![("out", "dir".into())]).unwrap();
        let again = Settings::resolve(
            KEYS,
            Some(parse_config_text(&s.to_config_text(), "echo").unwrap()),
            vec![],
        )
        .unwrap();
        assert_eq!(s, again);
    }
}
