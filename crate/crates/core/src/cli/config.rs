//! Flat `key = value` configuration files and run manifests.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Keys are the long flag names with `_` in place of `-`. A manifest is a
//! config file with every setting materialized plus the `subcommand` and
//! `version` keys, so passing it back through `--config` replays the run.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use super::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A resolved set of options for one subcommand.
pub(crate) trait Settings {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String>;
    /// Every setting, in a stable order, formatted so that `set` reads it back exactly.
    fn pairs(&self) -> Vec<(&'static str, String)>;
}

pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value, got '{}'", i + 1, raw.trim()))?;
        let k = k.trim();
        if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("line {}: bad key '{k}'", i + 1));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_kv(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub(crate) fn render_manifest(subcommand: &str, pairs: &[(&'static str, String)]) -> String {
    let mut s = format!("# irs run manifest; replay with: irs {subcommand} --config <this file>\n");
    s.push_str(&format!("subcommand = {subcommand}\nversion = {VERSION}\n"));
    for (k, v) in pairs {
        s.push_str(&format!("{k} = {v}\n"));
    }
    s
}

/// Applies file entries, then flag overrides, to `settings`.
pub(crate) fn apply<S: Settings>(
    settings: &mut S,
    subcommand: &str,
    file: &[(String, String)],
    flags: &[(&'static str, String)],
) -> Result<(), CliError> {
    for (k, v) in file {
        match k.as_str() {
            "subcommand" if v != subcommand => {
                return Err(CliError::Config(format!(
                    "config is for subcommand '{v}', not '{subcommand}'"
                )))
            }
            "subcommand" | "version" | "preset" => {}
            _ => settings.set(k, v).map_err(CliError::Config)?,
        }
    }
    for (k, v) in flags {
        settings.set(k, v).map_err(CliError::Usage)?;
    }
    Ok(())
}

pub(crate) fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String>
where
    T::Err: Display,
{
    v.trim().parse().map_err(|e| format!("{key}: cannot parse '{v}': {e}"))
}

pub(crate) fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, String>
where
    T::Err: Display,
{
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s)).collect()
}

pub(crate) fn join<T: Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub(crate) fn flag(key: &'static str, v: Option<impl Display>) -> Option<(&'static str, String)> {
    v.map(|v| (key, v.to_string()))
}
