//! `key = value` config files merged under the command line.
//!
//! Keys are long flag names (`-` or `_`). Keys before any `[section]` apply
//! to every subcommand that has such a flag; keys in `[train]` etc. only to
//! that subcommand. Values may be quoted; `[a, b]` gives a repeated flag.

use std::collections::BTreeMap;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Command};

use crate::CliError;

type Section = Vec<(usize, String, Vec<String>)>;

fn unquote(s: &str) -> String {
    let s = s.trim();
    for q in ['"', '\''] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return s[1..s.len() - 1].to_string();
        }
    }
    s.to_string()
}

fn parse(text: &str, path: &Path) -> Result<BTreeMap<String, Section>, CliError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Input(format!("{}:{}: expected `key = value`", path.display(), i + 1)));
        };
        let value = value.trim();
        let values = match value.strip_prefix('[').and_then(|v| v.strip_suffix(']')) {
            Some(list) => list.split(',').map(unquote).filter(|v| !v.is_empty()).collect(),
            None => vec![unquote(value)],
        };
        sections.entry(current.clone()).or_default().push((i + 1, key.trim().replace('_', "-"), values));
    }
    Ok(sections)
}

fn flag_of<'a>(cmd: &'a Command, key: &str) -> Option<&'a clap::Arg> {
    cmd.get_arguments().find(|a| a.get_long() == Some(key))
}

/// Returns `argv` extended with config values for flags the command line
/// left unset.
pub fn merge(root: &Command, argv: &[String], matches: &ArgMatches, path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    let sections = parse(&text, path)?;
    let (name, sub_matches) = matches.subcommand().expect("a subcommand is required");
    let sub = root.find_subcommand(name).expect("matched subcommand exists");
    let known = |key: &str| root.get_subcommands().any(|c| flag_of(c, key).is_some()) || flag_of(root, key).is_some();

    let mut out = argv.to_vec();
    for (section, entries) in &sections {
        if !section.is_empty() && root.find_subcommand(section).is_none() {
            return Err(CliError::Input(format!("{}: unknown section [{section}]", path.display())));
        }
        if !section.is_empty() && section != name {
            continue;
        }
        for (line, key, values) in entries {
            if key == "config" {
                return Err(CliError::Input(format!("{}:{line}: config files cannot nest", path.display())));
            }
            let Some(arg) = flag_of(sub, key).or_else(|| flag_of(root, key)) else {
                if section.is_empty() && known(key) {
                    continue;
                }
                return Err(CliError::Input(format!("{}:{line}: unknown key {key:?}", path.display())));
            };
            if sub_matches.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
                continue;
            }
            if matches!(arg.get_action(), ArgAction::SetTrue) {
                match values.as_slice() {
                    [v] if v == "true" => out.push(format!("--{key}")),
                    [v] if v == "false" => {}
                    _ => return Err(CliError::Input(format!("{}:{line}: {key} takes true or false", path.display()))),
                }
                continue;
            }
            for v in values {
                out.push(format!("--{key}"));
                out.push(v.clone());
            }
        }
    }
    Ok(out)
}
