//! Optional `key = value` config files merged under command-line flags.
//!
//! Keys are long flag names (`per-class` or `per_class`). Lines starting
//! with `#` are comments, so a run manifest is itself a valid config file.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

use crate::CliError;

pub fn parse_config(text: &str, origin: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("{origin}:{}: expected `key = value`", n + 1)))?;
        let key = k.trim().replace('_', "-");
        if out.iter().any(|(existing, _)| *existing == key) {
            return Err(CliError::config(format!("{origin}:{}: duplicate key `{key}`", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Position of the subcommand name in `args`, skipping global options.
fn subcommand_index(cmd: &Command, args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            i += 2;
            continue;
        }
        if a.starts_with('-') {
            i += 1;
            continue;
        }
        return cmd.find_subcommand(a.as_ref()).map(|_| i);
    }
    None
}

/// Pulls `--config FILE` out of `args` and appends the file's settings as
/// flags for every key the command line did not already set.
pub fn merge_config(cmd: &Command, mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    let path = args
        .get(pos + 1)
        .cloned()
        .ok_or_else(|| CliError::config("--config needs a file path"))?;
    args.drain(pos..pos + 2);
    let path_ref = Path::new(&path);
    let text = std::fs::read_to_string(path_ref)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path_ref.display())))?;
    let entries = parse_config(&text, &path_ref.display().to_string())?;

    let Some(sub_idx) = subcommand_index(cmd, &args) else {
        return Ok(args);
    };
    let name = args[sub_idx].to_string_lossy().to_string();
    let sub = cmd.find_subcommand(&name).expect("subcommand located above");
    let given: Vec<String> = args[sub_idx + 1..]
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::config(format!("config key `{key}` is not a flag of `{name}`")))?;
        if given.contains(&key) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" => args.push(format!("--{key}").into()),
                "false" => {}
                other => return Err(CliError::config(format!("`{key}` takes true or false, got {other:?}"))),
            },
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_underscores() {
        let e = parse_config("# c\nper_class = 5\n\nseed=3\n", "t").unwrap();
        assert_eq!(e, vec![("per-class".into(), "5".into()), ("seed".into(), "3".into())]);
        assert!(parse_config("a = 1\na = 2\n", "t").is_err());
        assert!(parse_config("novalue\n", "t").is_err());
    }
}
