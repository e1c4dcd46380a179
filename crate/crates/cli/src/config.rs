//! Flat JSON configuration merged into the command line.

use std::collections::BTreeSet;
use std::path::Path;

use clap::CommandFactory;
use log::debug;
use serde_json::Value;

use crate::args::Cli;
use crate::error::{CliError, CliResult};

const VALUE_GLOBALS: [&str; 3] = ["--out", "--threads", "--config"];

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn subcommand_index(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if VALUE_GLOBALS.contains(&a.as_str()) {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

fn longs(cmd: &clap::Command) -> Vec<(String, bool)> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long().map(|l| (l.to_string(), a.get_action().takes_values())))
        .collect()
}

fn render(key: &str, value: &Value) -> CliResult<String> {
    Ok(match value {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| render(key, v))
            .collect::<CliResult<Vec<_>>>()?
            .join(","),
        other => return Err(CliError::validation(format!("config key `{key}`: unsupported value {other}"))),
    })
}

/// Inserts `--key value` for every config entry the chosen command accepts
/// and the command line does not already set.
pub fn expand(args: Vec<String>) -> CliResult<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::validation(format!("config {path}: {e}")))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::validation(format!("config {path}: {e}")))?;
    let Value::Object(map) = doc else {
        return Err(CliError::validation(format!("config {path}: expected a JSON object")));
    };
    let Some(at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let root = Cli::command();
    let Some(sub) = root.find_subcommand(&args[at]) else {
        return Ok(args);
    };
    let mut accepted = longs(sub);
    accepted.extend(longs(&root));
    let known: BTreeSet<String> = root
        .get_subcommands()
        .flat_map(longs)
        .chain(longs(&root))
        .map(|(l, _)| l)
        .collect();

    let mut inserted = Vec::new();
    for (key, value) in &map {
        let flag = key.replace('_', "-");
        if flag == "config" {
            continue;
        }
        if !known.contains(&flag) {
            return Err(CliError::validation(format!("config {path}: unknown key `{key}`")));
        }
        let Some(takes_value) = accepted.iter().find(|(l, _)| *l == flag).map(|(_, t)| *t) else {
            debug!("config key `{key}` does not apply to `{}`", args[at]);
            continue;
        };
        let long = format!("--{flag}");
        let prefix = format!("{long}=");
        if args.iter().any(|a| *a == long || a.starts_with(&prefix)) {
            continue;
        }
        if takes_value {
            inserted.push(long);
            inserted.push(render(key, value)?);
        } else {
            match value {
                Value::Bool(true) => inserted.push(long),
                Value::Bool(false) => {}
                other => {
                    return Err(CliError::validation(format!(
                        "config key `{key}` is a switch; expected true or false, found {other}"
                    )))
                }
            }
        }
    }
    let mut out = args[..=at].to_vec();
    out.extend(inserted);
    out.extend_from_slice(&args[at + 1..]);
    Ok(out)
}
