//! `--config` files: TOML values are turned into flags and placed before the
//! user's own flags, so anything given on the command line overrides them.

use std::path::Path;

use anyhow::{bail, Context};
use clap::Command;
use toml::{Table, Value};

/// The value of `--config` in `argv`, if present.
fn find_config(argv: &[String]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn subcommand_index(root: &Command, argv: &[String]) -> Option<usize> {
    let mut skip_next = false;
    for (i, a) in argv.iter().enumerate().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        if a == "--config" {
            skip_next = true;
            continue;
        }
        if a.starts_with('-') {
            continue;
        }
        return root.find_subcommand(a).map(|_| i);
    }
    None
}

fn flag_values(key: &str, value: &Value) -> anyhow::Result<Vec<String>> {
    let flag = format!("--{}", key.replace('_', "-"));
    Ok(match value {
        Value::Boolean(true) => vec![flag],
        Value::Boolean(false) => Vec::new(),
        Value::String(s) => vec![flag, s.clone()],
        Value::Integer(i) => vec![flag, i.to_string()],
        Value::Float(f) => vec![flag, f.to_string()],
        Value::Array(items) => {
            let parts = items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    Value::Integer(i) => Ok(i.to_string()),
                    Value::Float(f) => Ok(f.to_string()),
                    other => bail!("config key {key}: unsupported list item {other}"),
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            vec![flag, parts.join(",")]
        }
        other => bail!("config key {key}: unsupported value {other}"),
    })
}

fn has_flag(cmd: &Command, key: &str) -> bool {
    let long = key.replace('_', "-");
    cmd.get_arguments().any(|a| a.get_long() == Some(long.as_str()))
}

/// Flags contributed by `table` to subcommand `sub`.
pub fn config_flags(sub: &Command, table: &Table) -> anyhow::Result<Vec<String>> {
    let mut out = Vec::new();
    for (key, value) in table {
        if value.is_table() || key == "config" {
            continue;
        }
        if has_flag(sub, key) {
            out.extend(flag_values(key, value)?);
        }
    }
    if let Some(section) = table.get(sub.get_name()) {
        let section = section
            .as_table()
            .with_context(|| format!("config key {} must be a table", sub.get_name()))?;
        for (key, value) in section {
            if !has_flag(sub, key) {
                bail!("config [{}] has unknown key {key}", sub.get_name());
            }
            out.extend(flag_values(key, value)?);
        }
    }
    Ok(out)
}

pub fn load_table(path: &Path) -> anyhow::Result<Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    text.parse::<Table>().with_context(|| format!("parsing config {}", path.display()))
}

/// Returns `argv` with the config file's flags inserted after the subcommand.
pub fn apply_config_file(root: &Command, argv: Vec<String>) -> anyhow::Result<Vec<String>> {
    let Some(path) = find_config(&argv) else { return Ok(argv) };
    let Some(at) = subcommand_index(root, &argv) else { return Ok(argv) };
    let table = load_table(Path::new(&path))?;
    let sub = root.find_subcommand(&argv[at]).expect("index points at a subcommand");
    let injected = config_flags(sub, &table)?;
    let mut out = argv[..=at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}
