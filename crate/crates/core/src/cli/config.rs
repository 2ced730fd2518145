use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::CommandFactory;

use super::{Cli, CliError};

const GLOBAL_KEYS: [&str; 2] = ["seed", "out-dir"];
const GLOBAL_VALUE_FLAGS: [&str; 3] = ["--seed", "--out-dir", "--config"];

/// `key=value` pairs in file order. Keys are normalized to flag spelling
/// (`batch_size` and `batch-size` are the same key).
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "{}:{}: expected key=value, got '{line}'",
                origin.display(),
                n + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::usage(format!("{}:{}: empty key", origin.display(), n + 1)));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if GLOBAL_VALUE_FLAGS.contains(&s.as_ref()) {
            i += 2;
        } else if s.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// Splices the contents of `--config FILE` into `args`: global keys go
/// first, subcommand keys directly after the subcommand, so any flag given
/// explicitly comes later and wins.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(sub_at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let pairs = parse_config(&text, path)?;

    let command = Cli::command();
    let sub_name = args[sub_at].to_string_lossy().into_owned();
    let Some(sub) = command.find_subcommand(&sub_name) else {
        return Ok(args);
    };

    let mut global = Vec::new();
    let mut local = Vec::new();
    for (key, value) in pairs {
        if key == "config" {
            return Err(CliError::usage("config files cannot include other config files"));
        }
        if GLOBAL_KEYS.contains(&key.as_str()) {
            global.push(OsString::from(format!("--{key}")));
            global.push(OsString::from(value));
            continue;
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            return Err(CliError::usage(format!(
                "{}: unknown key '{key}' for '{sub_name}'",
                path.display()
            )));
        };
        if arg.get_action().takes_values() {
            local.push(OsString::from(format!("--{key}")));
            local.push(OsString::from(value));
        } else {
            match value.as_str() {
                "true" => local.push(OsString::from(format!("--{key}"))),
                "false" => {}
                other => {
                    return Err(CliError::usage(format!(
                        "{}: key '{key}' expects true or false, got '{other}'",
                        path.display()
                    )))
                }
            }
        }
    }

    let mut out = Vec::with_capacity(args.len() + global.len() + local.len());
    out.push(args[0].clone());
    out.extend(global);
    out.extend_from_slice(&args[1..=sub_at]);
    out.extend(local);
    out.extend_from_slice(&args[sub_at + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_pairs_and_comments() {
        let pairs = parse_config("# run\nlr = 0.001\n\nbatch_size=8\n", Path::new("c")).unwrap();
        assert_eq!(
            pairs,
            vec![("lr".into(), "0.001".into()), ("batch-size".into(), "8".into())]
        );
        assert!(parse_config("lr 0.1\n", Path::new("c")).is_err());
    }

    #[test]
    fn splices_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "seed=5\nlr=0.5\nraw=true\nwall_time=false\n").unwrap();
        let c = cfg.to_str().unwrap();
        let out = expand_config(os(&["p", "--config", c, "train", "--lr", "0.1"])).unwrap();
        assert_eq!(
            out,
            os(&["p", "--seed", "5", "--config", c, "train", "--lr", "0.5", "--raw", "--lr", "0.1"])
        );
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "learning_rate=1\n").unwrap();
        let err = expand_config(os(&["p", "train", "--config", cfg.to_str().unwrap()])).unwrap_err();
        assert_eq!(err.code, super::super::EXIT_USAGE);
    }

    #[test]
    fn no_config_is_identity() {
        let args = os(&["p", "gradcheck", "--h", "1e-5"]);
        assert_eq!(expand_config(args.clone()).unwrap(), args);
    }
}
