//! `key = value` configuration files.
//!
//! Each line becomes `--key value` and is inserted right after the
//! subcommand, ahead of the flags given on the command line, so that
//! explicit flags win. `key = true` becomes a bare `--key`, `key = false`
//! is dropped. Blank lines and lines starting with `#` are ignored.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

#[derive(Debug, PartialEq)]
pub struct ConfigError(pub String);

pub fn parse(text: &str, origin: &str) -> Result<Vec<OsString>, ConfigError> {
    let mut args = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "{origin}:{}: expected key = value, found '{line}'",
                n + 1
            )));
        };
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(ConfigError(format!(
                "{origin}:{}: invalid key '{key}'",
                n + 1
            )));
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

/// Finds `--config FILE` / `--config=FILE` in `argv`.
fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Returns `argv` with the configuration file's flags inserted after the
/// subcommand. Leaves `argv` alone when there is no `--config` or no
/// subcommand (clap reports the latter).
pub fn inject(argv: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| {
        ConfigError(format!(
            "cannot read config file {}: {e}",
            Path::new(&path).display()
        ))
    })?;
    let extra = parse(&text, &Path::new(&path).display().to_string())?;
    let Some(pos) = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(i, a)| {
            let s = a.to_string_lossy();
            let after_config = argv[i - 1] == "--config";
            !s.starts_with('-') && !after_config
        })
        .map(|(i, _)| i)
    else {
        return Ok(argv);
    };
    let mut out = argv[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}
