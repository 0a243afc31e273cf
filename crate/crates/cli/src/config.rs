//! `key = value` config files merged into the argument list.
//!
//! Each key names a long flag (`delta_cap` and `delta-cap` both work). Keys
//! already given on the command line are skipped, so the command line wins.
//! `true`/`false` toggle switches such as `no-meta`.

use std::ffi::OsString;
use std::path::Path;

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            return Err(format!("config line {}: bad key {:?}", i + 1, k.trim()));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_value)
    })
}

/// Append config-file entries to `args` as `--key value`.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config {}: {e}", Path::new(&path).display()))?;
    let entries = parse(&text)?;
    let mut merged = args.clone();
    for (key, value) in entries {
        if key == "config" || given(&args, &key) {
            continue;
        }
        match value.as_str() {
            "true" => merged.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                // repeatable flags may list several values separated by ';'
                for v in value.split(';').map(str::trim).filter(|v| !v.is_empty()) {
                    merged.push(format!("--{key}={v}").into());
                }
            }
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_and_normalises() {
        let e = parse("# comment\nbeta = 1\n\ndelta_cap=500 # trailing\nno_meta = true\n").unwrap();
        assert_eq!(
            e,
            vec![
                ("beta".into(), "1".into()),
                ("delta-cap".into(), "500".into()),
                ("no-meta".into(), "true".into())
            ]
        );
        assert!(parse("beta 1").is_err());
    }

    #[test]
    fn command_line_wins() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "mu = 3\nbeta = 2\nno_meta = true\nsweep = mu=1:2:3; delta=1:2:2\n").unwrap();
        let args = os(&["bec-kit", "bound", "sweep", "--mu", "5", "--config", p.to_str().unwrap()]);
        let merged = merge(args).unwrap();
        let s: Vec<String> = merged.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert!(s.contains(&"--beta=2".to_string()));
        assert!(!s.contains(&"--mu=3".to_string()));
        assert!(s.contains(&"--no-meta".to_string()));
        assert!(s.contains(&"--sweep=mu=1:2:3".to_string()));
        assert!(s.contains(&"--sweep=delta=1:2:2".to_string()));
    }

    #[test]
    fn no_config_is_identity() {
        let args = os(&["bec-kit", "verify"]);
        assert_eq!(merge(args.clone()).unwrap(), args);
    }
}
