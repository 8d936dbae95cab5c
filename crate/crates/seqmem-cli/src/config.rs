//! `key = value` config files, spliced into the argument list ahead of the
//! real flags so that anything given on the command line wins.

use std::fs;
use std::path::Path;

use serde_json::Value;

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value, got '{}'", lineno + 1, raw.trim()))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", lineno + 1));
        }
        pairs.push((key, v.trim().to_string()));
    }
    Ok(pairs)
}

/// Flags equivalent to the pairs. Booleans expand to a bare flag or nothing.
pub fn pairs_to_args(pairs: &[(String, String)]) -> Vec<String> {
    let mut out = Vec::new();
    for (k, v) in pairs {
        match v.as_str() {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => {
                out.push(format!("--{k}"));
                out.push(v.clone());
            }
        }
    }
    out
}

/// Pairs embedded in a JSON output file (`seed` plus the `config` block),
/// so any output can be fed back through `--config`.
pub fn pairs_from_output(text: &str) -> Result<Vec<(String, String)>, String> {
    let v: Value = serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
    let mut pairs = Vec::new();
    if let Some(seed) = v.get("seed") {
        pairs.push(("seed".to_string(), scalar(seed)));
    }
    let Some(Value::Object(map)) = v.get("config") else {
        return Err("JSON config has no 'config' object".into());
    };
    for (k, val) in map {
        let val = match val {
            Value::Null => continue,
            Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(","),
            other => scalar(other),
        };
        pairs.push((k.replace('_', "-"), val));
    }
    Ok(pairs)
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Finds `--config PATH` or `--config=PATH` among the raw arguments and
/// returns the argument list with the file's pairs inserted right after the
/// subcommand name.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let pairs = if text.trim_start().starts_with('{') { pairs_from_output(&text)? } else { parse_config(&text)? };
    let extra = pairs_to_args(&pairs);
    // the subcommand is the first argument that is not a global flag or its value
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if !a.starts_with('-') {
            break;
        }
        i += if a.contains('=') { 1 } else { 2 };
    }
    if i >= args.len() {
        return Ok(args);
    }
    let mut out = args[..=i].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[i + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let pairs = parse_config("# run\nn = 300\nn_sequences=50 # fewer\n\nverbose = true\n").unwrap();
        assert_eq!(
            pairs,
            vec![("n".into(), "300".into()), ("n-sequences".into(), "50".into()), ("verbose".into(), "true".into())]
        );
        assert_eq!(pairs_to_args(&pairs), ["--n", "300", "--n-sequences", "50", "--verbose"]);
    }

    #[test]
    fn rejects_bare_words() {
        assert!(parse_config("n 300").is_err());
    }
}
