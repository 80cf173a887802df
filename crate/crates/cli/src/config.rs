//! `--config FILE`: options as `key = value` lines.
//!
//! Keys are the long flag names of the chosen subcommand. Values are spliced
//! in ahead of the command-line flags, so flags given on the command line
//! win. Boolean flags take `true` or `false`.

use clap::{ArgAction, CommandFactory};

use crate::args::Cli;

/// `argv` with any `--config FILE` replaced by the file's options.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>, String> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let mut argv = argv;
    let path = match argv[pos].strip_prefix("--config=") {
        Some(p) => {
            let p = p.to_string();
            argv.remove(pos);
            p
        }
        None => {
            if pos + 1 >= argv.len() {
                return Err("--config needs a file".into());
            }
            argv.remove(pos);
            argv.remove(pos)
        }
    };
    if argv.iter().any(|a| a == "--config" || a.starts_with("--config=")) {
        return Err("--config given more than once".into());
    }
    let Some(sub) = argv.get(1).cloned() else {
        return Err("--config needs a subcommand".into());
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let extra = parse(&text, &sub).map_err(|e| format!("{path}: {e}"))?;
    argv.splice(2..2, extra);
    Ok(argv)
}

fn parse(text: &str, sub: &str) -> Result<Vec<String>, String> {
    let cmd = Cli::command();
    let sub_cmd = cmd
        .find_subcommand(sub)
        .ok_or_else(|| format!("unknown subcommand '{sub}'"))?;
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| format!("line {}: {msg}", i + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected key = value, got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "config" {
            return Err(at("config files do not nest".into()));
        }
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key))
            .ok_or_else(|| at(format!("unknown key '{key}' for {sub}")))?;
        if !seen.insert(key.to_string()) {
            return Err(at(format!("key '{key}' repeated")));
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value {
                "true" => out.push(format!("--{key}")),
                "false" => {}
                _ => return Err(at(format!("'{key}' takes true or false"))),
            },
            _ => {
                if value.is_empty() {
                    return Err(at(format!("'{key}' has no value")));
                }
                out.push(format!("--{key}={value}"));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn keys_become_flags() {
        let got = parse("# broadband\nband = 2000\nsteps=64\n\n", "design-slr").unwrap();
        assert_eq!(got, vec!["--band=2000", "--steps=64"]);
        let got = parse("single-quadrature = true", "design-composite").unwrap();
        assert_eq!(got, vec!["--single-quadrature"]);
    }

    #[test]
    fn unknown_and_malformed_lines_name_their_line() {
        for (text, line) in [("band = 1\nbogus = 2", 2), ("steps", 1), ("band = 1\nband = 2", 2), ("a-max =", 1)] {
            let e = parse(text, "design-slr").unwrap_err();
            assert!(e.contains(&format!("line {line}")), "{e}");
        }
    }

    #[test]
    fn without_config_argv_is_unchanged() {
        let a = argv("ensctl simulate --pulse p.json");
        assert_eq!(expand(a.clone()).unwrap(), a);
        assert!(expand(argv("ensctl simulate --config")).is_err());
    }
}
