mod args;
mod commands;
mod table;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};
use serde_json::json;

use args::Cli;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn report_error(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn parse(argv: &[OsString]) -> Result<Cli, clap::Error> {
    let matches = Cli::command()
        .mut_subcommands(|s| s.args_override_self(true))
        .try_get_matches_from(argv)?;
    Cli::from_arg_matches(&matches)
}

/// Turns `key = value` lines into `--key value`; blank lines and `#` comments
/// are skipped.
fn config_args(path: &Path) -> Result<Vec<OsString>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), i + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key == "config" {
            return Err(format!("{}:{}: config files cannot nest", path.display(), i + 1));
        }
        out.push(format!("--{key}").into());
        out.push(value.trim().into());
    }
    Ok(out)
}

fn main() -> ExitCode {
    let mut argv: Vec<OsString> = std::env::args_os().collect();
    let mut cli = match parse(&argv) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    if let Some(path) = cli.command.common().config.clone() {
        match config_args(&path) {
            Ok(extra) => argv.extend(extra),
            Err(msg) => return report_error("config", &msg, EXIT_USAGE),
        }
        cli = match parse(&argv) {
            Ok(c) => c,
            Err(e) => return usage_error(e),
        };
    }
    let common = cli.command.common().clone();

    if let Some(threads) = common.threads {
        if threads == 0 {
            return report_error("usage", "--threads must be at least 1", EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            return report_error("usage", &e.to_string(), EXIT_USAGE);
        }
    }

    let (report, params) = match commands::run(&cli.command, common.seed) {
        Ok(r) => r,
        Err(e) if e.is_validation() => return report_error("validation", &e.to_string(), EXIT_USAGE),
        Err(e) => return report_error("numerical", &e.to_string(), EXIT_NUMERIC),
    };
    let config = json!({
        "command": cli.command.name(),
        "params": params,
        "output": common.output,
        "format": common.format,
        "seed": common.seed,
        "determinism": common.determinism,
        "threads": common.threads,
        "config_file": common.config,
    });

    let written = match &common.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            report.write(common.format, &config, &mut w)?;
            w.flush()
        }),
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            report.write(common.format, &config, &mut w).and_then(|_| w.flush())
        }
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => report_error("io", &e.to_string(), 1),
    }
}

fn usage_error(e: clap::Error) -> ExitCode {
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            }
        }
        _ => {
            let _ = e.print();
            report_error("usage", e.kind().as_str().unwrap_or("invalid arguments"), EXIT_USAGE)
        }
    }
}
