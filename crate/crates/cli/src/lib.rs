//! Command-line front end for `phasedpc`.
//!
//! Exit codes: 0 on success, 2 for argument errors (with usage text), 3 for
//! numerical failures, 1 for I/O failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser};
use thiserror::Error;

pub mod args;
pub mod commands;
pub mod config;
pub mod grid;
pub mod output;

use args::{Cli, Command, OutputArgs, OUT_DIR_ENV};
use config::SweepConfig;
use output::{Format, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] phasedpc::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(phasedpc::Error::Numerical { .. }) => 3,
            // Domain and empty-grid errors trace back to the arguments.
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

/// Runs the tool on `argv` (program name first) with the process's
/// standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => return report_clap(&e, out, err),
    };
    let name = subcommand_name(&cli.command);
    let result = match cli.command {
        Command::Sweep(sw) => run_sweep(&sw.config, sw.out, out, err),
        cmd => execute(cmd, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => report(&e, name, err),
    }
}

fn report_clap(e: &clap::Error, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = e.render().to_string();
    let _ = if e.use_stderr() {
        write!(err, "{text}")
    } else {
        write!(out, "{text}")
    };
    e.exit_code()
}

fn report(e: &CliError, subcommand: &str, err: &mut dyn Write) -> i32 {
    let code = e.exit_code();
    let _ = writeln!(err, "error: {e}");
    match code {
        2 => {
            let mut cmd = Cli::command();
            cmd.build();
            if let Some(sub) = cmd.find_subcommand_mut(subcommand) {
                let _ = writeln!(err, "\n{}", sub.render_usage());
            }
            let _ = writeln!(err, "\nFor more information, try 'phasedpc {subcommand} --help'.");
        }
        3 => {
            let _ = writeln!(err, "the solver could not produce a value for these parameters");
        }
        _ => {}
    }
    code
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Bound(_) => "bound",
        Command::Outage(_) => "outage",
        Command::Sector(_) => "sector",
        Command::Feedback(_) => "feedback",
        Command::Simulate(_) => "simulate",
        Command::Sweep(_) => "sweep",
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    let (table, output) = match &cmd {
        Command::Bound(a) => (commands::bound(a), &a.output),
        Command::Outage(a) => (commands::outage(a), &a.output),
        Command::Sector(a) => (commands::sector(a), &a.output),
        Command::Feedback(a) => (commands::feedback(a), &a.output),
        Command::Simulate(a) => (commands::simulate(a), &a.output),
        Command::Sweep(_) => return Err(CliError::Usage("a sweep config cannot run another sweep".into())),
    };
    emit(&table?, output, out)?;
    Ok(0)
}

fn run_sweep(path: &Path, out_override: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = SweepConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Some(o) = out_override {
        cfg.params.insert("out".into(), toml::Value::String(o.to_string_lossy().into_owned()));
    }
    let mut argv = vec!["phasedpc".to_string()];
    argv.extend(cfg.to_argv().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?);
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = writeln!(err, "in config {}:", path.display());
            return Ok(report_clap(&e, out, err));
        }
    };
    let name = subcommand_name(&cli.command);
    match execute(cli.command, out) {
        Ok(code) => Ok(code),
        Err(e) => Ok(report(&e, name, err)),
    }
}

/// Resolves `--out` against the output-directory variable.
pub fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

fn emit(table: &Table, args: &OutputArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let format = args.format.unwrap_or_else(|| match &args.out {
        Some(p) if p.extension().is_some_and(|e| e == "json") => Format::Json,
        _ => Format::Csv,
    });
    if args.gnuplot && format != Format::Csv {
        return Err(CliError::Usage("--gnuplot needs CSV output".into()));
    }
    let text = table.render(format);
    match &args.out {
        Some(p) => {
            let path = resolve_out(p);
            write_file(&path, &text)?;
            if args.gnuplot {
                let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                write_file(&path.with_extension("gp"), &table.gnuplot_stub(&name))?;
            }
        }
        None => out
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?,
    }
    Ok(())
}
