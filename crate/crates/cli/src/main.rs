//! `escmeas`: command-line front end to `escape-core`.
//!
//! Each run writes its outputs and a `<subcommand>.manifest` into `--out`.
//! The manifest lists every parameter in canonical form plus the sha256 of
//! each output, and is itself a valid `--config` file, so
//! `escmeas render --config out/render.manifest` reproduces the run.
//!
//! Exit codes: 0 success, 2 precondition, 3 numeric failure or failed
//! check, 64 usage.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};
use escape_core::escape::{CLASS_NAMES, PALETTE};
use escape_core::Error;
use sha2::{Digest, Sha256};

use config::{Config, COMMON, SUBCOMMANDS};

pub const EXIT_PRECONDITION: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Usage error already printed by the argument parser.
    Parser,
    Core(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Parser => EXIT_USAGE,
            CliError::Core(Error::Numeric(_)) => EXIT_NUMERIC,
            CliError::Core(_) | CliError::Io(_) => EXIT_PRECONDITION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Parser => write!(f, "usage error"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
        }
    }
}

fn palette_help() -> String {
    let mut s = String::from("Class colors (PPM P6, RGB):\n");
    for (name, rgb) in CLASS_NAMES.iter().zip(PALETTE) {
        s.push_str(&format!("  {name:<22} {} {} {}\n", rgb[0], rgb[1], rgb[2]));
    }
    s
}

fn cli() -> Command {
    let mut root = Command::new("escmeas")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Escape-rate sets, gauge measures and strip constructions")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for sub in SUBCOMMANDS {
        let mut cmd = Command::new(sub.name)
            .about(sub.about)
            .arg(Arg::new("config").long("config").value_name("FILE").help("flat key=value file; flags override it"))
            .arg(Arg::new("out").long("out").value_name("DIR").default_value(".").help("output directory"))
            .arg(
                Arg::new("threads")
                    .long("threads")
                    .value_name("N")
                    .value_parser(clap::value_parser!(usize))
                    .default_value("0")
                    .help("worker threads (0: all cores); outputs do not depend on it"),
            );
        for p in sub.params.iter().chain(COMMON) {
            cmd = cmd.arg(Arg::new(p.key).long(p.key).value_name("VALUE").allow_hyphen_values(true).help(format!("{} [default: {}]", p.help, p.default)));
        }
        if sub.name == "render" || sub.name == "classify" {
            cmd = cmd.after_help(palette_help());
        }
        root = root.subcommand(cmd);
    }
    root
}

fn resolve(name: &str, m: &ArgMatches) -> Result<Config, CliError> {
    let sub = config::find(name).expect("registered subcommand");
    let mut cfg = Config::new(sub);
    if let Some(path) = m.get_one::<String>("config") {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
        cfg.apply_text(&text)?;
    }
    for p in sub.params.iter().chain(COMMON) {
        if let Some(v) = m.get_one::<String>(p.key) {
            cfg.set(p.key, v)?;
        }
    }
    Ok(cfg)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_outputs(dir: &Path, cfg: &Config, out: &commands::Outcome) -> Result<PathBuf, CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut manifest = format!("subcommand={}\ntool_version={}\n", cfg.sub.name, env!("CARGO_PKG_VERSION"));
    for (k, v) in cfg.manifest_entries() {
        manifest.push_str(&format!("{k}={v}\n"));
    }
    for (name, body) in &out.files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| io(&path, e))?;
        manifest.push_str(&format!("digest.{name}={}\n", sha256_hex(body)));
    }
    let path = dir.join(format!("{}.manifest", cfg.sub.name));
    fs::write(&path, manifest).map_err(|e| io(&path, e))?;
    Ok(path)
}

fn run(args: Vec<OsString>) -> Result<(), CliError> {
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind::*;
            let help = matches!(e.kind(), DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand);
            let _ = e.print();
            return if help && e.kind() != DisplayHelpOnMissingArgumentOrSubcommand {
                Ok(())
            } else {
                Err(CliError::Parser)
            };
        }
    };
    let (name, m) = matches.subcommand().expect("subcommand required");
    let mut cfg = resolve(name, m)?;
    let threads = *m.get_one::<usize>("threads").expect("defaulted");
    let dir = PathBuf::from(m.get_one::<String>("out").expect("defaulted"));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| commands::dispatch(&mut cfg))?;
    let manifest = write_outputs(&dir, &cfg, &outcome)?;
    for (k, v) in &outcome.lines {
        println!("{k}={v}");
    }
    println!("manifest={}", manifest.display());
    match outcome.failed_check {
        Some(msg) => Err(CliError::Core(Error::Numeric(msg))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Parser) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}
