//! Command-line front end for netmix. [`run`] parses arguments, resolves
//! settings, runs one subcommand and returns the process exit code: 0 on
//! success, 1 for usage or configuration errors, 2 for data errors, 3 for
//! numerical failures.

use std::ffi::OsString;

use clap::Parser;

pub mod args;
pub mod artifacts;
pub mod cmd;
pub mod error;
pub mod settings;

use args::{Cli, Command};
use error::{CliError, CliResult};
use settings::{read_config_file, Settings};

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    let file = cli.config.as_deref().map(read_config_file).transpose()?;
    let mut pairs = cli.command.pairs();
    if let Some(s) = cli.seed {
        pairs.push(("seed", s.to_string()));
    }
    if let Some(t) = cli.threads {
        pairs.push(("threads", t.to_string()));
    }
    if let Some(o) = &cli.out {
        pairs.push(("out", o.display().to_string()));
    }
    let keys = match cli.command {
        Command::Fit(_) => cmd::fit::KEYS,
        Command::Simulate(_) => cmd::simulate::KEYS,
        Command::Evaluate(_) => cmd::evaluate::KEYS,
        Command::Rank(_) => cmd::rank::KEYS,
        Command::Diagnose(_) => cmd::diagnose::KEYS,
    };
    let settings = Settings::resolve(keys, file, pairs)?;
    let threads = match settings.parse::<usize>("threads")? {
        Some(0) => return Err(CliError::usage("`threads` must be at least 1")),
        Some(t) => t,
        None => match cli.command {
            Command::Fit(_) => settings.parse::<usize>("chains")?.unwrap_or(1),
            _ => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    netmix::par::with_threads(threads, || match cli.command {
        Command::Fit(_) => cmd::fit::run(&settings),
        Command::Simulate(_) => cmd::simulate::run(&settings),
        Command::Evaluate(_) => cmd::evaluate::run(&settings),
        Command::Rank(_) => cmd::rank::run(&settings),
        Command::Diagnose(_) => cmd::diagnose::run(&settings),
    })
}
