//! Command-line front end: `run`, `bench` and `plotdata`.

pub mod args;
pub mod bench;
pub mod error;
pub mod io;
pub mod plotdata;
pub mod run;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Parses `argv`, runs the subcommand and returns the process exit code:
/// 0 on success, 1 for usage errors, 2 for data errors.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();

    let result = match &cli.command {
        Command::Run(a) => run::cmd_run(a),
        Command::Bench(a) => bench::cmd_bench(a),
        Command::Plotdata(a) => plotdata::cmd_plotdata(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Data(err) => eprintln!("error: {err:#}"),
            }
            e.exit_code()
        }
    }
}
