use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use env_logger::Env;

use rank1_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(Env::new().filter_or("RANK1_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match run(&cli, &mut std::io::stdout(), &mut std::io::stderr()) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
