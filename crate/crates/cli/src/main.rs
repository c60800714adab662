use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use povmctx_cli::{execute, Cli, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_path = match &cli.command {
        povmctx_cli::Command::Family(c)
        | povmctx_cli::Command::Check(c)
        | povmctx_cli::Command::KsSearch(c)
        | povmctx_cli::Command::Simulate(c)
        | povmctx_cli::Command::Dilate(c)
        | povmctx_cli::Command::Audit(c)
        | povmctx_cli::Command::Feasibility(c) => c.out.clone(),
    };
    let out = execute(&cli);
    if !out.stderr.is_empty() {
        eprintln!("{}", out.stderr);
    }
    if !out.stdout.is_empty() {
        match out_path {
            Some(path) => {
                if let Err(e) = std::fs::write(&path, &out.stdout) {
                    eprintln!("writing {}: {e}", path.display());
                    return ExitCode::from(EXIT_USAGE as u8);
                }
            }
            None => {
                let _ = std::io::stdout().write_all(out.stdout.as_bytes());
            }
        }
    }
    ExitCode::from(out.code as u8)
}
