use clap::Parser;
use nimpanel::cli::{exit_code, run_command, Cli, RunConfig, SEED_ENV};

fn main() {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    let env_seed = std::env::var(SEED_ENV).ok();
    let result = RunConfig::resolve(args, env_seed.as_deref()).and_then(|cfg| run_command(kind, &cfg));
    match result {
        Ok(out) => print!("{}", out.body),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
