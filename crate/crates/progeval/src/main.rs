use clap::Parser;

use progeval::cli::{Cli, UsageError};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = cli.run() {
        eprintln!("error: {err:#}");
        let code = if err.is::<UsageError>() { 1 } else { 2 };
        std::process::exit(code);
    }
}
