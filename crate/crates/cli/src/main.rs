use clap::Parser;
use sharpssl_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Err(e) = sharpssl_cli::run(cli) {
        eprintln!("sharpssl: {e}");
        std::process::exit(e.exit_code());
    }
}
