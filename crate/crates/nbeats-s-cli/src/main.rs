use clap::Parser;
use nbeats_s_cli::cli::{self, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let args = Cli::parse();
    // num_threads(0) lets the pool size itself to the machine.
    rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers)
        .build_global()
        .expect("the worker pool is configured once, before any parallel work");
    if let Err(e) = cli::run(args) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
