use clap::Parser;
use histborrow_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Results are invariant to the pool size; this only bounds
        // resources. A failure here means the pool was already built.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    if let Err(err) = run(cli) {
        eprintln!("{}", err.to_json());
        std::process::exit(err.exit_code);
    }
}
