use clap::Parser;

use mzatom_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads > 0 {
            // results are thread-count independent; this only sets parallelism
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
    if let Err(err) = run(&cli) {
        eprintln!("mzatom: {err}");
        std::process::exit(err.exit_code());
    }
}
