use clap::Parser;

fn main() {
    let cli = wmh_cli::Cli::parse();
    if let Err(e) = wmh_cli::run(cli) {
        eprintln!("error: {e}");
        // 2 for usage and I/O problems, 1 for data/domain failures
        std::process::exit(if e.is_usage() { 2 } else { 1 });
    }
}
