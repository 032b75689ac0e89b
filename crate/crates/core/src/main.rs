use clap::Parser;

fn main() {
    let cli = hawkes_queue::cli::Cli::parse();
    std::process::exit(hawkes_queue::cli::run(cli));
}
