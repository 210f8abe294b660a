use clap::Parser;

fn main() {
    let cli = qgraph::cli::Cli::parse();
    std::process::exit(qgraph::cli::run(cli));
}
