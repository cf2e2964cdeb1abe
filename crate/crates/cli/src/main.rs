use clap::Parser;

fn main() {
    let cli = singlab::Cli::parse();
    if let Err(e) = singlab::run(&cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
