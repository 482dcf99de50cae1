use clap::Parser;
use ncmac::{commands, init_threads, Cli};

fn main() {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| commands::run(cli));
    if let Err(e) = result {
        eprintln!("ncmac: {e}");
        std::process::exit(e.exit_code());
    }
}
