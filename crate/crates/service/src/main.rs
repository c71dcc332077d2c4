use clap::Parser;

fn main() {
    env_logger::init();
    if let Err(e) = softbound_service::cli::run(softbound_service::cli::Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
