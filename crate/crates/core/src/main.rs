use clap::Parser;

fn main() {
    let cli = kadlab::cli::Cli::parse();
    let code = match kadlab::cli::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}
