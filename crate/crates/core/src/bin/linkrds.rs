use clap::Parser;

fn main() {
    let cli = linkrds::cli::Cli::parse();
    let code = linkrds::cli::run(&cli, &mut std::io::stdout().lock());
    std::process::exit(code);
}
