use clap::Parser;

fn main() {
    let cli = gongzhu_cli::Cli::parse();
    if let Err(e) = gongzhu_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
