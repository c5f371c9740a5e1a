use clap::Parser;
use plp_cli::{run, Cli};

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli, &argv) {
        eprintln!("plp: {e}");
        std::process::exit(e.exit_code());
    }
}
