mod cli;

use clap::Parser;

fn main() {
    let args = match cli::expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(cli::exit_code(&e));
        }
    };
    let parsed = match cli::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { cli::EXIT_USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = cli::run(parsed) {
        eprintln!("error: {e:#}");
        std::process::exit(cli::exit_code(&e));
    }
}
