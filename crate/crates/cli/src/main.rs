use clap::Parser;
use flavors_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match execute(cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            let report = serde_json::to_string(&e.report()).unwrap_or_else(|_| e.to_string());
            eprintln!("{report}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
