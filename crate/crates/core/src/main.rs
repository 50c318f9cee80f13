use clap::Parser;

use objmap::cli::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OBJMAP_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = execute(&cli);
    let text = outcome.render(cli.json);
    if outcome.exit_code == 0 || cli.json {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
    std::process::exit(outcome.exit_code);
}
