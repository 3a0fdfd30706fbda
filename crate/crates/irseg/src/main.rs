use clap::Parser;
use irseg::cli::{run, Cli};

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("IRSEG_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("IRSEG_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("IRSEG_THREADS must be a positive integer, got `0`".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("irseg: error kind=usage code=2: {msg}");
        std::process::exit(2);
    }
    if let Err(e) = run(&cli) {
        let kind = e.exit_kind();
        eprintln!("irseg: error kind={} code={}: {e}", kind.label(), kind.code());
        std::process::exit(kind.code());
    }
}
