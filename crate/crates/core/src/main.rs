use clap::Parser;
use gradeq::config::{load_config, Mode};
use gradeq::run::execute;
use std::path::PathBuf;

/// Monotone wide-stencil solver for gradient-degenerate Pucci equations
/// with superlevel-set right-hand sides.
#[derive(Parser)]
#[command(name = "gradeq", version, about, max_term_width = 100)]
struct Cli {
    /// Run mode (solve, oracle-compare, convergence-study, property-check);
    /// overrides the config file's mode when given.
    mode: Option<String>,

    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Resolution override; repeat the flag to form a study ladder.
    #[arg(long = "resolution")]
    resolution: Vec<u32>,
}

fn run(cli: &Cli) -> gradeq::Result<i32> {
    let (mut cfg, echo) = load_config(&cli.config)?;
    if let Some(mode) = &cli.mode {
        cfg.mode = Mode::parse(mode)?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if !cli.resolution.is_empty() {
        cfg.resolutions = cli.resolution.clone();
        cfg.resolution = *cfg.resolutions.last().unwrap();
        if cfg.mode == Mode::ConvergenceStudy && cfg.resolutions.len() < 2 {
            return Err(gradeq::Error::config(
                "convergence-study needs at least two --resolution values",
            ));
        }
    }
    execute(&cfg, &echo)
}

fn main() {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("GRADEQ_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                // Ignore the error from a pool that is already initialized.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("config error: GRADEQ_THREADS must be a positive integer, got {v:?}");
                std::process::exit(2);
            }
        }
    }
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
