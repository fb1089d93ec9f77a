use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tweezer_clock_cli::{experiments, read_config, run_text, validate_text, CliError, Overrides};

#[derive(Parser)]
#[command(name = "tweezer-clock", version, about = "Run tweezer-clock simulation experiments from config files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment and write its artifacts.
    Run(RunArgs),
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the known experiment ids.
    ListExperiments,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress timestamps so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: RunArgs) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    let text = read_config(&args.config)?;
    let o = Overrides { seed: args.seed, out: args.out, deterministic: args.deterministic, threads: args.threads };
    let out = run_text(&text, &o)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Validate { config } => read_config(&config).and_then(|t| validate_text(&t)).and_then(|(_, d)| {
            if d.is_empty() {
                println!("ok");
                Ok(())
            } else {
                Err(CliError::Config(d))
            }
        }),
        Command::ListExperiments => {
            for e in experiments::registry() {
                let scan = e.scan.map_or("-".to_string(), |s| format!("scan {s}"));
                println!("{:<18} {:<22} {}", e.id, scan, e.description);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
