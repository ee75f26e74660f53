use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use implab::C64;
use implab_cli::commands::{cmd_implode, cmd_render, cmd_verify, EXIT_USAGE};
use implab_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "implab", version, about = "Parabolic implosion laboratory for a perturbed family of maps of C^2")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (INI-style).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "IMPLAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the property suite and write CSV reports.
    Verify(Common),
    /// Render the filled Julia set slice and its boundary as PPM.
    Render {
        #[command(flatten)]
        common: Common,
        /// Perturbation parameter as "re im".
        #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true)]
        eps: Option<Vec<f64>>,
    },
    /// Certify the discontinuity of the filled Julia set at eps = 0.
    Implode(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let (common, eps) = match &cli.command {
        Command::Verify(c) | Command::Implode(c) => (c, None),
        Command::Render { common, eps } => (common, eps.as_ref().map(|v| C64::new(v[0], v[1]))),
    };
    if let Some(n) = common.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: invalid thread count {n}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let cfg = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let code = match cli.command {
        Command::Verify(_) => cmd_verify(&cfg, &common.out),
        Command::Render { .. } => cmd_render(&cfg, &common.out, eps),
        Command::Implode(_) => cmd_implode(&cfg, &common.out),
    };
    ExitCode::from(code)
}
