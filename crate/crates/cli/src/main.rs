use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qfilt::analytic::{ansatz_unitary, AnsatzUnitary};
use qfilt::channels::NoiseKind;
use qfilt::sweep::{
    format_matrix, run_optimize, run_sweep, verify_passed, verify_table, write_csv,
    OptimizeConfig, SweepConfig, VerifyTable,
};
use qfilt::Error;

#[derive(Parser)]
#[command(name = "qfilt", version, about = "Quantum error filtration simulator")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "QFILT_THREADS", default_value_t = 0)]
    threads: usize,

    /// Override the optimizer seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a noise sweep and write CSV rows.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize a single operating point and write a JSON report.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare simulated reference encodings with every closed form.
    Verify,
    /// Print the reference encoding matrices.
    Ansatz {
        /// Number of ancillas (1 or 2); all encodings when omitted.
        #[arg(long)]
        n: Option<usize>,
    },
}

enum Failure {
    Config(String),
    Run(String),
    Verify,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Run(_) | Failure::Verify => 1,
        }
    }
}

fn config_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn run_err(e: Error) -> Failure {
    Failure::Run(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| config_err(path, e))
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Run(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Run(e.to_string())),
    }
}

fn sweep(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), Failure> {
    let mut cfg = SweepConfig::from_json(&read(config)?).map_err(|e| config_err(config, e))?;
    if let Some(s) = seed {
        cfg.optimizer.seed = s;
    }
    let rows = run_sweep(&cfg).map_err(run_err)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(run_err)?;
    let target = out.or_else(|| cfg.output.as_ref().map(PathBuf::from));
    emit(&buf, target.as_deref())
}

fn optimize(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), Failure> {
    let mut cfg = OptimizeConfig::from_json(&read(config)?).map_err(|e| config_err(config, e))?;
    if let Some(s) = seed {
        cfg.optimizer.seed = s;
    }
    let report = run_optimize(&cfg).map_err(run_err)?;
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Run(e.to_string()))?;
    text.push('\n');
    let target = out.or_else(|| cfg.output.as_ref().map(PathBuf::from));
    emit(text.as_bytes(), target.as_deref())
}

fn verify() -> Result<(), Failure> {
    let rows = verify_table().map_err(run_err)?;
    print!("{}", VerifyTable(&rows));
    if verify_passed(&rows) {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn ansatz(n: Option<usize>) -> Result<(), Failure> {
    let ns = match n {
        Some(n) => vec![n],
        None => vec![1, 2],
    };
    for n in ns {
        let kinds: &[NoiseKind] = if n == 1 {
            &[NoiseKind::Dephasing]
        } else {
            &[NoiseKind::Dephasing, NoiseKind::Depolarizing]
        };
        for &kind in kinds {
            let variant = AnsatzUnitary::new(n, kind)
                .map_err(|e| Failure::Config(e.to_string()))?
                .variant;
            let u = ansatz_unitary(n, kind).map_err(run_err)?;
            println!("# n = {n}, {variant:?}");
            print!("{}", format_matrix(&u));
            println!();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Sweep { config, out } => sweep(&config, out, cli.seed),
        Command::Optimize { config, out } => optimize(&config, out, cli.seed),
        Command::Verify => verify(),
        Command::Ansatz { n } => ansatz(n),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Run(m) => eprintln!("error: {m}"),
                Failure::Verify => eprintln!("verification failed: residual above tolerance"),
            }
            ExitCode::from(f.code())
        }
    }
}
