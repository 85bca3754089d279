use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thermoform_cli::{run_experiment, Command, ExperimentConfig, Format, RunError};

#[derive(Parser)]
#[command(name = "thermoform", version, about = "Pressure, equilibrium and gap experiments for polynomial interval maps")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Tree pressure series at each base point.
    Pressure(Common),
    /// Sup-average versus pressure verdict.
    Hyperbolicity(Common),
    /// Ulam equilibrium estimate with entropy and Lyapunov exponent.
    Equilibrium(Common),
    /// Periodic gap inequality and horseshoe pipeline.
    PeriodicGap(Common),
    /// Star property and freeness of an inverse-branch system.
    Imfs(Common),
    /// First time an interval covers the domain.
    Exactness(Common),
    /// Hyperbolicity and equilibrium together.
    Theorem1(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "cheb2")]
    map: String,
    #[arg(long, default_value = "const:0", allow_hyphen_values = true)]
    potential: String,
    /// Base points, comma separated or repeated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    base: Vec<f64>,
    #[arg(long, default_value_t = 14)]
    depth: usize,
    #[arg(long, default_value_t = 100_000)]
    grid: usize,
    #[arg(long, default_value_t = 4096)]
    cells: usize,
    #[arg(long, default_value_t = 6)]
    nsup: usize,
    #[arg(long, default_value_t = 1)]
    period: usize,
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    #[arg(long, default_value_t = 8)]
    kmax: usize,
    #[arg(long = "m-max", default_value_t = 8)]
    m_max: usize,
    /// Word time bound for `imfs`.
    #[arg(long = "max-time", default_value_t = 10)]
    max_time: usize,
    /// Branch file: header `lo hi`, then one `m lo hi` line per branch.
    #[arg(long = "imfs-file")]
    imfs_file: Option<PathBuf>,
    /// Interval `lo,hi` for `exactness`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    interval: Option<Vec<f64>>,
    /// Output path, `-` for stdout.
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Omit the metadata block.
    #[arg(long)]
    no_meta: bool,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
    /// Echo the resolved config into the report.
    #[arg(long)]
    dump_config: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("thermoform: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<bool, RunError> {
    let (command, args) = match cli.command {
        Sub::Pressure(a) => (Command::Pressure, a),
        Sub::Hyperbolicity(a) => (Command::Hyperbolicity, a),
        Sub::Equilibrium(a) => (Command::Equilibrium, a),
        Sub::PeriodicGap(a) => (Command::PeriodicGap, a),
        Sub::Imfs(a) => (Command::Imfs, a),
        Sub::Exactness(a) => (Command::Exactness, a),
        Sub::Theorem1(a) => (Command::Theorem1, a),
    };
    let mut config = ExperimentConfig::new(command, &args.map, &args.potential);
    if !args.base.is_empty() {
        config.base_points = args.base;
    }
    config.depth = args.depth;
    config.grid = args.grid;
    config.cells = args.cells;
    config.n_sup = args.nsup;
    config.period = args.period;
    config.rho = args.rho;
    config.k_max = args.kmax;
    config.m_max = args.m_max;
    config.max_time = args.max_time;
    config.imfs_file = args.imfs_file;
    config.interval = match args.interval.as_deref() {
        None => None,
        Some(&[lo, hi]) => Some([lo, hi]),
        Some(_) => return Err(RunError::Parse("--interval expects `lo,hi`".into())),
    };
    config.format = match args.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    };

    if let Some(n) = args.threads {
        if n == 0 {
            return Err(RunError::Parse("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Io(e.to_string()))?;
    }

    let report = run_experiment(&config)?;
    let text = match config.format {
        Format::Csv => report.csv.clone(),
        Format::Json => {
            let meta = (!args.no_meta).then(|| {
                let secs = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs());
                json!({
                    "version": env!("CARGO_PKG_VERSION"),
                    "unix_time": secs,
                    "threads": rayon::current_num_threads(),
                })
            });
            report.to_json(args.dump_config.then_some(&config), meta)
        }
    };
    if args.out == "-" {
        std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| RunError::Io(e.to_string()))?;
    } else {
        std::fs::write(&args.out, text).map_err(|e| RunError::Io(format!("{}: {e}", args.out)))?;
    }
    Ok(report.passed)
}
