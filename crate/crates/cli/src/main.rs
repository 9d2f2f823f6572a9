//! `mdiqkd`: optimize, scan, visibility curves and count-table analysis.

mod config;
mod error;
mod inputs;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mdiqkd::decoy::{estimate_bounds, ingest_count_table, PairLabel};
use mdiqkd::keyrate::{rate_per_second, secret_key_rate, RateInputs};
use mdiqkd::optimizer::{scan, Optimizer};
use mdiqkd::physics::{visibility_single_photon, visibility_two_photon};
use mdiqkd::Execution;

use config::RunConfig;
use error::{config as config_err, data, Result};
use output::{number, Row};

#[derive(Parser)]
#[command(name = "mdiqkd", version, about = "Asymmetric MDI-QKD key rates and parameter optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; keys not given take the bundled defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// CSV destination (default: stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Finite-key statistics (the default unless the config says otherwise).
    #[arg(long, conflicts_with = "asymptotic")]
    finite: bool,
    #[arg(long)]
    asymptotic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize every configured strategy at a single (L_A, L_B).
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Fill the wall_time_ms column (makes output run-dependent).
        #[arg(long)]
        record_timing: bool,
    },
    /// Optimize every strategy over the configured length grid.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        record_timing: bool,
    },
    /// Single- and two-photon interference visibility against k.
    Visibility {
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        k_min: f64,
        #[arg(long, default_value_t = 100.0)]
        k_max: f64,
        /// Log-spaced grid size.
        #[arg(long, default_value_t = 101)]
        k_points: usize,
    },
    /// Decoy bounds and key rate from a measured count table.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// `label,total_count,error_count` file.
        #[arg(long, value_name = "PATH")]
        table: PathBuf,
        /// TOML file with the twelve source parameters.
        #[arg(long, value_name = "PATH")]
        params: PathBuf,
    },
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.finite {
            cfg.finite_key = true;
        }
        if self.asymptotic {
            cfg.finite_key = false;
        }
        Ok(cfg)
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn optimizer(cfg: &RunConfig) -> Optimizer {
    let execution = if cfg.workers == 1 {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    #[cfg(feature = "parallel")]
    if cfg.workers > 1 {
        // Only the first call can size the global pool; later ones are no-ops.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    Optimizer { execution, ..Optimizer::default() }
}

fn run_grid(common: &Common, record_timing: bool, single: bool) -> Result<()> {
    let cfg = common.load()?;
    let grid = cfg.grid();
    if single && grid.len() != 1 {
        return Err(config_err(format!(
            "optimize needs a single (L_A, L_B), the config spans {} points",
            grid.len()
        )));
    }
    let o = optimizer(&cfg);
    let model = cfg.model(grid[0].0, grid[0].1);
    let points = scan(&model, &grid, &cfg.strategies, &cfg.finite_key_config(), cfg.seed, &o).map_err(config_err)?;
    let mut rows: Vec<Row> = points
        .iter()
        .map(|p| Row {
            length_a: p.length_a,
            length_b: p.length_b,
            strategy: p.strategy,
            result: &p.result,
        })
        .collect();
    if single {
        let block = output::parameter_block(grid[0].0, grid[0].1, &rows);
        if common.out.is_some() {
            print!("{block}");
        } else {
            eprint!("{block}");
        }
    }
    output::write_results(sink(&common.out)?, &mut rows, record_timing, &cfg.hash()).map_err(data)
}

fn visibility(out: &Option<PathBuf>, k_min: f64, k_max: f64, k_points: usize) -> Result<()> {
    if !(k_min > 0.0 && k_max >= k_min && k_max.is_finite() && k_points >= 1) {
        return Err(config_err("need 0 < k_min <= k_max and at least one point"));
    }
    let ks: Vec<f64> = if k_points == 1 {
        vec![k_min]
    } else {
        let (lo, hi) = (k_min.ln(), k_max.ln());
        (0..k_points)
            .map(|i| (lo + (hi - lo) * i as f64 / (k_points - 1) as f64).exp())
            .collect()
    };
    let mut w = csv::Writer::from_writer(sink(out)?);
    let io = |e: csv::Error| data(e);
    w.write_record(["k", "v1", "v2"]).map_err(io)?;
    for k in ks {
        let v1 = visibility_single_photon(k).map_err(config_err)?;
        let v2 = visibility_two_photon(k).map_err(config_err)?;
        w.write_record([number(k), number(v1), number(v2)]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn analyze(common: &Common, table: &Path, params: &Path) -> Result<()> {
    let cfg = common.load()?;
    let records = inputs::read_count_table(table)?;
    let p = inputs::read_params(params)?;
    let stats = ingest_count_table(&records, cfg.n, &p.alice.probabilities(), &p.bob.probabilities()).map_err(data)?;
    let bounds = estimate_bounds(&p.decoys(), &stats, &cfg.finite_key_config()).map_err(data)?;
    let ss = stats.get(PairLabel::Ss);
    let (q_ss, e_ss) = (ss.gain(), if ss.total > 0.0 { ss.errors / ss.total } else { 0.0 });
    let rate = secret_key_rate(&RateInputs {
        s_a: p.alice.s,
        s_b: p.bob.s,
        p_sa: p.alice.p_s,
        p_sb: p.bob.p_s,
        y11: bounds.y11_lower,
        e11: bounds.e11_upper,
        q_ss,
        e_ss,
        f: cfg.f,
    })
    .map_err(data)?;
    let per_second = rate_per_second(rate, cfg.clock_rate).map_err(data)?;
    let note = bounds.diagnostic.map(|d| format!("{d:?}")).unwrap_or_default();
    let report = format!(
        "y11 >= {:.4e}\ne11 <= {:.2}%\nQ_ss = {:.4e}, E_ss = {:.2}%\nR = {:.4e} bit/pulse = {:.4} bit/s\n",
        bounds.y11_lower,
        100.0 * bounds.e11_upper,
        q_ss,
        100.0 * e_ss,
        rate,
        per_second
    );
    if common.out.is_some() {
        print!("{report}");
    } else {
        eprint!("{report}");
    }
    let mut w = csv::Writer::from_writer(sink(&common.out)?);
    let io = |e: csv::Error| data(e);
    w.write_record([
        "y11_lower",
        "e11_upper",
        "q_ss",
        "e_ss",
        "rate_per_pulse",
        "rate_per_second",
        "diagnostic",
        "config_hash",
    ])
    .map_err(io)?;
    w.write_record([
        number(bounds.y11_lower),
        number(bounds.e11_upper),
        number(q_ss),
        number(e_ss),
        number(rate),
        number(per_second),
        note,
        cfg.hash(),
    ])
    .map_err(io)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Optimize { common, record_timing } => run_grid(common, *record_timing, true),
        Command::Scan { common, record_timing } => run_grid(common, *record_timing, false),
        Command::Visibility { out, k_min, k_max, k_points } => visibility(out, *k_min, *k_max, *k_points),
        Command::Analyze { common, table, params } => analyze(common, table, params),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mdiqkd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
