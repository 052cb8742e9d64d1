use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use membrane_lab::error::Result;
use membrane_lab::experiments::{
    g_ref_table, load_config, run_domination_check, run_gibbs_diagnostics, run_percolation, run_pinned_decay,
    run_sobolev_decay, run_unpinned_decay, write_output, DominationConfig, ExperimentOutput, GibbsDiagnosticsConfig,
    GreenConfig, PercolationConfig, PinnedDecayConfig, SobolevDecayConfig,
};

#[derive(Parser)]
#[command(name = "membrane-lab", version, about = "Experiments on the δ-pinned membrane model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: `out/<experiment>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Unpinned Green function decay.
    Green {
        /// Print the G(0,0) reference table instead.
        #[arg(long)]
        reference: bool,
    },
    /// Covariance decay under pinning on a slab.
    PinnedDecay,
    /// Tail decay of the weighted Sobolev norm.
    SobolevDecay,
    /// Stochastic domination of the pinned-set law.
    Domination,
    /// Empty-box bounds and shell growth.
    Percolation,
    /// Gibbs sampler against exact enumeration.
    GibbsDiagnostics,
}

fn config<T: Serialize + DeserializeOwned + Default>(c: &Common) -> Result<T> {
    let cfg: T = load_config(c.config.as_deref())?;
    let Some(seed) = c.seed else { return Ok(cfg) };
    let mut v = serde_json::to_value(&cfg)?;
    let set = |v: &mut serde_json::Value| {
        if let Some(s) = v.get_mut("seed") {
            *s = seed.into();
        }
    };
    set(&mut v);
    if let Some(g) = v.get_mut("growth") {
        set(g);
    }
    Ok(serde_json::from_value(v)?)
}

fn run(cli: &Cli) -> Result<Option<ExperimentOutput>> {
    let c = &cli.common;
    let out = match &cli.command {
        Command::Green { reference: true } => {
            let cfg: GreenConfig = config(c)?;
            print!("{}", g_ref_table(&cfg.reference_dims, cfg.reference_m_max)?);
            return Ok(None);
        }
        Command::Green { reference: false } => run_unpinned_decay(&config(c)?)?,
        Command::PinnedDecay => run_pinned_decay(&config::<PinnedDecayConfig>(c)?)?.0,
        Command::SobolevDecay => run_sobolev_decay(&config::<SobolevDecayConfig>(c)?)?.0,
        Command::Domination => run_domination_check(&config::<DominationConfig>(c)?)?,
        Command::Percolation => run_percolation(&config::<PercolationConfig>(c)?)?.0,
        Command::GibbsDiagnostics => run_gibbs_diagnostics(&config::<GibbsDiagnosticsConfig>(c)?)?,
    };
    let dir = c
        .out
        .clone()
        .unwrap_or_else(|| Path::new("out").join(&out.summary.experiment));
    for p in write_output(&dir, &out)? {
        eprintln!("wrote {}", p.display());
    }
    for ch in &out.summary.checks {
        let tag = if ch.pass { "pass" } else if ch.hard { "FAIL" } else { "warn" };
        println!("{tag:4} {}: {}", ch.name, ch.detail);
    }
    Ok(Some(out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(Some(out)) if !out.pass() => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
