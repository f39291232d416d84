//! `gkpforge` command-line driver.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 configuration error,
//! 3 numerical tolerance not met.

mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gkpforge::dispersive::{
    reference_fit, run_dispersive, sweep_noise, Channel, DispersiveRun, SimConfig, FOCK_TAIL_TOL,
    TRACE_TOL,
};
use gkpforge::gkp::{fit_gkp, FitOptions, LogicalAmplitudes};
use gkpforge::io::{
    format_number, read_density_csv, write_amplitudes_csv, write_density_csv,
    write_interpolation_csv, write_json, write_sweep_csv, write_table_csv, write_wigner_csv,
    FitDocument, Metadata,
};
use gkpforge::oscillator::{wigner_window, DensityOperator, MixedState};
use gkpforge::protocol::{disentanglement_entropy, reduce_oscillator, run_ideal, Stage};
use gkpforge::qudit::{build_v_state, Interpolant, VALIDATED_THETA};
use serde_json::json;
use sha2::{Digest, Sha256};

use config::RunConfig;

/// Samples written to `interpolation.csv`.
const INTERPOLATION_SAMPLES: usize = 512;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(gkpforge::Error),
}

impl From<gkpforge::Error> for CliError {
    fn from(e: gkpforge::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(gkpforge::Error::Io(e))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use gkpforge::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Run(e) if e.is_numerical() => 3,
            CliError::Run(
                E::InvalidParameter { .. }
                | E::InvalidFlipCount(_)
                | E::Unsupported(_)
                | E::Format { .. }
                | E::DimensionMismatch { .. },
            ) => 2,
            CliError::Run(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "gkpforge", version, about = "Qudit-to-oscillator GKP state preparation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `[output] directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Noise-free protocol: density.csv, wigner.csv, fit.json, snapshots.csv.
    RunIdeal(Common),
    /// Master-equation simulation: density.csv, wigner.csv, fit.json.
    RunDispersive(Common),
    /// Fidelity to the zero-noise GKP fit while one noise rate varies.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of loss, osc-dephase, qubit-decay, qubit-dephase.
        #[arg(long)]
        channel: Channel,
        /// Rates as multiples of χ_max.
        #[arg(long, value_delimiter = ',', default_value = "0,1e-4,1e-3")]
        rates: Vec<f64>,
    },
    /// Fits a GKP state to a density.csv file.
    FitGkp {
        /// density.csv to fit.
        #[arg(long)]
        input: PathBuf,
        /// Configuration supplying the logical amplitudes.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Amplitudes of |v> and samples of v(y).
    VState(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    limit_threads()?;
    match cli.command {
        Command::RunIdeal(c) => {
            let (cfg, out) = open(&c)?;
            cmd_run_ideal(&cfg, &out)
        }
        Command::RunDispersive(c) => {
            let (cfg, out) = open(&c)?;
            cmd_run_dispersive(&cfg, &out)
        }
        Command::Sweep {
            common,
            channel,
            rates,
        } => {
            let (cfg, out) = open(&common)?;
            cmd_sweep(&cfg, &out, channel, &rates)
        }
        Command::FitGkp { input, config, out } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            let dir = out
                .or_else(|| cfg.as_ref().map(|c| c.output.directory.clone()))
                .unwrap_or_else(|| PathBuf::from("out"));
            std::fs::create_dir_all(&dir)?;
            cmd_fit(&input, cfg.as_ref(), &dir)
        }
        Command::VState(c) => {
            let (cfg, out) = open(&c)?;
            cmd_vstate(&cfg, &out)
        }
    }
}

fn limit_threads() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("GKPFORGE_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("GKPFORGE_THREADS=`{raw}` is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn open(c: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = RunConfig::load(&c.config)?;
    let dir = c.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    std::fs::create_dir_all(&dir)?;
    if !VALIDATED_THETA.contains(&cfg.protocol.theta_v) {
        log::warn!(
            "theta_v = {} lies outside the validated range [{}, {}]; v(y) will carry side lobes",
            cfg.protocol.theta_v,
            VALIDATED_THETA.start(),
            VALIDATED_THETA.end()
        );
    }
    Ok((cfg, dir))
}

fn metadata(cfg: &RunConfig, command: &str) -> Metadata {
    Metadata::new()
        .with("tool", concat!("gkpforge ", env!("CARGO_PKG_VERSION")))
        .with("command", command)
        .with("config_hash", cfg.hash())
        .with("config", cfg.resolved_toml())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_state_files(
    cfg: &RunConfig,
    dir: &Path,
    meta: &Metadata,
    rho: &MixedState,
) -> Result<FitDocument, CliError> {
    let params = cfg.protocol_params()?;
    let fit = fit_gkp(rho, LogicalAmplitudes::from(params.vprep), &FitOptions::default())?;
    if fit.nonconvergence {
        log::warn!("GKP fit stopped without converging ({} iterations)", fit.iterations);
    }
    let doc = FitDocument::from_report(&fit, meta.clone());
    if cfg.wants("csv") {
        let mut w = create(dir, "density.csv")?;
        write_density_csv(&mut w, meta, &rho.to_dense(), cfg.output.density_stride)?;
        w.flush()?;
        let e = cfg.output.wigner_extent;
        let wg = wigner_window(rho, (-e, e), (-e, e)).crop((-e, e), (-e, e), cfg.output.wigner_stride);
        let mut w = create(dir, "wigner.csv")?;
        write_wigner_csv(&mut w, meta, &wg)?;
        w.flush()?;
    }
    if cfg.wants("json") {
        let mut w = create(dir, "fit.json")?;
        write_json(&mut w, &doc)?;
        w.flush()?;
    }
    Ok(doc)
}

fn cmd_run_ideal(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let params = cfg.protocol_params()?;
    let meta = metadata(cfg, "run-ideal");
    let run = run_ideal(&params)?;
    let rho = reduce_oscillator(&run.final_state)?;
    let doc = write_state_files(cfg, dir, &meta, &rho)?;

    if cfg.wants("csv") {
        let mut rows = Vec::new();
        for stage in [Stage::Prepared, Stage::Entangled, Stage::Transformed, Stage::Final] {
            if let Some(j) = run.snapshot(stage) {
                let r = reduce_oscillator(j)?;
                rows.push(vec![
                    stage.label().to_string(),
                    format_number(j.total_norm()),
                    format_number(disentanglement_entropy(j)),
                    format_number(r.purity()),
                ]);
            }
        }
        let mut w = create(dir, "snapshots.csv")?;
        write_table_csv(
            &mut w,
            &meta,
            &["stage", "norm", "entropy_bits", "oscillator_purity"],
            &rows,
        )?;
        w.flush()?;
    }
    println!(
        "delta = {:.4} ({:.2} dB), kappa = {:.4}, fidelity = {:.4}",
        doc.delta, doc.delta_db, doc.kappa, doc.fidelity
    );
    Ok(())
}

fn diagnostics_json(run: &DispersiveRun) -> serde_json::Value {
    let d = &run.diagnostics;
    json!({
        "max_trace_drift": d.max_trace_drift,
        "max_fock_tail": d.max_fock_tail,
        "dt": d.steps_dt,
        "purity": d.purity,
        "segments": run.schedule.segments.len(),
        "tau_i": run.schedule.tau_i,
        "tau_d": run.schedule.tau_d,
    })
}

fn cmd_run_dispersive(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let sim = cfg.sim_config()?;
    let meta = metadata(cfg, "run-dispersive");
    let run = run_dispersive(&sim)?;
    let doc = write_state_files(cfg, dir, &meta, &run.oscillator)?;

    let cutoff_check = if cfg.dispersive.check_cutoff {
        let mut wide: SimConfig = sim.clone();
        wide.fock_cutoff *= 2;
        let other = run_dispersive(&wide)?;
        let overlap = run.oscillator.fidelity(&other.oscillator)?;
        json!({ "cutoff": wide.fock_cutoff, "fidelity_between_cutoffs": overlap })
    } else {
        serde_json::Value::Null
    };
    if cfg.wants("json") {
        let report = json!({
            "metadata": meta,
            "sim_config": sim,
            "tolerances": { "trace": TRACE_TOL, "fock_tail": FOCK_TAIL_TOL },
            "diagnostics": diagnostics_json(&run),
            "cutoff_check": cutoff_check,
        });
        let mut w = create(dir, "run.json")?;
        write_json(&mut w, &report)?;
        w.flush()?;
    }
    println!(
        "delta = {:.4} ({:.2} dB), kappa = {:.4}, fidelity = {:.4}, trace drift = {:.1e}",
        doc.delta, doc.delta_db, doc.kappa, doc.fidelity, run.diagnostics.max_trace_drift
    );
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, dir: &Path, channel: Channel, rates: &[f64]) -> Result<(), CliError> {
    if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(CliError::Config("rates must be non-negative numbers".into()));
    }
    let sim = cfg.sim_config()?;
    let meta = metadata(cfg, "sweep").with("channel", channel);
    let (_, g0) = reference_fit(&sim, &FitOptions::default())?;
    let rows = sweep_noise(&sim, channel, rates, g0.params)?;
    if cfg.wants("csv") {
        let mut w = create(dir, "sweep.csv")?;
        write_sweep_csv(&mut w, &meta, &rows)?;
        w.flush()?;
    }
    if cfg.wants("json") {
        let report = json!({
            "metadata": meta,
            "sim_config": sim,
            "chi_max": sim.chi_max(),
            "g0": FitDocument::from_report(&g0, Metadata::new()),
            "rows": rows,
        });
        let mut w = create(dir, "sweep.json")?;
        write_json(&mut w, &report)?;
        w.flush()?;
    }
    for r in &rows {
        println!("{}\t{:e}\t{:.6}", r.channel, r.rate_ratio, r.fidelity);
    }
    Ok(())
}

fn cmd_fit(input: &Path, cfg: Option<&RunConfig>, dir: &Path) -> Result<(), CliError> {
    let bytes = std::fs::read(input)?;
    let (src_meta, rho) = read_density_csv(BufReader::new(bytes.as_slice()))?;
    let amps = match cfg {
        Some(c) => LogicalAmplitudes::from(c.vprep()?),
        None => LogicalAmplitudes::default(),
    };
    let fit = fit_gkp(&rho, amps, &FitOptions::default())?;
    let mut meta = match cfg {
        Some(c) => metadata(c, "fit-gkp"),
        None => Metadata::new()
            .with("tool", concat!("gkpforge ", env!("CARGO_PKG_VERSION")))
            .with("command", "fit-gkp"),
    };
    meta.insert("source_sha256", hex::encode(Sha256::digest(&bytes)));
    if let Some(h) = src_meta.get("config_hash") {
        meta.insert("source_config_hash", h);
    }
    let doc = FitDocument::from_report(&fit, meta);
    let mut w = create(dir, "fit.json")?;
    write_json(&mut w, &doc)?;
    w.flush()?;
    println!(
        "delta = {:.4} ({:.2} dB), kappa = {:.4}, phi = {:.4}, fidelity = {:.4}",
        doc.delta, doc.delta_db, doc.kappa, doc.phi, doc.fidelity
    );
    Ok(())
}

fn cmd_vstate(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let params = cfg.protocol_params()?;
    let meta = metadata(cfg, "v-state");
    let v = build_v_state(params.dims, params.vprep)?;
    let m = params.dims.dim() as f64;
    let interp = Interpolant::new(&v);
    let samples: Vec<(f64, _)> = (0..INTERPOLATION_SAMPLES)
        .map(|i| {
            let y = -m / 2.0 + m * i as f64 / INTERPOLATION_SAMPLES as f64;
            (y, interp.eval(y))
        })
        .collect();
    let mut w = create(dir, "amplitudes.csv")?;
    write_amplitudes_csv(&mut w, &meta, &v)?;
    w.flush()?;
    let mut w = create(dir, "interpolation.csv")?;
    write_interpolation_csv(&mut w, &meta, &samples)?;
    w.flush()?;
    println!("{} amplitudes, {} interpolation samples", v.amplitudes().len(), samples.len());
    Ok(())
}
