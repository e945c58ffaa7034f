//! Command-line front door: argument parsing, dispatch, report envelopes,
//! and plot-data export.
//!
//! Commands: `orbit`, `scan`, `certify`, `diffract`, `folner`. Every run
//! emits a JSON envelope echoing the effective configuration so published
//! numbers are reproducible from the artifact alone; CSV sidecars are
//! written on request. Exit status: 0 on success, 2 when a certification is
//! refuted, 1 on error.

use crate::averaging::{coefficient_trace, CoefficientTrace, ConvergencePolicy};
use crate::diffraction::{autocorrelation, comb_from_symbols, diffraction_report, Autocorrelation, DiffractionReport, WeightMap};
use crate::error::{Error, Result};
use crate::folner::{folner_defect, shulman_trace, FolnerSchedule, TemperednessReport};
use crate::freq::Frequency;
use crate::observable::CylinderObservable;
use crate::signal::orbit_signal;
use crate::source::PointSource;
use crate::spectrum::{detect_point_spectrum, SpectrumReport, Threshold};
use crate::window::Window;
use crate::wwpoint::{default_core, ww_certify, CertVerdict, CertificationReport, CertifyParams};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const TOOL_NAME: &str = "ww-spectra";

#[derive(Debug, Parser, Serialize)]
#[command(name = TOOL_NAME, version, about = "Averaging laboratory for orbit codings on the integer lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker pool size (overridden by WW_SPECTRA_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the JSON envelope here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write a CSV sidecar with the command's plot data.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Dump orbit symbols, or an observable's signal, over a window.
    Orbit(OrbitArgs),
    /// Sweep for point-spectrum candidates (or trace one frequency).
    Scan(ScanArgs),
    /// Run the full Wiener-Wintner certification.
    Certify(CertifyArgs),
    /// Diffraction of a weighted comb with the consistent-phase cross-check.
    Diffract(DiffractArgs),
    /// Audit a Følner schedule: Shulman ratios and defects.
    Folner(FolnerArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct OrbitArgs {
    /// Source descriptor, e.g. `fibonacci`, `periodic:ab`, `step`.
    #[arg(long)]
    pub system: String,
    /// Window as `lo..hi` (half-open).
    #[arg(long, default_value = "0..64")]
    pub window: String,
    /// Observable descriptor; omit to dump raw symbols.
    #[arg(long)]
    pub obs: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub system: String,
    /// Observable descriptor.
    #[arg(long, default_value = "cyl1:a")]
    pub obs: String,
    /// Scale exponents `lo..hi[:step]`; windows are 2^e.
    #[arg(long, default_value = "12..20")]
    pub scales: String,
    /// Sweep grid size; raised to the next admissible power of two if too small.
    #[arg(long, default_value_t = 1 << 20)]
    pub grid: usize,
    /// Absolute detection threshold; defaults to 0.05 · rms.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Trace this single frequency instead of sweeping.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Force the schedule kind (`one-sided` or `symmetric`).
    #[arg(long)]
    pub schedule: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub system: String,
    /// Observable descriptors; defaults to the occurring-factor core.
    #[arg(long)]
    pub obs: Vec<String>,
    /// Radius of the default core when --obs is not given.
    #[arg(long, default_value_t = 1)]
    pub core_radius: i64,
    #[arg(long, default_value = "12..18")]
    pub scales: String,
    #[arg(long, default_value_t = 1 << 19)]
    pub grid: usize,
    /// Almost-periodicity tolerance.
    #[arg(long, default_value_t = 5e-2)]
    pub eps: f64,
    /// Base offsets sampled as orbit points.
    #[arg(long, default_value = "0,1001", value_delimiter = ',')]
    pub offsets: Vec<i64>,
    #[arg(long)]
    pub schedule: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct DiffractArgs {
    /// Source descriptor; ignored when --comb-csv is given.
    #[arg(long)]
    pub system: Option<String>,
    /// Weights per symbol, e.g. `a=1,b=0`.
    #[arg(long, default_value = "a=1,b=0")]
    pub weights: String,
    /// Read the comb from a CSV of `position,re,im` rows instead.
    #[arg(long)]
    pub comb_csv: Option<PathBuf>,
    #[arg(long, default_value = "12..18")]
    pub scales: String,
    #[arg(long, default_value_t = 1 << 19)]
    pub grid: usize,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Autocorrelation lag cutoff S.
    #[arg(long, default_value_t = 4096)]
    pub max_lag: i64,
    /// Write η(s) rows `lag,re,im` here.
    #[arg(long)]
    pub eta_csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FolnerArgs {
    /// `symmetric`, `one-sided`, or `squares` (the diverging control family).
    #[arg(long, default_value = "symmetric")]
    pub kind: String,
    /// Audit scales 1..=nmax.
    #[arg(long, default_value_t = 20)]
    pub nmax: usize,
    /// Shifts t for the defect columns.
    #[arg(long, default_value = "1", value_delimiter = ',')]
    pub probe_shifts: Vec<i64>,
}

/// Everything a run produces; IO-free so determinism is testable.
#[derive(Debug)]
pub struct RunOutputs {
    pub envelope: Envelope,
    pub exit_code: u8,
    /// (path, contents) sidecars to write.
    pub sidecars: Vec<(PathBuf, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective configuration echo (after grid raising etc.).
    pub config: serde_json::Value,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Orbit(OrbitDump),
    Spectrum(SpectrumReport),
    Trace(CoefficientTrace),
    Certification(CertificationReport),
    Diffraction(DiffractionReport),
    Folner(FolnerPayload),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitDump {
    pub source: String,
    pub lo: i64,
    pub hi: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbols: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<Vec<(i64, f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FolnerPayload {
    pub kind: String,
    pub report: TemperednessReport,
    pub probe_shifts: Vec<i64>,
    /// defects[i][j] = defect at scale i+1 for probe_shifts[j].
    pub defects: Vec<Vec<f64>>,
    pub sizes: Vec<i64>,
}

fn now_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Parse `lo..hi[:step]` scale exponents into powers of two.
fn parse_scales(text: &str) -> Result<Vec<i64>> {
    let bad = || Error::InvalidInput(format!("bad scale range `{text}`; expected LO..HI[:STEP]"));
    let (range, step) = match text.split_once(':') {
        Some((r, s)) => (r, s.parse::<u32>().map_err(|_| bad())?),
        None => (text, 2),
    };
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    let lo: u32 = lo.parse().map_err(|_| bad())?;
    let hi: u32 = hi.parse().map_err(|_| bad())?;
    if lo > hi || hi > 30 || step == 0 {
        return Err(bad());
    }
    Ok((lo..=hi).step_by(step as usize).map(|e| 1i64 << e).collect())
}

fn parse_window(text: &str) -> Result<Window> {
    let bad = || Error::InvalidInput(format!("bad window `{text}`; expected LO..HI"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    Window::new(lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?)
}

fn schedule_for(source: &PointSource, scales: &[i64], forced: Option<&str>) -> Result<FolnerSchedule> {
    let symmetric = match forced {
        Some("symmetric") => true,
        Some("one-sided") => false,
        Some(other) => {
            return Err(Error::InvalidInput(format!(
                "unknown schedule kind `{other}` (expected `symmetric` or `one-sided`)"
            )))
        }
        None => source.is_two_sided(),
    };
    if symmetric {
        FolnerSchedule::symmetric(scales)
    } else {
        FolnerSchedule::one_sided(scales)
    }
}

fn effective_grid(requested: usize, schedule: &FolnerSchedule) -> usize {
    let need = (schedule.largest().len() as usize).next_power_of_two();
    requested.next_power_of_two().max(need)
}

/// Run a parsed command. Pure apart from reading source/comb files.
pub fn run(cli: &Cli) -> Result<RunOutputs> {
    let started = now_ms();
    let mut sidecars: Vec<(PathBuf, String)> = Vec::new();
    let mut exit_code = 0u8;
    let mut config = serde_json::to_value(&cli.command)?;

    let payload = match &cli.command {
        Command::Orbit(args) => {
            let source = PointSource::from_descriptor(&args.system)?;
            let window = parse_window(&args.window)?;
            let dump = match &args.obs {
                None => {
                    let symbols = source.symbols(window)?;
                    OrbitDump {
                        source: source.label().to_string(),
                        lo: window.lo,
                        hi: window.hi,
                        symbols: Some(String::from_utf8_lossy(&symbols).into_owned()),
                        signal: None,
                    }
                }
                Some(obs) => {
                    let obs = CylinderObservable::from_descriptor(obs)?;
                    let signal = orbit_signal(&obs, &source, window)?;
                    OrbitDump {
                        source: source.label().to_string(),
                        lo: window.lo,
                        hi: window.hi,
                        symbols: None,
                        signal: Some(
                            window
                                .iter()
                                .zip(&signal.values)
                                .map(|(t, z)| (t, z.re, z.im))
                                .collect(),
                        ),
                    }
                }
            };
            Payload::Orbit(dump)
        }
        Command::Scan(args) => {
            let source = PointSource::from_descriptor(&args.system)?;
            let obs = CylinderObservable::from_descriptor(&args.obs)?;
            let scales = parse_scales(&args.scales)?;
            let schedule = schedule_for(&source, &scales, args.schedule.as_deref())?;
            match args.theta {
                Some(theta) => {
                    let trace = coefficient_trace(
                        &source,
                        &obs,
                        &schedule,
                        Frequency::new(theta),
                        ConvergencePolicy::default(),
                    )?;
                    Payload::Trace(trace)
                }
                None => {
                    let grid = effective_grid(args.grid, &schedule);
                    config["grid"] = serde_json::json!(grid);
                    let threshold = args
                        .threshold
                        .map(Threshold::Absolute)
                        .unwrap_or_default();
                    let report =
                        detect_point_spectrum(&source, &obs, &schedule, grid, threshold)?;
                    Payload::Spectrum(report)
                }
            }
        }
        Command::Certify(args) => {
            let source = PointSource::from_descriptor(&args.system)?;
            let scales = parse_scales(&args.scales)?;
            let schedule = schedule_for(&source, &scales, args.schedule.as_deref())?;
            let core = if args.obs.is_empty() {
                default_core(&source, args.core_radius)?
            } else {
                let mut core = Vec::with_capacity(args.obs.len());
                for descriptor in &args.obs {
                    core.push(CylinderObservable::from_descriptor(descriptor)?);
                }
                core
            };
            let mut params = CertifyParams::for_schedule(&schedule);
            params.eps_ap = args.eps;
            params.offsets = args.offsets.clone();
            params.grid = effective_grid(args.grid, &schedule);
            config["grid"] = serde_json::json!(params.grid);
            let report = ww_certify(&source, &core, &schedule, &params)?;
            if report.verdict == CertVerdict::Refuted {
                exit_code = 2;
            }
            Payload::Certification(report)
        }
        Command::Diffract(args) => {
            let scales = parse_scales(&args.scales)?;
            let (report, eta) = match &args.comb_csv {
                Some(path) => {
                    let comb = crate::diffraction::WeightedComb::from_csv(
                        &std::fs::read_to_string(path)?,
                    )?;
                    let scales: Vec<i64> = scales
                        .iter()
                        .copied()
                        .filter(|&s| s <= comb.window.len())
                        .collect();
                    if scales.is_empty() {
                        return Err(Error::InvalidInput(
                            "comb smaller than every requested scale".into(),
                        ));
                    }
                    let windows =
                        scales.iter().map(|&s| Window { lo: comb.window.lo, hi: comb.window.lo + s });
                    let schedule = FolnerSchedule::custom(windows.collect())?;
                    let grid = effective_grid(args.grid, &schedule);
                    config["grid"] = serde_json::json!(grid);
                    let provider = comb_provider(&comb);
                    let threshold =
                        args.threshold.map(Threshold::Absolute).unwrap_or_default();
                    let spectrum = crate::spectrum::detect_for(
                        &provider,
                        &schedule,
                        grid,
                        threshold,
                        Default::default(),
                    )?;
                    let max_lag = args.max_lag.min(comb.window.len() / 4);
                    let report = crate::diffraction::diffraction_from_spectrum(
                        &spectrum, &comb, max_lag,
                    )?;
                    let eta = autocorrelation(&comb, max_lag)?;
                    (report, eta)
                }
                None => {
                    let system = args.system.as_deref().ok_or_else(|| {
                        Error::InvalidInput("diffract needs --system or --comb-csv".into())
                    })?;
                    let source = PointSource::from_descriptor(system)?;
                    let weights = WeightMap::from_descriptor(&args.weights)?;
                    let schedule = schedule_for(&source, &scales, None)?;
                    let grid = effective_grid(args.grid, &schedule);
                    config["grid"] = serde_json::json!(grid);
                    let threshold =
                        args.threshold.map(Threshold::Absolute).unwrap_or_default();
                    let report = diffraction_report(
                        &source, &weights, &schedule, grid, threshold, args.max_lag,
                    )?;
                    let top = schedule.largest();
                    let comb = comb_from_symbols(&source.symbols(top)?, &weights, top)?;
                    let eta = autocorrelation(&comb, args.max_lag)?;
                    (report, eta)
                }
            };
            if let Some(path) = &args.eta_csv {
                sidecars.push((path.clone(), autocorr_csv(&eta)));
            }
            Payload::Diffraction(report)
        }
        Command::Folner(args) => {
            let schedule = match args.kind.as_str() {
                "symmetric" => {
                    FolnerSchedule::symmetric(&(1..=args.nmax as i64).collect::<Vec<_>>())?
                }
                "one-sided" => {
                    FolnerSchedule::one_sided(&(1..=args.nmax as i64).collect::<Vec<_>>())?
                }
                "squares" => FolnerSchedule::custom(
                    (1..=args.nmax as i64)
                        .map(|n| Window { lo: n * n, hi: n * n + n })
                        .collect(),
                )?,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown --kind `{other}` (symmetric, one-sided, squares)"
                    )))
                }
            };
            let report = shulman_trace(&schedule, args.nmax)?;
            let mut defects = Vec::with_capacity(args.nmax);
            let mut sizes = Vec::with_capacity(args.nmax);
            for n in 0..args.nmax {
                sizes.push(schedule.window(n)?.len());
                defects.push(
                    args.probe_shifts
                        .iter()
                        .map(|&t| folner_defect(&schedule, t, n))
                        .collect::<Result<Vec<f64>>>()?,
                );
            }
            Payload::Folner(FolnerPayload {
                kind: args.kind.clone(),
                report,
                probe_shifts: args.probe_shifts.clone(),
                defects,
                sizes,
            })
        }
    };

    if let Some(path) = &cli.csv {
        sidecars.push((path.clone(), export_plot_data(&payload)?));
    }

    let envelope = Envelope {
        tool: TOOL_NAME.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command_name(&cli.command).to_string(),
        config,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        payload,
    };
    Ok(RunOutputs { envelope, exit_code, sidecars })
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Orbit(_) => "orbit",
        Command::Scan(_) => "scan",
        Command::Certify(_) => "certify",
        Command::Diffract(_) => "diffract",
        Command::Folner(_) => "folner",
    }
}

fn comb_provider(comb: &crate::diffraction::WeightedComb) -> CombProvider {
    CombProvider { comb: comb.clone() }
}

/// A fixed comb serving sub-windows of its support.
pub struct CombProvider {
    comb: crate::diffraction::WeightedComb,
}

impl crate::signal::SignalProvider for CombProvider {
    fn sample(&self, window: Window) -> Result<crate::signal::OrbitSignal> {
        let signal = self.comb.as_signal();
        let slice = signal.slice(window)?.to_vec();
        Ok(crate::signal::OrbitSignal::new(window, slice, "comb", "weights"))
    }

    fn label(&self) -> String {
        "comb/weights".to_string()
    }

    fn sup_norm(&self) -> f64 {
        self.comb.norm_u0
    }
}

/// CSV for whatever plot data the payload carries.
pub fn export_plot_data(payload: &Payload) -> Result<String> {
    match payload {
        Payload::Spectrum(report) => Ok(spectrum_csv(report)),
        Payload::Trace(trace) => Ok(trace_csv(trace)),
        Payload::Diffraction(report) => Ok(diffraction_csv(report)),
        Payload::Folner(folner) => Ok(folner_csv(folner)),
        Payload::Orbit(_) | Payload::Certification(_) => Err(Error::InvalidInput(
            "this payload has no plot data; use the JSON envelope".into(),
        )),
    }
}

pub fn spectrum_csv(report: &SpectrumReport) -> String {
    let mut rows: Vec<&crate::spectrum::EigenvalueCandidate> = report.candidates.iter().collect();
    rows.sort_by(|a, b| a.theta.value().total_cmp(&b.theta.value()));
    let mut out = String::from("theta,amplitude,phase\n");
    for c in rows {
        out.push_str(&format!("{},{},{}\n", c.theta, c.amplitude, c.phase));
    }
    out
}

pub fn trace_csv(trace: &CoefficientTrace) -> String {
    let mut out = String::from("scale,re,im,abs,delta\n");
    for e in &trace.estimates {
        out.push_str(&format!("{},{},{},{},{}\n", e.scale, e.re, e.im, e.abs, e.delta));
    }
    out
}

pub fn autocorr_csv(eta: &Autocorrelation) -> String {
    let mut out = String::from("lag,re,im\n");
    for s in -eta.max_lag..=eta.max_lag {
        let z = eta.value(s);
        out.push_str(&format!("{},{},{}\n", s, z.re, z.im));
    }
    out
}

pub fn diffraction_csv(report: &DiffractionReport) -> String {
    let mut rows: Vec<&crate::diffraction::DiffractionPeak> = report.peaks.iter().collect();
    rows.sort_by(|a, b| a.theta.value().total_cmp(&b.theta.value()));
    let mut out = String::from("theta,intensity,phase,consistent_phase_residual\n");
    for p in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.theta, p.intensity, p.phase, p.consistent_phase_residual
        ));
    }
    out
}

pub fn folner_csv(payload: &FolnerPayload) -> String {
    let mut header = String::from("n,size,rho");
    for t in &payload.probe_shifts {
        header.push_str(&format!(",defect_{t}"));
    }
    header.push('\n');
    let mut out = header;
    for (i, size) in payload.sizes.iter().enumerate() {
        let n = i + 1;
        let rho = payload
            .report
            .ratios
            .iter()
            .find(|r| r.n == n)
            .map(|r| r.rho.to_string())
            .unwrap_or_default();
        out.push_str(&format!("{n},{size},{rho}"));
        for d in &payload.defects[i] {
            out.push_str(&format!(",{d}"));
        }
        out.push('\n');
    }
    out
}

/// Thread-pool size: environment beats the flag, which beats auto.
pub fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    if let Ok(value) = std::env::var("WW_SPECTRA_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n > 0 {
                return Some(n);
            }
        }
    }
    flag
}

/// Parse-free entry for main: configures the global pool, runs, writes.
pub fn execute(cli: &Cli) -> Result<u8> {
    if let Some(n) = resolve_threads(cli.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let outputs = run(cli)?;
    let json = serde_json::to_string_pretty(&outputs.envelope)?;
    match &cli.out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    for (path, contents) in &outputs.sidecars {
        std::fs::write(path, contents)?;
    }
    Ok(outputs.exit_code)
}
