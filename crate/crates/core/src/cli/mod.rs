//! Command-line front end. Each subcommand composes library operations and
//! writes a CSV table plus a [`RunManifest`].

mod grid;
mod manifest;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{required_repeats, total_variation, trace_distance};
use crate::eigen::{first_excited_singlet, ground_state, thermal_state};
use crate::error::{invalid, Error, Result};
use crate::hamiltonians::{build_model, ModelParams, ModelSpec, ModelVariant};
use crate::noisekit::{
    classical_limit, ensemble_average, thermal_scan, DisorderConfig, DisorderKind, EnsembleResult,
    Observable, DEFAULT_CONVERGENCE_TOL, DEFAULT_PROFILE_SAMPLES, DEFAULT_SCALAR_SAMPLES,
};
use crate::spinspace::{neel_state, DensityOp, StateRef};
use crate::stmeasure::{
    bell_localize, herald_all_singlet, middle_layout, triplet_profile, triplet_profile_bruteforce,
    triplet_profile_with, PairingLayout, ProfileMode,
};

pub use grid::{parse_grid, parse_int_grid};
pub use manifest::{
    default_manifest_path, sha256_file, sibling, OutputRecord, RunManifest, MANIFEST_SCHEMA_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
/// `replay` found outputs that differ from the manifest.
pub const EXIT_MISMATCH: i32 = 4;

/// Largest `N` the `--oracle` cross-check runs at.
pub const ORACLE_MAX_SITES: usize = 10;
const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "stprobe",
    version,
    about = "Spin chains probed by singlet-triplet pair measurements"
)]
pub struct Cli {
    /// Cap on worker threads (overrides STPROBE_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Triplet profile of one state.
    Profile(ProfileArgs),
    /// Profile and quantum distinguishability of the ground state against
    /// the Neel state and the first excited singlet, with repeat counts.
    Distinguish(DistinguishArgs),
    /// Ground-state profiles over a J2 grid of the J1-J2 ring.
    ScanJ2(ScanJ2Args),
    /// All-singlet heralding on the middle layout for several chains.
    Localize(LocalizeArgs),
    /// Thermal profiles and heralded concurrence over a temperature grid.
    NoiseThermal(ThermalArgs),
    /// Ensembles with quasi-static random fields.
    NoiseNuclear(EnsembleArgs),
    /// Ensembles with Gaussian coupling disorder.
    NoiseCouplings(EnsembleArgs),
    /// Re-runs a manifest and compares output digests.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Primary CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to `<out stem>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    /// Model as `name[:parameter]`, e.g. `ring`, `j1j2:0.3`, `he:0.5`, `ha:0.1`.
    #[arg(long, default_value = "ring")]
    pub model: String,
    #[arg(long)]
    pub n: usize,
    /// `standard` or `middle`.
    #[arg(long, default_value = "standard")]
    pub layout: String,
    /// `ground`, `excited-singlet`, `neel` or `mixed`.
    #[arg(long, default_value = "ground")]
    pub state: String,
    /// Inverse temperature; replaces the ground state by the Gibbs state.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Use the roots-of-unity evaluation instead of the coefficient recursion.
    #[arg(long)]
    pub streaming: bool,
    /// Cross-check against the literal sum over outcome strings.
    #[arg(long)]
    pub oracle: bool,
    /// Also write the profile with metadata as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DistinguishArgs {
    #[arg(long, default_value = "ring")]
    pub model: String,
    /// Site counts, e.g. `8:16:2`.
    #[arg(long)]
    pub n: String,
    /// Success targets for the repeat counts.
    #[arg(long, default_value = "0.99,0.9")]
    pub targets: String,
    /// Also tabulate repeat counts over a grid of D1 values.
    #[arg(long)]
    pub inset: Option<PathBuf>,
    #[arg(long, default_value = "0.05:1:0.05")]
    pub inset_d1: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanJ2Args {
    #[arg(long)]
    pub n: String,
    #[arg(long, allow_hyphen_values = true, default_value = "0:0.5:0.05")]
    pub j2: String,
    /// Outcome count to track, as `mK` or `K`, normalized to its J2 = 0 value.
    #[arg(long)]
    pub track: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LocalizeArgs {
    /// Comma-separated models, e.g. `h0,he:0.5,ha:0.1`.
    #[arg(long, default_value = "h0,he:0.5,ha:0.1")]
    pub models: String,
    #[arg(long)]
    pub n: String,
    /// Add the Bell-measurement variant (minimum end-pair concurrence over
    /// outcomes and total probability).
    #[arg(long)]
    pub bell: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ThermalArgs {
    #[arg(long, default_value = "ring")]
    pub model: String,
    #[arg(long)]
    pub n: String,
    /// Temperatures k_B T / J1.
    #[arg(long, allow_hyphen_values = true)]
    pub temps: String,
    #[arg(long, default_value = "profile,localization")]
    pub observables: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EnsembleArgs {
    /// Base model; field disorder defaults to open chains.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: String,
    /// Disorder strengths (Bn or sigma_J).
    #[arg(long, allow_hyphen_values = true)]
    pub strength: String,
    /// Samples per point; defaults to 200 with profiles, 500 otherwise.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_CONVERGENCE_TOL)]
    pub tol: f64,
    /// Defaults to `profile,localization` for fields and `profile,fidelity`
    /// for couplings.
    #[arg(long)]
    pub observables: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Directory receiving the replayed outputs.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Maps library errors onto process exit codes.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Capacity(_)
        | Error::Convergence { .. }
        | Error::SearchExhausted(_)
        | Error::NoFiniteRepeats(_)
        | Error::Numerical(_)
        | Error::Ensemble(_) => EXIT_SOLVER,
        Error::Io(_) | Error::Json(_) => EXIT_FAILURE,
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code. Diagnostics go to standard error.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run(&cli, &args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            if code == EXIT_USAGE {
                eprintln!("{}", Cli::command().render_usage());
            }
            code
        }
    }
}

fn run(cli: &Cli, args: &[String]) -> Result<i32> {
    let threads = cli.threads.or_else(crate::config::thread_cap);
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli, args))
        }
        None => dispatch(cli, args),
    }
}

fn dispatch(cli: &Cli, args: &[String]) -> Result<i32> {
    let start = Instant::now();
    let (output, seed, outputs) = match &cli.command {
        Command::Profile(a) => (&a.output, None, cmd_profile(a)?),
        Command::Distinguish(a) => (&a.output, None, cmd_distinguish(a)?),
        Command::ScanJ2(a) => (&a.output, None, cmd_scan_j2(a)?),
        Command::Localize(a) => (&a.output, None, cmd_localize(a)?),
        Command::NoiseThermal(a) => (&a.output, None, cmd_thermal(a)?),
        Command::NoiseNuclear(a) => (
            &a.output,
            Some(a.seed),
            cmd_ensemble(a, DisorderKind::NuclearFields)?,
        ),
        Command::NoiseCouplings(a) => (
            &a.output,
            Some(a.seed),
            cmd_ensemble(a, DisorderKind::RandomCouplings)?,
        ),
        Command::Replay(a) => return cmd_replay(a),
    };
    let records = outputs
        .iter()
        .map(|p| {
            Ok(OutputRecord {
                path: p.clone(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        command: args
            .iter()
            .find(|a| !a.starts_with('-'))
            .cloned()
            .unwrap_or_default(),
        argv: args.to_vec(),
        params: serde_json::to_value(&cli.command)?,
        master_seed: seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        float_tolerance: 1e-12,
        outputs: records,
    };
    let path = output
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&output.out));
    manifest.save(&path)?;
    Ok(EXIT_OK)
}

/// Parses `name[:parameter]` into a model on `n` sites.
pub fn parse_model(spec: &str, n: usize) -> Result<ModelSpec> {
    let (name, value) = match spec.split_once(':') {
        Some((a, b)) => {
            let v: f64 = b
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad model parameter in {spec:?}")))?;
            (a.trim(), Some(v))
        }
        None => (spec.trim(), None),
    };
    let variant: ModelVariant = name.parse()?;
    let mut params = ModelParams::default();
    match variant {
        ModelVariant::J1J2Ring => params.j2 = value,
        ModelVariant::EndWeakened => params.je = value,
        ModelVariant::Alternating => params.delta = value,
        ModelVariant::Ring | ModelVariant::Open => {
            if value.is_some() {
                return invalid(format!("model {name} takes no parameter"));
            }
        }
    }
    let mut model = build_model(variant, n, &params)?;
    model.label = spec.trim().to_string();
    Ok(model)
}

fn parse_layout(name: &str, n: usize) -> Result<PairingLayout> {
    match name {
        "standard" => PairingLayout::standard(n),
        "middle" => middle_layout(n),
        other => invalid(format!("unknown layout {other:?}")),
    }
}

fn parse_observables(text: &str) -> Result<BTreeSet<Observable>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// 17 significant digits, `.` decimal separator.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Table {
    text: String,
}

impl Table {
    fn new(header: &[String]) -> Self {
        Self {
            text: header.join(",") + "\n",
        }
    }

    fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.text)?;
        Ok(())
    }
}

fn profile_columns(max_m: usize) -> Vec<String> {
    (0..=max_m).map(|m| format!("p_{m}")).collect()
}

fn profile_cells(probs: &[f64], max_m: usize) -> Vec<String> {
    (0..=max_m).map(|m| opt(probs.get(m).copied())).collect()
}

fn cmd_profile(a: &ProfileArgs) -> Result<Vec<PathBuf>> {
    let n = a.n;
    let model = parse_model(&a.model, n)?;
    let layout = parse_layout(&a.layout, n)?;
    let mode = if a.streaming {
        ProfileMode::Streaming
    } else {
        ProfileMode::Recursion
    };
    let holder: DensityOp<f64> = match (a.state.as_str(), a.beta) {
        ("ground", Some(beta)) => thermal_state(&model, beta)?,
        ("ground", None) => DensityOp::pure(ground_state::<f64>(&model)?.vector),
        ("excited-singlet", None) => DensityOp::pure(first_excited_singlet::<f64>(&model)?.vector),
        ("neel", None) => DensityOp::pure(neel_state::<f64>(n)?),
        ("mixed", None) => DensityOp::maximally_mixed(n)?,
        (s, Some(_)) if s != "ground" => {
            return invalid("--beta applies to the ground-state family only")
        }
        (other, _) => return invalid(format!("unknown state {other:?}")),
    };
    let state = StateRef::from(&holder);
    let mut profile = triplet_profile_with(state, &layout, mode)?.with_label(model.label.clone());
    profile.meta.beta = a.beta;
    if a.oracle {
        if n <= ORACLE_MAX_SITES {
            let oracle = triplet_profile_bruteforce(state, &layout)?;
            let dev = profile
                .probs
                .iter()
                .zip(&oracle.probs)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if dev > ORACLE_TOL {
                return Err(Error::Numerical(format!(
                    "profile deviates from the brute-force oracle by {dev:.3e}"
                )));
            }
            log::info!("oracle agreement {dev:.3e}");
        } else {
            log::warn!("--oracle skipped above N = {ORACLE_MAX_SITES}");
        }
    }
    std::fs::write(&a.output.out, profile.to_csv())?;
    let mut outputs = vec![a.output.out.clone()];
    if let Some(j) = &a.json {
        std::fs::write(j, profile.to_json()? + "\n")?;
        outputs.push(j.clone());
    }
    Ok(outputs)
}

fn cmd_distinguish(a: &DistinguishArgs) -> Result<Vec<PathBuf>> {
    let ns = parse_int_grid(&a.n)?;
    let targets = parse_grid(&a.targets)?;
    let mut header: Vec<String> = ["n", "d1_neel", "dq_neel", "d1_excited", "dq_excited"]
        .map(String::from)
        .to_vec();
    header.extend(targets.iter().map(|t| format!("repeats_neel_{t}")));
    let mut table = Table::new(&header);
    for &n in &ns {
        let model = parse_model(&a.model, n)?;
        let layout = PairingLayout::standard(n)?;
        let gs = ground_state::<f64>(&model)?.vector;
        let neel = neel_state::<f64>(n)?;
        let exc = first_excited_singlet::<f64>(&model)?.vector;
        let p0 = triplet_profile(&gs, &layout)?;
        let d1_neel = total_variation(&p0.probs, &triplet_profile(&neel, &layout)?.probs);
        let d1_exc = total_variation(&p0.probs, &triplet_profile(&exc, &layout)?.probs);
        let mut row = vec![
            n.to_string(),
            num(d1_neel),
            num(trace_distance(&gs, &neel)?),
            num(d1_exc),
            num(trace_distance(&gs, &exc)?),
        ];
        for &t in &targets {
            row.push(match required_repeats(d1_neel, t) {
                Ok(r) => r.to_string(),
                Err(Error::NoFiniteRepeats(_)) => "inf".into(),
                Err(e) => return Err(e),
            });
        }
        table.row(&row);
    }
    table.save(&a.output.out)?;
    let mut outputs = vec![a.output.out.clone()];
    if let Some(path) = &a.inset {
        let mut inset = Table::new(&["d1".into(), "target".into(), "repeats".into()]);
        for d1 in parse_grid(&a.inset_d1)? {
            for &t in &targets {
                inset.row(&[num(d1), num(t), required_repeats(d1, t)?.to_string()]);
            }
        }
        inset.save(path)?;
        outputs.push(path.clone());
    }
    Ok(outputs)
}

fn parse_track(text: &str) -> Result<usize> {
    text.trim_start_matches('m')
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad --track value {text:?}")))
}

fn cmd_scan_j2(a: &ScanJ2Args) -> Result<Vec<PathBuf>> {
    let ns = parse_int_grid(&a.n)?;
    let j2s = parse_grid(&a.j2)?;
    let track = a.track.as_deref().map(parse_track).transpose()?;
    let max_m = ns.iter().max().copied().unwrap_or(0) / 2;
    if let Some(k) = track {
        if let Some(&n) = ns.iter().find(|&&n| k > n / 2) {
            return invalid(format!(
                "cannot track m_t = {k} with only {} pairs at N = {n}",
                n / 2
            ));
        }
    }
    let mut header = vec!["n".to_string(), "j2".to_string()];
    header.extend(profile_columns(max_m));
    if let Some(k) = track {
        header.push(format!("p_{k}_normalized"));
    }
    let mut table = Table::new(&header);
    for &n in &ns {
        let layout = PairingLayout::standard(n)?;
        let profile_at = |j2: f64| -> Result<Vec<f64>> {
            let model = parse_model(&format!("j1j2:{j2}"), n)?;
            Ok(triplet_profile(&ground_state::<f64>(&model)?.vector, &layout)?.probs)
        };
        let reference = match track {
            Some(_) => Some(profile_at(0.0)?),
            None => None,
        };
        for &j2 in &j2s {
            let probs = profile_at(j2)?;
            let mut row = vec![n.to_string(), num(j2)];
            row.extend(profile_cells(&probs, max_m));
            if let (Some(k), Some(r)) = (track, &reference) {
                row.push(num(probs[k] / r[k]));
            }
            table.row(&row);
        }
    }
    table.save(&a.output.out)?;
    Ok(vec![a.output.out.clone()])
}

fn column_name(spec: &str) -> String {
    spec.trim().replace(':', "_")
}

fn cmd_localize(a: &LocalizeArgs) -> Result<Vec<PathBuf>> {
    let ns = parse_int_grid(&a.n)?;
    let specs: Vec<&str> = a
        .models
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if specs.is_empty() {
        return invalid("no models given");
    }
    let mut header = vec!["n".to_string()];
    for s in &specs {
        let c = column_name(s);
        header.push(format!("q0_{c}"));
        header.push(format!("concurrence_{c}"));
        if a.bell {
            header.push(format!("bell_min_concurrence_{c}"));
            header.push(format!("bell_total_probability_{c}"));
        }
    }
    let mut table = Table::new(&header);
    for &n in &ns {
        let layout = middle_layout(n)?;
        let mut row = vec![n.to_string()];
        for s in &specs {
            let model = parse_model(s, n)?;
            let gs = ground_state::<f64>(&model)?.vector;
            let h = herald_all_singlet(&gs, &layout)?;
            row.push(num(h.q0));
            row.push(opt(h
                .end_state
                .as_ref()
                .map(crate::analysis::concurrence)
                .transpose()?));
            if a.bell {
                let outcomes = bell_localize(&gs, &layout)?;
                let mut min_c = f64::INFINITY;
                for o in &outcomes {
                    min_c = min_c.min(crate::analysis::concurrence(&o.end_state)?);
                }
                row.push(num(min_c));
                row.push(num(outcomes.iter().map(|o| o.probability).sum()));
            }
        }
        table.row(&row);
    }
    table.save(&a.output.out)?;
    Ok(vec![a.output.out.clone()])
}

fn cmd_thermal(a: &ThermalArgs) -> Result<Vec<PathBuf>> {
    let ns = parse_int_grid(&a.n)?;
    let temps = parse_grid(&a.temps)?;
    if temps.iter().any(|t| *t < 0.0) {
        return invalid("temperatures must be nonnegative");
    }
    let obs = parse_observables(&a.observables)?;
    let max_m = ns.iter().max().copied().unwrap_or(0) / 2;
    let mut header: Vec<String> = [
        "n",
        "kT",
        "beta",
        "q0",
        "concurrence",
        "tv_ground",
        "tv_classical",
    ]
    .map(String::from)
    .to_vec();
    header.extend(profile_columns(max_m));
    let mut table = Table::new(&header);
    for &n in &ns {
        let model = parse_model(&a.model, n)?;
        let betas: Vec<f64> = temps
            .iter()
            .map(|&t| if t == 0.0 { f64::INFINITY } else { 1.0 / t })
            .collect();
        let finite: Vec<f64> = betas
            .iter()
            .map(|b| if b.is_infinite() { 1e300 } else { *b })
            .collect();
        let points = thermal_scan::<f64>(&model, &finite, &obs)?;
        let ground = if obs.contains(&Observable::Profile) {
            Some(
                triplet_profile(
                    &ground_state::<f64>(&model)?.vector,
                    &PairingLayout::standard(n)?,
                )?
                .probs,
            )
        } else {
            None
        };
        let classical = classical_limit(n / 2);
        for ((t, beta), p) in temps.iter().zip(&betas).zip(&points) {
            let probs = p.profile.as_ref().map(|x| x.probs.clone());
            let mut row = vec![
                n.to_string(),
                num(*t),
                num(*beta),
                opt(p.q0),
                opt(p.concurrence),
                opt(probs
                    .as_ref()
                    .zip(ground.as_ref())
                    .map(|(x, g)| total_variation(x, g))),
                opt(probs.as_ref().map(|x| total_variation(x, &classical))),
            ];
            row.extend(profile_cells(probs.as_deref().unwrap_or(&[]), max_m));
            table.row(&row);
        }
    }
    table.save(&a.output.out)?;
    Ok(vec![a.output.out.clone()])
}

fn cmd_ensemble(a: &EnsembleArgs, kind: DisorderKind) -> Result<Vec<PathBuf>> {
    let ns = parse_int_grid(&a.n)?;
    let strengths = parse_grid(&a.strength)?;
    let obs = parse_observables(a.observables.as_deref().unwrap_or(match kind {
        DisorderKind::NuclearFields => "profile,localization",
        DisorderKind::RandomCouplings => "profile,fidelity",
    }))?;
    let model_name = a.model.as_deref().unwrap_or(match kind {
        DisorderKind::NuclearFields => "open",
        DisorderKind::RandomCouplings => "ring",
    });
    let samples = a.samples.unwrap_or(if obs.contains(&Observable::Profile) {
        DEFAULT_PROFILE_SAMPLES
    } else {
        DEFAULT_SCALAR_SAMPLES
    });
    let max_m = ns.iter().max().copied().unwrap_or(0) / 2;
    let mut header: Vec<String> = [
        "n",
        "strength",
        "samples_used",
        "failures",
        "q0",
        "q0_stderr",
        "concurrence",
        "concurrence_stderr",
        "fidelity",
        "fidelity_stderr",
    ]
    .map(String::from)
    .to_vec();
    header.extend(profile_columns(max_m));
    let mut table = Table::new(&header);
    let mut results: Vec<EnsembleResult> = Vec::new();
    for &n in &ns {
        let base = parse_model(model_name, n)?;
        for &s in &strengths {
            let mut cfg = DisorderConfig::new(kind, s, samples, a.seed);
            cfg.convergence_tol = a.tol;
            let r = ensemble_average(&cfg, &base, &obs)?;
            let est = |e: Option<crate::noisekit::Estimate>| {
                (opt(e.map(|x| x.mean)), opt(e.map(|x| x.stderr)))
            };
            let (q, qe) = est(r.mean_q0);
            let (c, ce) = est(r.mean_concurrence);
            let (f, fe) = est(r.mean_fidelity);
            let mut row = vec![
                n.to_string(),
                num(s),
                r.samples_used.to_string(),
                r.failures.to_string(),
                q,
                qe,
                c,
                ce,
                f,
                fe,
            ];
            let probs = r
                .mean_profile
                .as_ref()
                .map(|p| p.probs.clone())
                .unwrap_or_default();
            row.extend(profile_cells(&probs, max_m));
            table.row(&row);
            results.push(r);
        }
    }
    table.save(&a.output.out)?;
    let json = sibling(&a.output.out, "ensemble.json");
    std::fs::write(&json, serde_json::to_string_pretty(&results)? + "\n")?;
    Ok(vec![a.output.out.clone(), json])
}

/// Points every recorded output path of `argv` at `out_dir`.
fn redirect_argv(argv: &[String], out_dir: &Path) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len());
    let mut redirect_next = false;
    for a in argv {
        if redirect_next {
            let name = Path::new(a)
                .file_name()
                .map(|s| s.to_os_string())
                .unwrap_or_default();
            out.push(out_dir.join(name).to_string_lossy().into_owned());
            redirect_next = false;
            continue;
        }
        if let Some((flag, value)) = a.split_once('=') {
            if matches!(flag, "--out" | "--manifest" | "--json" | "--inset") {
                let name = Path::new(value)
                    .file_name()
                    .map(|s| s.to_os_string())
                    .unwrap_or_default();
                out.push(format!("{flag}={}", out_dir.join(name).to_string_lossy()));
                continue;
            }
        }
        redirect_next = matches!(a.as_str(), "--out" | "--manifest" | "--json" | "--inset");
        out.push(a.clone());
    }
    out
}

fn cmd_replay(a: &ReplayArgs) -> Result<i32> {
    let recorded = RunManifest::load(&a.manifest)?;
    if recorded.schema_version != MANIFEST_SCHEMA_VERSION {
        return invalid(format!(
            "unsupported manifest schema {}",
            recorded.schema_version
        ));
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let argv = redirect_argv(&recorded.argv, &a.out_dir);
    let mut full = vec!["stprobe".to_string()];
    full.extend(argv);
    let code = execute(full);
    if code != EXIT_OK {
        return Ok(code);
    }
    let mut all_match = true;
    for rec in &recorded.outputs {
        let name = rec
            .path
            .file_name()
            .map(|s| s.to_os_string())
            .unwrap_or_default();
        let replayed = a.out_dir.join(name);
        let digest = sha256_file(&replayed)?;
        let same = digest == rec.sha256;
        all_match &= same;
        eprintln!(
            "{} {}",
            if same { "match" } else { "MISMATCH" },
            replayed.display()
        );
    }
    Ok(if all_match { EXIT_OK } else { EXIT_MISMATCH })
}
