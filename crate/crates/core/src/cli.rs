//! Command-line front end: parses a JSON experiment config, dispatches to the
//! library modules, and writes CSV/JSON artifacts with provenance headers.
//!
//! Exit codes: 0 on success (including checks that *report* a failure),
//! 2 on validation errors (bad flags, malformed config, schema violations),
//! 3 on numerical failure (a diagnostic file is written next to the outputs).

use crate::evans::{self, ContourSpec, ProfilePath};
use crate::limits::{self, ConeDomain, FullGasParams, GasBoundaryData, PressureLaw};
use crate::ode::OdeOptions;
use crate::steady::{self, SteadyProfile};
use crate::system::{self, CheckStatus, CheckVerdict, SystemConfig, SystemDef, VecF};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

const VERSION: &str = env!("CARGO_PKG_VERSION");

// ---------------------------------------------------------------------------
// argument parsing
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "steadytube",
    version,
    about = "Steady profiles, Evans-function stability, and asymptotic limits \
             for hyperbolic-parabolic conservation laws on [0,1]"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural assumption checks on sampled states
    Check(RunArgs),
    /// Solve the steady boundary-value problem (shooting in C₂)
    Solve(RunArgs),
    /// Evaluate D(λ) on a grid of frequencies
    EvansScan(RunArgs),
    /// Stability index μ and winding counts
    Index(RunArgs),
    /// Compare sgn D(0) with sgn det dΦ
    ZsCheck(RunArgs),
    /// Classify the ν → 0 limit of isentropic boundary data
    Classify(RunArgs),
    /// L^p convergence rates toward the inviscid limit over a ν sweep
    SweepNu(RunArgs),
    /// Full-gas large-viscosity sweep at fixed ν/α
    LargeVisc(RunArgs),
    /// Multi-start Brouwer-degree probe over a box of shooting constants
    Degree(RunArgs),
    /// Zero-frequency Evans values along a rescaled standing-shock family
    StandingShock(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir; default ".")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker-thread cap for sweeps and scans
    #[arg(long)]
    jobs: Option<usize>,
    /// RNG seed (overrides the config's seed)
    #[arg(long)]
    seed: Option<u64>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Solve(_) => "solve",
            Command::EvansScan(_) => "evans-scan",
            Command::Index(_) => "index",
            Command::ZsCheck(_) => "zs-check",
            Command::Classify(_) => "classify",
            Command::SweepNu(_) => "sweep-nu",
            Command::LargeVisc(_) => "large-visc",
            Command::Degree(_) => "degree",
            Command::StandingShock(_) => "standing-shock",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Check(a)
            | Command::Solve(a)
            | Command::EvansScan(a)
            | Command::Index(a)
            | Command::ZsCheck(a)
            | Command::Classify(a)
            | Command::SweepNu(a)
            | Command::LargeVisc(a)
            | Command::Degree(a)
            | Command::StandingShock(a) => a,
        }
    }
}

// ---------------------------------------------------------------------------
// experiment configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Tolerances {
    rtol: f64,
    atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

impl Tolerances {
    fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            ..OdeOptions::default()
        }
    }
}

/// One experiment: command name, optional system block, solver tolerances,
/// command-specific parameters, output directory, seed. Unknown keys are
/// rejected everywhere in the schema.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    command: String,
    #[serde(default)]
    system: Option<SystemConfig>,
    #[serde(default)]
    tolerances: Tolerances,
    params: Value,
    #[serde(default)]
    out_dir: Option<String>,
    #[serde(default)]
    seed: u64,
}

fn parse_params<T: serde::de::DeserializeOwned>(params: &Value) -> Result<T> {
    serde_json::from_value(params.clone()).map_err(|e| Error::Config(format!("params: {e}")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckParams {
    states: Vec<Vec<f64>>,
    #[serde(default = "default_check_tol")]
    tol: f64,
}

fn default_check_tol() -> f64 {
    1e-8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveParams {
    u0: Vec<f64>,
    u1_ii: Vec<f64>,
    #[serde(default)]
    c2_guess: Option<Vec<f64>>,
    #[serde(default = "default_samples")]
    n_samples: usize,
}

fn default_samples() -> usize {
    401
}

/// Background for a linearized computation: either a solved steady profile
/// (boundary data + shooting guess) or an explicitly constant state.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackgroundParams {
    #[serde(default)]
    u0: Option<Vec<f64>>,
    #[serde(default)]
    u1_ii: Option<Vec<f64>>,
    #[serde(default)]
    c2_guess: Option<Vec<f64>>,
    #[serde(default)]
    constant_state: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvansScanParams {
    #[serde(flatten)]
    background: BackgroundParams,
    /// Frequencies [Re λ, Im λ].
    lambda_grid: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexParams {
    #[serde(flatten)]
    background: BackgroundParams,
    #[serde(default)]
    lambda_max: Option<f64>,
    /// Optional half-disk radius for an additional winding count.
    #[serde(default)]
    winding_radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZsCheckParams {
    u0: Vec<f64>,
    u1_ii: Vec<f64>,
    #[serde(default)]
    c2_guess: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GasDataParams {
    rho0: f64,
    u0: f64,
    u1: f64,
    gamma: f64,
    a: f64,
    nu: f64,
}

impl GasDataParams {
    fn data(&self) -> Result<GasBoundaryData> {
        GasBoundaryData::new(
            self.rho0,
            self.u0,
            self.u1,
            PressureLaw::new(self.a, self.gamma)?,
            self.nu,
        )
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepNuParams {
    rho0: f64,
    u0: f64,
    u1: f64,
    gamma: f64,
    a: f64,
    nu_list: Vec<f64>,
    #[serde(default = "default_p_list")]
    p_list: Vec<f64>,
}

fn default_p_list() -> Vec<f64> {
    vec![1.0, 2.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LargeViscParams {
    u0: f64,
    e0: f64,
    u1: f64,
    e1: f64,
    alpha: f64,
    nu: f64,
    gamma: f64,
    alpha_list: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DegreeParams {
    u0: Vec<f64>,
    u1_ii: Vec<f64>,
    c2_lo: Vec<f64>,
    c2_hi: Vec<f64>,
    #[serde(default = "default_starts")]
    n_starts: usize,
}

fn default_starts() -> usize {
    64
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StandingShockParams {
    gamma: f64,
    a: f64,
    m: f64,
    rho_minus: f64,
    /// Right rest density; computed as the conjugate of `rho_minus` when
    /// omitted.
    #[serde(default)]
    rho_plus: Option<f64>,
    epsilons: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct ConeParams {
    beta0: f64,
    beta1: f64,
    u0_ii: Vec<f64>,
    u1_ii: Vec<f64>,
    domain: ConeDomain,
}

// ---------------------------------------------------------------------------
// provenance and artifact writing
// ---------------------------------------------------------------------------

struct Provenance {
    version: String,
    config_sha256: String,
    rtol: f64,
    atol: f64,
    seed: u64,
}

impl Provenance {
    fn json(&self) -> Value {
        json!({
            "tool": "steadytube",
            "version": self.version,
            "config_sha256": self.config_sha256,
            "rtol": self.rtol,
            "atol": self.atol,
            "seed": self.seed,
        })
    }

    fn csv_header(&self) -> String {
        format!(
            "# steadytube v{}\n# config_sha256 = {}\n# rtol = {:e}, atol = {:e}, seed = {}\n",
            self.version, self.config_sha256, self.rtol, self.atol, self.seed
        )
    }
}

fn write_json(path: &Path, prov: &Provenance, result: Value) -> Result<()> {
    let doc = json!({ "provenance": prov.json(), "result": result });
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &doc)?;
    writeln!(f)?;
    Ok(())
}

fn write_csv(path: &Path, prov: &Provenance, body: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(prov.csv_header().as_bytes())?;
    f.write_all(body.as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

/// Run the CLI on explicit arguments; returns the process exit code
/// (0 success, 2 validation error, 3 numerical failure). Never panics on bad
/// input.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let args = cli.command.args();

    if let Some(jobs) = args.jobs {
        // best effort: the global pool may already exist (e.g. under tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }

    let raw = match std::fs::read(&args.config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return 2;
        }
    };
    let cfg: ExperimentConfig = match serde_json::from_slice(&raw) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: malformed config: {e}");
            return 2;
        }
    };
    if cfg.command != cli.command.name() {
        eprintln!(
            "error: config is for command '{}' but '{}' was invoked",
            cfg.command,
            cli.command.name()
        );
        return 2;
    }

    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return 2;
    }

    let prov = Provenance {
        version: VERSION.to_string(),
        config_sha256: hex_digest(&raw),
        rtol: cfg.tolerances.rtol,
        atol: cfg.tolerances.atol,
        seed: args.seed.unwrap_or(cfg.seed),
    };

    match dispatch(cli.command.name(), &cfg, &prov, &out_dir) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            if code == 3 {
                let diag = json!({
                    "provenance": prov.json(),
                    "error": e.to_string(),
                    "command": cfg.command,
                });
                let path = out_dir.join("diagnostic.json");
                if let Ok(mut f) = std::fs::File::create(&path) {
                    let _ = serde_json::to_writer_pretty(&mut f, &diag);
                    let _ = writeln!(f);
                    eprintln!("diagnostic written to {}", path.display());
                }
            }
            code
        }
    }
}

fn hex_digest(raw: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(raw);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Unsupported(_) | Error::Json(_) => 2,
        _ => 3,
    }
}

fn require_system(cfg: &ExperimentConfig) -> Result<SystemDef> {
    cfg.system
        .as_ref()
        .ok_or_else(|| Error::Config("this command requires a 'system' block".into()))?
        .build()
}

fn dispatch(name: &str, cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    match name {
        "check" => cmd_check(cfg, prov, out),
        "solve" => cmd_solve(cfg, prov, out),
        "evans-scan" => cmd_evans_scan(cfg, prov, out),
        "index" => cmd_index(cfg, prov, out),
        "zs-check" => cmd_zs_check(cfg, prov, out),
        "classify" => cmd_classify(cfg, prov, out),
        "sweep-nu" => cmd_sweep_nu(cfg, prov, out),
        "large-visc" => cmd_large_visc(cfg, prov, out),
        "degree" => cmd_degree(cfg, prov, out),
        "standing-shock" => cmd_standing_shock(cfg, prov, out),
        other => Err(Error::Config(format!("unknown command '{other}'"))),
    }
}

fn vecf(v: &[f64]) -> VecF {
    VecF::from_column_slice(v)
}

fn verdict_json(v: &CheckVerdict) -> Value {
    let status = match v.status {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::NotApplicable => "not_applicable",
    };
    let witness = v.witness.as_ref().map(|w| {
        json!({
            "state": w.state.as_slice(),
            "eigenvalue": [w.eigenvalue.re, w.eigenvalue.im],
            "detail": w.detail,
        })
    });
    json!({ "status": status, "margin": v.margin, "witness": witness })
}

fn cmd_check(cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    let sys = require_system(cfg)?;
    let p: CheckParams = parse_params(&cfg.params)?;
    if p.states.is_empty() {
        return Err(Error::Config("check needs at least one sample state".into()));
    }
    let states: Vec<VecF> = p.states.iter().map(|s| vecf(s)).collect();
    let report = system::check_assumptions(&sys, &states, p.tol)?;
    let result = json!({
        "system": sys.name,
        "all_pass": report.all_pass(),
        "h1": verdict_json(&report.h1),
        "h2": verdict_json(&report.h2),
        "h3": verdict_json(&report.h3),
        "speccond": verdict_json(&report.speccond),
    });
    let path = out.join("check.json");
    write_json(&path, prov, result)?;
    println!(
        "check: {} — {}",
        sys.name,
        if report.all_pass() { "PASS" } else { "FAIL" }
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn solve_profile(
    sys: &SystemDef,
    u0: &[f64],
    u1_ii: &[f64],
    c2_guess: Option<&Vec<f64>>,
    opts: &OdeOptions,
) -> Result<SteadyProfile> {
    let dim = sys.n - sys.r;
    if u0.len() != sys.n || u1_ii.len() != dim {
        return Err(Error::Config(format!(
            "boundary data dimensions must be n = {} and n − r = {dim}",
            sys.n
        )));
    }
    let guess = match c2_guess {
        Some(g) if g.len() == dim => vecf(g),
        Some(_) => return Err(Error::Config("c2_guess has wrong dimension".into())),
        None => VecF::zeros(dim),
    };
    steady::solve_steady(sys, &vecf(u0), &vecf(u1_ii), &guess, opts)
}

fn profile_summary(profile: &SteadyProfile) -> Value {
    json!({
        "c2": profile.constants.c2.as_slice(),
        "c1": profile.constants.c1.as_slice(),
        "residual": profile.residual,
        "det_dphi": profile.det_dphi,
        "nondegenerate": profile.nondegenerate,
    })
}

fn cmd_solve(cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    let sys = require_system(cfg)?;
    let p: SolveParams = parse_params(&cfg.params)?;
    if p.n_samples < 2 {
        return Err(Error::Config("n_samples must be at least 2".into()));
    }
    let opts = cfg.tolerances.ode_options();
    let profile = solve_profile(&sys, &p.u0, &p.u1_ii, p.c2_guess.as_ref(), &opts)?;

    let mut body = Vec::new();
    steady::write_profile_csv(&sys, &profile, p.n_samples, &mut body)?;
    let csv_path = out.join("profile.csv");
    write_csv(&csv_path, prov, std::str::from_utf8(&body).unwrap_or(""))?;
    let json_path = out.join("solve.json");
    write_json(&json_path, prov, profile_summary(&profile))?;
    println!(
        "solve: residual {:.3e}, det dPhi {:.6e}",
        profile.residual, profile.det_dphi
    );
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

/// Solve the background steady profile when boundary data is given;
/// `None` for an explicitly constant state.
fn background_profile(
    sys: &SystemDef,
    p: &BackgroundParams,
    opts: &OdeOptions,
) -> Result<Option<SteadyProfile>> {
    match (&p.constant_state, &p.u0, &p.u1_ii) {
        (Some(state), None, None) => {
            if state.len() != sys.n {
                return Err(Error::Config("constant_state has wrong dimension".into()));
            }
            Ok(None)
        }
        (None, Some(u0), Some(u1_ii)) => {
            Ok(Some(solve_profile(sys, u0, u1_ii, p.c2_guess.as_ref(), opts)?))
        }
        _ => Err(Error::Config(
            "give either constant_state or both u0 and u1_ii".into(),
        )),
    }
}

fn background_path<'a>(
    sys: &'a SystemDef,
    p: &BackgroundParams,
    slot: &'a Option<SteadyProfile>,
) -> Result<ProfilePath<'a>> {
    match (slot, &p.constant_state) {
        (Some(profile), _) => Ok(ProfilePath::from_steady(sys, profile)),
        (None, Some(state)) => Ok(ProfilePath::constant(vecf(state))),
        _ => Err(Error::Config("missing background".into())),
    }
}

fn cmd_evans_scan(cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    let sys = require_system(cfg)?;
    let p: EvansScanParams = parse_params(&cfg.params)?;
    if p.lambda_grid.is_empty() {
        return Err(Error::Config("lambda_grid must be nonempty".into()));
    }
    let opts = cfg.tolerances.ode_options();
    let slot = background_profile(&sys, &p.background, &opts)?;
    let path = background_path(&sys, &p.background, &slot)?;

    use rayon::prelude::*;
    let samples: Result<Vec<_>> = p
        .lambda_grid
        .par_iter()
        .map(|&[re, im]| evans::evans_eval(&sys, &path, Complex64::new(re, im)))
        .collect();
    let samples = samples?;

    let mut body = String::from("re_lambda,im_lambda,log_abs_d,phase_d\n");
    for s in &samples {
        body.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e}\n",
            s.lambda.re, s.lambda.im, s.d.log_mag, s.d.phase
        ));
    }
    let csv_path = out.join("evans_scan.csv");
    write_csv(&csv_path, prov, &body)?;
    println!("evans-scan: {} frequencies", samples.len());
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn cmd_index(cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    let sys = require_system(cfg)?;
    let p: IndexParams = parse_params(&cfg.params)?;
    let opts = cfg.tolerances.ode_options();
    let slot = background_profile(&sys, &p.background, &opts)?;
    let path = background_path(&sys, &p.background, &slot)?;

    let verdict = evans::stability_index(&sys, &path, p.lambda_max)?;
    let winding = match p.winding_radius {
        Some(r) => Some(evans::winding_count(
            &sys,
            &path,
            &ContourSpec::HalfDisk { radius: r },
        )?),
        None => None,
    };
    let mut result = serde_json::to_value(&verdict)?;
    if let Value::Object(map) = &mut result {
        map.insert("winding_radius".into(), json!(p.winding_radius));
        map.insert("winding_count".into(), json!(winding));
        if let Some(profile) = &slot {
            map.insert("profile".into(), profile_summary(profile));
        }
    }
    let path_out = out.join("index.json");
    write_json(&path_out, prov, result)?;
    println!(
        "index: mu = {}, sign changes on (0, {:.3}] = {}{}",
        verdict.mu,
        verdict.lambda_max_used,
        verdict.real_axis_sign_changes,
        match winding {
            Some(w) => format!(", winding = {w}"),
            None => String::new(),
        }
    );
    println!("wrote {}", path_out.display());
    Ok(())
}

fn cmd_zs_check(cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    let sys = require_system(cfg)?;
    let p: ZsCheckParams = parse_params(&cfg.params)?;
    let opts = cfg.tolerances.ode_options();
    let profile = solve_profile(&sys, &p.u0, &p.u1_ii, p.c2_guess.as_ref(), &opts)?;
    let report = evans::evans_at_zero(&sys, &profile)?;
    let mut result = serde_json::to_value(&report)?;
    if let Value::Object(map) = &mut result {
        map.insert("profile".into(), profile_summary(&profile));
    }
    let path_out = out.join("zs_check.json");
    write_json(&path_out, prov, result)?;
    println!(
        "zs-check: sgn D(0) = {}, sgn det dPhi = {}, agree = {:?}",
        report.sign_d0, report.sign_det_dphi, report.signs_agree
    );
    println!("wrote {}", path_out.display());
    Ok(())
}

fn cmd_classify(cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    let p: GasDataParams = parse_params(&cfg.params)?;
    let data = p.data()?;
    let config = limits::classify_inviscid(&data)?;
    let mut result = serde_json::to_value(&config)?;
    if let Value::Object(map) = &mut result {
        let left = map.remove("left_bc").unwrap_or(Value::Null);
        let right = map.remove("right_bc").unwrap_or(Value::Null);
        map.insert("induced_bc".into(), json!({ "left": left, "right": right }));
    }
    let path_out = out.join("classify.json");
    write_json(&path_out, prov, result)?;
    println!(
        "classify: {:?}{}",
        config.kind,
        match config.shock_location {
            Some(xs) => format!(", x_s = {xs:.6}"),
            None => String::new(),
        }
    );
    println!("wrote {}", path_out.display());
    Ok(())
}

fn cmd_sweep_nu(cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    let p: SweepNuParams = parse_params(&cfg.params)?;
    let nu_ref = p
        .nu_list
        .first()
        .copied()
        .ok_or_else(|| Error::Config("nu_list must be nonempty".into()))?;
    let data = GasDataParams {
        rho0: p.rho0,
        u0: p.u0,
        u1: p.u1,
        gamma: p.gamma,
        a: p.a,
        nu: nu_ref,
    }
    .data()?;
    let table = limits::convergence_study(&data, &p.nu_list, &p.p_list)?;

    let mut body = String::from("nu");
    for q in &table.p_list {
        body.push_str(&format!(",err_l{q}"));
    }
    body.push_str(",xs\n");
    for row in &table.rows {
        body.push_str(&format!("{:.12e}", row.nu));
        for e in &row.errors {
            body.push_str(&format!(",{e:.12e}"));
        }
        match row.xs {
            Some(xs) => body.push_str(&format!(",{xs:.12e}\n")),
            None => body.push_str(",\n"),
        }
    }
    let csv_path = out.join("sweep_nu.csv");
    write_csv(&csv_path, prov, &body)?;
    let json_path = out.join("sweep_nu.json");
    write_json(&json_path, prov, serde_json::to_value(&table)?)?;
    println!(
        "sweep-nu: {:?}, slopes {:?}",
        table.config.kind, table.slopes
    );
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_large_visc(cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    let p: LargeViscParams = parse_params(&cfg.params)?;
    let params = FullGasParams {
        u0: p.u0,
        e0: p.e0,
        u1: p.u1,
        e1: p.e1,
        alpha: p.alpha,
        nu: p.nu,
        gamma: p.gamma,
    };
    let table = limits::full_gas_large_visc(&params, &p.alpha_list)?;

    let mut body = String::from("alpha,nu,h1_error\n");
    for row in &table.rows {
        match row.h1_error {
            Some(e) => body.push_str(&format!("{:.12e},{:.12e},{e:.12e}\n", row.alpha, row.nu)),
            None => body.push_str(&format!("{:.12e},{:.12e},\n", row.alpha, row.nu)),
        }
    }
    let csv_path = out.join("large_visc.csv");
    write_csv(&csv_path, prov, &body)?;
    let json_path = out.join("large_visc.json");
    write_json(&json_path, prov, serde_json::to_value(&table)?)?;
    println!(
        "large-visc: r = nu/alpha = {:.6}, slope {:?}, {} skipped",
        table.r_fixed, table.slope, table.skipped
    );
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_degree(cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    let sys = require_system(cfg)?;
    let p: DegreeParams = parse_params(&cfg.params)?;
    let opts = cfg.tolerances.ode_options();
    let report = steady::brouwer_degree(
        &sys,
        &vecf(&p.u0),
        &vecf(&p.u1_ii),
        &vecf(&p.c2_lo),
        &vecf(&p.c2_hi),
        p.n_starts,
        prov.seed,
        &opts,
    )?;
    let roots: Vec<Value> = report
        .roots
        .iter()
        .map(|(c2, det)| json!({ "c2": c2.as_slice(), "det_dphi": det }))
        .collect();
    let result = json!({
        "degree": report.degree,
        "roots": roots,
        "failures": report.failures,
        "degenerate_root": report.degenerate_root,
    });
    let path_out = out.join("degree.json");
    write_json(&path_out, prov, result)?;
    println!(
        "degree: {} from {} distinct roots ({} failed starts)",
        report.degree,
        report.roots.len(),
        report.failures
    );
    println!("wrote {}", path_out.display());
    Ok(())
}

fn cmd_standing_shock(cfg: &ExperimentConfig, prov: &Provenance, out: &Path) -> Result<()> {
    let p: StandingShockParams = parse_params(&cfg.params)?;
    let pr = PressureLaw::new(p.a, p.gamma)?;
    let rho_plus = match p.rho_plus {
        Some(v) => v,
        None => limits::conjugate_state(p.rho_minus, p.m, &pr)?,
    };
    let rows = evans::standing_shock_evans(&pr, p.m, p.rho_minus, rho_plus, &p.epsilons)?;

    let mut body = String::from("epsilon,log_abs_d0,phase_d0,sign,trace_warning\n");
    for row in &rows {
        body.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{},{}\n",
            row.epsilon, row.d0.log_mag, row.d0.phase, row.sign, row.trace_warning
        ));
    }
    let csv_path = out.join("standing_shock.csv");
    write_csv(&csv_path, prov, &body)?;
    let json_path = out.join("standing_shock.json");
    write_json(
        &json_path,
        prov,
        json!({ "rho_minus": p.rho_minus, "rho_plus": rho_plus, "rows": rows }),
    )?;
    let signs: Vec<f64> = rows.iter().map(|r| r.sign).collect();
    println!("standing-shock: signs {signs:?}");
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}
