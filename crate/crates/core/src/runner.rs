//! Scenario dispatch and artifact writing.
//!
//! Every run writes its artifacts into the output directory through a
//! temporary file and a rename, then a `manifest.json` listing each artifact
//! with its SHA-256 digest. Nothing time-dependent is recorded, so identical
//! configs give byte-identical outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::catalog::{generate_spectrum, ExampleKind, ExampleSpec};
use crate::config::{InitialData, RunConfig, Scenario, SpectrumSource, SystemSection};
use crate::decay::{sweep, sweep_csv, InitRecipe, SweepCell, SweepSettings};
use crate::energy::{observables_csv, Observable};
use crate::error::{Error, Result};
use crate::lyapunov::{certify, default_lambda_grid};
use crate::propagator::{run_trajectory, ModalState};
use crate::scalar::{
    scalar_c1_c2_eps1, scalar_csv, scalar_decay_check, scalar_dissipation_margin, scalar_positivity_margin,
    scalar_young_constants, select_scalar_eps, simulate_scalar, ScalarParams,
};
use crate::spectral::{coupling_bound, Spectrum, SystemParams};

/// Relative tolerance of the scalar rate check.
pub const SCALAR_RATE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    ScientificFailure,
    UsageError,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::ScientificFailure => 1,
            Outcome::UsageError => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub message: String,
    pub artifacts: Vec<PathBuf>,
}

struct Artifact {
    name: &'static str,
    bytes: Vec<u8>,
}

fn json_artifact(name: &'static str, value: &impl Serialize) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
    bytes.push(b'\n');
    Artifact { name, bytes }
}

/// Writes `bytes` to `dir/name` via a temporary sibling and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The spectrum and the `ζ_pert` it implies (`perturbed` presets carry one).
pub fn resolve_spectrum(source: &SpectrumSource) -> Result<(Spectrum, Option<f64>)> {
    match source {
        SpectrumSource::Example(preset) => {
            let spec: ExampleSpec = preset.parse()?;
            let zeta = (spec.kind == ExampleKind::PerturbedA2).then_some(spec.zeta_pert);
            Ok((generate_spectrum(&spec)?, zeta))
        }
        SpectrumSource::File(path) => Ok((Spectrum::from_file(path)?, None)),
    }
}

fn system_params(section: &SystemSection, preset_zeta: Option<f64>) -> Result<SystemParams> {
    let mut p = section.params();
    if let Some(z) = preset_zeta {
        if p.zeta_pert == 0.0 {
            p.zeta_pert = z;
        } else if p.zeta_pert != z {
            return Err(Error::Domain(format!(
                "system.zeta_pert = {} conflicts with the spectrum preset zeta = {z}",
                p.zeta_pert
            )));
        }
    }
    p.validate()?;
    Ok(p)
}

/// Reads one `[u, v, u', v']` row per mode from a JSON array.
pub fn load_initial_coeffs(path: &Path) -> Result<ModalState> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read initial data {}: {e}", path.display())))?;
    let coeffs: Vec<[f64; 4]> = serde_json::from_str(&text)
        .map_err(|e| Error::Domain(format!("initial data {}: {e}", path.display())))?;
    ModalState::new(0.0, coeffs)
}

fn initial_state(data: &InitialData, n_modes: usize) -> Result<ModalState> {
    let state = match data {
        InitialData::Preset(name) => name.parse::<InitRecipe>()?.build(n_modes)?,
        InitialData::File { file } => load_initial_coeffs(file)?,
    };
    if state.n_modes() != n_modes {
        return Err(Error::Dimension { expected: n_modes, got: state.n_modes() });
    }
    Ok(state)
}

fn required<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Domain(format!("{field} is required for this scenario")))
}

/// Result of a scenario before anything is written.
struct Produced {
    passed: bool,
    message: String,
    artifacts: Vec<Artifact>,
}

fn run_scalar(cfg: &RunConfig) -> Result<Produced> {
    let s = required(&cfg.scalar, "scalar")?;
    let p = ScalarParams::new(s.lambda, s.mu, s.c)?;
    let eps = match s.eps {
        Some(e) => e,
        None => select_scalar_eps(&p)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut init = [0.0; 4];
    for x in &mut init {
        *x = rng.gen_range(-1.0..=1.0);
    }
    let traj = simulate_scalar(&p, &init, cfg.time.t_end, cfg.time.n_steps)?;
    let check = scalar_decay_check(&p, &init, cfg.time.t_end, cfg.time.n_steps)?;
    let constants = scalar_c1_c2_eps1(&p, eps);
    let dissipation = scalar_dissipation_margin(&p, eps);
    let positivity = scalar_positivity_margin(&p, eps);
    let rate_ok = check.relative_error() <= SCALAR_RATE_TOLERANCE && check.oracle_rate < 0.0;
    let passed = rate_ok && dissipation > 0.0 && positivity > 0.0;
    let message = format!(
        "scalar: measured rate {:.6}, oracle {:.6} (rel. error {:.2e}); dissipation margin {:.3e}",
        check.measured_rate,
        check.oracle_rate,
        check.relative_error(),
        dissipation
    );
    let cert = json!({
        "scenario": "scalar",
        "passed": passed,
        "params": p,
        "eps": eps,
        "initial_state": init,
        "constants": constants,
        "young_constants": scalar_young_constants(&p),
        "positivity_margin": positivity,
        "dissipation_margin": dissipation,
        "decay_check": check,
        "relative_error": check.relative_error(),
        "tolerance": SCALAR_RATE_TOLERANCE,
    });
    Ok(Produced {
        passed,
        message,
        artifacts: vec![
            Artifact { name: "results.csv", bytes: scalar_csv(&p, eps, &traj)?.into_bytes() },
            json_artifact("certificate.json", &cert),
        ],
    })
}

fn run_simulate(cfg: &RunConfig) -> Result<Produced> {
    let (spectrum, zeta) = resolve_spectrum(required(&cfg.spectrum, "spectrum")?)?;
    let params = system_params(required(&cfg.system, "system")?, zeta)?;
    let init = initial_state(&cfg.initial_data, spectrum.n_modes())?;
    let traj = run_trajectory(&init, &params, &spectrum, cfg.time.t_end, cfg.time.n_steps)?;
    let mut observables = vec![Observable::E, Observable::K, Observable::TildeE, Observable::UPrimeSq];
    let mut lyap = None;
    if params.alpha != 0.0 {
        let grid = default_lambda_grid(spectrum.lambda1(), cfg.grid.max_factor, cfg.grid.per_decade);
        let report = certify(&params, &spectrum, &grid, None)?;
        if report.passed {
            lyap = report.lyapunov;
            observables.push(Observable::HEps);
        }
    }
    let csv = observables_csv(&traj, &observables, lyap.as_ref())?;
    Ok(Produced {
        passed: true,
        message: format!("simulate: {} samples of {} modes", traj.len(), spectrum.n_modes()),
        artifacts: vec![Artifact { name: "results.csv", bytes: csv.into_bytes() }],
    })
}

fn run_certify(cfg: &RunConfig) -> Result<Produced> {
    let (spectrum, zeta) = resolve_spectrum(required(&cfg.spectrum, "spectrum")?)?;
    let params = system_params(required(&cfg.system, "system")?, zeta)?;
    let grid = default_lambda_grid(spectrum.lambda1(), cfg.grid.max_factor, cfg.grid.per_decade);
    let report = certify(&params, &spectrum, &grid, None)?;
    let message = if report.passed {
        format!("certify: pass, gamma* = {:e}", report.uniform_gamma)
    } else {
        format!(
            "certify: fail at lambda = {}: {}",
            report.failing_lambda.unwrap_or(f64::NAN),
            report.reason.as_deref().unwrap_or("")
        )
    };
    Ok(Produced {
        passed: report.passed,
        message,
        artifacts: vec![
            Artifact { name: "results.csv", bytes: report.margins_csv().into_bytes() },
            json_artifact("certificate.json", &report),
        ],
    })
}

/// Passes when every regular cell passes and every control cell fails.
fn run_sweep(cfg: &RunConfig) -> Result<Produced> {
    let (spectrum, zeta) = resolve_spectrum(required(&cfg.spectrum, "spectrum")?)?;
    let section = cfg.sweep.clone().unwrap_or_default();
    let base = match &cfg.system {
        Some(s) => system_params(s, zeta)?,
        None => SystemParams { alpha: 0.0, beta: 0.0, damping_b: 1.0, zeta_pert: zeta.unwrap_or(0.0) },
    };
    let mut cells = Vec::new();
    for &beta in &section.betas {
        let bound = coupling_bound(&spectrum, beta)?;
        for &f in &section.alpha_fractions {
            cells.push(SweepCell {
                params: SystemParams { alpha: f * bound, beta, ..base },
                negative_control: false,
            });
        }
    }
    let settings = SweepSettings {
        init: match &cfg.initial_data {
            InitialData::Preset(name) => name.parse()?,
            InitialData::File { .. } => {
                return Err(Error::Domain("sweep takes a preset for initial_data".into()))
            }
        },
        t_min: cfg.time.t_min,
        t_end: cfg.time.t_end,
        n_steps: cfg.time.n_steps,
        ceiling: section.ceiling,
        lambda_grid_max_factor: cfg.grid.max_factor,
        lambda_grid_per_decade: cfg.grid.per_decade,
    };
    let mut rows = sweep(&cells, &spectrum, &settings);
    if section.control {
        let beta = section.betas.first().copied().unwrap_or(0.0);
        let control = SweepCell { params: SystemParams { alpha: 0.0, beta, ..base }, negative_control: true };
        let control_settings = SweepSettings { init: InitRecipe::VOnlySpread, ..settings };
        rows.extend(sweep(&[control], &spectrum, &control_settings));
    }
    let regular_ok = rows.iter().filter(|r| !r.negative_control).all(|r| r.pass);
    let controls_ok = rows.iter().filter(|r| r.negative_control).all(|r| !r.pass && r.error.is_none());
    let errors: Vec<String> = rows.iter().filter_map(|r| r.error.clone()).collect();
    let passed = regular_ok && controls_ok;
    let summary = json!({
        "scenario": "sweep",
        "passed": passed,
        "rows": rows,
        "errors": errors,
    });
    Ok(Produced {
        passed,
        message: format!(
            "sweep: {} cells, {} passing{}",
            rows.len(),
            rows.iter().filter(|r| r.pass).count(),
            if errors.is_empty() { String::new() } else { format!(", {} errors", errors.len()) }
        ),
        artifacts: vec![
            Artifact { name: "results.csv", bytes: sweep_csv(&rows).into_bytes() },
            json_artifact("certificate.json", &summary),
        ],
    })
}

fn produce(cfg: &RunConfig) -> Result<Produced> {
    match cfg.scenario {
        Scenario::Scalar => run_scalar(cfg),
        Scenario::Simulate => run_simulate(cfg),
        Scenario::Certify => run_certify(cfg),
        Scenario::Sweep => run_sweep(cfg),
    }
}

fn write_all(cfg: &RunConfig, produced: &Produced, outcome: Outcome) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.outputs)?;
    let mut paths = Vec::new();
    let mut entries = Vec::new();
    for a in &produced.artifacts {
        paths.push(write_atomic(&cfg.outputs, a.name, &a.bytes)?);
        entries.push(json!({ "file": a.name, "bytes": a.bytes.len(), "sha256": sha256_hex(&a.bytes) }));
    }
    let manifest = json_artifact(
        "manifest.json",
        &json!({
            "scenario": cfg.scenario,
            "outcome": outcome,
            "exit_code": outcome.exit_code(),
            "config": cfg.to_document(),
            "artifacts": entries,
        }),
    );
    paths.push(write_atomic(&cfg.outputs, manifest.name, &manifest.bytes)?);
    Ok(paths)
}

/// Runs the scenario and writes its artifacts. Bad inputs map to
/// [`Outcome::UsageError`], failed certificates or bounds to
/// [`Outcome::ScientificFailure`].
pub fn run(cfg: &RunConfig) -> RunSummary {
    let produced = match produce(cfg) {
        Ok(p) => p,
        Err(e) => {
            return RunSummary { outcome: Outcome::UsageError, message: e.to_string(), artifacts: Vec::new() }
        }
    };
    let outcome = if produced.passed { Outcome::Pass } else { Outcome::ScientificFailure };
    match write_all(cfg, &produced, outcome) {
        Ok(artifacts) => RunSummary { outcome, message: produced.message, artifacts },
        Err(e) => RunSummary {
            outcome: Outcome::UsageError,
            message: format!("outputs: cannot write to {}: {e}", cfg.outputs.display()),
            artifacts: Vec::new(),
        },
    }
}
