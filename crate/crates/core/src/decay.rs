//! Polynomial decay of the weak-norm energy `K`.
//!
//! With finitely many modes every solution decays exponentially; the `1/t`
//! law shows up as a bound on `t·K(t)` that does not grow with the number of
//! modes the data is spread over.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{data_norm_sq, k_energy, tilde_e};
use crate::error::{Error, Result};
use crate::lyapunov::{certify, h_eps, CertificateReport};
use crate::propagator::{run_trajectory, ModalState, Trajectory};
use crate::spectral::{coupling_bound, Spectrum, SystemParams};

/// Slope of the least-squares line through `(xs, ys)`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Named initial data, per mode `n = 1..N` in `(u, v, u', v')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "recipe")]
pub enum InitRecipe {
    /// `uₙ(0) = v'ₙ(0) = 1/n`, the rest zero.
    SpreadOneOverN,
    /// `u_k(0) = v'_k(0) = 1` on the single mode `k` (1-based).
    SingleMode { k: usize },
    /// `vₙ(0) = v'ₙ(0) = 1/n`; nothing in `u`.
    VOnlySpread,
    /// Uniform in `[−1, 1]/n` per entry, reproducible from the seed.
    Random { seed: u64 },
}

impl InitRecipe {
    pub fn build(&self, n_modes: usize) -> Result<ModalState> {
        let inv = |n: usize| 1.0 / (n + 1) as f64;
        let coeffs = match *self {
            InitRecipe::SpreadOneOverN => (0..n_modes).map(|n| [inv(n), 0.0, 0.0, inv(n)]).collect(),
            InitRecipe::SingleMode { k } => {
                if k == 0 || k > n_modes {
                    return Err(Error::Domain(format!("single_mode k = {k} outside 1..={n_modes}")));
                }
                (0..n_modes)
                    .map(|n| if n + 1 == k { [1.0, 0.0, 0.0, 1.0] } else { [0.0; 4] })
                    .collect()
            }
            InitRecipe::VOnlySpread => (0..n_modes).map(|n| [0.0, inv(n), 0.0, inv(n)]).collect(),
            InitRecipe::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n_modes)
                    .map(|n| {
                        let mut x = [0.0; 4];
                        for c in &mut x {
                            *c = rng.gen_range(-1.0..=1.0) * inv(n);
                        }
                        x
                    })
                    .collect()
            }
        };
        ModalState::new(0.0, coeffs)
    }
}

impl fmt::Display for InitRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitRecipe::SpreadOneOverN => write!(f, "spread_1_over_n"),
            InitRecipe::SingleMode { k } => write!(f, "single_mode {k}"),
            InitRecipe::VOnlySpread => write!(f, "v_only_spread"),
            InitRecipe::Random { seed } => write!(f, "random {seed}"),
        }
    }
}

impl FromStr for InitRecipe {
    type Err = Error;

    /// `spread_1_over_n`, `v_only_spread`, `single_mode K` / `single_mode:K`,
    /// `random SEED` / `random:SEED`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once([' ', ':', '=']) {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s, None),
        };
        let int = |what: &str| -> Result<u64> {
            arg.ok_or_else(|| Error::Domain(format!("{what} needs an integer argument")))?
                .parse()
                .map_err(|_| Error::Domain(format!("bad integer in '{s}'")))
        };
        match head {
            "spread_1_over_n" if arg.is_none() => Ok(InitRecipe::SpreadOneOverN),
            "v_only_spread" if arg.is_none() => Ok(InitRecipe::VOnlySpread),
            "single_mode" => Ok(InitRecipe::SingleMode { k: int("single_mode")? as usize }),
            "random" => Ok(InitRecipe::Random { seed: int("random")? }),
            _ => Err(Error::Domain(format!(
                "unknown initial data '{s}' (expected spread_1_over_n, single_mode K, v_only_spread, random SEED)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `sup t·K(t)` over the samples in `[t_min, t_end]`.
    pub sup_tk: f64,
    pub t_at_sup: f64,
    /// Slope of `ln K` against `ln t` over `[t_end/2, t_end]`.
    pub loglog_slope: f64,
    /// `sup_tk` divided by `‖u'₀‖² + ‖v'₀‖² + ‖u₀‖²_V + ‖v₀‖²_W`.
    pub bound_constant: f64,
    pub ceiling: f64,
    pub pass: bool,
}

/// Measures `t·K(t)` along `traj` and compares its supremum with `ceiling`.
/// A NaN ceiling never passes.
pub fn measure_polynomial_decay(traj: &Trajectory, t_min: f64, ceiling: f64) -> Result<DecayReport> {
    if !(t_min.is_finite() && t_min > 0.0) {
        return Err(Error::Domain(format!("t_min = {t_min} must be > 0")));
    }
    if traj.is_empty() || traj.t_end() < t_min {
        return Err(Error::TrajectoryTooShort { t_end: traj.t_end(), t_min });
    }
    let t_end = traj.t_end();
    let mut sup_tk = f64::NEG_INFINITY;
    let mut t_at_sup = f64::NAN;
    let mut tail_t = Vec::new();
    let mut tail_k = Vec::new();
    for (&t, x) in traj.times.iter().zip(&traj.states) {
        if t < t_min {
            continue;
        }
        let k = k_energy(x, &traj.params, &traj.spectrum)?;
        if t * k > sup_tk {
            sup_tk = t * k;
            t_at_sup = t;
        }
        if t >= 0.5 * t_end && k > 0.0 {
            tail_t.push(t.ln());
            tail_k.push(k.ln());
        }
    }
    let loglog_slope =
        if tail_t.len() >= 2 { least_squares_slope(&tail_t, &tail_k) } else { f64::NAN };
    let data = data_norm_sq(&traj.states[0], &traj.spectrum)?;
    Ok(DecayReport {
        sup_tk,
        t_at_sup,
        loglog_slope,
        bound_constant: sup_tk / data,
        ceiling,
        pass: sup_tk <= ceiling,
    })
}

/// `(B + |α|)/(B − |α|)` with `B = λ₁^{(3−2β)/2}`.
pub fn coupling_ratio(params: &SystemParams, spectrum: &Spectrum) -> Result<f64> {
    let b = coupling_bound(spectrum, params.beta)?;
    let a = params.alpha.abs();
    Ok((b + a) / (b - a))
}

/// `(B + |α|)/((B − |α|) γ*) · H_ε(0)` from a passing certificate; `None`
/// when the certificate failed.
pub fn certified_ceiling(
    params: &SystemParams,
    spectrum: &Spectrum,
    init: &ModalState,
    report: &CertificateReport,
) -> Result<Option<f64>> {
    match (report.passed, report.lyapunov.as_ref()) {
        (true, Some(lyap)) => {
            let h0 = h_eps(init, params, lyap, spectrum)?;
            Ok(Some(coupling_ratio(params, spectrum)? * h0 / report.uniform_gamma))
        }
        _ => Ok(None),
    }
}

/// How a sweep sets the ceiling for each cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum CeilingRule {
    /// The certified bound; cells without a certificate (including `α = 0`)
    /// fail.
    Certified,
    /// `k · Ẽ(0) · (B + |α|)/(B − |α|)`.
    EnergyMultiple { k: f64 },
}

/// One sweep cell. Inadmissible cells must be marked as controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub params: SystemParams,
    #[serde(default)]
    pub negative_control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub zeta_pert: f64,
    pub n_modes: usize,
    pub t_end: f64,
    pub sup_tk: f64,
    pub loglog_slope: f64,
    pub bound_constant: f64,
    pub ceiling: f64,
    pub pass: bool,
    pub negative_control: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub init: InitRecipe,
    pub t_min: f64,
    pub t_end: f64,
    pub n_steps: usize,
    pub ceiling: CeilingRule,
    pub lambda_grid_max_factor: f64,
    pub lambda_grid_per_decade: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            init: InitRecipe::SpreadOneOverN,
            t_min: 1.0,
            t_end: 200.0,
            n_steps: 2000,
            ceiling: CeilingRule::Certified,
            lambda_grid_max_factor: crate::lyapunov::DEFAULT_GRID_MAX_FACTOR,
            lambda_grid_per_decade: crate::lyapunov::DEFAULT_GRID_PER_DECADE,
        }
    }
}

fn cell_ceiling(
    params: &SystemParams,
    spectrum: &Spectrum,
    init: &ModalState,
    settings: &SweepSettings,
) -> Result<f64> {
    match settings.ceiling {
        CeilingRule::EnergyMultiple { k } => {
            Ok(k * tilde_e(init, params, spectrum)? * coupling_ratio(params, spectrum)?)
        }
        CeilingRule::Certified => {
            if params.alpha == 0.0 {
                return Ok(f64::NAN);
            }
            let grid = crate::lyapunov::default_lambda_grid(
                spectrum.lambda1(),
                settings.lambda_grid_max_factor,
                settings.lambda_grid_per_decade,
            );
            let report = certify(params, spectrum, &grid, None)?;
            Ok(certified_ceiling(params, spectrum, init, &report)?.unwrap_or(f64::NAN))
        }
    }
}

fn run_cell(cell: &SweepCell, spectrum: &Spectrum, settings: &SweepSettings) -> Result<DecayReport> {
    let admissible = crate::spectral::is_admissible(&cell.params, spectrum);
    if !admissible && !cell.negative_control {
        return Err(Error::Domain(format!(
            "alpha = {} is not admissible for beta = {} and the cell is not marked as a control",
            cell.params.alpha, cell.params.beta
        )));
    }
    let init = settings.init.build(spectrum.n_modes())?;
    let ceiling = cell_ceiling(&cell.params, spectrum, &init, settings)?;
    let traj = run_trajectory(&init, &cell.params, spectrum, settings.t_end, settings.n_steps)?;
    measure_polynomial_decay(&traj, settings.t_min, ceiling)
}

/// One row per cell, in input order. Per-cell errors are recorded in the row
/// and the sweep continues.
pub fn sweep(cells: &[SweepCell], spectrum: &Spectrum, settings: &SweepSettings) -> Vec<SweepRow> {
    cells
        .par_iter()
        .map(|cell| {
            let p = &cell.params;
            let mut row = SweepRow {
                alpha: p.alpha,
                beta: p.beta,
                b: p.damping_b,
                zeta_pert: p.zeta_pert,
                n_modes: spectrum.n_modes(),
                t_end: settings.t_end,
                sup_tk: f64::NAN,
                loglog_slope: f64::NAN,
                bound_constant: f64::NAN,
                ceiling: f64::NAN,
                pass: false,
                negative_control: cell.negative_control,
                error: None,
            };
            match run_cell(cell, spectrum, settings) {
                Ok(r) => {
                    row.sup_tk = r.sup_tk;
                    row.loglog_slope = r.loglog_slope;
                    row.bound_constant = r.bound_constant;
                    row.ceiling = r.ceiling;
                    row.pass = r.pass;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str =
    "alpha,beta,b,zeta_pert,N,t_end,sup_tK,loglog_slope,bound_constant,pass";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.alpha,
            r.beta,
            r.b,
            r.zeta_pert,
            r.n_modes,
            r.t_end,
            r.sup_tk,
            r.loglog_slope,
            r.bound_constant,
            r.pass
        ));
    }
    out
}
