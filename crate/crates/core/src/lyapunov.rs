//! Lyapunov functional `H_ε` for the coupled system and its numerical
//! certificate.
//!
//! ```text
//! H_ε = E − ε λ₁^{2−β} ⟨A^{β−2} v, v'⟩_{W'} + p ε λ₁^{−a} ⟨A^a u, u'⟩_{W'}
//!         + ρ ε [⟨u', v⟩_{W'} − ⟨u, A^{-1} v'⟩_{W'}],
//! ρ = (p+1) λ₁^{2−β} / (2α),   a = min(0, 1−β).
//! ```
//!
//! Per mode `H_ε` and `−H_ε'` are 4×4 quadratic forms. The certificate checks,
//! for every λ of the spectrum and of a probe grid beyond it, that both
//! dominate the weak energy `K` (smallest generalized eigenvalue > 0), halving
//! `ε` until they do.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::BetaCase;
use crate::error::{Error, Result};
use crate::linalg::{min_generalized_eigenvalue, quad_form, Mat4};
use crate::propagator::ModalState;
use crate::spectral::{check_beta, coupling_bound, is_admissible, Spectrum, SystemParams};

/// Smallest `ε` tried before the search gives up.
pub const EPS_FLOOR: f64 = 1e-12;

/// `p` with `(p+1)/(p−1) = (r+1)/2`, `r = λ₁^{(3−2β)/2}/|α| > 1`.
pub fn select_p(lambda1: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if alpha == 0.0 {
        return Err(Error::Certificate("alpha = 0: the decay estimate needs a nonzero coupling".into()));
    }
    if !(lambda1 > 0.0) {
        return Err(Error::Domain(format!("lambda1 = {lambda1} must be > 0")));
    }
    let r = lambda1.powf((3.0 - 2.0 * beta) / 2.0) / alpha.abs();
    if !(r > 1.0) {
        return Err(Error::Certificate(format!(
            "|alpha| = {} is not below the coupling bound {}",
            alpha.abs(),
            lambda1.powf((3.0 - 2.0 * beta) / 2.0)
        )));
    }
    Ok((r + 3.0) / (r - 1.0))
}

/// Open interval of admissible Young weights `γ` for the given case.
pub fn gamma_interval(p: f64, lambda1: f64, alpha: f64, beta: f64, case: BetaCase) -> (f64, f64) {
    let a = alpha.abs();
    let l2b = lambda1.powf(2.0 - beta);
    match case {
        BetaCase::Low => {
            let k = lambda1.powf((beta - 1.0) / 2.0);
            (k * (p + 1.0) * a / ((p - 1.0) * l2b), (p - 1.0) / (k * (p + 1.0) * a))
        }
        BetaCase::High => {
            let k = lambda1.powf(beta - 1.0);
            (k * (p + 1.0) * a / ((p - 1.0) * l2b), (p - 1.0) / ((p + 1.0) * a))
        }
    }
}

/// `γ` and the two slacks `δ`, `ζ` it leaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungSplit {
    pub gamma: f64,
    pub delta: f64,
    pub zeta: f64,
    pub interval: (f64, f64),
}

pub fn young_slacks(
    gamma: f64,
    p: f64,
    lambda1: f64,
    alpha: f64,
    beta: f64,
    case: BetaCase,
) -> (f64, f64) {
    let a = alpha.abs();
    let l2b = lambda1.powf(2.0 - beta);
    match case {
        BetaCase::Low => {
            let k = lambda1.powf((beta - 1.0) / 2.0);
            (
                (p - 1.0) / 2.0 - k * (p + 1.0) * a / 2.0 * gamma,
                (p - 1.0) / 2.0 * l2b - k * (p + 1.0) * a / (2.0 * gamma),
            )
        }
        BetaCase::High => {
            let k = lambda1.powf(beta - 1.0);
            (
                (p - 1.0) / 2.0 * k - k * (p + 1.0) * a / 2.0 * gamma,
                (p - 1.0) / 2.0 * l2b - k * (p + 1.0) * a / (2.0 * gamma),
            )
        }
    }
}

/// `γ` is the geometric mean of the interval ends.
pub fn select_gamma_young(
    p: f64,
    lambda1: f64,
    alpha: f64,
    beta: f64,
    case: BetaCase,
) -> Result<YoungSplit> {
    let (lo, hi) = gamma_interval(p, lambda1, alpha, beta, case);
    if !(lo < hi) {
        return Err(Error::Invariant(format!(
            "empty Young interval ({lo}, {hi}) for p = {p}, alpha = {alpha}"
        )));
    }
    let gamma = (lo * hi).sqrt();
    let (delta, zeta) = young_slacks(gamma, p, lambda1, alpha, beta, case);
    if !(delta > 0.0 && zeta > 0.0) {
        return Err(Error::Invariant(format!("nonpositive slack: delta = {delta}, zeta = {zeta}")));
    }
    Ok(YoungSplit { gamma, delta, zeta, interval: (lo, hi) })
}

/// The free parameters of `H_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovParams {
    pub p: f64,
    pub gamma_young: f64,
    pub delta: f64,
    pub zeta_const: f64,
    pub rho: f64,
    pub a_exp: f64,
    pub eps: f64,
    pub lambda1: f64,
    pub beta: f64,
    pub case: BetaCase,
    /// Smallest `c₁…c₄` that make the four Young splittings of the proof hold.
    pub young_consts: [f64; 4],
}

impl LyapunovParams {
    /// Selects `p`, `γ`, `δ`, `ζ`, `ρ` for the system; `eps = None` picks
    /// [`LyapunovParams::default_eps`].
    ///
    /// With `ζ_pert > 0` the `v`-coefficient of `−H_ε'` loses `ζ_pert/λ` per
    /// mode, so `p` is additionally kept at or above `1 + 4ζ_pert/λ₁`.
    pub fn new(params: &SystemParams, lambda1: f64, eps: Option<f64>) -> Result<Self> {
        params.validate()?;
        let beta = params.beta;
        let alpha = params.alpha;
        let case = BetaCase::for_beta(beta);
        let p = select_p(lambda1, alpha, beta)?.max(1.0 + 4.0 * params.zeta_pert / lambda1);
        let split = select_gamma_young(p, lambda1, alpha, beta, case)?;
        let rho = (p + 1.0) * lambda1.powf(2.0 - beta) / (2.0 * alpha);
        let young_consts = {
            let c1 = match case {
                BetaCase::Low => p * p * lambda1.powi(-3) / (2.0 * split.delta),
                BetaCase::High => p * p * lambda1.powf(beta - 4.0) / (2.0 * split.delta),
            };
            let r2 = rho * rho;
            [
                c1,
                0.75 * r2 / (lambda1 * lambda1),
                0.75 * r2 / lambda1.powi(4),
                r2 * lambda1.powf(-2.0 - beta) / (2.0 * split.zeta),
            ]
        };
        let mut lp = LyapunovParams {
            p,
            gamma_young: split.gamma,
            delta: split.delta,
            zeta_const: split.zeta,
            rho,
            a_exp: (1.0 - beta).min(0.0),
            eps: 0.0,
            lambda1,
            beta,
            case,
            young_consts,
        };
        lp.eps = eps.unwrap_or_else(|| lp.default_eps());
        if !(lp.eps >= 0.0 && lp.eps.is_finite()) {
            return Err(Error::Domain(format!("eps = {} must be >= 0", lp.eps)));
        }
        Ok(lp)
    }

    /// `min(δ, ζ) / (10 (1 + p + |ρ|))`.
    pub fn default_eps(&self) -> f64 {
        self.delta.min(self.zeta_const) / (10.0 * (1.0 + self.p + self.rho.abs()))
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }
}

/// Weights of the perturbation terms on mode `λ`:
/// `P = λ₁^{2−β}λ^{β−4}`, `Q = pλ₁^{−a}λ^{a−2}`, `R = ρλ^{−2}`, `T = ρλ^{−3}`.
struct Weights {
    p: f64,
    q: f64,
    r: f64,
    t: f64,
}

fn weights(lambda: f64, lyap: &LyapunovParams) -> Weights {
    let beta = lyap.beta;
    let a = lyap.a_exp;
    Weights {
        p: lyap.lambda1.powf(2.0 - beta) * lambda.powf(beta - 4.0),
        q: lyap.p * lyap.lambda1.powf(-a) * lambda.powf(a - 2.0),
        r: lyap.rho * lambda.powi(-2),
        t: lyap.rho * lambda.powi(-3),
    }
}

fn sym(diag: [f64; 4], off: &[((usize, usize), f64)]) -> Mat4 {
    let mut m = Mat4::from_diagonal(&diag.into());
    for &((i, j), v) in off {
        m[(i, j)] += v;
        m[(j, i)] += v;
    }
    m
}

/// Symmetric `S` with `H_ε` restricted to mode `λ` equal to `xᵀ S x`.
pub fn mode_h_matrix(lambda: f64, params: &SystemParams, lyap: &LyapunovParams) -> Mat4 {
    let w = weights(lambda, lyap);
    let e = lyap.eps;
    let c = params.coupling_at(lambda);
    sym(
        [0.5 * lambda, 0.5 * params.a2_at(lambda), 0.5, 0.5],
        &[
            ((0, 1), 0.5 * c),
            ((1, 3), -0.5 * e * w.p),
            ((0, 2), 0.5 * e * w.q),
            ((1, 2), 0.5 * e * w.r),
            ((0, 3), -0.5 * e * w.t),
        ],
    )
}

/// Symmetric `D` with `−H_ε'` restricted to mode `λ` equal to `xᵀ D x`.
///
/// Obtained by differentiating each term of `H_ε` along the modal vector field
/// and cancelling analytically. Forming `SM + MᵀS` in floating point would
/// lose every significant digit at large λ, where terms of size λ² cancel
/// down to size λ^{β−2}.
pub fn mode_dissipation_matrix(lambda: f64, params: &SystemParams, lyap: &LyapunovParams) -> Mat4 {
    let w = weights(lambda, lyap);
    let e = lyap.eps;
    let b = params.damping_b;
    let c = params.coupling_at(lambda);
    let rho_alpha = lyap.rho * params.alpha;
    let l2b = lyap.lambda1.powf(2.0 - lyap.beta);
    let zp = params.zeta_pert;
    let uu = e * (lyap.p * lyap.lambda1.powf(-lyap.a_exp) * lambda.powf(lyap.a_exp - 1.0)
        - rho_alpha * lambda.powf(lyap.beta - 3.0));
    let vv = e * lambda.powf(lyap.beta - 2.0) * (rho_alpha - l2b * (1.0 + zp / lambda));
    let ww = b - e * w.q;
    let zz = e * w.p;
    let uv = -e * (c * (w.p - w.q) + lyap.rho * zp * lambda.powi(-2));
    let wz = -e * lyap.rho * lambda.powi(-2) * (1.0 - 1.0 / lambda);
    sym(
        [uu, vv, ww, zz],
        &[
            ((0, 1), 0.5 * uv),
            ((0, 2), 0.5 * e * w.q * b),
            ((1, 2), 0.5 * e * w.r * b),
            ((2, 3), 0.5 * wz),
        ],
    )
}

pub fn h_eps(
    state: &ModalState,
    params: &SystemParams,
    lyap: &LyapunovParams,
    spectrum: &Spectrum,
) -> Result<f64> {
    state.check_dims(spectrum)?;
    Ok(spectrum
        .eigenvalues()
        .iter()
        .zip(&state.coeffs)
        .map(|(&l, x)| quad_form(&mode_h_matrix(l, params, lyap), x))
        .sum())
}

/// Exact `d/dt H_ε` along the flow.
pub fn h_eps_derivative(
    state: &ModalState,
    params: &SystemParams,
    lyap: &LyapunovParams,
    spectrum: &Spectrum,
) -> Result<f64> {
    state.check_dims(spectrum)?;
    Ok(-spectrum
        .eigenvalues()
        .iter()
        .zip(&state.coeffs)
        .map(|(&l, x)| quad_form(&mode_dissipation_matrix(l, params, lyap), x))
        .sum::<f64>())
}

/// Geometric probe grid `λ₁·10^{k/per_decade}` up to `max_factor·λ₁`.
pub fn default_lambda_grid(lambda1: f64, max_factor: f64, per_decade: usize) -> Vec<f64> {
    let per_decade = per_decade.max(1);
    let decades = max_factor.max(1.0).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    (0..=n)
        .map(|k| lambda1 * 10f64.powf((k as f64 / per_decade as f64).min(decades)))
        .collect()
}

pub const DEFAULT_GRID_MAX_FACTOR: f64 = 1e6;
pub const DEFAULT_GRID_PER_DECADE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMargin {
    pub lambda: f64,
    /// Largest `c` with `H_ε ⪰ c·K` on the mode.
    pub positivity: f64,
    /// Largest `γ` with `−H_ε' ⪰ γ·K` on the mode.
    pub domination: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub passed: bool,
    pub failing_lambda: Option<f64>,
    pub reason: Option<String>,
    pub alpha: f64,
    pub beta: f64,
    pub coupling_bound: f64,
    pub case: BetaCase,
    /// `min_λ` of the domination margins: `−H_ε' ≥ γ*·K` on every probed mode.
    pub uniform_gamma: f64,
    pub uniform_positivity: f64,
    pub eps_used: Option<f64>,
    pub p_used: Option<f64>,
    pub halvings: u32,
    pub lyapunov: Option<LyapunovParams>,
    /// The printed `γ`-interval and whether its chosen interior point gives
    /// `δ, ζ > 0` (it always should).
    pub gamma_interval: Option<(f64, f64)>,
    pub per_mode_margins: Vec<ModeMargin>,
}

impl CertificateReport {
    pub fn margins_csv(&self) -> String {
        let mut out = String::from("lambda,positivity_margin,domination_margin\n");
        for m in &self.per_mode_margins {
            out.push_str(&format!("{},{},{}\n", m.lambda, m.positivity, m.domination));
        }
        out
    }
}

/// Spectrum eigenvalues merged with the grid points at or above `λ₁`.
pub fn probe_lambdas(spectrum: &Spectrum, grid: &[f64]) -> Vec<f64> {
    let l1 = spectrum.lambda1();
    let mut all: Vec<f64> = spectrum
        .eigenvalues()
        .iter()
        .copied()
        .chain(grid.iter().copied().filter(|&l| l.is_finite() && l >= l1))
        .collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite probe values"));
    all.dedup();
    all
}

pub fn mode_margins(lambda: f64, params: &SystemParams, lyap: &LyapunovParams) -> ModeMargin {
    let kw = lyap.case.k_weights(lyap.beta, lambda);
    ModeMargin {
        lambda,
        positivity: min_generalized_eigenvalue(&mode_h_matrix(lambda, params, lyap), &kw),
        domination: min_generalized_eigenvalue(&mode_dissipation_matrix(lambda, params, lyap), &kw),
    }
}

/// Smallest probed λ whose margins are not both positive.
fn first_failing(margins: &[ModeMargin]) -> Option<&ModeMargin> {
    margins.iter().find(|m| !(m.positivity > 0.0 && m.domination > 0.0))
}

fn fold_min(margins: &[ModeMargin], f: impl Fn(&ModeMargin) -> f64) -> f64 {
    margins.iter().map(f).fold(f64::INFINITY, f64::min)
}

/// Certifies `H_ε ⪰ c·K` and `−H_ε' ⪰ γ*·K` uniformly over the spectrum and
/// `lambda_grid`.
///
/// `α = 0` is rejected. An inadmissible `|α|` yields a failing report that
/// names the smallest λ where the energy itself is indefinite; an exhausted
/// `ε` search names the smallest λ that still fails.
pub fn certify(
    params: &SystemParams,
    spectrum: &Spectrum,
    lambda_grid: &[f64],
    eps_init: Option<f64>,
) -> Result<CertificateReport> {
    params.validate()?;
    if params.alpha == 0.0 {
        return Err(Error::Certificate("alpha = 0 is outside the hypotheses (alpha != 0)".into()));
    }
    let lambda1 = spectrum.lambda1();
    let bound = coupling_bound(spectrum, params.beta)?;
    let case = BetaCase::for_beta(params.beta);
    let probes = probe_lambdas(spectrum, lambda_grid);

    if !is_admissible(params, spectrum) {
        // Energy alone (ε = 0): positivity is the definiteness of E relative to K.
        let zero = LyapunovParams {
            p: f64::NAN,
            gamma_young: f64::NAN,
            delta: f64::NAN,
            zeta_const: f64::NAN,
            rho: 0.0,
            a_exp: (1.0 - params.beta).min(0.0),
            eps: 0.0,
            lambda1,
            beta: params.beta,
            case,
            young_consts: [f64::NAN; 4],
        };
        let margins: Vec<ModeMargin> = probes
            .par_iter()
            .map(|&l| {
                let kw = case.k_weights(params.beta, l);
                ModeMargin {
                    lambda: l,
                    positivity: min_generalized_eigenvalue(&mode_h_matrix(l, params, &zero), &kw),
                    domination: 0.0,
                }
            })
            .collect();
        let bad = margins
            .iter()
            .find(|m| !(m.positivity > 0.0))
            .or_else(|| margins.first())
            .expect("nonempty probe set");
        return Ok(CertificateReport {
            passed: false,
            failing_lambda: Some(bad.lambda),
            reason: Some(format!(
                "|alpha| = {} >= coupling bound {bound}: energy indefinite at lambda = {} (margin {:e})",
                params.alpha.abs(),
                bad.lambda,
                bad.positivity
            )),
            alpha: params.alpha,
            beta: params.beta,
            coupling_bound: bound,
            case,
            uniform_gamma: 0.0,
            uniform_positivity: fold_min(&margins, |m| m.positivity),
            eps_used: None,
            p_used: None,
            halvings: 0,
            lyapunov: None,
            gamma_interval: None,
            per_mode_margins: margins,
        });
    }

    let mut lyap = LyapunovParams::new(params, lambda1, eps_init)?;
    let interval = gamma_interval(lyap.p, lambda1, params.alpha, params.beta, case);
    let mut halvings = 0;
    loop {
        let margins: Vec<ModeMargin> =
            probes.par_iter().map(|&l| mode_margins(l, params, &lyap)).collect();
        let pos = fold_min(&margins, |m| m.positivity);
        let dom = fold_min(&margins, |m| m.domination);
        if pos > 0.0 && dom > 0.0 {
            return Ok(CertificateReport {
                passed: true,
                failing_lambda: None,
                reason: None,
                alpha: params.alpha,
                beta: params.beta,
                coupling_bound: bound,
                case,
                uniform_gamma: dom,
                uniform_positivity: pos,
                eps_used: Some(lyap.eps),
                p_used: Some(lyap.p),
                halvings,
                lyapunov: Some(lyap),
                gamma_interval: Some(interval),
                per_mode_margins: margins,
            });
        }
        let next = lyap.eps / 2.0;
        if next < EPS_FLOOR {
            let w = *first_failing(&margins).unwrap_or(&margins[0]);
            return Ok(CertificateReport {
                passed: false,
                failing_lambda: Some(w.lambda),
                reason: Some(format!(
                    "no eps >= {EPS_FLOOR:e} certifies; first failing mode lambda = {} (positivity {:e}, domination {:e})",
                    w.lambda, w.positivity, w.domination
                )),
                alpha: params.alpha,
                beta: params.beta,
                coupling_bound: bound,
                case,
                uniform_gamma: dom,
                uniform_positivity: pos,
                eps_used: Some(lyap.eps),
                p_used: Some(lyap.p),
                halvings,
                lyapunov: Some(lyap),
                gamma_interval: Some(interval),
                per_mode_margins: margins,
            });
        }
        lyap.eps = next;
        halvings += 1;
    }
}

/// Passing set of `|α|/bound` fractions for [`certify`] on a uniform scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaScan {
    pub beta: f64,
    pub zeta_pert: f64,
    pub fractions: Vec<f64>,
    pub passed: Vec<bool>,
}

impl AlphaScan {
    /// Smallest and largest passing fraction.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.fractions.iter().zip(&self.passed).filter(|(_, &p)| p).map(|(f, _)| *f);
        let first = it.next()?;
        Some((first, it.next_back().unwrap_or(first)))
    }

    pub fn pass_count(&self) -> usize {
        self.passed.iter().filter(|&&p| p).count()
    }
}

/// Certifies `α = f·bound` for `f = k/n`, `k = 1..n−1`.
pub fn scan_alpha_fractions(
    beta: f64,
    damping_b: f64,
    zeta_pert: f64,
    spectrum: &Spectrum,
    lambda_grid: &[f64],
    n: usize,
) -> Result<AlphaScan> {
    let bound = coupling_bound(spectrum, beta)?;
    let fractions: Vec<f64> = (1..n).map(|k| k as f64 / n as f64).collect();
    let passed = fractions
        .par_iter()
        .map(|&f| {
            let p = SystemParams::new(f * bound, beta, damping_b, zeta_pert)?;
            Ok(certify(&p, spectrum, lambda_grid, None)?.passed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AlphaScan { beta, zeta_pert, fractions, passed })
}
