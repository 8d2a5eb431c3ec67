//! The scalar model problem
//!
//! ```text
//! u'' + u' + λu + cv = 0,     v'' + μv + cu = 0,     0 < c² < λμ,
//! ```
//!
//! with its explicit Lyapunov function
//! `H_ε = ℰ − εvv' + 2εuu' + (3ε/2c)(μu'v − λuv')`.
//!
//! Unit damping loses no generality: for `u'' + bu' + …` the rescaling
//! `s = bt` gives unit damping with `λ/b², μ/b², c/b²`.
//!
//! States are ordered `(u, v, u', v')` as in the modal blocks. The exponential
//! rate of `K` is checked against twice the spectral abscissa of the
//! companion matrix, computed independently by a Schur decomposition.

use serde::{Deserialize, Serialize};

use crate::decay::least_squares_slope;
use crate::error::{Error, Result};
use crate::linalg::{min_generalized_eigenvalue, quad_form, Mat4};
use crate::propagator::expm4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarParams {
    pub lambda: f64,
    pub mu: f64,
    pub c: f64,
}

impl ScalarParams {
    pub fn new(lambda: f64, mu: f64, c: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0 && mu.is_finite() && mu > 0.0) {
            return Err(Error::Domain(format!("need lambda, mu > 0 (got {lambda}, {mu})")));
        }
        if !(c.is_finite() && c != 0.0 && c * c < lambda * mu) {
            return Err(Error::Domain(format!(
                "need 0 < c^2 < lambda*mu (c^2 = {}, lambda*mu = {})",
                c * c,
                lambda * mu
            )));
        }
        Ok(ScalarParams { lambda, mu, c })
    }
}

/// `(ℰ, K)`; `ℰ − K = c·u·v`.
pub fn scalar_energy(x: &[f64; 4], p: &ScalarParams) -> (f64, f64) {
    let [u, v, w, z] = *x;
    let k = 0.5 * (w * w + z * z + p.lambda * u * u + p.mu * v * v);
    (k + p.c * u * v, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarConstants {
    pub c1: f64,
    pub c2: f64,
    /// Root of `C₁(ε) = 0`.
    pub eps1: f64,
}

/// Sandwich constants `C₁(ε) K ≤ H_ε ≤ C₂(ε) K`.
pub fn scalar_c1_c2_eps1(p: &ScalarParams, eps: f64) -> ScalarConstants {
    let (sl, sm) = (p.lambda.sqrt(), p.mu.sqrt());
    let root = (p.lambda * p.mu).sqrt();
    let ac = p.c.abs();
    let slope = 2.0 / sl.min(sm) + 1.5 / ac * sl.max(sm);
    let lower = (root - ac) / root;
    ScalarConstants {
        c1: lower - eps * slope,
        c2: (root + ac) / root + eps * slope,
        eps1: lower / slope,
    }
}

/// Smallest Young constants `c₁, c₂, c₃` in
/// `|2uu'| ≤ (λμ−c²)/(8μ)·u² + c₁u'²`,
/// `(3/2|c|)|μu'v| ≤ (λμ−c²)/(8λ)·v² + c₂u'²`,
/// `(3/2|c|)|μ−λ||u'v'| ≤ ½v'² + c₃u'²`.
pub fn scalar_young_constants(p: &ScalarParams) -> [f64; 3] {
    let gap = p.lambda * p.mu - p.c * p.c;
    let c2sq = p.c * p.c;
    [
        8.0 * p.mu / gap,
        4.5 * p.lambda * p.mu * p.mu / (c2sq * gap),
        9.0 * (p.mu - p.lambda).powi(2) / (8.0 * c2sq),
    ]
}

/// `u'' + u' + λu + cv = 0`, `v'' + μv + cu = 0` as a first-order system.
pub fn companion_matrix(lambda: f64, mu: f64, c: f64) -> Mat4 {
    Mat4::new(
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        -lambda, -c, -1.0, 0.0, //
        -c, -mu, 0.0, 0.0,
    )
}

/// Largest real part of the eigenvalues.
pub fn spectral_abscissa(m: &Mat4) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// `2·abscissa`: the exponential rate of any quadratic energy. No validation,
/// so it also serves for the unstable control `c² ≥ λμ`.
pub fn oracle_rate(lambda: f64, mu: f64, c: f64) -> f64 {
    2.0 * spectral_abscissa(&companion_matrix(lambda, mu, c))
}

/// Symmetric `S` with `H_ε = xᵀSx`.
pub fn scalar_h_matrix(p: &ScalarParams, eps: f64) -> Mat4 {
    let k = 1.5 * eps / p.c;
    let mut s = Mat4::from_diagonal(&[0.5 * p.lambda, 0.5 * p.mu, 0.5, 0.5].into());
    let mut put = |i: usize, j: usize, v: f64| {
        s[(i, j)] += v;
        s[(j, i)] += v;
    };
    put(0, 1, 0.5 * p.c);
    put(1, 3, -0.5 * eps);
    put(0, 2, eps);
    put(1, 2, 0.5 * k * p.mu);
    put(0, 3, -0.5 * k * p.lambda);
    s
}

pub fn scalar_h_eps(x: &[f64; 4], p: &ScalarParams, eps: f64) -> Result<f64> {
    if p.c == 0.0 {
        return Err(Error::Domain("H_eps divides by the coupling c".into()));
    }
    Ok(quad_form(&scalar_h_matrix(p, eps), x))
}

/// Symmetric `D` with `−H_ε' = xᵀDx` along the flow.
pub fn scalar_dissipation_matrix(p: &ScalarParams, eps: f64) -> Mat4 {
    let s = scalar_h_matrix(p, eps);
    let m = companion_matrix(p.lambda, p.mu, p.c);
    -(s * m + m.transpose() * s)
}

pub fn scalar_h_eps_derivative(x: &[f64; 4], p: &ScalarParams, eps: f64) -> f64 {
    -quad_form(&scalar_dissipation_matrix(p, eps), x)
}

fn k_weights(p: &ScalarParams) -> [f64; 4] {
    [0.5 * p.lambda, 0.5 * p.mu, 0.5, 0.5]
}

/// Largest `C₃` with `−H_ε' ≥ C₃ K` for every state.
pub fn scalar_dissipation_margin(p: &ScalarParams, eps: f64) -> f64 {
    min_generalized_eigenvalue(&scalar_dissipation_matrix(p, eps), &k_weights(p))
}

/// Largest `c` with `H_ε ≥ c K` for every state.
pub fn scalar_positivity_margin(p: &ScalarParams, eps: f64) -> f64 {
    min_generalized_eigenvalue(&scalar_h_matrix(p, eps), &k_weights(p))
}

/// A working `ε`: starts at `min(ε₁/2, 1/(2(2 + c₁ + c₂ + c₃)))` and halves
/// until `−H_ε'` dominates `K`.
pub fn select_scalar_eps(p: &ScalarParams) -> Result<f64> {
    let eps1 = scalar_c1_c2_eps1(p, 0.0).eps1;
    let young: f64 = scalar_young_constants(p).iter().sum();
    let mut eps = (0.5 * eps1).min(0.5 / (2.0 + young));
    while eps >= 1e-12 {
        if scalar_dissipation_margin(p, eps) > 0.0 {
            return Ok(eps);
        }
        eps *= 0.5;
    }
    Err(Error::Certificate("no eps makes -H_eps' dominate K".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 4]>,
}

pub fn simulate_scalar(
    p: &ScalarParams,
    init: &[f64; 4],
    t_end: f64,
    n_steps: usize,
) -> Result<ScalarTrajectory> {
    if !(t_end.is_finite() && t_end > 0.0) || n_steps == 0 {
        return Err(Error::Domain(format!("need t_end > 0 and n_steps >= 1 (got {t_end}, {n_steps})")));
    }
    let dt = t_end / n_steps as f64;
    let step = expm4(&companion_matrix(p.lambda, p.mu, p.c), dt)?;
    let mut times = vec![0.0];
    let mut states = vec![*init];
    let mut x = *init;
    for k in 1..=n_steps {
        x = crate::linalg::mat_vec(&step, &x);
        times.push(if k == n_steps { t_end } else { k as f64 * dt });
        states.push(x);
    }
    Ok(ScalarTrajectory { times, states })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    /// Slope of `ln K` over `[t_end/2, t_end]`.
    pub measured_rate: f64,
    /// `2 × spectral abscissa`.
    pub oracle_rate: f64,
}

impl DecayCheck {
    pub fn relative_error(&self) -> f64 {
        ((self.measured_rate - self.oracle_rate) / self.oracle_rate).abs()
    }
}

pub fn scalar_decay_check(
    p: &ScalarParams,
    init: &[f64; 4],
    t_end: f64,
    n_steps: usize,
) -> Result<DecayCheck> {
    if scalar_energy(init, p).1 == 0.0 {
        return Err(Error::Domain("K(0) = 0: the zero state has no decay rate".into()));
    }
    let traj = simulate_scalar(p, init, t_end, n_steps)?;
    let (ts, logs): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(&t, _)| t >= 0.5 * t_end)
        .map(|(&t, x)| (t, scalar_energy(x, p).1.ln()))
        .filter(|(_, l)| l.is_finite())
        .unzip();
    if ts.len() < 2 {
        return Err(Error::Domain("too few tail samples to fit a rate".into()));
    }
    Ok(DecayCheck {
        measured_rate: least_squares_slope(&ts, &logs),
        oracle_rate: oracle_rate(p.lambda, p.mu, p.c),
    })
}

/// Real part of the eigenvector for the eigenvalue of largest real part.
///
/// For the companion structure the eigenvector of `s` is
/// `(1, −(s² + s + λ)/c, s, s·v)`.
pub fn slowest_mode_init(p: &ScalarParams) -> [f64; 4] {
    let eig = companion_matrix(p.lambda, p.mu, p.c).complex_eigenvalues();
    let s = eig
        .iter()
        .copied()
        .max_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()))
        .expect("4 eigenvalues");
    let one = nalgebra::Complex::new(1.0, 0.0);
    let v = -(s * s + s + p.lambda) / p.c;
    [one.re, v.re, s.re, (s * v).re]
}

/// CSV with columns `t,u,v,u',v',E,K,H_eps`.
pub fn scalar_csv(p: &ScalarParams, eps: f64, traj: &ScalarTrajectory) -> Result<String> {
    let mut out = String::from("t,u,v,u',v',E,K,H_eps\n");
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let (e, k) = scalar_energy(x, p);
        let h = scalar_h_eps(x, p, eps)?;
        out.push_str(&format!("{t},{},{},{},{},{e},{k},{h}\n", x[0], x[1], x[2], x[3]));
    }
    Ok(out)
}
