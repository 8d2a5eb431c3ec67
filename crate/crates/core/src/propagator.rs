//! Exact time evolution of the modal blocks.
//!
//! The system is linear with constant coefficients, so the solution operator
//! of mode `λ` over a step `dt` is `exp(dt·M(λ))`. Each step operator is formed
//! once and reused for the whole uniform grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mat_vec, Mat4};
use crate::spectral::{mode_matrix, Spectrum, SystemParams};

/// Padé [13/13] numerator coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
/// Largest 1-norm for which the [13/13] approximant reaches double precision.
const THETA13: f64 = 5.371920351148152;

fn norm1(m: &Mat4) -> f64 {
    (0..4).map(|j| (0..4).map(|i| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Power-of-two diagonal `d` such that `D⁻¹AD` has comparable off-diagonal
/// row and column norms (Parlett-Reinsch). The scaling is exact in floating
/// point.
fn balance(a: &Mat4) -> [f64; 4] {
    let mut d = [1.0; 4];
    let mut m = *a;
    for _ in 0..100 {
        let mut converged = true;
        for i in 0..4 {
            let c: f64 = (0..4).filter(|&j| j != i).map(|j| m[(j, i)].abs()).sum();
            let r: f64 = (0..4).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let (mut cs, mut rs, mut f) = (c, r, 1.0);
            while cs < rs / 2.0 {
                cs *= 2.0;
                rs /= 2.0;
                f *= 2.0;
            }
            while cs >= rs * 2.0 {
                cs /= 2.0;
                rs *= 2.0;
                f /= 2.0;
            }
            if cs + rs < 0.95 * (c + r) {
                converged = false;
                d[i] *= f;
                for j in 0..4 {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
    d
}

/// `exp(dt·M)` by balancing, then scaling and squaring with a degree-13 Padé
/// kernel.
pub fn expm4(matrix: &Mat4, dt: f64) -> Result<Mat4> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::Domain(format!("expm4 needs a finite dt >= 0, got {dt}")));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("expm4 needs finite matrix entries".into()));
    }
    let d = balance(matrix);
    let a = Mat4::from_fn(|i, j| matrix[(i, j)] * d[j] / d[i]) * dt;
    let n = norm1(&a);
    if !n.is_finite() {
        return Err(Error::Range(format!("‖dt·M‖ overflows (dt = {dt})")));
    }
    let squarings = if n > THETA13 { (n / THETA13).log2().ceil() as i32 } else { 0 };
    if squarings > 1000 {
        return Err(Error::Range(format!("‖dt·M‖ = {n:e} is out of range")));
    }
    let a = a * 0.5f64.powi(squarings);

    let id = Mat4::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let b = &PADE13;
    let u_inner = a6 * (a6 * b[13] + a4 * b[11] + a2 * b[9]) + a6 * b[7] + a4 * b[5] + a2 * b[3] + id * b[1];
    let u = a * u_inner;
    let v = a6 * (a6 * b[12] + a4 * b[10] + a2 * b[8]) + a6 * b[6] + a4 * b[4] + a2 * b[2] + id * b[0];

    let lu = (v - u).lu();
    let mut r = lu
        .solve(&(v + u))
        .ok_or_else(|| Error::Range("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = r * r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Range(format!("exp(dt·M) overflows (‖dt·M‖₁ = {n:e})")));
    }
    let r = Mat4::from_fn(|i, j| d[i] * r[(i, j)] / d[j]);
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Range("exp(dt·M) overflows after unbalancing".into()));
    }
    Ok(r)
}

/// Coefficients of the state in the eigenbasis at one instant; row `n` is
/// `(uₙ, vₙ, u'ₙ, v'ₙ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalState {
    pub time: f64,
    pub coeffs: Vec<[f64; 4]>,
}

impl ModalState {
    pub fn new(time: f64, coeffs: Vec<[f64; 4]>) -> Result<Self> {
        if coeffs.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("state coefficients must be finite".into()));
        }
        Ok(ModalState { time, coeffs })
    }

    pub fn zeros(n_modes: usize) -> Self {
        ModalState { time: 0.0, coeffs: vec![[0.0; 4]; n_modes] }
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn scaled(&self, c: f64) -> Self {
        ModalState {
            time: self.time,
            coeffs: self.coeffs.iter().map(|r| r.map(|x| c * x)).collect(),
        }
    }

    pub fn check_dims(&self, spectrum: &Spectrum) -> Result<()> {
        if self.n_modes() != spectrum.n_modes() {
            return Err(Error::Dimension { expected: spectrum.n_modes(), got: self.n_modes() });
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(|&x| x == 0.0)
    }
}

/// Per-mode step operators `exp(dt·M(λₙ))` for a fixed step.
#[derive(Debug, Clone)]
pub struct StepOperator {
    dt: f64,
    blocks: Vec<Mat4>,
}

impl StepOperator {
    pub fn new(params: &SystemParams, spectrum: &Spectrum, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("time step must be > 0, got {dt}")));
        }
        let blocks = spectrum
            .eigenvalues()
            .iter()
            .map(|&l| expm4(&mode_matrix(l, params).entries, dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(StepOperator { dt, blocks })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn apply(&self, state: &ModalState) -> Result<ModalState> {
        if state.n_modes() != self.blocks.len() {
            return Err(Error::Dimension { expected: self.blocks.len(), got: state.n_modes() });
        }
        let coeffs = self.blocks.iter().zip(&state.coeffs).map(|(m, x)| mat_vec(m, x)).collect();
        Ok(ModalState { time: state.time + self.dt, coeffs })
    }
}

pub fn propagate(
    state: &ModalState,
    params: &SystemParams,
    spectrum: &Spectrum,
    dt: f64,
) -> Result<ModalState> {
    state.check_dims(spectrum)?;
    StepOperator::new(params, spectrum, dt)?.apply(state)
}

/// Samples of one solution on a uniform grid starting at `t = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ModalState>,
    pub params: SystemParams,
    pub spectrum: Spectrum,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn final_state(&self) -> &ModalState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }
}

pub fn run_trajectory(
    init: &ModalState,
    params: &SystemParams,
    spectrum: &Spectrum,
    t_end: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    params.validate()?;
    init.check_dims(spectrum)?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Domain(format!("t_end must be > 0, got {t_end}")));
    }
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be >= 1".into()));
    }
    let dt = t_end / n_steps as f64;
    let step = StepOperator::new(params, spectrum, dt)?;

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut current = ModalState { time: 0.0, coeffs: init.coeffs.clone() };
    times.push(0.0);
    states.push(current.clone());
    for k in 1..=n_steps {
        current = step.apply(&current)?;
        // grid times are k·dt, not an accumulated sum
        current.time = if k == n_steps { t_end } else { k as f64 * dt };
        times.push(current.time);
        states.push(current.clone());
    }
    Ok(Trajectory { times, states, params: *params, spectrum: spectrum.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel_err(a: &Mat4, b: &Mat4) -> f64 {
        norm1(&(a - b)) / norm1(b).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(expm4(&Mat4::zeros(), 5.0).unwrap(), Mat4::identity());
        let m = Mat4::from_fn(|i, j| (i as f64 + 1.0) * 0.3 - j as f64);
        assert_eq!(expm4(&m, 0.0).unwrap(), Mat4::identity());
    }

    #[test]
    fn diagonal_exponential() {
        let m = Mat4::from_diagonal(&nalgebra::Vector4::new(-1.0, -2.0, -3.0, -4.0));
        let e = expm4(&m, 1.0).unwrap();
        let expect = Mat4::from_diagonal(&nalgebra::Vector4::new(
            (-1.0f64).exp(),
            (-2.0f64).exp(),
            (-3.0f64).exp(),
            (-4.0f64).exp(),
        ));
        assert!(rel_err(&e, &expect) < 1e-14);
    }

    #[test]
    fn half_period_of_undamped_oscillator_flips_v_block() {
        let p = SystemParams { alpha: 0.0, beta: 1.0, damping_b: 0.0, zeta_pert: 0.0 };
        // damping_b = 0 is not a valid SystemParams but mode_matrix is a pure formula
        let e = expm4(&mode_matrix(1.0, &p).entries, PI).unwrap();
        // analytic: v(t) = v₀ cos t + z₀ sin t, z(t) = −v₀ sin t + z₀ cos t
        assert!((e[(1, 1)] + 1.0).abs() < 1e-13);
        assert!((e[(3, 3)] + 1.0).abs() < 1e-13);
        assert!(e[(1, 3)].abs() < 1e-13 && e[(3, 1)].abs() < 1e-13);
    }

    #[test]
    fn large_norm_is_handled_by_squaring() {
        // exp(t·J) for a rotation generator stays orthogonal for large t
        let mut m = Mat4::zeros();
        m[(0, 1)] = 1.0;
        m[(1, 0)] = -1.0;
        let t = 1000.0;
        let e = expm4(&m, t).unwrap();
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-10);
        assert!((e[(0, 1)] - t.sin()).abs() < 1e-10);
    }

    #[test]
    fn overflow_reports_range_error() {
        let m = Mat4::identity();
        assert!(matches!(expm4(&m, 1e6), Err(Error::Range(_))));
        assert!(matches!(expm4(&m, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn damped_single_mode_matches_closed_form() {
        // u'' + u' + 2u = 0, u(0)=1, u'(0)=0: roots (−1 ± i√7)/2
        let sp = Spectrum::new(vec![2.0], "one").unwrap();
        let p = SystemParams { alpha: 0.0, beta: 1.0, damping_b: 1.0, zeta_pert: 0.0 };
        let init = ModalState::new(0.0, vec![[1.0, 0.0, 0.0, 0.0]]).unwrap();
        let out = propagate(&init, &p, &sp, 1.0).unwrap();
        let w = 7f64.sqrt() / 2.0;
        let t = 1.0f64;
        let u = (-t / 2.0).exp() * ((w * t).cos() + (w * t).sin() / (2.0 * w));
        assert!((out.coeffs[0][0] - u).abs() < 1e-10);
        assert_eq!(out.time, 1.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let sp = Spectrum::new(vec![1.0, 4.0], "two").unwrap();
        let p = SystemParams { alpha: 0.1, beta: 1.0, damping_b: 1.0, zeta_pert: 0.0 };
        let err = propagate(&ModalState::zeros(3), &p, &sp, 0.1).unwrap_err();
        assert_eq!(err, Error::Dimension { expected: 2, got: 3 });
    }

    #[test]
    fn zero_state_stays_zero() {
        let sp = Spectrum::new(vec![1.0, 4.0], "two").unwrap();
        let p = SystemParams { alpha: 0.4, beta: 1.0, damping_b: 1.0, zeta_pert: 0.0 };
        let out = propagate(&ModalState::zeros(2), &p, &sp, 0.7).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn one_step_trajectory_equals_propagate() {
        let sp = Spectrum::new(vec![1.0, 4.0, 9.0], "three").unwrap();
        let p = SystemParams { alpha: 0.3, beta: 0.5, damping_b: 1.0, zeta_pert: 0.0 };
        let init = ModalState::new(0.0, vec![[1.0, -0.5, 0.2, 0.1]; 3]).unwrap();
        let traj = run_trajectory(&init, &p, &sp, 1.0, 1).unwrap();
        let direct = propagate(&init, &p, &sp, 1.0).unwrap();
        assert_eq!(traj.final_state(), &direct);
        assert_eq!(traj.times, vec![0.0, 1.0]);
    }
}
