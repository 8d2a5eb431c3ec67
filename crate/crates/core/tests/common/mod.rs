//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use coupled_decay::linalg::Mat4;
use coupled_decay::propagator::ModalState;
use coupled_decay::Spectrum;
use rand::Rng;

pub fn dirichlet(n: usize) -> Spectrum {
    Spectrum::new((1..=n).map(|k| (k * k) as f64).collect(), "dirichlet").unwrap()
}

/// `λ₁·n²`, a Dirichlet spectrum rescaled to a given `λ₁`.
pub fn scaled_dirichlet(lambda1: f64, n: usize) -> Spectrum {
    Spectrum::new((1..=n).map(|k| lambda1 * (k * k) as f64).collect(), "scaled").unwrap()
}

pub fn random_vec4(rng: &mut impl Rng) -> [f64; 4] {
    [0; 4].map(|_| rng.gen_range(-1.0..=1.0))
}

pub fn random_state(rng: &mut impl Rng, n_modes: usize) -> ModalState {
    ModalState::new(0.0, (0..n_modes).map(|_| random_vec4(rng)).collect()).unwrap()
}

fn mv(m: &Mat4, x: &[f64; 4]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            y[i] += m[(i, j)] * x[j];
        }
    }
    y
}

fn axpy(a: f64, x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2], y[3] + a * x[3]]
}

/// Classical fourth-order Runge-Kutta for `x' = Mx` over `[0, t]`.
pub fn rk4(m: &Mat4, x0: &[f64; 4], t: f64, steps: usize) -> [f64; 4] {
    let h = t / steps as f64;
    let mut x = *x0;
    for _ in 0..steps {
        let k1 = mv(m, &x);
        let k2 = mv(m, &axpy(0.5 * h, &k1, &x));
        let k3 = mv(m, &axpy(0.5 * h, &k2, &x));
        let k4 = mv(m, &axpy(h, &k3, &x));
        for i in 0..4 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

/// RK4 with `n` and `2n` steps combined by Richardson extrapolation.
pub fn rk4_richardson(m: &Mat4, x0: &[f64; 4], t: f64, steps: usize) -> [f64; 4] {
    let coarse = rk4(m, x0, t, steps);
    let fine = rk4(m, x0, t, 2 * steps);
    [0, 1, 2, 3].map(|i| (16.0 * fine[i] - coarse[i]) / 15.0)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn flat(state: &ModalState) -> Vec<f64> {
    state.coeffs.iter().flatten().copied().collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
