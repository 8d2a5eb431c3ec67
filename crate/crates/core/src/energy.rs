//! Energies and weighted norms, all evaluated as weighted sums over modes.
//!
//! With `x = Σ xₙ eₙ`, every norm used here is `‖A^s x‖²_X = Σ λₙ^{2s+σ} xₙ²`
//! with `σ = 0, −1, −2` for `X = H, V', W'`. Each named quantity is a
//! [`WeightedForm`] and goes through the same evaluator.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::{self, LyapunovParams};
use crate::propagator::{ModalState, Trajectory};
use crate::spectral::{check_beta, Spectrum, SystemParams};

/// Position of a component in a modal row `(u, v, u', v')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    U = 0,
    V = 1,
    W = 2,
    Z = 3,
}

/// One term `coeff · λ^power · xᵢ xⱼ` (`i ≤ j`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormTerm {
    pub i: Component,
    pub j: Component,
    pub coeff: f64,
    pub power: f64,
}

/// `Q(x) = Σₙ Σ_terms coeff·λₙ^power·xₙ[i]·xₙ[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedForm {
    pub description: String,
    pub terms: Vec<FormTerm>,
}

impl WeightedForm {
    pub fn new(description: impl Into<String>) -> Self {
        WeightedForm { description: description.into(), terms: Vec::new() }
    }

    /// Adds a term; the pair is stored in canonical `i ≤ j` order.
    pub fn term(mut self, i: Component, j: Component, coeff: f64, power: f64) -> Self {
        let (i, j) = if (i as usize) <= (j as usize) { (i, j) } else { (j, i) };
        self.terms.push(FormTerm { i, j, coeff, power });
        self
    }

    /// Same form with every λ-power shifted by `s`, i.e. `Q(A^{s/2} ·)`.
    pub fn shifted(&self, s: f64, description: impl Into<String>) -> Self {
        WeightedForm {
            description: description.into(),
            terms: self.terms.iter().map(|t| FormTerm { power: t.power + s, ..*t }).collect(),
        }
    }

    pub fn mode_value(&self, lambda: f64, x: &[f64; 4]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * lambda.powf(t.power) * x[t.i as usize] * x[t.j as usize])
            .sum()
    }

    /// Sum over modes in ascending index order.
    pub fn evaluate(&self, state: &ModalState, spectrum: &Spectrum) -> Result<f64> {
        state.check_dims(spectrum)?;
        Ok(spectrum
            .eigenvalues()
            .iter()
            .zip(&state.coeffs)
            .map(|(&l, x)| self.mode_value(l, x))
            .sum())
    }
}

use Component::{U, V, W, Z};

/// Which of the two weak-norm families applies.
///
/// `Low` covers `β ∈ [0, 1]`, `High` covers `β ∈ [1, 3/2]`; both are valid at
/// `β = 1` where they coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaCase {
    Low,
    High,
}

impl BetaCase {
    pub fn for_beta(beta: f64) -> BetaCase {
        if beta <= 1.0 {
            BetaCase::Low
        } else {
            BetaCase::High
        }
    }

    pub fn covers(self, beta: f64) -> bool {
        match self {
            BetaCase::Low => (0.0..=1.0).contains(&beta),
            BetaCase::High => (1.0..=1.5).contains(&beta),
        }
    }

    /// The λ-power `s` with `Ẽ = Σ λ^s·Eₙ`: `β − 4` or `−β − 2`.
    pub fn tilde_shift(self, beta: f64) -> f64 {
        match self {
            BetaCase::Low => beta - 4.0,
            BetaCase::High => -beta - 2.0,
        }
    }

    /// λ-powers of the `K` weights for `(u, v, u', v')`.
    pub fn k_powers(self, beta: f64) -> [f64; 4] {
        let s = self.tilde_shift(beta);
        [s + 1.0, s + 2.0, s, s]
    }

    pub fn k_weights(self, beta: f64, lambda: f64) -> [f64; 4] {
        self.k_powers(beta).map(|p| lambda.powf(p))
    }
}

fn checked_case(beta: f64, case: BetaCase) -> Result<()> {
    check_beta(beta)?;
    if !case.covers(beta) {
        return Err(Error::Domain(format!("beta = {beta} is outside the {case:?} case")));
    }
    Ok(())
}

/// `E = ½[‖u'‖² + ‖v'‖² + ‖u‖²_V + ⟨A₂v, v⟩] + α⟨A^β v, u⟩`.
pub fn energy_form(params: &SystemParams) -> WeightedForm {
    let mut f = WeightedForm::new("E")
        .term(W, W, 0.5, 0.0)
        .term(Z, Z, 0.5, 0.0)
        .term(U, U, 0.5, 1.0)
        .term(V, V, 0.5, 2.0)
        .term(U, V, params.alpha, params.beta);
    if params.zeta_pert != 0.0 {
        f = f.term(V, V, 0.5 * params.zeta_pert, 1.0);
    }
    f
}

pub fn k_form(beta: f64, case: BetaCase) -> WeightedForm {
    let [pu, pv, pw, pz] = case.k_powers(beta);
    WeightedForm::new(format!("K ({case:?})"))
        .term(W, W, 1.0, pw)
        .term(Z, Z, 1.0, pz)
        .term(U, U, 1.0, pu)
        .term(V, V, 1.0, pv)
}

/// `Ẽ = Σ λ^s·Eₙ` with the case shift `s`; for `ζ_pert = 0` this is
/// `½K + α⟨A^{2β−2}v, u⟩_{W'}` (low case) or `½K + α⟨v, u⟩_{W'}` (high case).
pub fn tilde_e_form(params: &SystemParams, case: BetaCase) -> WeightedForm {
    energy_form(params).shifted(case.tilde_shift(params.beta), format!("tildeE ({case:?})"))
}

/// `d/dt Ẽ = −b·Σ λ^s w²`.
pub fn tilde_e_rate_form(params: &SystemParams, case: BetaCase) -> WeightedForm {
    WeightedForm::new(format!("tildeE' ({case:?})")).term(
        W,
        W,
        -params.damping_b,
        case.tilde_shift(params.beta),
    )
}

pub fn energy_e(state: &ModalState, params: &SystemParams, spectrum: &Spectrum) -> Result<f64> {
    energy_form(params).evaluate(state, spectrum)
}

/// `E' = −b‖u'‖²`.
pub fn energy_e_derivative(
    state: &ModalState,
    params: &SystemParams,
    spectrum: &Spectrum,
) -> Result<f64> {
    Ok(-params.damping_b * u_prime_norm_sq(state, spectrum)?)
}

pub fn k_energy(state: &ModalState, params: &SystemParams, spectrum: &Spectrum) -> Result<f64> {
    k_energy_case(state, params.beta, spectrum, BetaCase::for_beta(params.beta))
}

pub fn k_energy_case(
    state: &ModalState,
    beta: f64,
    spectrum: &Spectrum,
    case: BetaCase,
) -> Result<f64> {
    checked_case(beta, case)?;
    k_form(beta, case).evaluate(state, spectrum)
}

pub fn tilde_e(state: &ModalState, params: &SystemParams, spectrum: &Spectrum) -> Result<f64> {
    tilde_e_case(state, params, spectrum, BetaCase::for_beta(params.beta))
}

pub fn tilde_e_case(
    state: &ModalState,
    params: &SystemParams,
    spectrum: &Spectrum,
    case: BetaCase,
) -> Result<f64> {
    checked_case(params.beta, case)?;
    tilde_e_form(params, case).evaluate(state, spectrum)
}

pub fn tilde_e_derivative(
    state: &ModalState,
    params: &SystemParams,
    spectrum: &Spectrum,
) -> Result<f64> {
    let case = BetaCase::for_beta(params.beta);
    checked_case(params.beta, case)?;
    tilde_e_rate_form(params, case).evaluate(state, spectrum)
}

pub fn u_prime_norm_sq(state: &ModalState, spectrum: &Spectrum) -> Result<f64> {
    state.check_dims(spectrum)?;
    Ok(state.coeffs.iter().map(|x| x[2] * x[2]).sum())
}

/// Space in which a norm is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    H,
    VPrime,
    WPrime,
}

impl Pairing {
    fn sigma(self) -> f64 {
        match self {
            Pairing::H => 0.0,
            Pairing::VPrime => -1.0,
            Pairing::WPrime => -2.0,
        }
    }
}

/// `‖A^s x_c‖²` in the given pairing.
pub fn norm_sq(
    state: &ModalState,
    spectrum: &Spectrum,
    component: Component,
    s: f64,
    pairing: Pairing,
) -> Result<f64> {
    WeightedForm::new("norm")
        .term(component, component, 1.0, 2.0 * s + pairing.sigma())
        .evaluate(state, spectrum)
}

/// `‖u'‖² + ‖v'‖² + ‖u‖²_V + ‖v‖²_W`, the size of the data on the right of
/// the decay bound.
pub fn data_norm_sq(state: &ModalState, spectrum: &Spectrum) -> Result<f64> {
    WeightedForm::new("data")
        .term(W, W, 1.0, 0.0)
        .term(Z, Z, 1.0, 0.0)
        .term(U, U, 1.0, 1.0)
        .term(V, V, 1.0, 2.0)
        .evaluate(state, spectrum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySnapshot {
    pub time: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "tildeE")]
    pub tilde_e: f64,
    pub u_prime_norm_sq: f64,
}

pub fn snapshot(
    state: &ModalState,
    params: &SystemParams,
    spectrum: &Spectrum,
) -> Result<EnergySnapshot> {
    Ok(EnergySnapshot {
        time: state.time,
        e: energy_e(state, params, spectrum)?,
        k: k_energy(state, params, spectrum)?,
        tilde_e: tilde_e(state, params, spectrum)?,
        u_prime_norm_sq: u_prime_norm_sq(state, spectrum)?,
    })
}

/// Composite Simpson rule on a uniform grid; an odd number of intervals is
/// closed with Simpson's 3/8 rule on the last three.
pub fn simpson(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * dt * (values[0] + values[1]),
        _ => {
            let intervals = n - 1;
            let (even_end, tail) = if intervals.is_multiple_of(2) {
                (n - 1, 0.0)
            } else if intervals >= 3 {
                let k = n - 4;
                let t = 3.0 * dt / 8.0
                    * (values[k] + 3.0 * values[k + 1] + 3.0 * values[k + 2] + values[k + 3]);
                (k, t)
            } else {
                unreachable!()
            };
            let mut s = 0.0;
            let mut i = 0;
            while i + 2 <= even_end {
                s += values[i] + 4.0 * values[i + 1] + values[i + 2];
                i += 2;
            }
            s * dt / 3.0 + tail
        }
    }
}

/// Named time series that can be exported as CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "E")]
    E,
    #[serde(rename = "K")]
    K,
    #[serde(rename = "tildeE")]
    TildeE,
    #[serde(rename = "u_prime_sq")]
    UPrimeSq,
    #[serde(rename = "H_eps")]
    HEps,
}

impl Observable {
    pub const ALL: [Observable; 5] =
        [Observable::E, Observable::K, Observable::TildeE, Observable::UPrimeSq, Observable::HEps];

    pub fn name(self) -> &'static str {
        match self {
            Observable::E => "E",
            Observable::K => "K",
            Observable::TildeE => "tildeE",
            Observable::UPrimeSq => "u_prime_sq",
            Observable::HEps => "H_eps",
        }
    }

    pub fn evaluate(
        self,
        state: &ModalState,
        params: &SystemParams,
        spectrum: &Spectrum,
        lyap: Option<&LyapunovParams>,
    ) -> Result<f64> {
        match self {
            Observable::E => energy_e(state, params, spectrum),
            Observable::K => k_energy(state, params, spectrum),
            Observable::TildeE => tilde_e(state, params, spectrum),
            Observable::UPrimeSq => u_prime_norm_sq(state, spectrum),
            Observable::HEps => {
                let lyap = lyap.ok_or_else(|| {
                    Error::Domain("H_eps needs certified Lyapunov parameters".into())
                })?;
                lyapunov::h_eps(state, params, lyap, spectrum)
            }
        }
    }
}

impl FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL.into_iter().find(|o| o.name() == s.trim()).ok_or_else(|| {
            let names: Vec<_> = Observable::ALL.iter().map(|o| o.name()).collect();
            Error::Domain(format!("unknown observable '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// Values of one observable at every trajectory sample.
pub fn series(
    traj: &Trajectory,
    observable: Observable,
    lyap: Option<&LyapunovParams>,
) -> Result<Vec<f64>> {
    traj.states
        .iter()
        .map(|s| observable.evaluate(s, &traj.params, &traj.spectrum, lyap))
        .collect()
}

/// CSV with a `time` column followed by one column per observable.
pub fn observables_csv(
    traj: &Trajectory,
    observables: &[Observable],
    lyap: Option<&LyapunovParams>,
) -> Result<String> {
    let columns = observables
        .iter()
        .map(|&o| series(traj, o, lyap))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("time");
    for o in observables {
        out.push(',');
        out.push_str(o.name());
    }
    out.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        write!(out, "{t}").unwrap();
        for col in &columns {
            write!(out, ",{}", col[k]).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}
