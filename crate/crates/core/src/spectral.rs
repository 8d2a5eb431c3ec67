//! Operator model: a truncated spectrum of `A`, the system parameters and the
//! per-mode first-order dynamics matrix.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat4;

/// Sorted positive eigenvalues `λ₁ ≤ λ₂ ≤ … ≤ λ_N` of `A`.
///
/// `λ₁` is the sharp coercivity constant, `⟨Au, u⟩ ≥ λ₁ ⟨u, u⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumDoc", into = "SpectrumDoc")]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    label: String,
}

/// On-disk form: `{"label": "...", "eigenvalues": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumDoc {
    #[serde(default)]
    pub label: String,
    pub eigenvalues: Vec<f64>,
}

impl TryFrom<SpectrumDoc> for Spectrum {
    type Error = Error;
    fn try_from(doc: SpectrumDoc) -> Result<Self> {
        Spectrum::new(doc.eigenvalues, doc.label)
    }
}

impl From<Spectrum> for SpectrumDoc {
    fn from(s: Spectrum) -> Self {
        SpectrumDoc { label: s.label, eigenvalues: s.eigenvalues }
    }
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidSpectrum("no eigenvalues".into()));
        }
        for (i, &l) in eigenvalues.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidSpectrum(format!(
                    "eigenvalue #{i} = {l} is not a finite positive number"
                )));
            }
        }
        if let Some(i) = eigenvalues.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidSpectrum(format!(
                "eigenvalues not sorted: λ[{}] = {} > λ[{}] = {}",
                i,
                eigenvalues[i],
                i + 1,
                eigenvalues[i + 1]
            )));
        }
        Ok(Spectrum { eigenvalues, label: label.into() })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: SpectrumDoc = serde_json::from_str(text)
            .map_err(|e| Error::InvalidSpectrum(format!("malformed spectrum document: {e}")))?;
        Spectrum::try_from(doc)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidSpectrum(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpectrumDoc::from(self.clone()))
            .expect("spectrum serialization is infallible")
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The first `n` modes (clamped to at least one).
    pub fn truncated(&self, n: usize) -> Spectrum {
        let n = n.clamp(1, self.n_modes());
        Spectrum {
            eigenvalues: self.eigenvalues[..n].to_vec(),
            label: format!("{} [first {n}]", self.label),
        }
    }
}

/// Coupling `α`, exponent `β`, scalar damping `b` (`B = b·Id`) and the
/// diagonal perturbation `A₂ = A² + ζ_pert·A`.
///
/// `α = 0` is representable (it is the conservation control) but is never
/// admissible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub alpha: f64,
    pub beta: f64,
    pub damping_b: f64,
    #[serde(default)]
    pub zeta_pert: f64,
}

pub const BETA_MAX: f64 = 1.5;

impl SystemParams {
    pub fn new(alpha: f64, beta: f64, damping_b: f64, zeta_pert: f64) -> Result<Self> {
        let p = SystemParams { alpha, beta, damping_b, zeta_pert };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::Domain(format!("alpha = {} is not finite", self.alpha)));
        }
        check_beta(self.beta)?;
        if !(self.damping_b.is_finite() && self.damping_b > 0.0) {
            return Err(Error::Domain(format!("damping_b = {} must be > 0", self.damping_b)));
        }
        if !(self.zeta_pert.is_finite() && self.zeta_pert >= 0.0) {
            return Err(Error::Domain(format!("zeta_pert = {} must be >= 0", self.zeta_pert)));
        }
        Ok(())
    }

    /// `αλ^β`, the modal coupling coefficient.
    pub fn coupling_at(&self, lambda: f64) -> f64 {
        self.alpha * lambda.powf(self.beta)
    }

    /// `λ² + ζ_pert·λ`, the eigenvalue of `A₂` on the mode.
    pub fn a2_at(&self, lambda: f64) -> f64 {
        lambda * lambda + self.zeta_pert * lambda
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && (0.0..=BETA_MAX).contains(&beta)) {
        return Err(Error::Domain(format!("beta = {beta} must lie in [0, 3/2]")));
    }
    Ok(())
}

/// `λ₁^{(3−2β)/2}`: the strict upper bound on `|α|`.
pub fn coupling_bound(spectrum: &Spectrum, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(spectrum.lambda1().powf((3.0 - 2.0 * beta) / 2.0))
}

pub fn is_admissible(params: &SystemParams, spectrum: &Spectrum) -> bool {
    match coupling_bound(spectrum, params.beta) {
        Ok(bound) => params.alpha != 0.0 && params.alpha.abs() < bound,
        Err(_) => false,
    }
}

/// `(λₙ^s)ₙ`, the diagonal of `A^s` in the eigenbasis.
pub fn frac_power_weights(spectrum: &Spectrum, s: f64) -> Vec<f64> {
    spectrum.eigenvalues().iter().map(|l| l.powf(s)).collect()
}

/// Determinant of the potential-energy block of mode `λ`:
/// `λ(λ² + ζ_pert λ) − α²λ^{2β}`. Positive iff the modal energy is definite.
pub fn potential_determinant(lambda: f64, params: &SystemParams) -> f64 {
    let c = params.coupling_at(lambda);
    lambda * params.a2_at(lambda) - c * c
}

/// First-order dynamics of one mode over the state ordering `(u, v, u', v')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMatrix {
    pub lambda: f64,
    pub entries: Mat4,
}

pub fn mode_matrix(lambda: f64, params: &SystemParams) -> ModeMatrix {
    let c = params.coupling_at(lambda);
    let entries = Mat4::new(
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        -lambda, -c, -params.damping_b, 0.0, //
        -c, -params.a2_at(lambda), 0.0, 0.0,
    );
    ModeMatrix { lambda, entries }
}
