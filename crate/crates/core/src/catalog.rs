//! Spectra of the worked examples at desk scale.
//!
//! Presets use the form `dirichlet:N=64`, `neumann:N=64,rho1=1.0` and
//! `perturbed:N=64,zeta=2.0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleKind {
    /// `−u''` on `(0, π)` with Dirichlet conditions: `λₙ = n²`.
    DirichletLaplacian1d,
    /// `−u'' + ρ₁u` on `(0, π)` with Neumann conditions: `λₙ = (n−1)² + ρ₁`.
    NeumannShifted1d,
    /// Dirichlet spectrum with `A₂ = A² + ζ·A`; `ζ` goes into the system
    /// parameters.
    PerturbedA2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleSpec {
    pub kind: ExampleKind,
    pub n_modes: usize,
    #[serde(default)]
    pub rho1: f64,
    #[serde(default)]
    pub zeta_pert: f64,
}

impl ExampleSpec {
    pub fn dirichlet(n_modes: usize) -> Self {
        ExampleSpec { kind: ExampleKind::DirichletLaplacian1d, n_modes, rho1: 0.0, zeta_pert: 0.0 }
    }

    pub fn neumann(n_modes: usize, rho1: f64) -> Self {
        ExampleSpec { kind: ExampleKind::NeumannShifted1d, n_modes, rho1, zeta_pert: 0.0 }
    }

    pub fn perturbed(n_modes: usize, zeta_pert: f64) -> Self {
        ExampleSpec { kind: ExampleKind::PerturbedA2, n_modes, rho1: 0.0, zeta_pert }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::Domain("N must be >= 1".into()));
        }
        if self.kind == ExampleKind::NeumannShifted1d && !(self.rho1 > 0.0 && self.rho1.is_finite()) {
            return Err(Error::Domain(format!("rho1 = {} must be > 0", self.rho1)));
        }
        if !(self.zeta_pert >= 0.0 && self.zeta_pert.is_finite()) {
            return Err(Error::Domain(format!("zeta = {} must be >= 0", self.zeta_pert)));
        }
        Ok(())
    }
}

pub fn generate_spectrum(spec: &ExampleSpec) -> Result<Spectrum> {
    spec.validate()?;
    let n = spec.n_modes;
    let (eigs, label): (Vec<f64>, String) = match spec.kind {
        ExampleKind::DirichletLaplacian1d => {
            ((1..=n).map(|k| (k * k) as f64).collect(), format!("dirichlet:N={n}"))
        }
        ExampleKind::NeumannShifted1d => (
            (0..n).map(|k| (k * k) as f64 + spec.rho1).collect(),
            format!("neumann:N={n},rho1={}", spec.rho1),
        ),
        ExampleKind::PerturbedA2 => (
            (1..=n).map(|k| (k * k) as f64).collect(),
            format!("perturbed:N={n},zeta={}", spec.zeta_pert),
        ),
    };
    Spectrum::new(eigs, label)
}

/// Extremal ratios `(ν₁, ν₂)` of `⟨A₂u,u⟩ / ⟨A²u,u⟩` for `A₂ = A² + ζA`.
pub fn remark_pert_ratio(spectrum: &Spectrum, zeta_pert: f64) -> Result<(f64, f64)> {
    if !(zeta_pert >= 0.0 && zeta_pert.is_finite()) {
        return Err(Error::Domain(format!("zeta = {zeta_pert} must be >= 0")));
    }
    Ok((1.0, 1.0 + zeta_pert / spectrum.lambda1()))
}

impl fmt::Display for ExampleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ExampleKind::DirichletLaplacian1d => write!(f, "dirichlet:N={}", self.n_modes),
            ExampleKind::NeumannShifted1d => write!(f, "neumann:N={},rho1={}", self.n_modes, self.rho1),
            ExampleKind::PerturbedA2 => write!(f, "perturbed:N={},zeta={}", self.n_modes, self.zeta_pert),
        }
    }
}

impl FromStr for ExampleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut spec = match kind {
            "dirichlet" => ExampleSpec::dirichlet(64),
            "neumann" => ExampleSpec::neumann(64, 1.0),
            "perturbed" => ExampleSpec::perturbed(64, 2.0),
            _ => {
                return Err(Error::Domain(format!(
                    "unknown example '{kind}' (expected dirichlet, neumann, perturbed)"
                )))
            }
        };
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Domain(format!("expected key=value, got '{kv}'")))?;
            let bad = || Error::Domain(format!("bad value for {k}: '{v}'"));
            match (k.trim(), spec.kind) {
                ("N", _) => spec.n_modes = v.trim().parse().map_err(|_| bad())?,
                ("rho1", ExampleKind::NeumannShifted1d) => spec.rho1 = v.trim().parse().map_err(|_| bad())?,
                ("zeta", ExampleKind::PerturbedA2) => spec.zeta_pert = v.trim().parse().map_err(|_| bad())?,
                _ => return Err(Error::Domain(format!("key '{k}' does not apply to {kind}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::coupling_bound;

    #[test]
    fn spectra_examples() {
        assert_eq!(generate_spectrum(&ExampleSpec::dirichlet(3)).unwrap().eigenvalues(), &[1.0, 4.0, 9.0]);
        assert_eq!(
            generate_spectrum(&ExampleSpec::neumann(3, 0.5)).unwrap().eigenvalues(),
            &[0.5, 1.5, 4.5]
        );
        assert_eq!(
            generate_spectrum(&ExampleSpec::perturbed(2, 2.0)).unwrap().eigenvalues(),
            &[1.0, 4.0]
        );
    }

    #[test]
    fn vanishing_shift_shrinks_the_bound() {
        let mut prev = f64::INFINITY;
        for rho in [1.0, 1e-2, 1e-4, 1e-8] {
            let s = generate_spectrum(&ExampleSpec::neumann(4, rho)).unwrap();
            let b = coupling_bound(&s, 1.0).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-3);
        assert!(ExampleSpec::neumann(4, 0.0).validate().is_err());
    }

    #[test]
    fn pert_ratio_examples() {
        let s1 = generate_spectrum(&ExampleSpec::dirichlet(3)).unwrap();
        assert_eq!(remark_pert_ratio(&s1, 0.0).unwrap(), (1.0, 1.0));
        assert_eq!(remark_pert_ratio(&s1, 2.0).unwrap(), (1.0, 3.0));
        let s4 = Spectrum::new(vec![4.0, 9.0], "x").unwrap();
        assert_eq!(remark_pert_ratio(&s4, 2.0).unwrap(), (1.0, 1.5));
    }

    #[test]
    fn preset_parsing() {
        assert_eq!("dirichlet:N=64".parse::<ExampleSpec>().unwrap(), ExampleSpec::dirichlet(64));
        assert_eq!("neumann:N=64,rho1=1.0".parse::<ExampleSpec>().unwrap(), ExampleSpec::neumann(64, 1.0));
        assert_eq!("perturbed:N=64,zeta=2.0".parse::<ExampleSpec>().unwrap(), ExampleSpec::perturbed(64, 2.0));
        assert!("dirichlet:N=0".parse::<ExampleSpec>().is_err());
        assert!("dirichlet:rho1=1".parse::<ExampleSpec>().is_err());
        assert!("circle:N=4".parse::<ExampleSpec>().is_err());
        for s in ["dirichlet:N=5", "neumann:N=3,rho1=0.25", "perturbed:N=7,zeta=0.5"] {
            assert_eq!(s.parse::<ExampleSpec>().unwrap().to_string(), s);
        }
    }
}
