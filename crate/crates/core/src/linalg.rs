//! Small dense helpers for the 4×4 blocks that every mode carries.
//!
//! The quadratic forms compared by the certificate are strongly graded: at
//! λ = 10⁶ the diagonal of a scaled form can span thirty orders of magnitude.
//! A dense symmetric eigensolver only resolves eigenvalues to `ε_mach·‖G‖`,
//! which is useless there, so the smallest eigenvalue is located by bisection
//! on the sign of a Cholesky factorization instead. Cholesky is accurate
//! relative to the diagonal for such matrices.

use nalgebra::Matrix4;

pub type Mat4 = Matrix4<f64>;

/// `xᵀ M x`.
pub fn quad_form(m: &Mat4, x: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut row = 0.0;
        for j in 0..4 {
            row += m[(i, j)] * x[j];
        }
        acc += x[i] * row;
    }
    acc
}

pub fn mat_vec(m: &Mat4, x: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|j| m[(i, j)] * x[j]).sum();
    }
    out
}

/// Strict positive definiteness of a symmetric matrix via an attempted
/// Cholesky factorization. Only the lower triangle is read.
pub fn is_positive_definite(m: &Mat4) -> bool {
    let mut l = [[0.0f64; 4]; 4];
    for j in 0..4 {
        let mut d = m[(j, j)];
        d -= l[j][..j].iter().map(|x| x * x).sum::<f64>();
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let ljj = d.sqrt();
        l[j][j] = ljj;
        for i in (j + 1)..4 {
            let s = m[(i, j)] - l[i][..j].iter().zip(&l[j][..j]).map(|(a, b)| a * b).sum::<f64>();
            l[i][j] = s / ljj;
        }
    }
    true
}

/// Smallest eigenvalue of a symmetric matrix, by bisection on
/// `is_positive_definite(G − σ I)` between the Gershgorin lower bound and the
/// smallest diagonal entry.
pub fn min_eigenvalue_graded(g: &Mat4) -> f64 {
    let mut hi = f64::INFINITY;
    let mut lo = f64::INFINITY;
    for i in 0..4 {
        hi = hi.min(g[(i, i)]);
        let off: f64 = (0..4).filter(|&j| j != i).map(|j| g[(i, j)].abs()).sum();
        lo = lo.min(g[(i, i)] - off);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return f64::NAN;
    }
    if lo >= hi {
        return hi;
    }
    let shifted = |sigma: f64| {
        let mut s = *g;
        for i in 0..4 {
            s[(i, i)] -= sigma;
        }
        s
    };
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if is_positive_definite(&shifted(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
    }
    lo
}

/// Congruence `D^{-1/2} Q D^{-1/2}` for a positive diagonal `D = diag(weights)`.
pub fn scale_by_weights(q: &Mat4, weights: &[f64; 4]) -> Mat4 {
    let inv_sqrt: Vec<f64> = weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    Mat4::from_fn(|i, j| q[(i, j)] * inv_sqrt[i] * inv_sqrt[j])
}

/// Largest `c` with `Q ⪰ c·diag(weights)`: the smallest eigenvalue of the
/// pencil `(Q, diag(weights))`.
pub fn min_generalized_eigenvalue(q: &Mat4, weights: &[f64; 4]) -> f64 {
    min_eigenvalue_graded(&scale_by_weights(q, weights))
}
