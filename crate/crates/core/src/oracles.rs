//! Closed forms and independent second routes used to check the solvers.

use std::f64::consts::{PI, TAU};

use crate::radial_eig::EigenSolution;

/// `lambda1` of the flat band `Band(-a, a)`: `(pi / 2a)^2`.
pub fn flat_band_lambda1(a: f64) -> f64 {
    (PI / (2.0 * a)).powi(2)
}

/// Outward `dphi/dnu` of the unit-norm first eigenfunction of the flat band,
/// `phi = cos(pi r / 2a) / sqrt(2 pi a)`.
pub fn flat_band_normal_derivative(a: f64) -> f64 {
    -(PI / (2.0 * a)) / (TAU * a).sqrt()
}

/// Dirichlet-to-Neumann values of mode `k` on the flat band `Band(-a, a)`
/// at spectral parameter `lambda`, for symmetric data `(1, 1)` and
/// antisymmetric data `(-1, 1)`. Hyperbolic when `k^2 > lambda`,
/// trigonometric otherwise.
pub fn flat_band_dtn(a: f64, k: u32, lambda: f64) -> (f64, f64) {
    let kk = f64::from(k) * f64::from(k);
    if kk > lambda {
        let mu = (kk - lambda).sqrt();
        (mu * (mu * a).tanh(), mu / (mu * a).tanh())
    } else if kk < lambda {
        let nu = (lambda - kk).sqrt();
        (-nu * (nu * a).tan(), nu / (nu * a).tan())
    } else {
        (0.0, 1.0 / a)
    }
}

/// Mode-1 profile generated by a rotation of the sphere: `phi'(r)`,
/// normalized to `1` at the last mesh node. Derivatives of the eigenfunction
/// samples use fourth-order central differences inside and fourth-order
/// one-sided stencils at the ends; no extension solve is involved.
pub fn rotation_jacobi_profile(eigen: &EigenSolution) -> Vec<f64> {
    let d = derivative_4th(&eigen.phi, eigen.mesh.spacing());
    let last = *d.last().expect("non-empty mesh");
    d.iter().map(|v| v / last).collect()
}

/// Fourth-order finite-difference derivative of uniform samples.
pub fn derivative_4th(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    assert!(n >= 5, "need at least five samples");
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / (12.0 * h)
            } else if i < 2 {
                let o = i;
                // one-sided at the left, shifted stencil
                let s = [-25.0, 48.0, -36.0, 16.0, -3.0];
                let s1 = [-3.0, -10.0, 18.0, -6.0, 1.0];
                let w = if o == 0 { s } else { s1 };
                (0..5).map(|j| w[j] * u[j]).sum::<f64>() / (12.0 * h)
            } else {
                let s = [25.0, -48.0, 36.0, -16.0, 3.0];
                let s1 = [3.0, 10.0, -18.0, 6.0, -1.0];
                let w = if i == n - 1 { s } else { s1 };
                (0..5).map(|j| w[j] * u[n - 1 - j]).sum::<f64>() / (12.0 * h)
            }
        })
        .collect()
}

/// Dirichlet energy of `sin r / sin r0` on the sphere band `Band(-r0, r0)`.
pub fn sin_ratio_dirichlet_energy(r0: f64) -> f64 {
    4.0 * PI / r0.sin() - 4.0 * PI / 3.0 * r0.sin()
}

/// Area of the sphere band `Band(-r0, r0)`.
pub fn sphere_band_area(r0: f64) -> f64 {
    4.0 * PI * r0.sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_derivative_is_exact_on_quartics() {
        let h = 0.1;
        let u: Vec<f64> = (0..9).map(|i| (i as f64 * h).powi(4) - (i as f64 * h)).collect();
        let d = derivative_4th(&u, h);
        for (i, v) in d.iter().enumerate() {
            let x = i as f64 * h;
            assert!((v - (4.0 * x.powi(3) - 1.0)).abs() < 1e-10, "{i}: {v}");
        }
    }

    #[test]
    fn dtn_branches_are_continuous_across_resonance_free_crossing() {
        // k^2 = lambda from both sides
        let (s1, a1) = flat_band_dtn(0.7, 2, 4.0 - 1e-9);
        let (s2, a2) = flat_band_dtn(0.7, 2, 4.0 + 1e-9);
        assert!((s1 - s2).abs() < 1e-6);
        assert!((a1 - a2).abs() < 1e-6);
    }
}
