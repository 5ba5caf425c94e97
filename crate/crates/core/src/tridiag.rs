//! Symmetric tridiagonal kernels: factorizations, Sturm counts and the
//! smallest eigenpair.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix; `off[i]` couples rows `i` and `i + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length mismatch");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn shifted(&self, sigma: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|d| d - sigma).collect(),
            off: self.off.clone(),
        }
    }

    /// Solves `self * x = rhs` by `LDL^T` without pivoting, failing with the
    /// offending pivot if the matrix is not positive definite.
    pub fn solve_spd(&self, rhs: &[f64]) -> std::result::Result<Vec<f64>, f64> {
        let n = self.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut piv = self.diag[i];
            if i > 0 {
                piv -= l[i - 1] * l[i - 1] * d[i - 1];
            }
            if !(piv > 0.0) {
                return Err(piv);
            }
            d[i] = piv;
            if i + 1 < n {
                l[i] = self.off[i] / piv;
            }
        }
        let mut x = rhs.to_vec();
        for i in 1..n {
            x[i] -= l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= l[i] * x[i + 1];
        }
        Ok(x)
    }

    /// General solve by Gaussian elimination with partial pivoting (the
    /// factor gains one extra super-diagonal). Exactly singular pivots are
    /// nudged to a tiny value, which is what inverse iteration wants.
    pub fn solve_pivoted(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        if n == 0 {
            return Vec::new();
        }
        // rows stored as (sub, diag, sup1, sup2)
        let mut dl: Vec<f64> = self.off.clone();
        let mut d = self.diag.clone();
        let mut du = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut b = rhs.to_vec();
        let tiny = f64::EPSILON * self.diag.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                let fact = if d[i] == 0.0 { 0.0 } else { dl[i] / d[i] };
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
                dl[i] = fact;
            } else {
                // swap rows i and i+1
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - fact * tmp;
                du[i] = tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du2[i];
                }
                b.swap(i, i + 1);
                b[i + 1] -= fact * b[i];
                dl[i] = fact;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        let mut x = b;
        x[n - 1] /= d[n - 1];
        if n >= 2 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        x
    }

    /// Number of eigenvalues strictly below `x` (Sylvester inertia of the
    /// `LDL^T` factorization of `self - x I`).
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.len();
        let mut count = 0;
        let mut d = 1.0;
        let safe = f64::MIN_POSITIVE.sqrt();
        for i in 0..n {
            let coupling = if i > 0 { self.off[i - 1] * self.off[i - 1] / d } else { 0.0 };
            d = self.diag[i] - x - coupling;
            if d.abs() < safe {
                d = -safe;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut rad = 0.0;
            if i > 0 {
                rad += self.off[i - 1].abs();
            }
            if i + 1 < n {
                rad += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - rad);
            hi = hi.max(self.diag[i] + rad);
        }
        (lo, hi)
    }

    /// The `index`-th smallest eigenvalue by Sturm bisection, to absolute
    /// width `abs_tol`.
    pub fn eigenvalue_bisection(&self, index: usize, abs_tol: f64) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        // Widen slightly so the endpoints bracket strictly.
        let pad = 1e-12 * (hi.abs() + lo.abs()).max(1.0);
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= abs_tol || mid == lo || mid == hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Smallest eigenpair by inverse iteration (shift zero when positive
    /// definite) followed by Rayleigh-quotient steps. The returned vector has
    /// unit Euclidean norm and non-negative sum.
    pub fn smallest_eigenpair(&self, max_iter: usize, rel_tol: f64) -> Result<(f64, Vec<f64>)> {
        let n = self.len();
        if n == 0 {
            return Err(Error::InvalidDomain("empty eigenproblem".into()));
        }
        let (lo, hi) = self.gershgorin();
        let roundoff = 64.0 * f64::EPSILON * lo.abs().max(hi.abs());
        // Shift zero when positive definite; the Gershgorin bound can be far
        // below the spectrum and would stall the iteration.
        let base_shift = if self.solve_spd(&vec![0.0; n]).is_ok() { 0.0 } else { lo };
        let shifted = self.shifted(base_shift);
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut rho = rayleigh(self, &x);
        let mut last_change = f64::INFINITY;
        let mut it = 0;
        // Plain inverse iteration: robustly selects the lowest state.
        while it < max_iter {
            it += 1;
            let y = match shifted.solve_spd(&x) {
                Ok(y) => y,
                Err(_) => shifted.solve_pivoted(&x),
            };
            x = normalized(y);
            let new_rho = rayleigh(self, &x);
            last_change = (new_rho - rho).abs();
            rho = new_rho;
            if last_change <= 1e-8 * rho.abs().max(1.0) {
                break;
            }
        }
        // Rayleigh-quotient refinement.
        let mut converged = false;
        while it < max_iter {
            it += 1;
            let y = self.shifted(rho).solve_pivoted(&x);
            let y = normalized(y);
            if !y.iter().all(|v| v.is_finite()) {
                converged = true;
                break;
            }
            x = y;
            let new_rho = rayleigh(self, &x);
            last_change = (new_rho - rho).abs();
            rho = new_rho;
            if last_change <= (rel_tol * rho.abs()).max(roundoff) {
                converged = true;
                break;
            }
        }
        let residual = {
            let ax = self.matvec(&x);
            ax.iter().zip(&x).map(|(a, v)| (a - rho * v).abs()).fold(0.0, f64::max)
        };
        if !converged {
            return Err(Error::IterationLimit {
                iterations: it,
                last_change,
                residual,
            });
        }
        if x.iter().sum::<f64>() < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        Ok((rho, x))
    }
}

fn normalized(mut y: Vec<f64>) -> Vec<f64> {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    y.iter_mut().for_each(|v| *v /= norm);
    y
}

fn rayleigh(a: &SymTridiag, x: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let num: f64 = ax.iter().zip(x).map(|(p, q)| p * q).sum();
    let den: f64 = x.iter().map(|v| v * v).sum();
    num / den
}
