//! First Dirichlet eigenpair of bands whose boundary curves are Fourier
//! perturbations `r = rho(theta)` of circles.
//!
//! The region `rho1(theta) < r < rho2(theta)` is mapped to the cylinder
//! `(s, theta) in [0, 1] x [0, 2 pi)` by `r = rho1 + s (rho2 - rho1)`. With
//! `D = rho2 - rho1` and `R_theta = rho1' + s D'` the Dirichlet energy reads
//!
//! `int ( (R_theta^2 + w^2)/(D w) u_s^2 - 2 R_theta/w u_s u_theta + D/w u_theta^2 ) ds dtheta`
//!
//! and the area element is `D w ds dtheta`. The energy is discretized with
//! edge-midpoint coefficients for the diagonal terms and cell-averaged
//! gradients for the cross term; the mass is lumped. Unknowns are ordered
//! `s`-major with a folded `theta` order (0, 1, N-1, 2, N-2, ...) so that the
//! periodic coupling stays inside a band of half-width `N_theta + 2`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::banded::{BandedCholesky, SymBanded};
use crate::error::{Error, Result};
use crate::geometry::{DomainKind, RadialDomain, WarpedSurface};
use crate::quadrature::simpson_samples;
use crate::radial_eig::richardson;
use crate::variation::{VariationCheck, FD_STEPS};

pub const DEFAULT_N_THETA: usize = 128;
pub const DEFAULT_N_S: usize = 256;
const MIN_N_THETA: usize = 8;
const MIN_N_S: usize = 4;
const MAX_INVERSE_ITER: usize = 200;
/// Smallest admissible `min(rho2 - rho1)` in units of the radial step.
const MIN_CELLS_ACROSS: f64 = 4.0;

/// `a0 + sum_k (a_k cos k theta + b_k sin k theta)`, `k = 1..`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCurve {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierCurve {
    pub fn constant(r: f64) -> Self {
        Self {
            mean: r,
            cos: vec![],
            sin: vec![],
        }
    }

    /// `r + amplitude cos(k theta)`.
    pub fn cosine(r: f64, k: u32, amplitude: f64) -> Self {
        let mut c = Self::constant(r);
        c.add_cosine(k, amplitude);
        c
    }

    pub fn add_cosine(&mut self, k: u32, amplitude: f64) {
        if k == 0 {
            self.mean += amplitude;
            return;
        }
        let k = k as usize;
        if self.cos.len() < k {
            self.cos.resize(k, 0.0);
        }
        self.cos[k - 1] += amplitude;
    }

    /// Shift in `theta`: `rho(theta - phase)`.
    pub fn rotated(&self, phase: f64) -> Self {
        let n = self.cos.len().max(self.sin.len());
        let mut cos = vec![0.0; n];
        let mut sin = vec![0.0; n];
        for k in 0..n {
            let a = self.cos.get(k).copied().unwrap_or(0.0);
            let b = self.sin.get(k).copied().unwrap_or(0.0);
            let (s, c) = ((k + 1) as f64 * phase).sin_cos();
            cos[k] = a * c - b * s;
            sin[k] = a * s + b * c;
        }
        Self {
            mean: self.mean,
            cos,
            sin,
        }
    }

    /// `rho(-theta)`.
    pub fn reflected(&self) -> Self {
        Self {
            mean: self.mean,
            cos: self.cos.clone(),
            sin: self.sin.iter().map(|b| -b).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        let last = |v: &[f64]| v.iter().rposition(|c| *c != 0.0).map_or(0, |p| p + 1);
        last(&self.cos).max(last(&self.sin))
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut r = self.mean;
        for (k, a) in self.cos.iter().enumerate() {
            r += a * ((k + 1) as f64 * theta).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            r += b * ((k + 1) as f64 * theta).sin();
        }
        r
    }

    pub fn deriv(&self, theta: f64) -> f64 {
        let mut d = 0.0;
        for (k, a) in self.cos.iter().enumerate() {
            let m = (k + 1) as f64;
            d -= m * a * (m * theta).sin();
        }
        for (k, b) in self.sin.iter().enumerate() {
            let m = (k + 1) as f64;
            d += m * b * (m * theta).cos();
        }
        d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbedBand {
    pub surface: WarpedSurface,
    pub rho1: FourierCurve,
    pub rho2: FourierCurve,
    pub n_theta: usize,
    pub n_s: usize,
}

impl PerturbedBand {
    pub fn new(
        surface: WarpedSurface,
        rho1: FourierCurve,
        rho2: FourierCurve,
        n_theta: usize,
        n_s: usize,
    ) -> Result<Self> {
        if n_theta < MIN_N_THETA || !n_theta.is_multiple_of(2) {
            return Err(Error::OutOfRange(format!(
                "N_theta must be even and at least {MIN_N_THETA}, got {n_theta}"
            )));
        }
        if n_s < MIN_N_S {
            return Err(Error::MeshTooCoarse {
                min: MIN_N_S,
                got: n_s,
            });
        }
        let deg = rho1.degree().max(rho2.degree());
        if 4 * deg > n_theta {
            return Err(Error::OutOfRange(format!(
                "Fourier degree {deg} exceeds N_theta/4 = {}",
                n_theta / 4
            )));
        }
        let band = Self {
            surface,
            rho1,
            rho2,
            n_theta,
            n_s,
        };
        // dense sampling, finer than any grid the band will be solved on
        let samples = 16 * n_theta;
        let mut min_gap = f64::INFINITY;
        for j in 0..samples {
            let t = TAU * j as f64 / samples as f64;
            let (a, b) = (band.rho1.eval(t), band.rho2.eval(t));
            if !(surface.r_min() < a && b < surface.r_max()) {
                return Err(Error::InvalidDomain(format!(
                    "boundary leaves the chart at theta = {t:.4}: [{a}, {b}]"
                )));
            }
            min_gap = min_gap.min(b - a);
        }
        if !(min_gap > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "boundary curves cross (min gap {min_gap})"
            )));
        }
        if min_gap < MIN_CELLS_ACROSS / n_s as f64 * band.max_gap() {
            return Err(Error::InvalidDomain(format!(
                "mapping is ill-conditioned: min gap {min_gap:.3e} under {MIN_CELLS_ACROSS} radial cells"
            )));
        }
        Ok(band)
    }

    /// The rotationally symmetric band itself.
    pub fn unperturbed(domain: &RadialDomain, n_theta: usize, n_s: usize) -> Result<Self> {
        match domain.kind() {
            DomainKind::Band { r1, r2 } => Self::new(
                *domain.surface(),
                FourierCurve::constant(r1),
                FourierCurve::constant(r2),
                n_theta,
                n_s,
            ),
            DomainKind::Disk { .. } => Err(Error::Precondition(
                "the 2D solver handles bands only".into(),
            )),
        }
    }

    fn max_gap(&self) -> f64 {
        (0..64)
            .map(|j| {
                let t = TAU * j as f64 / 64.0;
                self.rho2.eval(t) - self.rho1.eval(t)
            })
            .fold(0.0, f64::max)
    }

    pub fn with_grid(&self, n_theta: usize, n_s: usize) -> Result<Self> {
        Self::new(self.surface, self.rho1.clone(), self.rho2.clone(), n_theta, n_s)
    }

    /// Area by the spectral rule in `theta` of `W(rho2) - W(rho1)`.
    pub fn area(&self) -> f64 {
        let n = 4 * self.n_theta;
        let s = &self.surface;
        (0..n)
            .map(|j| {
                let t = TAU * j as f64 / n as f64;
                s.warp_antiderivative(self.rho2.eval(t)) - s.warp_antiderivative(self.rho1.eval(t))
            })
            .sum::<f64>()
            * TAU
            / n as f64
    }
}

/// Node geometry of one grid.
struct Grid {
    nt: usize,
    ns: usize,
    ht: f64,
    hs: f64,
}

impl Grid {
    fn theta(&self, j: f64) -> f64 {
        j * self.ht
    }

    fn fold(&self, j: usize) -> usize {
        if j == 0 {
            0
        } else if j <= self.nt / 2 {
            2 * j - 1
        } else {
            2 * (self.nt - j)
        }
    }

    /// Unknown index of node `(i, j)`, interior `i` only.
    fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || i == self.ns {
            None
        } else {
            Some((i - 1) * self.nt + self.fold(j % self.nt))
        }
    }

    fn unknowns(&self) -> usize {
        self.nt * (self.ns - 1)
    }
}

/// Energy coefficients at a point of the computational cylinder.
struct Metric<'a> {
    band: &'a PerturbedBand,
}

impl Metric<'_> {
    /// `(A, B, C, sqrt g)` with energy `A u_s^2 + 2 B u_s u_theta + C u_theta^2`.
    fn at(&self, s: f64, theta: f64) -> (f64, f64, f64, f64) {
        let b = self.band;
        let r1 = b.rho1.eval(theta);
        let d = b.rho2.eval(theta) - r1;
        let rt = b.rho1.deriv(theta) + s * (b.rho2.deriv(theta) - b.rho1.deriv(theta));
        let w = b.surface.warp(r1 + s * d);
        ((rt * rt + w * w) / (d * w), -rt / w, d / w, d * w)
    }

    /// `|d(boundary)/dtheta|` on the curve `s` (0 or 1).
    fn arc_speed(&self, s: f64, theta: f64) -> f64 {
        let b = self.band;
        let (r, rt) = if s == 0.0 {
            (b.rho1.eval(theta), b.rho1.deriv(theta))
        } else {
            (b.rho2.eval(theta), b.rho2.deriv(theta))
        };
        rt.hypot(b.surface.warp(r))
    }
}

/// Calls `f(node_a, node_b, value)` for every term `value * u_a * u_b` of the
/// discrete energy, nodes given as `(i, j)`.
fn for_each_energy_term(band: &PerturbedBand, g: &Grid, mut f: impl FnMut((usize, usize), (usize, usize), f64)) {
    let m = Metric { band };
    let (hs, ht, nt, ns) = (g.hs, g.ht, g.nt, g.ns);
    let edge = |f: &mut dyn FnMut((usize, usize), (usize, usize), f64), a: (usize, usize), b: (usize, usize), c: f64| {
        f(a, a, c);
        f(b, b, c);
        f(a, b, -c);
        f(b, a, -c);
    };
    for j in 0..nt {
        let jn = (j + 1) % nt;
        for i in 0..ns {
            // s-edge (i, j)-(i+1, j)
            let (a, _, _, _) = m.at((i as f64 + 0.5) * hs, g.theta(j as f64));
            edge(&mut f, (i, j), (i + 1, j), a * ht / hs);
            // cross term on the cell [i, i+1] x [j, j+1]
            let (_, b, _, _) = m.at((i as f64 + 0.5) * hs, g.theta(j as f64 + 0.5));
            if b != 0.0 {
                let corners = [(i, j), (i + 1, j), (i, jn), (i + 1, jn)];
                let gs = [-1.0, 1.0, -1.0, 1.0];
                let gt = [-1.0, -1.0, 1.0, 1.0];
                let scale = b * 0.25;
                for p in 0..4 {
                    for q in 0..4 {
                        let v = scale * (gs[p] * gt[q] + gt[p] * gs[q]);
                        if v != 0.0 {
                            f(corners[p], corners[q], v);
                        }
                    }
                }
            }
        }
        // theta-edges on interior rows; boundary rows carry u = 0
        for i in 1..ns {
            let (_, _, c, _) = m.at(i as f64 * hs, g.theta(j as f64 + 0.5));
            edge(&mut f, (i, j), (i, jn), c * hs / ht);
        }
    }
}

struct Level {
    lambda: f64,
    /// `phi[i][j]`, all nodes, boundary rows zero, lumped unit norm.
    phi: Vec<Vec<f64>>,
    /// `dphi/dnu` on the bottom and top curves, per theta node.
    dn: [Vec<f64>; 2],
    residual: f64,
}

fn solve_level(band: &PerturbedBand, shift_hint: Option<f64>) -> Result<Level> {
    let g = Grid {
        nt: band.n_theta,
        ns: band.n_s,
        ht: TAU / band.n_theta as f64,
        hs: 1.0 / band.n_s as f64,
    };
    let n = g.unknowns();
    let m = Metric { band };
    let mut k = SymBanded::zeros(n, g.nt + 2);
    for_each_energy_term(band, &g, |a, b, v| {
        if let (Some(p), Some(q)) = (g.index(a.0, a.1), g.index(b.0, b.1)) {
            if p >= q {
                k.add(p, q, v);
            }
        }
    });
    let mut mass = vec![0.0; n];
    for i in 1..g.ns {
        for j in 0..g.nt {
            let (_, _, _, sg) = m.at(i as f64 * g.hs, g.theta(j as f64));
            mass[g.index(i, j).unwrap()] = sg * g.hs * g.ht;
        }
    }
    let inv_sqrt: Vec<f64> = mass.iter().map(|x| 1.0 / x.sqrt()).collect();
    let mut c = k.clone();
    c.scale_symmetric(&inv_sqrt);

    let (lambda, y) = smallest_eigenpair(&c, shift_hint)?;
    let mut u: Vec<f64> = y.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
    let norm = u.iter().zip(&mass).map(|(a, b)| a * a * b).sum::<f64>().sqrt();
    let sign = if u.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    u.iter_mut().for_each(|v| *v *= sign / norm);
    let ku = k.matvec(&u);
    let residual = ku
        .iter()
        .zip(&u)
        .zip(&mass)
        .map(|((a, b), mm)| (a / mm - lambda * b).abs())
        .fold(0.0, f64::max)
        / lambda;

    let mut phi = vec![vec![0.0; g.nt]; g.ns + 1];
    for (i, row) in phi.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if let Some(p) = g.index(i, j) {
                *v = u[p];
            }
        }
    }
    // energy gradient at boundary nodes: the discrete flux
    let mut flux = [vec![0.0; g.nt], vec![0.0; g.nt]];
    for_each_energy_term(band, &g, |a, b, v| {
        let side = if a.0 == 0 {
            0
        } else if a.0 == g.ns {
            1
        } else {
            return;
        };
        flux[side][a.1] += v * phi[b.0][b.1];
    });
    let dn = [0, 1].map(|side| {
        let s = side as f64;
        (0..g.nt)
            .map(|j| flux[side][j] / (g.ht * m.arc_speed(s, g.theta(j as f64))))
            .collect::<Vec<f64>>()
    });
    Ok(Level {
        lambda,
        phi,
        dn,
        residual,
    })
}

/// Smallest eigenpair of the symmetric positive definite `c` by shifted
/// inverse iteration. A failed factorization certifies that the shift lies
/// above the smallest eigenvalue, so the shift is lowered and retried.
fn smallest_eigenpair(c: &SymBanded, shift_hint: Option<f64>) -> Result<(f64, Vec<f64>)> {
    let n = c.len();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let factor = |sigma: f64| -> Option<BandedCholesky> {
        let mut a = c.clone();
        a.add_diagonal(-sigma);
        a.cholesky().ok()
    };
    let (mut sigma, mut chol) = match shift_hint {
        Some(h) if h > 0.0 => {
            let mut s = h;
            loop {
                if let Some(f) = factor(s) {
                    break (s, f);
                }
                s *= 0.9;
            }
        }
        _ => (0.0, factor(0.0).ok_or_else(|| {
            Error::Precondition("stiffness matrix is not positive definite".into())
        })?),
    };
    let mut rho = rayleigh(c, &x);
    let mut refined = shift_hint.is_some();
    for it in 0..MAX_INVERSE_ITER {
        let y = chol.solve(&x);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        let new_rho = rayleigh(c, &x);
        let change = (new_rho - rho).abs();
        rho = new_rho;
        if change <= 1e-14 * rho.abs() && it > 2 {
            return Ok((rho, x));
        }
        if !refined && change <= 1e-3 * rho {
            // move the shift just under the estimate
            let mut s = rho * 0.97;
            let f = loop {
                if let Some(f) = factor(s) {
                    break f;
                }
                s = sigma + 0.5 * (s - sigma);
            };
            sigma = s;
            chol = f;
            refined = true;
        }
    }
    let residual = {
        let cx = c.matvec(&x);
        cx.iter().zip(&x).map(|(a, b)| (a - rho * b).abs()).fold(0.0, f64::max)
    };
    Err(Error::IterationLimit {
        iterations: MAX_INVERSE_ITER,
        last_change: f64::NAN,
        residual,
    })
}

fn rayleigh(c: &SymBanded, x: &[f64]) -> f64 {
    let cx = c.matvec(x);
    cx.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|v| v * v).sum::<f64>()
}

#[derive(Clone, Debug, Serialize)]
pub struct Eigen2D {
    /// Extrapolated between `(N_theta, N_s)` and `(2 N_theta, 2 N_s)`.
    pub lambda1: f64,
    pub lambda1_grid: f64,
    pub n_theta: usize,
    pub n_s: usize,
    /// `phi[i][j]` at `s = i / N_s`, `theta = 2 pi j / N_theta`.
    pub phi: Vec<Vec<f64>>,
    /// Outward `dphi/dnu` on the bottom and top curves.
    pub normal_derivs: [Vec<f64>; 2],
    pub l2_norm: f64,
    pub extremality_defect: f64,
    pub residual: f64,
}

impl Eigen2D {
    pub fn theta_nodes(&self) -> Vec<f64> {
        (0..self.n_theta).map(|j| TAU * j as f64 / self.n_theta as f64).collect()
    }

    pub fn min_interior_phi(&self) -> f64 {
        self.phi[1..self.n_s]
            .iter()
            .flat_map(|r| r.iter())
            .fold(f64::INFINITY, |m, v| m.min(*v))
    }
}

pub fn lambda1_2d(band: &PerturbedBand) -> Result<Eigen2D> {
    lambda1_2d_hinted(band, None)
}

/// As [`lambda1_2d`], starting the shift search at `hint`, which should be
/// a little above `lambda1` (e.g. a nearby band's value).
pub fn lambda1_2d_hinted(band: &PerturbedBand, hint: Option<f64>) -> Result<Eigen2D> {
    let coarse = solve_level(band, hint.map(|h| 0.97 * h))?;
    let fine_band = band.with_grid(2 * band.n_theta, 2 * band.n_s)?;
    let fine = solve_level(&fine_band, Some(0.97 * coarse.lambda))?;
    let (nt, ns) = (band.n_theta, band.n_s);
    let mut phi: Vec<Vec<f64>> = (0..=ns)
        .map(|i| (0..nt).map(|j| richardson(coarse.phi[i][j], fine.phi[2 * i][2 * j])).collect())
        .collect();
    let m = Metric { band };
    let hs = 1.0 / ns as f64;
    let ht = TAU / nt as f64;
    let norm_sq = |phi: &[Vec<f64>]| {
        let per_theta: Vec<f64> = (0..nt)
            .map(|j| {
                let col: Vec<f64> = (0..=ns)
                    .map(|i| {
                        let (_, _, _, sg) = m.at(i as f64 * hs, j as f64 * ht);
                        sg * phi[i][j] * phi[i][j]
                    })
                    .collect();
                simpson_samples(&col, hs)
            })
            .collect();
        per_theta.iter().sum::<f64>() * ht
    };
    let scale = norm_sq(&phi).sqrt();
    phi.iter_mut().flatten().for_each(|v| *v /= scale);
    let l2_norm = norm_sq(&phi).sqrt();
    let normal_derivs = [0, 1].map(|side| {
        (0..nt)
            .map(|j| richardson(coarse.dn[side][j], fine.dn[side][2 * j]))
            .collect::<Vec<f64>>()
    });
    let (lo, hi) = normal_derivs
        .iter()
        .flatten()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), c| (lo.min(c.abs()), hi.max(c.abs())));
    Ok(Eigen2D {
        lambda1: richardson(coarse.lambda, fine.lambda),
        lambda1_grid: coarse.lambda,
        n_theta: nt,
        n_s: ns,
        phi,
        normal_derivs,
        l2_norm,
        extremality_defect: hi - lo,
        residual: coarse.residual.max(fine.residual),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hadamard2dConfig {
    /// Amplitude of the base point on the path `rho2 = r2 + t cos k theta`.
    pub t0: f64,
    pub steps: [f64; 2],
    pub n_theta: usize,
    pub n_s: usize,
}

impl Default for Hadamard2dConfig {
    fn default() -> Self {
        Self {
            t0: 0.05,
            steps: FD_STEPS,
            n_theta: DEFAULT_N_THETA,
            n_s: DEFAULT_N_S,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Hadamard2dReport {
    pub k: u32,
    pub t0: f64,
    pub check: VariationCheck,
    /// `-w(r2) c^2 int cos(k theta) dtheta` with `c` from the 2D solve of the
    /// unperturbed band (the first variation at `t = 0`).
    pub prediction_at_zero_2d: f64,
    /// Same with `c` from the 1D radial solver.
    pub prediction_at_zero_1d: f64,
    pub c_top_2d: f64,
    pub c_top_1d: f64,
    pub lambda1_unperturbed_2d: f64,
    pub lambda1_1d: f64,
    pub extremality_defect_unperturbed: f64,
}

fn path_member(base: &RadialDomain, k: u32, t: f64, cfg: &Hadamard2dConfig) -> Result<PerturbedBand> {
    let (r1, r2) = base.radial_extent();
    PerturbedBand::new(
        *base.surface(),
        FourierCurve::constant(r1),
        FourierCurve::cosine(r2, k, t),
        cfg.n_theta,
        cfg.n_s,
    )
}

/// First variation of `lambda1` along `rho2 = r2 + t cos(k theta)` at
/// `t = t0`: `-int cos(k theta) w(rho2) (dphi/dnu)^2 dtheta` from the 2D
/// normal derivatives, against central differences of `lambda1_2d`.
pub fn hadamard_check_2d(base: &RadialDomain, k: u32, cfg: &Hadamard2dConfig) -> Result<Hadamard2dReport> {
    if base.is_disk() {
        return Err(Error::Precondition("the 2D check handles bands only".into()));
    }
    let s = *base.surface();
    let (_, r2) = base.radial_extent();
    let flat = PerturbedBand::unperturbed(base, cfg.n_theta, cfg.n_s)?;
    let e0 = lambda1_2d(&flat)?;
    let hint = Some(e0.lambda1 * 1.05 + 0.05);
    let at_t0 = path_member(base, k, cfg.t0, cfg)?;
    let e = lambda1_2d_hinted(&at_t0, hint)?;
    let ht = TAU / cfg.n_theta as f64;
    let analytic = -e
        .theta_nodes()
        .iter()
        .zip(&e.normal_derivs[1])
        .map(|(t, dn)| (k as f64 * t).cos() * s.warp(at_t0.rho2.eval(*t)) * dn * dn)
        .sum::<f64>()
        * ht;
    let raw = cfg
        .steps
        .iter()
        .map(|&h| {
            let lp = lambda1_2d_hinted(&path_member(base, k, cfg.t0 + h, cfg)?, hint)?.lambda1;
            let lm = lambda1_2d_hinted(&path_member(base, k, cfg.t0 - h, cfg)?, hint)?.lambda1;
            Ok((lp - lm) / (2.0 * h))
        })
        .collect::<Result<Vec<f64>>>()?;
    let numeric = (4.0 * raw[1] - raw[0]) / 3.0;
    let abs_error = (analytic - numeric).abs();
    let check = VariationCheck {
        analytic,
        numeric,
        rel_error: abs_error / analytic.abs().max(crate::variation::REL_ERROR_FLOOR),
        abs_error,
        steps: cfg.steps.to_vec(),
        extrapolation_order: 4,
        raw_estimates: raw,
    };
    let c_top_2d = e0.normal_derivs[1].iter().sum::<f64>() / cfg.n_theta as f64;
    let one_d = crate::radial_eig::solve_lambda1_auto(base)?;
    let c_top_1d = one_d.normal_derivs[1];
    let angular = if k == 0 { TAU } else { 0.0 };
    Ok(Hadamard2dReport {
        k,
        t0: cfg.t0,
        check,
        prediction_at_zero_2d: -s.warp(r2) * c_top_2d * c_top_2d * angular,
        prediction_at_zero_1d: -s.warp(r2) * c_top_1d * c_top_1d * angular,
        c_top_2d,
        c_top_1d,
        lambda1_unperturbed_2d: e0.lambda1,
        lambda1_1d: one_d.lambda1,
        extremality_defect_unperturbed: e0.extremality_defect,
    })
}

/// `pi w(r2) c^2`: the size of the mode-`k` first-variation integrand
/// `w c^2 int cos^2(k theta)` for `k >= 1`.
pub fn mode_hadamard_scale(domain: &RadialDomain, c: f64) -> f64 {
    let (_, r2) = domain.radial_extent();
    PI * domain.surface().warp(r2) * c * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_eig::{solve_lambda1, Mesh1D};

    #[test]
    fn unperturbed_matches_radial_solver() {
        let d = RadialDomain::symmetric_band(WarpedSurface::sphere_band(), 0.8).unwrap();
        let band = PerturbedBand::unperturbed(&d, 16, 64).unwrap();
        let e = lambda1_2d(&band).unwrap();
        let one = solve_lambda1(&d, Mesh1D::for_domain(&d, 65).unwrap()).unwrap();
        assert!((e.lambda1 - one.lambda1).abs() < 1e-10 * one.lambda1, "{} {}", e.lambda1, one.lambda1);
        assert!(e.extremality_defect < 1e-8);
        assert!((e.l2_norm - 1.0).abs() < 1e-8);
        assert!(e.min_interior_phi() > 0.0);
    }

    #[test]
    fn invalid_bands_are_rejected() {
        let s = WarpedSurface::sphere_band();
        let crossing = PerturbedBand::new(s, FourierCurve::constant(0.0), FourierCurve::cosine(0.1, 1, 0.2), 16, 16);
        assert!(matches!(crossing, Err(Error::InvalidDomain(_))));
        let outside = PerturbedBand::new(s, FourierCurve::constant(0.0), FourierCurve::cosine(1.5, 1, 0.2), 16, 16);
        assert!(matches!(outside, Err(Error::InvalidDomain(_))));
        let wiggly = PerturbedBand::new(s, FourierCurve::constant(0.0), FourierCurve::cosine(1.0, 5, 0.01), 16, 16);
        assert!(matches!(wiggly, Err(Error::OutOfRange(_))));
    }

    #[test]
    fn rotation_by_grid_step_and_reflection() {
        let s = WarpedSurface::sphere_band();
        let mut top = FourierCurve::cosine(0.7, 2, 0.05);
        top.sin = vec![0.0, 0.0, 0.02];
        let b = PerturbedBand::new(s, FourierCurve::cosine(-0.6, 1, 0.03), top.clone(), 16, 24).unwrap();
        let l = lambda1_2d(&b).unwrap().lambda1;
        let ht = TAU / 16.0;
        let rot = PerturbedBand::new(s, b.rho1.rotated(3.0 * ht), top.rotated(3.0 * ht), 16, 24).unwrap();
        assert!((lambda1_2d(&rot).unwrap().lambda1 - l).abs() < 1e-10 * l);
        let refl = PerturbedBand::new(s, b.rho1.reflected(), top.reflected(), 16, 24).unwrap();
        assert!((lambda1_2d(&refl).unwrap().lambda1 - l).abs() < 1e-10 * l);
    }

    #[test]
    fn perturbation_breaks_extremality() {
        let d = RadialDomain::symmetric_band(WarpedSurface::sphere_band(), 0.8).unwrap();
        let flat = lambda1_2d(&PerturbedBand::unperturbed(&d, 16, 32).unwrap()).unwrap();
        let b = PerturbedBand::new(
            *d.surface(),
            FourierCurve::constant(-0.8),
            FourierCurve::cosine(0.8, 2, 1e-3),
            16,
            32,
        )
        .unwrap();
        let e = lambda1_2d(&b).unwrap();
        assert!(e.extremality_defect > 10.0 * flat.extremality_defect.max(1e-12));
    }

    #[test]
    fn fourier_curve_derivative() {
        let mut c = FourierCurve::cosine(0.3, 2, 0.1);
        c.sin = vec![0.05];
        let t = 0.7;
        let fd = (c.eval(t + 1e-6) - c.eval(t - 1e-6)) / 2e-6;
        assert!((fd - c.deriv(t)).abs() < 1e-9);
    }
}
