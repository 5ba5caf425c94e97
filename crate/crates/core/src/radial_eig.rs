//! First Dirichlet eigenpair of rotationally symmetric disks and bands.
//!
//! The radial operator `-(1/w)(w u')' + (k^2/w^2) u` is discretized in
//! flux form on a uniform vertex grid: face weights `w(r_{i+1/2})`, nodal
//! masses `int w` over the dual cell. At a pole the first dual cell is the
//! half cell `[0, h/2]` whose inner face carries `w(0) = 0`, which is the
//! regularity condition `u'(0) = 0` without a ghost node. The scheme is
//! second order; every public quantity is Richardson-extrapolated between
//! the requested mesh and its nested refinement.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ChartKind, DomainKind, RadialDomain, SurfaceName, WarpedSurface};
use crate::quadrature::simpson_samples;
use crate::tridiag::SymTridiag;

pub const DEFAULT_NODES: usize = 2048;
/// Relative change of the extrapolated eigenvalue at which mesh doubling stops.
pub const REFINE_REL_TOL: f64 = 1e-9;
const MAX_NODES: usize = 1 << 21;
const MAX_EIGEN_ITER: usize = 400;

/// First positive zero of the Bessel function `J_0`.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// `(4 fine - coarse) / 3` for a quantity with an `h^2` leading error.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Uniform radial mesh; endpoints are the radial bounds of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mesh1D {
    start: f64,
    end: f64,
    n: usize,
}

impl Mesh1D {
    pub const MIN_NODES: usize = 32;

    pub fn uniform(start: f64, end: f64, n: usize) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(Error::MeshTooCoarse {
                min: Self::MIN_NODES,
                got: n,
            });
        }
        if !(end > start) {
            return Err(Error::InvalidDomain(format!("empty mesh [{start}, {end}]")));
        }
        Ok(Self { start, end, n })
    }

    pub fn for_domain(domain: &RadialDomain, n: usize) -> Result<Self> {
        let (a, b) = domain.radial_extent();
        Self::uniform(a, b, n)
    }

    /// Nested refinement: every interval is halved.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * (self.n - 1) + 1,
            ..*self
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn intervals(&self) -> usize {
        self.n - 1
    }

    pub fn spacing(&self) -> f64 {
        (self.end - self.start) / self.intervals() as f64
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.intervals() {
            self.end
        } else {
            self.start + (self.end - self.start) * (i as f64 / self.intervals() as f64)
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }
}

/// Flux-form finite-volume discretization of the radial operator on one mesh.
#[derive(Clone, Debug)]
pub struct RadialDiscretization {
    domain: RadialDomain,
    mesh: Mesh1D,
    h: f64,
    warp: Vec<f64>,
    face_warp: Vec<f64>,
    mass: Vec<f64>,
    pole: bool,
}

impl RadialDiscretization {
    pub fn new(domain: &RadialDomain, mesh: Mesh1D) -> Result<Self> {
        let (a, b) = domain.radial_extent();
        if mesh.start() != a || mesh.end() != b {
            return Err(Error::InvalidDomain(format!(
                "mesh [{}, {}] does not span the domain [{a}, {b}]",
                mesh.start(),
                mesh.end()
            )));
        }
        let s = *domain.surface();
        let h = mesh.spacing();
        let n_int = mesh.intervals();
        let pole = domain.is_disk();
        let nodes = mesh.nodes();
        let warp: Vec<f64> = nodes.iter().map(|&r| s.warp(r)).collect();
        let face_warp: Vec<f64> = (0..n_int).map(|i| s.warp(a + (i as f64 + 0.5) * h)).collect();
        let mut mass: Vec<f64> = warp.iter().map(|w| w * h).collect();
        if pole {
            // half cell [0, h/2] by the midpoint rule
            mass[0] = 0.5 * h * s.warp(a + 0.25 * h);
        } else {
            mass[0] *= 0.5;
        }
        mass[n_int] *= 0.5;
        Ok(Self {
            domain: *domain,
            mesh,
            h,
            warp,
            face_warp,
            mass,
            pole,
        })
    }

    pub fn domain(&self) -> &RadialDomain {
        &self.domain
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn warp_at_nodes(&self) -> &[f64] {
        &self.warp
    }

    fn last(&self) -> usize {
        self.mesh.intervals()
    }

    /// Node indices of the boundary circles, in `domain.boundary()` order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        if self.pole {
            vec![self.last()]
        } else {
            vec![0, self.last()]
        }
    }

    /// Nodes carrying unknowns for angular mode `k`. A pole is free for
    /// `k = 0` and pinned to zero for `k >= 1`.
    pub fn free_range(&self, k: u32) -> std::ops::Range<usize> {
        if self.pole && k == 0 {
            0..self.last()
        } else {
            1..self.last()
        }
    }

    fn angular_potential(&self, k: u32, i: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            let kk = f64::from(k);
            kk * kk / (self.warp[i] * self.warp[i])
        }
    }

    /// Matrix of `-(w u')' + (k^2/w) u - lambda w u` (mass-weighted) restricted
    /// to the free nodes of mode `k`.
    pub fn operator(&self, k: u32, lambda: f64) -> SymTridiag {
        let range = self.free_range(k);
        let h = self.h;
        let diag = range
            .clone()
            .map(|i| {
                let left = if i > 0 { self.face_warp[i - 1] } else { 0.0 };
                let right = self.face_warp[i];
                (left + right) / h + self.mass[i] * (self.angular_potential(k, i) - lambda)
            })
            .collect();
        let off = range
            .clone()
            .skip(1)
            .map(|i| -self.face_warp[i - 1] / h)
            .collect();
        SymTridiag::new(diag, off)
    }

    /// Mode-`k` energy `sum_faces w (du)(dv)/h + sum_nodes m (k^2/w^2 - lambda) u v`
    /// over all nodes; per unit angle.
    pub fn energy(&self, k: u32, lambda: f64, u: &[f64], v: &[f64]) -> f64 {
        let h = self.h;
        let grad: f64 = self
            .face_warp
            .iter()
            .enumerate()
            .map(|(i, wf)| wf * (u[i + 1] - u[i]) * (v[i + 1] - v[i]) / h)
            .sum();
        let zero: f64 = (0..u.len())
            .filter(|&i| !(self.pole && i == 0 && k > 0))
            .map(|i| self.mass[i] * (self.angular_potential(k, i) - lambda) * u[i] * v[i])
            .sum();
        grad + zero
    }

    /// `sum_nodes m u v`, per unit angle.
    pub fn mass_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u).zip(v).map(|((m, a), b)| m * a * b).sum()
    }

    /// Outward flux `w * du/dnu` at boundary node `b`, consistent with
    /// [`Self::energy`]: for any `u` solving the interior equations,
    /// `energy(u, v) = sum_b v_b flux_b(u)`.
    pub fn flux(&self, k: u32, lambda: f64, u: &[f64], b: usize) -> f64 {
        let h = self.h;
        let face = if b == 0 {
            self.face_warp[0] * (u[0] - u[1]) / h
        } else {
            self.face_warp[b - 1] * (u[b] - u[b - 1]) / h
        };
        face + self.mass[b] * (self.angular_potential(k, b) - lambda) * u[b]
    }

    /// Interior residual `max |(L u)_i / m_i|` of the mode-`k` equation.
    pub fn residual(&self, k: u32, lambda: f64, u: &[f64]) -> f64 {
        let range = self.free_range(k);
        let op = self.operator(k, lambda);
        let local: Vec<f64> = range.clone().map(|i| u[i]).collect();
        let mut lu = op.matvec(&local);
        // couplings to fixed nodes
        let first = range.start;
        let last = range.end - 1;
        if first > 0 {
            lu[0] -= self.face_warp[first - 1] / self.h * u[first - 1];
        }
        lu[last - first] -= self.face_warp[last] / self.h * u[last + 1];
        range
            .zip(lu)
            .map(|(i, r)| (r / self.mass[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Eigenpair on a single mesh, without extrapolation.
#[derive(Clone, Debug)]
pub struct RadialLevel {
    pub disc: RadialDiscretization,
    /// Discrete eigenvalue: the operator is exactly singular at this value.
    pub lambda: f64,
    /// Samples at all nodes; `2 pi sum m phi^2 = 1`.
    pub phi: Vec<f64>,
    /// Outward `w dphi/dnu` per boundary circle.
    pub flux: Vec<f64>,
    pub residual: f64,
}

impl RadialLevel {
    pub fn solve(domain: &RadialDomain, mesh: Mesh1D) -> Result<Self> {
        let disc = RadialDiscretization::new(domain, mesh)?;
        let range = disc.free_range(0);
        let stiff = disc.operator(0, 0.0);
        let scale: Vec<f64> = range.clone().map(|i| disc.mass[i].sqrt()).collect();
        let sym = SymTridiag::new(
            stiff.diag.iter().zip(&scale).map(|(d, s)| d / (s * s)).collect(),
            stiff
                .off
                .iter()
                .enumerate()
                .map(|(i, o)| o / (scale[i] * scale[i + 1]))
                .collect(),
        );
        let (_, y) = sym.smallest_eigenpair(MAX_EIGEN_ITER, 1e-15)?;
        let mut phi = vec![0.0; mesh.n()];
        for (j, i) in range.clone().enumerate() {
            phi[i] = y[j] / scale[j];
        }
        let norm = (TAU * disc.mass_inner(&phi, &phi)).sqrt();
        phi.iter_mut().for_each(|v| *v /= norm);
        // Energy-form Rayleigh quotient: no cancellation between O(1/h^2) terms.
        let lambda = disc.energy(0, 0.0, &phi, &phi) / disc.mass_inner(&phi, &phi);
        let flux = disc
            .boundary_nodes()
            .into_iter()
            .map(|b| disc.flux(0, lambda, &phi, b))
            .collect();
        let residual = disc.residual(0, lambda, &phi);
        Ok(Self {
            disc,
            lambda,
            phi,
            flux,
            residual,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenSolution {
    pub domain: RadialDomain,
    pub mesh: Mesh1D,
    /// Extrapolated first eigenvalue.
    pub lambda1: f64,
    /// Unextrapolated discrete eigenvalue on `mesh`.
    pub lambda1_mesh: f64,
    /// Positive eigenfunction on the mesh nodes, unit `L^2(Omega)` norm.
    pub phi: Vec<f64>,
    /// `dphi/dnu` (outward) per boundary circle.
    pub normal_derivs: Vec<f64>,
    pub l2_norm: f64,
    pub residual: f64,
    pub extremality_defect: f64,
}

impl EigenSolution {
    /// Mean of `|dphi/dnu|` over the boundary circles.
    pub fn mean_abs_normal_derivative(&self) -> f64 {
        self.normal_derivs.iter().map(|c| c.abs()).sum::<f64>() / self.normal_derivs.len() as f64
    }
}

/// First Dirichlet eigenpair on `mesh`, extrapolated against the nested
/// refinement of `mesh`.
pub fn solve_lambda1(domain: &RadialDomain, mesh: Mesh1D) -> Result<EigenSolution> {
    let coarse = RadialLevel::solve(domain, mesh)?;
    let fine = RadialLevel::solve(domain, mesh.refined())?;
    Ok(combine_levels(domain, mesh, &coarse, &fine))
}

pub(crate) fn combine_levels(
    domain: &RadialDomain,
    mesh: Mesh1D,
    coarse: &RadialLevel,
    fine: &RadialLevel,
) -> EigenSolution {
    let lambda1 = richardson(coarse.lambda, fine.lambda);
    let circles = domain.boundary();
    let normal_derivs: Vec<f64> = coarse
        .flux
        .iter()
        .zip(&fine.flux)
        .zip(&circles)
        .map(|((c, f), circle)| richardson(*c, *f) / domain.surface().warp(circle.r_value))
        .collect();
    let mut phi: Vec<f64> = coarse
        .phi
        .iter()
        .enumerate()
        .map(|(i, c)| richardson(*c, fine.phi[2 * i]))
        .collect();
    let weights = coarse.disc.warp_at_nodes();
    let h = mesh.spacing();
    let sq: Vec<f64> = phi.iter().zip(weights).map(|(p, w)| TAU * w * p * p).collect();
    let norm = simpson_samples(&sq, h).sqrt();
    phi.iter_mut().for_each(|v| *v /= norm);
    let sq: Vec<f64> = phi.iter().zip(weights).map(|(p, w)| TAU * w * p * p).collect();
    let l2_norm = simpson_samples(&sq, h).sqrt();
    let (lo, hi) = normal_derivs
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), c| (lo.min(c.abs()), hi.max(c.abs())));
    EigenSolution {
        domain: *domain,
        mesh,
        lambda1,
        lambda1_mesh: coarse.lambda,
        phi,
        normal_derivs,
        l2_norm,
        residual: fine.residual.max(coarse.residual),
        extremality_defect: hi - lo,
    }
}

/// Default policy: start at [`DEFAULT_NODES`] and double until the
/// extrapolated eigenvalue changes by less than [`REFINE_REL_TOL`].
pub fn solve_lambda1_auto(domain: &RadialDomain) -> Result<EigenSolution> {
    solve_lambda1_refined(domain, DEFAULT_NODES, REFINE_REL_TOL)
}

pub fn solve_lambda1_refined(
    domain: &RadialDomain,
    start_nodes: usize,
    rel_tol: f64,
) -> Result<EigenSolution> {
    let mut mesh = Mesh1D::for_domain(domain, start_nodes)?;
    let coarse = RadialLevel::solve(domain, mesh)?;
    let mut mid = RadialLevel::solve(domain, mesh.refined())?;
    let mut prev = combine_levels(domain, mesh, &coarse, &mid);
    loop {
        mesh = mesh.refined();
        if mesh.n() > MAX_NODES {
            return Err(Error::IterationLimit {
                iterations: mesh.n(),
                last_change: f64::NAN,
                residual: prev.residual,
            });
        }
        let fine = RadialLevel::solve(domain, mesh.refined())?;
        let next = combine_levels(domain, mesh, &mid, &fine);
        let change = (next.lambda1 - prev.lambda1).abs() / next.lambda1.abs();
        if change < rel_tol {
            return Ok(next);
        }
        mid = fine;
        prev = next;
    }
}

/// Potential `f''/f` of the Liouville substitution `u = f phi`, `f = sqrt(w)`.
pub fn liouville_potential(surface: &WarpedSurface, r: f64) -> f64 {
    let w = surface.warp(r);
    let dw = surface.warp_deriv(r);
    let d2w = surface.warp_second(r);
    d2w / (2.0 * w) - dw * dw / (4.0 * w * w)
}

fn liouville_level(domain: &RadialDomain, n_intervals: usize) -> f64 {
    let (a, b) = domain.radial_extent();
    let h = (b - a) / n_intervals as f64;
    let s = domain.surface();
    let diag: Vec<f64> = (1..n_intervals)
        .map(|i| 2.0 / (h * h) + liouville_potential(s, a + i as f64 * h))
        .collect();
    let off = vec![-1.0 / (h * h); n_intervals - 2];
    let t = SymTridiag::new(diag, off);
    let scale = 4.0 / (h * h);
    t.eigenvalue_bisection(0, 1e-15 * scale)
}

/// First eigenvalue from the self-adjoint Schrodinger form
/// `-u'' + (f''/f) u = lambda u`, `u = 0` at both circles, by Sturm
/// bisection and Richardson extrapolation. Independent of
/// [`solve_lambda1`] in both discretization and eigensolver.
pub fn liouville_lambda1(domain: &RadialDomain, mesh: Mesh1D) -> Result<f64> {
    if domain.surface().chart_kind() == ChartKind::Polar {
        return Err(Error::Precondition(
            "the Liouville form needs a band on a chart with w > 0".into(),
        ));
    }
    let n = mesh.intervals();
    Ok(richardson(liouville_level(domain, n), liouville_level(domain, 2 * n)))
}

/// `(pi / 2 r0)^2 - 1/2 - tan^2(r0) / 4`, a lower bound for the first
/// eigenvalue of the sphere band `Band(-r0, r0)`.
pub fn lambda1_lower_bound(r0: f64) -> Result<f64> {
    if !(r0 > 0.0 && r0 < FRAC_PI_2) {
        return Err(Error::OutOfRange(format!("r0 = {r0} not in (0, pi/2)")));
    }
    let t = r0.tan();
    Ok((PI / (2.0 * r0)).powi(2) - 0.5 - 0.25 * t * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FkPoint {
    pub r0: f64,
    pub area: f64,
    pub lambda1: f64,
    pub product: f64,
}

/// `(area, lambda1, area * lambda1)` of the geodesic disk `D_{r0}` on the
/// unit sphere.
pub fn fk_profile_point(r0: f64) -> Result<FkPoint> {
    let disk = RadialDomain::disk(WarpedSurface::sphere_polar(), r0)?;
    let sol = solve_lambda1(&disk, Mesh1D::for_domain(&disk, DEFAULT_NODES)?)?;
    let area = disk.area();
    Ok(FkPoint {
        r0,
        area,
        lambda1: sol.lambda1,
        product: area * sol.lambda1,
    })
}

/// `pi j0^2`, the small-area limit of `area * lambda1` for disks.
pub fn fk_small_area_limit() -> f64 {
    PI * BESSEL_J0_FIRST_ZERO * BESSEL_J0_FIRST_ZERO
}

/// Radius of the geodesic disk on the unit sphere with the given area.
pub fn sphere_disk_radius_for_area(area: f64) -> Result<f64> {
    if !(area > 0.0 && area < 2.0 * TAU) {
        return Err(Error::OutOfRange(format!("area {area} not in (0, 4 pi)")));
    }
    Ok((1.0 - area / TAU).acos())
}

/// Half-width of the symmetric equatorial band on the unit sphere with the
/// given area.
pub fn sphere_band_halfwidth_for_area(area: f64) -> Result<f64> {
    if !(area > 0.0 && area < 2.0 * TAU) {
        return Err(Error::OutOfRange(format!("area {area} not in (0, 4 pi)")));
    }
    Ok((area / (2.0 * TAU)).asin())
}

/// Convenience: band domain on a named surface.
pub fn band_on(name: SurfaceName, r1: f64, r2: f64) -> Result<RadialDomain> {
    RadialDomain::band(WarpedSurface::new(name), r1, r2)
}

/// `Ok` when the domain is a disk, for callers that need to branch.
pub fn disk_radius(domain: &RadialDomain) -> Option<f64> {
    match domain.kind() {
        DomainKind::Disk { r0 } => Some(r0),
        DomainKind::Band { .. } => None,
    }
}
