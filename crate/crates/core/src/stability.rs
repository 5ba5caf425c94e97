//! Second variation of the first eigenvalue at rotationally symmetric
//! extremal domains.
//!
//! Boundary data `v = d_i cos(k theta)` on circle `i` is extended by solving
//! the mode-`k` reduced equation `psi'' + (w'/w) psi' + (lambda1 - k^2/w^2) psi = 0`.
//! For `k = 0` on a band the operator is singular with kernel `phi0`; the
//! extension is the representative orthogonal to `phi0`. The quadratic form
//! `Q(v, v) = int (v dv^/dnu + kappa_g v^2) dl` then block-diagonalizes over
//! `k`, and each block is a matrix of size at most two.
//!
//! Mode-form matrices are reported per unit angle: for data `d` in mode `k`,
//! `Q = a_k d^T M d` with `a_k = 2 pi` for `k = 0` and `pi` otherwise.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, RadialDomain, SurfaceName};
use crate::quadrature::simpson;
use crate::radial_eig::{
    combine_levels, richardson, EigenSolution, Mesh1D, RadialDiscretization, RadialLevel,
    DEFAULT_NODES,
};
use crate::tridiag::SymTridiag;

pub const DEFAULT_NULL_TOL: f64 = 1e-6;
pub const DEFAULT_K_MAX: u32 = 64;
pub const POSITIVITY_STREAK: u32 = 3;
/// Relative tolerance on `sum data_i * length_i` for mode-0 data.
pub const FREDHOLM_TOL: f64 = 1e-10;
/// Extremality defect above which analyses carry a warning.
pub const EXTREMALITY_WARN: f64 = 1e-6;

/// `int cos^2(k theta) dtheta` over a full circle.
pub fn angular_factor(k: u32) -> f64 {
    if k == 0 {
        TAU
    } else {
        PI
    }
}

/// Angular multiplicity: `cos k theta` and `sin k theta` for `k >= 1`.
pub fn angular_multiplicity(k: u32) -> usize {
    if k == 0 {
        1
    } else {
        2
    }
}

/// First eigenpair on a mesh and its nested refinement; every mode-level
/// computation runs on both and is extrapolated.
#[derive(Clone, Debug)]
pub struct SpectralContext {
    domain: RadialDomain,
    levels: [RadialLevel; 2],
    eigen: EigenSolution,
}

impl SpectralContext {
    pub fn new(domain: &RadialDomain, nodes: usize) -> Result<Self> {
        let mesh = Mesh1D::for_domain(domain, nodes)?;
        let coarse = RadialLevel::solve(domain, mesh)?;
        let fine = RadialLevel::solve(domain, mesh.refined())?;
        let eigen = combine_levels(domain, mesh, &coarse, &fine);
        Ok(Self {
            domain: *domain,
            levels: [coarse, fine],
            eigen,
        })
    }

    pub fn with_default_mesh(domain: &RadialDomain) -> Result<Self> {
        Self::new(domain, DEFAULT_NODES)
    }

    pub fn domain(&self) -> &RadialDomain {
        &self.domain
    }

    pub fn eigen(&self) -> &EigenSolution {
        &self.eigen
    }

    pub fn lambda1(&self) -> f64 {
        self.eigen.lambda1
    }

    pub fn levels(&self) -> &[RadialLevel; 2] {
        &self.levels
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.eigen.mesh
    }
}

/// `(Delta + lambda1)`-extension of mode-`k` boundary data.
#[derive(Clone, Debug, Serialize)]
pub struct ModeExtension {
    pub k: u32,
    pub boundary_data: Vec<f64>,
    /// Radial profile on the context mesh.
    pub psi: Vec<f64>,
    /// Outward `dpsi/dnu` per circle.
    pub normal_derivs: Vec<f64>,
    /// Mode 0 on a band: singular system solved orthogonally to `phi0`.
    pub deflated: bool,
    /// `<psi, phi0>_{L^2}`; zero for deflated solves.
    pub kernel_overlap: f64,
    /// Multiple of `phi0` removed from the right-hand side to make it
    /// consistent; zero up to discretization error for extremal domains.
    pub consistency_shift: f64,
    pub residual: f64,
}

/// Single-mesh extension.
#[derive(Clone, Debug)]
pub struct LevelExtension {
    pub psi: Vec<f64>,
    pub flux: Vec<f64>,
    pub consistency_shift: f64,
    pub residual: f64,
}

fn check_arity(domain: &RadialDomain, data: &[f64]) -> Result<()> {
    let expected = domain.boundary().len();
    if data.len() != expected {
        return Err(Error::Arity {
            expected,
            got: data.len(),
        });
    }
    Ok(())
}

fn check_fredholm(domain: &RadialDomain, k: u32, data: &[f64]) -> Result<()> {
    if k != 0 {
        return Ok(());
    }
    let circles = domain.boundary();
    let mean: f64 = data.iter().zip(&circles).map(|(d, c)| d * c.length).sum();
    let size: f64 = data.iter().zip(&circles).map(|(d, c)| d.abs() * c.length).sum();
    let tol = FREDHOLM_TOL * size.max(f64::MIN_POSITIVE);
    if mean.abs() > tol {
        return Err(Error::FredholmViolation { mean, tol });
    }
    Ok(())
}

/// Extension on one mesh at that mesh's discrete eigenvalue.
pub fn solve_extension_level(level: &RadialLevel, k: u32, data: &[f64]) -> Result<LevelExtension> {
    let disc = &level.disc;
    let domain = disc.domain();
    check_arity(domain, data)?;
    check_fredholm(domain, k, data)?;
    let lambda = level.lambda;
    let n = disc.mesh().n();
    let mut psi = vec![0.0; n];
    let bnodes = disc.boundary_nodes();
    for (b, d) in bnodes.iter().zip(data) {
        psi[*b] = *d;
    }
    let range = disc.free_range(k);
    if domain.is_disk() && k == 0 {
        // The only zero-mean data on a single circle is zero.
        let flux = bnodes.iter().map(|_| 0.0).collect();
        return Ok(LevelExtension {
            psi,
            flux,
            consistency_shift: 0.0,
            residual: 0.0,
        });
    }
    let h = disc.spacing();
    let op = disc.operator(k, lambda);
    let mut rhs = vec![0.0; range.len()];
    let face = |i: usize| {
        // face between nodes i and i+1
        let (a, _) = domain.radial_extent();
        domain.surface().warp(a + (i as f64 + 0.5) * h)
    };
    if range.start > 0 {
        rhs[0] += face(range.start - 1) / h * psi[range.start - 1];
    }
    let last = range.end - 1;
    rhs[last - range.start] += face(last) / h * psi[last + 1];

    let mut shift = 0.0;
    let local = if k == 0 {
        let phi: Vec<f64> = range.clone().map(|i| level.phi[i]).collect();
        let mass: Vec<f64> = range.clone().map(|i| disc.mass()[i]).collect();
        let bphi: Vec<f64> = phi.iter().zip(&mass).map(|(p, m)| p * m).collect();
        let phi_b_phi: f64 = phi.iter().zip(&bphi).map(|(p, q)| p * q).sum();
        shift = rhs.iter().zip(&phi).map(|(r, p)| r * p).sum::<f64>() / phi_b_phi;
        for (r, q) in rhs.iter_mut().zip(&bphi) {
            *r -= shift * q;
        }
        let mut x = solve_singular(&op, &rhs, &phi)?;
        let overlap = x.iter().zip(&bphi).map(|(a, b)| a * b).sum::<f64>() / phi_b_phi;
        for (v, p) in x.iter_mut().zip(&phi) {
            *v -= overlap * p;
        }
        x
    } else {
        op.solve_spd(&rhs).map_err(|pivot| Error::Resonance { k, lambda, pivot })?
    };
    for (i, v) in range.clone().zip(local) {
        psi[i] = v;
    }
    let flux = bnodes.iter().map(|&b| disc.flux(k, lambda, &psi, b)).collect();
    let residual = if k == 0 {
        // residual of the consistent (shifted) system
        let mut shifted = psi.clone();
        for i in range.clone() {
            shifted[i] = psi[i];
        }
        residual_with_shift(disc, k, lambda, &shifted, shift, &level.phi)
    } else {
        disc.residual(k, lambda, &psi)
    };
    Ok(LevelExtension {
        psi,
        flux,
        consistency_shift: shift,
        residual,
    })
}

fn residual_with_shift(
    disc: &RadialDiscretization,
    k: u32,
    lambda: f64,
    psi: &[f64],
    shift: f64,
    phi: &[f64],
) -> f64 {
    // (L psi)_i / m_i + shift * phi_i should vanish at interior nodes
    let h = disc.spacing();
    let range = disc.free_range(k);
    let op = disc.operator(k, lambda);
    let local: Vec<f64> = range.clone().map(|i| psi[i]).collect();
    let mut lu = op.matvec(&local);
    let (a, _) = disc.domain().radial_extent();
    let w = |i: usize| disc.domain().surface().warp(a + (i as f64 + 0.5) * h);
    if range.start > 0 {
        lu[0] -= w(range.start - 1) / h * psi[range.start - 1];
    }
    let last = range.end - 1;
    lu[last - range.start] -= w(last) / h * psi[last + 1];
    range
        .zip(lu)
        .map(|(i, r)| (r / disc.mass()[i] + shift * phi[i]).abs())
        .fold(0.0, f64::max)
}

/// Solves `op x = rhs` for a positive semidefinite tridiagonal `op` whose
/// kernel is spanned by `kernel`, with `rhs` orthogonal to the kernel.
/// Pinning the unknown where the kernel vector peaks splits the system into
/// two positive definite Dirichlet problems.
fn solve_singular(op: &SymTridiag, rhs: &[f64], kernel: &[f64]) -> Result<Vec<f64>> {
    let n = op.len();
    let j = kernel
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) })
        .0;
    let mut x = vec![0.0; n];
    if j > 0 {
        let left = SymTridiag::new(op.diag[..j].to_vec(), op.off[..j - 1].to_vec());
        let sol = left.solve_spd(&rhs[..j]).map_err(|pivot| Error::Resonance {
            k: 0,
            lambda: f64::NAN,
            pivot,
        })?;
        x[..j].copy_from_slice(&sol);
    }
    if j + 1 < n {
        let right = SymTridiag::new(op.diag[j + 1..].to_vec(), op.off[j + 1..].to_vec());
        let sol = right.solve_spd(&rhs[j + 1..]).map_err(|pivot| Error::Resonance {
            k: 0,
            lambda: f64::NAN,
            pivot,
        })?;
        x[j + 1..].copy_from_slice(&sol);
    }
    Ok(x)
}

/// `(Delta + lambda1)`-extension of `data_i cos(k theta)`, extrapolated
/// between the two meshes of the context.
pub fn solve_extension(ctx: &SpectralContext, k: u32, data: &[f64]) -> Result<ModeExtension> {
    let [coarse, fine] = ctx.levels();
    let c = solve_extension_level(coarse, k, data)?;
    let f = solve_extension_level(fine, k, data)?;
    let domain = ctx.domain();
    let psi: Vec<f64> = c
        .psi
        .iter()
        .enumerate()
        .map(|(i, v)| richardson(*v, f.psi[2 * i]))
        .collect();
    let normal_derivs = c
        .flux
        .iter()
        .zip(&f.flux)
        .zip(domain.boundary())
        .map(|((a, b), circle)| richardson(*a, *b) / domain.surface().warp(circle.r_value))
        .collect();
    let deflated = k == 0 && !domain.is_disk();
    let kernel_overlap = if deflated {
        TAU * coarse.disc.mass_inner(&c.psi, &coarse.phi)
    } else {
        0.0
    };
    Ok(ModeExtension {
        k,
        boundary_data: data.to_vec(),
        psi,
        normal_derivs,
        deflated,
        kernel_overlap,
        consistency_shift: richardson(c.consistency_shift, f.consistency_shift),
        residual: c.residual.max(f.residual),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeForm {
    pub k: u32,
    /// Boundary data of each basis vector.
    pub basis: Vec<Vec<f64>>,
    /// Per-unit-angle form in the basis above.
    pub matrix: Vec<Vec<f64>>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Boundary data of the eigenvector belonging to each eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    pub symmetry_defect: f64,
    pub multiplicity: usize,
}

impl ModeForm {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }
}

/// Admissible boundary basis for mode `k`.
pub fn mode_basis(domain: &RadialDomain, k: u32) -> Vec<Vec<f64>> {
    match (domain.kind(), k) {
        (DomainKind::Disk { .. }, 0) => vec![],
        (DomainKind::Disk { .. }, _) => vec![vec![1.0]],
        (DomainKind::Band { .. }, 0) => {
            let c = domain.boundary();
            let (l1, l2) = (c[0].length, c[1].length);
            let n = l1.hypot(l2);
            vec![vec![l2 / n, -l1 / n]]
        }
        (DomainKind::Band { .. }, _) => vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    }
}

/// Per-unit-angle `M_ij = sum_circles e_i (w dê_j/dnu + w kappa_g e_j)` on one mesh.
fn mode_matrix_level(level: &RadialLevel, k: u32, basis: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let domain = level.disc.domain();
    let circles = domain.boundary();
    let columns: Vec<Vec<f64>> = basis
        .iter()
        .map(|e| {
            let ext = solve_extension_level(level, k, e)?;
            Ok(circles
                .iter()
                .enumerate()
                .map(|(c, circle)| {
                    let w = domain.surface().warp(circle.r_value);
                    ext.flux[c] + w * circle.kappa_g * e[c]
                })
                .collect::<Vec<f64>>())
        })
        .collect::<Result<_>>()?;
    Ok(basis
        .iter()
        .map(|ei| {
            columns
                .iter()
                .map(|col| ei.iter().zip(col).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect())
}

/// Symmetric eigen-decomposition of a 1x1 or 2x2 matrix; ascending.
fn small_symmetric_eigen(m: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    match m.len() {
        0 => (vec![], vec![]),
        1 => (vec![m[0][0]], vec![vec![1.0]]),
        2 => {
            let a = m[0][0];
            let b = 0.5 * (m[0][1] + m[1][0]);
            let c = m[1][1];
            let mean = 0.5 * (a + c);
            let rad = (0.5 * (a - c)).hypot(b);
            let lo = mean - rad;
            let hi = mean + rad;
            let vec_for = |l: f64| {
                // (a - l) x + b y = 0; pick the better-conditioned row
                let (x, y) = if (a - l).abs() + b.abs() >= (c - l).abs() + b.abs() {
                    (b, l - a)
                } else {
                    (l - c, b)
                };
                let (x, y) = if x == 0.0 && y == 0.0 { (1.0, 0.0) } else { (x, y) };
                let n = x.hypot(y);
                vec![x / n, y / n]
            };
            let v_lo = if rad == 0.0 { vec![1.0, 0.0] } else { vec_for(lo) };
            let v_hi = if rad == 0.0 { vec![0.0, 1.0] } else { vec![-v_lo[1], v_lo[0]] };
            (vec![lo, hi], vec![v_lo, v_hi])
        }
        _ => unreachable!("mode blocks have size at most two"),
    }
}

/// Assembles the mode-`k` block of `Q`.
pub fn mode_form(ctx: &SpectralContext, k: u32) -> Result<ModeForm> {
    let domain = ctx.domain();
    let basis = mode_basis(domain, k);
    let [coarse, fine] = ctx.levels();
    let mc = mode_matrix_level(coarse, k, &basis)?;
    let mf = mode_matrix_level(fine, k, &basis)?;
    let matrix: Vec<Vec<f64>> = mc
        .iter()
        .zip(&mf)
        .map(|(rc, rf)| rc.iter().zip(rf).map(|(a, b)| richardson(*a, *b)).collect())
        .collect();
    let symmetry_defect = symmetry_defect(&matrix)
        .max(symmetry_defect(&mc))
        .max(symmetry_defect(&mf));
    let (eigenvalues, coeffs) = small_symmetric_eigen(&matrix);
    let eigenvectors = coeffs
        .iter()
        .map(|c| {
            let m = domain.boundary().len();
            (0..m)
                .map(|i| c.iter().zip(&basis).map(|(a, e)| a * e[i]).sum())
                .collect()
        })
        .collect();
    Ok(ModeForm {
        k,
        basis,
        matrix,
        eigenvalues,
        eigenvectors,
        symmetry_defect,
        multiplicity: angular_multiplicity(k),
    })
}

fn symmetry_defect(m: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..m.len() {
        for j in 0..m.len() {
            d = d.max((m[i][j] - m[j][i]).abs());
        }
    }
    d
}

/// `Q(v, w) = a_k sum_circles v_i (dŵ/dnu + kappa_g w_i) length_i / (2 pi)`
/// for mode-`k` data.
pub fn quadratic_form(ctx: &SpectralContext, k: u32, v: &[f64], w: &[f64]) -> Result<f64> {
    let ext = solve_extension(ctx, k, w)?;
    check_arity(ctx.domain(), v)?;
    Ok(boundary_pairing(ctx.domain(), k, v, &ext.normal_derivs, w))
}

/// `a_k sum_i v_i (dn_i + kappa_i w_i) w(r_i)`.
pub fn boundary_pairing(domain: &RadialDomain, k: u32, v: &[f64], dn: &[f64], w: &[f64]) -> f64 {
    angular_factor(k)
        * domain
            .boundary()
            .iter()
            .enumerate()
            .map(|(i, c)| v[i] * (dn[i] + c.kappa_g * w[i]) * c.length / TAU)
            .sum::<f64>()
}

/// `S(v^, v^)` of the extension, computed from the volume energy
/// `int |grad v^|^2 - lambda1 v^2 + int_boundary kappa_g v^2` on each mesh.
pub fn extension_volume_form(ctx: &SpectralContext, k: u32, data: &[f64]) -> Result<f64> {
    let domain = ctx.domain();
    let circles = domain.boundary();
    let per_level = |level: &RadialLevel| -> Result<f64> {
        let ext = solve_extension_level(level, k, data)?;
        let bulk = level.disc.energy(k, level.lambda, &ext.psi, &ext.psi);
        let boundary: f64 = circles
            .iter()
            .zip(data)
            .map(|(c, d)| c.kappa_g * d * d * c.length / TAU)
            .sum();
        Ok(angular_factor(k) * (bulk + boundary))
    };
    let [coarse, fine] = ctx.levels();
    Ok(richardson(per_level(coarse)?, per_level(fine)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexConfig {
    pub k_max: u32,
    pub null_tol: f64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            k_max: DEFAULT_K_MAX,
            null_tol: DEFAULT_NULL_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub domain: String,
    pub lambda1: f64,
    pub extremality_defect: f64,
    pub modes: Vec<ModeForm>,
    /// Negative directions counted with angular multiplicity.
    pub morse_index: usize,
    pub nullity: usize,
    pub expected_symmetries: usize,
    pub k_threshold: u32,
    pub k_stop: u32,
    pub stop_reason: String,
    /// Largest `|eigenvalue|` over all scanned modes.
    pub scale: f64,
    pub null_tol: f64,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

impl StabilityReport {
    /// `null_tol * scale`.
    pub fn null_threshold(&self) -> f64 {
        self.null_tol * self.scale
    }

    /// Rows `(k, m, eig_1..eig_m)` for CSV export.
    pub fn mode_table(&self) -> Vec<(u32, usize, Vec<f64>)> {
        self.modes
            .iter()
            .map(|f| (f.k, f.dim(), f.eigenvalues.clone()))
            .collect()
    }
}

/// Mode above which positivity is expected: `ceil(sqrt(lambda1) max w + max|kappa_g| max w)`.
pub fn positivity_threshold(ctx: &SpectralContext) -> u32 {
    let max_w = ctx.levels()[0]
        .disc
        .warp_at_nodes()
        .iter()
        .fold(0.0_f64, |m, w| m.max(*w));
    let max_kappa = ctx
        .domain()
        .boundary()
        .iter()
        .fold(0.0_f64, |m, c| m.max(c.kappa_g.abs()));
    (ctx.lambda1().sqrt() * max_w + max_kappa * max_w).ceil() as u32
}

/// Scans Fourier modes, accumulating negative and null directions of `Q`.
pub fn morse_index(ctx: &SpectralContext, config: IndexConfig) -> Result<StabilityReport> {
    let domain = ctx.domain();
    let k_threshold = positivity_threshold(ctx);
    let mut modes = Vec::new();
    let mut streak = 0;
    let mut stop: Option<(u32, String)> = None;
    for k in 0..=config.k_max {
        let form = mode_form(ctx, k)?;
        let positive = form.min_eigenvalue().is_none_or(|e| e > 0.0);
        modes.push(form);
        if k > k_threshold {
            if positive {
                streak += 1;
            } else {
                streak = 0;
            }
            if streak >= POSITIVITY_STREAK {
                stop = Some((
                    k,
                    format!("{POSITIVITY_STREAK} positive modes past threshold k = {k_threshold}"),
                ));
                break;
            }
        }
    }
    let eigen = ctx.eigen();
    let mut warnings = Vec::new();
    let rel_defect = eigen.extremality_defect / eigen.mean_abs_normal_derivative();
    if rel_defect > EXTREMALITY_WARN {
        warnings.push(format!(
            "domain is not extremal: relative spread of |dphi/dnu| is {rel_defect:.3e}"
        ));
    }
    let report = classify(domain, ctx.lambda1(), eigen.extremality_defect, modes, k_threshold, config, stop.clone(), warnings);
    match stop {
        Some(_) => Ok(report),
        None => Err(Error::TruncationInconclusive {
            k_max: config.k_max,
            partial: Box::new(report),
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn classify(
    domain: &RadialDomain,
    lambda1: f64,
    extremality_defect: f64,
    modes: Vec<ModeForm>,
    k_threshold: u32,
    config: IndexConfig,
    stop: Option<(u32, String)>,
    warnings: Vec<String>,
) -> StabilityReport {
    let scale = modes
        .iter()
        .flat_map(|f| f.eigenvalues.iter())
        .fold(0.0_f64, |m, e| m.max(e.abs()));
    let thr = config.null_tol * scale;
    let mut morse_index = 0;
    let mut nullity = 0;
    for f in &modes {
        for e in &f.eigenvalues {
            if *e < -thr {
                morse_index += f.multiplicity;
            } else if e.abs() <= thr {
                nullity += f.multiplicity;
            }
        }
    }
    let expected_symmetries = domain.surface().expected_symmetry_count(&domain.kind());
    let verdict = if morse_index > 0 {
        Verdict::Unstable
    } else if nullity > expected_symmetries {
        Verdict::Marginal
    } else {
        Verdict::Stable
    };
    let (k_stop, stop_reason) = stop.unwrap_or_else(|| {
        (
            config.k_max,
            format!("k_max = {} reached without a positivity streak", config.k_max),
        )
    });
    StabilityReport {
        domain: domain.describe(),
        lambda1,
        extremality_defect,
        modes,
        morse_index,
        nullity,
        expected_symmetries,
        k_threshold,
        k_stop,
        stop_reason,
        scale,
        null_tol: config.null_tol,
        verdict,
        warnings,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JacobiDirection {
    pub k: u32,
    pub boundary_vector: Vec<f64>,
    pub eigenvalue: f64,
    pub multiplicity: usize,
}

/// Null directions of `Q` in the report.
pub fn jacobi_kernel(report: &StabilityReport) -> Vec<JacobiDirection> {
    let thr = report.null_threshold();
    report
        .modes
        .iter()
        .flat_map(|f| {
            f.eigenvalues
                .iter()
                .zip(&f.eigenvectors)
                .filter(move |(e, _)| e.abs() <= thr)
                .map(move |(e, v)| JacobiDirection {
                    k: f.k,
                    boundary_vector: v.clone(),
                    eigenvalue: *e,
                    multiplicity: f.multiplicity,
                })
        })
        .collect()
}

/// Per-circle values of `dv^/dnu + kappa_g v`; constant across circles
/// exactly when `v` is a Jacobi function (zero for `k >= 1`).
pub fn jacobi_boundary_values(ctx: &SpectralContext, k: u32, data: &[f64]) -> Result<Vec<f64>> {
    let ext = solve_extension(ctx, k, data)?;
    Ok(ctx
        .domain()
        .boundary()
        .iter()
        .enumerate()
        .map(|(i, c)| ext.normal_derivs[i] + c.kappa_g * data[i])
        .collect())
}

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Test functions `v` for the volume form
/// `S(v, v) = int |grad v|^2 - lambda1 int v^2 + int_boundary kappa_g v^2`.
#[derive(Clone)]
pub enum TestFunction {
    /// `f(r) cos(k theta)` with its radial derivative.
    Separable {
        k: u32,
        profile: RadialFn,
        derivative: RadialFn,
    },
    /// `sin r / sin r0` on the sphere band chart.
    SinRatio { r0: f64 },
    /// Ambient coordinate `x_1`, `x_2` or `x_3` (index 0, 1, 2) of a sphere chart.
    Coordinate(usize),
    /// Sum of `values(r) cos(k theta)` (or `sin`) sampled on the domain mesh.
    Sampled {
        mesh: Mesh1D,
        components: Vec<SampledMode>,
    },
}

#[derive(Clone, Debug)]
pub struct SampledMode {
    pub k: u32,
    pub sine: bool,
    pub values: Vec<f64>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Separable { k, .. } => write!(f, "Separable {{ k: {k} }}"),
            TestFunction::SinRatio { r0 } => write!(f, "SinRatio {{ r0: {r0} }}"),
            TestFunction::Coordinate(i) => write!(f, "Coordinate({i})"),
            TestFunction::Sampled { mesh, components } => write!(
                f,
                "Sampled {{ n: {}, modes: {:?} }}",
                mesh.n(),
                components.iter().map(|c| c.k).collect::<Vec<_>>()
            ),
        }
    }
}

/// The three pieces of `S(v, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FormParts {
    pub dirichlet: f64,
    pub l2_squared: f64,
    pub boundary: f64,
}

impl FormParts {
    pub fn value(&self, lambda1: f64) -> f64 {
        self.dirichlet - lambda1 * self.l2_squared + self.boundary
    }
}

struct SeparableParts {
    k: u32,
    f: RadialFn,
    df: RadialFn,
}

fn separable_parts(domain: &RadialDomain, v: &TestFunction) -> Result<Vec<SeparableParts>> {
    let arc = |g: fn(f64) -> f64| -> RadialFn { Arc::new(g) };
    let name = domain.surface().name();
    Ok(match v {
        TestFunction::Separable {
            k,
            profile,
            derivative,
        } => vec![SeparableParts {
            k: *k,
            f: profile.clone(),
            df: derivative.clone(),
        }],
        TestFunction::SinRatio { r0 } => {
            if name != SurfaceName::SphereBand {
                return Err(Error::Precondition(
                    "sin r / sin r0 is defined on the sphere band chart".into(),
                ));
            }
            let s = r0.sin();
            vec![SeparableParts {
                k: 0,
                f: Arc::new(move |r: f64| r.sin() / s),
                df: Arc::new(move |r: f64| r.cos() / s),
            }]
        }
        TestFunction::Coordinate(i) => {
            let (horizontal, vertical) = match name {
                SurfaceName::SphereBand => (
                    (arc(f64::cos), arc(|r: f64| -r.sin())),
                    (arc(f64::sin), arc(f64::cos)),
                ),
                SurfaceName::SpherePolar => (
                    (arc(f64::sin), arc(f64::cos)),
                    (arc(f64::cos), arc(|r: f64| -r.sin())),
                ),
                SurfaceName::Flat => {
                    return Err(Error::Precondition(
                        "coordinate functions need a sphere chart".into(),
                    ))
                }
            };
            match i {
                0 | 1 => vec![SeparableParts {
                    k: 1,
                    f: horizontal.0,
                    df: horizontal.1,
                }],
                2 => vec![SeparableParts {
                    k: 0,
                    f: vertical.0,
                    df: vertical.1,
                }],
                _ => return Err(Error::OutOfRange(format!("coordinate index {i}"))),
            }
        }
        TestFunction::Sampled { .. } => vec![],
    })
}

/// `int_{boundary} v dl`; only mode-0 content contributes.
pub fn boundary_mean(domain: &RadialDomain, v: &TestFunction) -> Result<(f64, f64)> {
    let circles = domain.boundary();
    let mut mean = 0.0;
    let mut size = 0.0;
    match v {
        TestFunction::Sampled { mesh, components } => {
            let nodes = [0, mesh.n() - 1];
            for c in components.iter().filter(|c| c.k == 0 && !c.sine) {
                for circle in &circles {
                    let idx = if circle.r_value == mesh.start() { nodes[0] } else { nodes[1] };
                    mean += c.values[idx] * circle.length;
                    size += c.values[idx].abs() * circle.length;
                }
            }
        }
        _ => {
            for p in separable_parts(domain, v)?.iter().filter(|p| p.k == 0) {
                for circle in &circles {
                    let val = (p.f)(circle.r_value);
                    mean += val * circle.length;
                    size += val.abs() * circle.length;
                }
            }
        }
    }
    Ok((mean, size))
}

/// Pieces of `S(v, v)` by quadrature; the angular integral is analytic.
/// Sampled profiles use the flux-form energy of the radial discretization.
pub fn stability_form_parts(domain: &RadialDomain, v: &TestFunction) -> Result<FormParts> {
    let circles = domain.boundary();
    let s = *domain.surface();
    let (a, b) = domain.radial_extent();
    match v {
        TestFunction::Sampled { mesh, components } => {
            let disc = RadialDiscretization::new(domain, *mesh)?;
            let mut parts = FormParts {
                dirichlet: 0.0,
                l2_squared: 0.0,
                boundary: 0.0,
            };
            for c in components {
                if c.values.len() != mesh.n() {
                    return Err(Error::Arity {
                        expected: mesh.n(),
                        got: c.values.len(),
                    });
                }
                if c.k == 0 && c.sine {
                    continue;
                }
                let fac = angular_factor(c.k);
                let mass = disc.mass_inner(&c.values, &c.values);
                let energy = disc.energy(c.k, 0.0, &c.values, &c.values);
                parts.dirichlet += fac * energy;
                parts.l2_squared += fac * mass;
                let bnodes = disc.boundary_nodes();
                parts.boundary += fac
                    * circles
                        .iter()
                        .zip(&bnodes)
                        .map(|(cir, &i)| cir.kappa_g * c.values[i] * c.values[i] * cir.length / TAU)
                        .sum::<f64>();
            }
            Ok(parts)
        }
        _ => {
            let mut parts = FormParts {
                dirichlet: 0.0,
                l2_squared: 0.0,
                boundary: 0.0,
            };
            for p in separable_parts(domain, v)? {
                let fac = angular_factor(p.k);
                let kk = f64::from(p.k * p.k);
                let (f, df) = (p.f.clone(), p.df.clone());
                let grad = simpson(
                    move |r| {
                        let w = s.warp(r);
                        let fr = f(r);
                        let dfr = df(r);
                        let ang = if w == 0.0 { 0.0 } else { kk * fr * fr / w };
                        dfr * dfr * w + ang
                    },
                    a,
                    b,
                );
                let f = p.f.clone();
                let l2 = simpson(move |r| f(r) * f(r) * s.warp(r), a, b);
                parts.dirichlet += fac * grad;
                parts.l2_squared += fac * l2;
                parts.boundary += fac
                    * circles
                        .iter()
                        .map(|c| {
                            let val = (p.f)(c.r_value);
                            c.kappa_g * val * val * c.length / TAU
                        })
                        .sum::<f64>();
            }
            Ok(parts)
        }
    }
}

/// `S(v, v)`; requires `int_{boundary} v dl = 0`.
pub fn stability_form_s(domain: &RadialDomain, lambda1: f64, v: &TestFunction) -> Result<f64> {
    let (mean, size) = boundary_mean(domain, v)?;
    if mean.abs() > 1e-9 * size.max(1e-300) {
        return Err(Error::Precondition(format!(
            "test function has boundary mean {mean:.3e}; the criterion needs zero"
        )));
    }
    Ok(stability_form_parts(domain, v)?.value(lambda1))
}

/// `sum_i S(x_i, x_i)` over the three coordinate functions, and the closed
/// form `int kappa_g dl + (2 - lambda1) area` it equals when
/// `|grad x|^2 = 2` and `|x|^2 = 1`.
pub fn coordinate_sum_identity(domain: &RadialDomain, lambda1: f64) -> Result<(f64, f64)> {
    let mut total = 0.0;
    for i in 0..3 {
        total += stability_form_parts(domain, &TestFunction::Coordinate(i))?.value(lambda1);
    }
    let closed = domain.total_geodesic_curvature() + (2.0 - lambda1) * domain.area();
    Ok((total, closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WarpedSurface;
    use crate::oracles;

    fn ctx(domain: RadialDomain, n: usize) -> SpectralContext {
        SpectralContext::new(&domain, n).unwrap()
    }

    #[test]
    fn flat_hyperbolic_extension() {
        let a = 2.0;
        let d = RadialDomain::symmetric_band(WarpedSurface::flat(), a).unwrap();
        let c = ctx(d, 1024);
        let lam = c.lambda1();
        let k = 1;
        let mu = (1.0 - lam).sqrt();
        let ext = solve_extension(&c, k, &[1.0, 1.0]).unwrap();
        let nodes = c.mesh().nodes();
        let err = nodes
            .iter()
            .zip(&ext.psi)
            .map(|(r, p)| (p - (mu * r).cosh() / (mu * a).cosh()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        for dn in &ext.normal_derivs {
            assert!((dn - mu * (mu * a).tanh()).abs() < 1e-8);
        }
    }

    #[test]
    fn mode_zero_data_must_have_zero_mean() {
        let d = RadialDomain::symmetric_band(WarpedSurface::sphere_band(), 0.5).unwrap();
        let c = ctx(d, 256);
        assert!(matches!(
            solve_extension(&c, 0, &[1.0, 1.0]),
            Err(Error::FredholmViolation { .. })
        ));
        assert!(matches!(solve_extension(&c, 0, &[1.0]), Err(Error::Arity { .. })));
    }

    #[test]
    fn deflated_extension_is_orthogonal_to_ground_state() {
        let d = RadialDomain::symmetric_band(WarpedSurface::sphere_band(), 0.9).unwrap();
        let c = ctx(d, 512);
        let ext = solve_extension(&c, 0, &[-1.0, 1.0]).unwrap();
        assert!(ext.deflated);
        assert!(ext.kernel_overlap.abs() < 1e-10);
        assert!(ext.consistency_shift.abs() < 1e-9);
        assert!((ext.psi[0] + 1.0).abs() < 1e-12);
        assert!((ext.psi.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_band_dtn_eigenvalues() {
        let a = 2.0;
        let d = RadialDomain::symmetric_band(WarpedSurface::flat(), a).unwrap();
        let c = ctx(d, 1024);
        for k in 1..4 {
            let form = mode_form(&c, k).unwrap();
            let (s, t) = oracles::flat_band_dtn(a, k, c.lambda1());
            let mut expect = [s, t];
            expect.sort_by(f64::total_cmp);
            for (got, want) in form.eigenvalues.iter().zip(expect) {
                assert!((got - want).abs() < 1e-7, "k {k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn disk_rotation_mode_is_null() {
        let d = RadialDomain::disk(WarpedSurface::sphere_polar(), 0.8).unwrap();
        let c = ctx(d, 1024);
        let form = mode_form(&c, 1).unwrap();
        assert!(form.eigenvalues[0].abs() < 1e-6, "{:?}", form.eigenvalues);
        let zero = mode_form(&c, 0).unwrap();
        assert_eq!(zero.dim(), 0);
    }

    #[test]
    fn green_symmetry_of_band_blocks() {
        let d = RadialDomain::band(WarpedSurface::sphere_band(), -0.4, 0.9).unwrap();
        let c = ctx(d, 512);
        for k in 1..5 {
            assert!(mode_form(&c, k).unwrap().symmetry_defect < 1e-8);
        }
    }

    #[test]
    fn index_of_sphere_band_and_disk() {
        let band = RadialDomain::symmetric_band(WarpedSurface::sphere_band(), 1.0).unwrap();
        let r = morse_index(&ctx(band, 1024), IndexConfig::default()).unwrap();
        assert!(r.morse_index >= 1);
        assert_eq!(r.verdict, Verdict::Unstable);
        let disk = RadialDomain::disk(WarpedSurface::sphere_polar(), 0.8).unwrap();
        let r = morse_index(&ctx(disk, 1024), IndexConfig::default()).unwrap();
        assert_eq!(r.morse_index, 0);
        assert_eq!(r.nullity, 2);
        assert_eq!(r.verdict, Verdict::Stable);
        let kern = jacobi_kernel(&r);
        assert_eq!(kern.len(), 1);
        assert_eq!(kern[0].k, 1);
    }

    #[test]
    fn tiny_k_max_is_inconclusive() {
        let band = RadialDomain::symmetric_band(WarpedSurface::sphere_band(), 0.3).unwrap();
        let err = morse_index(
            &ctx(band, 256),
            IndexConfig {
                k_max: 2,
                null_tol: DEFAULT_NULL_TOL,
            },
        )
        .unwrap_err();
        match err {
            Error::TruncationInconclusive { partial, .. } => assert_eq!(partial.modes.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn x3_has_zero_boundary_mean_on_symmetric_band() {
        let d = RadialDomain::symmetric_band(WarpedSurface::sphere_band(), 0.7).unwrap();
        let (mean, _) = boundary_mean(&d, &TestFunction::Coordinate(2)).unwrap();
        assert!(mean.abs() < 1e-14);
        let disk = RadialDomain::disk(WarpedSurface::sphere_polar(), 0.7).unwrap();
        assert!(matches!(
            stability_form_s(&disk, 3.0, &TestFunction::Coordinate(2)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn sin_ratio_energy() {
        let r0 = 1.1;
        let d = RadialDomain::symmetric_band(WarpedSurface::sphere_band(), r0).unwrap();
        let parts = stability_form_parts(&d, &TestFunction::SinRatio { r0 }).unwrap();
        let exact = oracles::sin_ratio_dirichlet_energy(r0);
        assert!((parts.dirichlet - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn small_eigen_two_by_two() {
        let (vals, vecs) = small_symmetric_eigen(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((vals[0] - 1.0).abs() < 1e-15 && (vals[1] - 3.0).abs() < 1e-15);
        assert!((vecs[0][0] + vecs[0][1]).abs() < 1e-15);
        let (vals, _) = small_symmetric_eigen(&[vec![5.0, 0.0], vec![0.0, -1.0]]);
        assert_eq!(vals, vec![-1.0, 5.0]);
    }
}
