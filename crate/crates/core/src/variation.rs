//! Deformation families of bands and finite-difference checks of the first
//! and second variation of `lambda1`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, RadialDomain};
use crate::radial_eig::{solve_lambda1, Mesh1D, DEFAULT_NODES};
use crate::stability::{boundary_pairing, solve_extension, SpectralContext};

/// Finite-difference steps; the second is half the first for Richardson.
pub const FD_STEPS: [f64; 2] = [1e-3, 5e-4];
pub const REL_ERROR_FLOOR: f64 = 1e-12;
/// Relative extremality defect above which the second-variation formula
/// does not apply.
pub const EXTREMALITY_TOL: f64 = 1e-6;
const NEWTON_MAX_ITER: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyMode {
    /// `r2(t) = r2 + t`, `r1` fixed.
    GrowTop,
    /// `r2(t) = r2 + t`, `r1(t)` chosen so the area is unchanged.
    SlideVolumePreserving,
    /// Every member equals the base.
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandFamily {
    pub base: RadialDomain,
    pub mode: FamilyMode,
    /// Largest `|t|` for which members are guaranteed valid.
    pub t_max: f64,
}

impl BandFamily {
    pub fn new(base: RadialDomain, mode: FamilyMode) -> Result<Self> {
        let (r1, r2) = match base.kind() {
            DomainKind::Band { r1, r2 } => (r1, r2),
            DomainKind::Disk { .. } => {
                return Err(Error::Precondition("deformation families need a band".into()))
            }
        };
        let s = base.surface();
        let room = (r2 - r1)
            .min(s.r_max() - r2)
            .min(r1 - s.r_min())
            .min(1.0);
        let mut family = Self {
            base,
            mode,
            t_max: 0.25 * room,
        };
        // the sliding bottom moves w(r2)/w(r1) times as fast as the top
        while mode == FamilyMode::SlideVolumePreserving && !family.endpoints_fit(r1) {
            family.t_max *= 0.5;
            if family.t_max < 1e-8 {
                return Err(Error::Precondition("no room to slide the band".into()));
            }
        }
        Ok(family)
    }

    /// Both extreme members are valid bands whose bottom keeps at least half
    /// of the original distance to the chart edge.
    fn endpoints_fit(&self, r1: f64) -> bool {
        let edge = self.base.surface().r_min();
        [-self.t_max, self.t_max]
            .iter()
            .all(|&t| {
                self.at(t)
                    .is_ok_and(|d| edge.is_infinite() || d.radial_extent().0 - edge > 0.5 * (r1 - edge))
            })
    }

    pub fn grow_top(base: RadialDomain) -> Result<Self> {
        Self::new(base, FamilyMode::GrowTop)
    }

    pub fn slide(base: RadialDomain) -> Result<Self> {
        Self::new(base, FamilyMode::SlideVolumePreserving)
    }

    fn bounds(&self) -> (f64, f64) {
        self.base.radial_extent()
    }

    /// Member at parameter `t`.
    pub fn at(&self, t: f64) -> Result<RadialDomain> {
        if t.abs() > self.t_max {
            return Err(Error::OutOfRange(format!(
                "family parameter {t} beyond {}",
                self.t_max
            )));
        }
        let (r1, r2) = self.bounds();
        let s = *self.base.surface();
        match self.mode {
            FamilyMode::Constant => Ok(self.base),
            FamilyMode::GrowTop => RadialDomain::band(s, r1, r2 + t),
            FamilyMode::SlideVolumePreserving => {
                let top = r2 + t;
                let target = s.warp_antiderivative(top) - (s.warp_antiderivative(r2) - s.warp_antiderivative(r1));
                // W(x) = target, started from the first-order guess
                let mut x = r1 + t * s.warp(r2) / s.warp(r1);
                for _ in 0..NEWTON_MAX_ITER {
                    let step = (s.warp_antiderivative(x) - target) / s.warp(x);
                    x -= step;
                    if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                        break;
                    }
                }
                RadialDomain::band(s, x, top)
            }
        }
    }

    /// Outward normal speed per circle at `t = 0` (`[bottom, top]`).
    pub fn normal_displacement(&self) -> Vec<f64> {
        let (r1, r2) = self.bounds();
        let s = self.base.surface();
        match self.mode {
            FamilyMode::Constant => vec![0.0, 0.0],
            FamilyMode::GrowTop => vec![0.0, 1.0],
            FamilyMode::SlideVolumePreserving => vec![-s.warp(r2) / s.warp(r1), 1.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationCheck {
    pub analytic: f64,
    pub numeric: f64,
    /// `|analytic - numeric| / max(|analytic|, floor)`.
    pub rel_error: f64,
    pub abs_error: f64,
    pub steps: Vec<f64>,
    /// Order of the extrapolated difference quotient in the step.
    pub extrapolation_order: u32,
    /// Unextrapolated difference quotients, one per step.
    pub raw_estimates: Vec<f64>,
}

impl VariationCheck {
    fn new(analytic: f64, numeric: f64, steps: &[f64], raw: Vec<f64>) -> Self {
        let abs_error = (analytic - numeric).abs();
        Self {
            analytic,
            numeric,
            rel_error: abs_error / analytic.abs().max(REL_ERROR_FLOOR),
            abs_error,
            steps: steps.to_vec(),
            extrapolation_order: 4,
            raw_estimates: raw,
        }
    }
}

/// `lambda1` of the family member at `t`, on a mesh with `nodes` points.
pub fn family_lambda1(family: &BandFamily, t: f64, nodes: usize) -> Result<f64> {
    let d = family.at(t)?;
    Ok(solve_lambda1(&d, Mesh1D::for_domain(&d, nodes)?)?.lambda1)
}

/// `(D(h/2) 4 - D(h)) / 3` over the two steps.
fn extrapolate(raw: &[f64]) -> f64 {
    (4.0 * raw[1] - raw[0]) / 3.0
}

/// Central first difference of `lambda1` along the family, extrapolated.
pub fn first_derivative(family: &BandFamily, steps: [f64; 2], nodes: usize) -> Result<(f64, Vec<f64>)> {
    let raw = steps
        .iter()
        .map(|&h| {
            Ok((family_lambda1(family, h, nodes)? - family_lambda1(family, -h, nodes)?) / (2.0 * h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((extrapolate(&raw), raw))
}

/// Central second difference of `lambda1` along the family, extrapolated.
pub fn second_derivative(family: &BandFamily, steps: [f64; 2], nodes: usize) -> Result<(f64, Vec<f64>)> {
    let l0 = family_lambda1(family, 0.0, nodes)?;
    let raw = steps
        .iter()
        .map(|&h| {
            let lp = family_lambda1(family, h, nodes)?;
            let lm = family_lambda1(family, -h, nodes)?;
            Ok((lp - 2.0 * l0 + lm) / (h * h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((extrapolate(&raw), raw))
}

/// First variation along a band family against
/// `-int v (dphi/dnu)^2 dl`.
pub fn hadamard_check(family: &BandFamily) -> Result<VariationCheck> {
    hadamard_check_with(family, FD_STEPS, DEFAULT_NODES)
}

pub fn hadamard_check_with(family: &BandFamily, steps: [f64; 2], nodes: usize) -> Result<VariationCheck> {
    let base = &family.base;
    let eig = solve_lambda1(base, Mesh1D::for_domain(base, nodes)?)?;
    let v = family.normal_displacement();
    let analytic = -base
        .boundary()
        .iter()
        .zip(&v)
        .zip(&eig.normal_derivs)
        .map(|((c, vi), dn)| vi * dn * dn * c.length)
        .sum::<f64>();
    let (numeric, raw) = first_derivative(family, steps, nodes)?;
    Ok(VariationCheck::new(analytic, numeric, &steps, raw))
}

/// Second variation along the volume-preserving slide against
/// `2 c^2 int (v dv^/dnu + kappa_g v^2) dl`.
pub fn second_variation_check(family: &BandFamily) -> Result<VariationCheck> {
    second_variation_check_with(family, FD_STEPS, DEFAULT_NODES)
}

pub fn second_variation_check_with(
    family: &BandFamily,
    steps: [f64; 2],
    nodes: usize,
) -> Result<VariationCheck> {
    if family.mode == FamilyMode::GrowTop {
        return Err(Error::Precondition(
            "the second-variation formula needs a volume-preserving family".into(),
        ));
    }
    let ctx = SpectralContext::new(&family.base, nodes)?;
    let eig = ctx.eigen();
    let c = eig.mean_abs_normal_derivative();
    let rel_defect = eig.extremality_defect / c;
    if rel_defect > EXTREMALITY_TOL {
        return Err(Error::Precondition(format!(
            "base is not extremal: relative spread of |dphi/dnu| is {rel_defect:.3e}"
        )));
    }
    let v = family.normal_displacement();
    let analytic = if v.iter().all(|x| *x == 0.0) {
        0.0
    } else {
        let ext = solve_extension(&ctx, 0, &v)?;
        2.0 * c * c * boundary_pairing(&family.base, 0, &v, &ext.normal_derivs, &v)
    };
    let (numeric, raw) = second_derivative(family, steps, nodes)?;
    Ok(VariationCheck::new(analytic, numeric, &steps, raw))
}

/// `2 pi w(r) c^2`: magnitude of the first variation when the circle at `r`
/// moves outward with unit speed.
pub fn circle_hadamard_rate(domain: &RadialDomain, r: f64, c: f64) -> f64 {
    TAU * domain.surface().warp(r) * c * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WarpedSurface;
    use crate::oracles;

    #[test]
    fn slide_preserves_area() {
        let base = RadialDomain::band(WarpedSurface::sphere_band(), -0.3, 1.1).unwrap();
        let fam = BandFamily::slide(base).unwrap();
        for t in [-0.05, -1e-3, 1e-3, 0.02, 0.05] {
            let d = fam.at(t).unwrap();
            assert!((d.area() - base.area()).abs() < 1e-12 * base.area());
        }
        let data = fam.normal_displacement();
        assert!(base.boundary_integral_zero_mean(&data).unwrap().abs() < 1e-14);
    }

    #[test]
    fn slide_range_near_chart_edge() {
        let s = WarpedSurface::sphere_band();
        let base = RadialDomain::band(s, -1.33, -0.43).unwrap();
        let fam = BandFamily::slide(base).unwrap();
        for t in [-fam.t_max, fam.t_max] {
            assert!(fam.at(t).unwrap().radial_extent().0 > -1.33 - 0.5 * (s.r_max() - 1.33));
        }
        let flat = RadialDomain::symmetric_band(WarpedSurface::flat(), 2.0).unwrap();
        assert_eq!(BandFamily::slide(flat).unwrap().t_max, 0.25);
    }

    #[test]
    fn flat_grow_top_matches_closed_form() {
        let a = 0.9;
        let base = RadialDomain::symmetric_band(WarpedSurface::flat(), a).unwrap();
        let chk = hadamard_check(&BandFamily::grow_top(base).unwrap()).unwrap();
        let c = oracles::flat_band_normal_derivative(a);
        let exact = -TAU * c * c;
        assert!((chk.analytic - exact).abs() < 1e-9 * exact.abs());
        assert!(chk.rel_error < 1e-6, "{chk:?}");
    }

    #[test]
    fn constant_family_has_zero_derivatives() {
        let base = RadialDomain::symmetric_band(WarpedSurface::sphere_band(), 0.5).unwrap();
        let fam = BandFamily::new(base, FamilyMode::Constant).unwrap();
        let chk = hadamard_check_with(&fam, FD_STEPS, 256).unwrap();
        assert_eq!(chk.analytic, 0.0);
        assert_eq!(chk.numeric, 0.0);
        let chk = second_variation_check_with(&fam, FD_STEPS, 256).unwrap();
        assert_eq!(chk.analytic, 0.0);
        assert_eq!(chk.numeric, 0.0);
    }

    #[test]
    fn non_extremal_base_is_rejected() {
        let base = RadialDomain::band(WarpedSurface::sphere_band(), -0.2, 0.9).unwrap();
        let fam = BandFamily::slide(base).unwrap();
        assert!(matches!(
            second_variation_check_with(&fam, FD_STEPS, 256),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn second_variation_on_sphere_band() {
        let base = RadialDomain::symmetric_band(WarpedSurface::sphere_band(), 1.2).unwrap();
        let chk = second_variation_check(&BandFamily::slide(base).unwrap()).unwrap();
        assert!(chk.analytic < 0.0);
        assert!(chk.rel_error < 1e-3, "{chk:?}");
    }
}
