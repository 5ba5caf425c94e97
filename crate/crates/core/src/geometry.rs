//! Surfaces of revolution `dr^2 + w(r)^2 dtheta^2` and the radial domains
//! (geodesic disks and bands) cut out of them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::simpson;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    /// `w(r_min) = 0`, smooth pole at `r_min`.
    Polar,
    /// `w > 0` on the closed chart interval.
    Band,
    /// `w = 1`.
    Flat,
}

/// The built-in charts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceName {
    /// Unit sphere around the equator, `w = cos r` on `(-pi/2, pi/2)`.
    SphereBand,
    /// Unit sphere from the north pole, `w = sin r` on `(0, pi)`.
    SpherePolar,
    /// Flat cylinder, `w = 1`, angular period `2 pi`.
    Flat,
}

impl SurfaceName {
    pub const ALL: [SurfaceName; 3] = [
        SurfaceName::SphereBand,
        SurfaceName::SpherePolar,
        SurfaceName::Flat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SurfaceName::SphereBand => "sphere-band",
            SurfaceName::SpherePolar => "sphere-polar",
            SurfaceName::Flat => "flat",
        }
    }
}

impl fmt::Display for SurfaceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SurfaceName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SurfaceName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownSurface(s.to_string()))
    }
}

/// A warped-product chart `dr^2 + w(r)^2 dtheta^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpedSurface {
    name: SurfaceName,
    r_min: f64,
    r_max: f64,
}

impl WarpedSurface {
    pub fn sphere_band() -> Self {
        Self::new(SurfaceName::SphereBand)
    }

    pub fn sphere_polar() -> Self {
        Self::new(SurfaceName::SpherePolar)
    }

    pub fn flat() -> Self {
        Self::new(SurfaceName::Flat)
    }

    pub fn new(name: SurfaceName) -> Self {
        let (r_min, r_max) = match name {
            SurfaceName::SphereBand => (-FRAC_PI_2, FRAC_PI_2),
            SurfaceName::SpherePolar => (0.0, PI),
            SurfaceName::Flat => (f64::NEG_INFINITY, f64::INFINITY),
        };
        Self { name, r_min, r_max }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(Self::new(name.parse()?))
    }

    pub fn name(&self) -> SurfaceName {
        self.name
    }

    pub fn chart_kind(&self) -> ChartKind {
        match self.name {
            SurfaceName::SphereBand => ChartKind::Band,
            SurfaceName::SpherePolar => ChartKind::Polar,
            SurfaceName::Flat => ChartKind::Flat,
        }
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn warp(&self, r: f64) -> f64 {
        match self.name {
            SurfaceName::SphereBand => r.cos(),
            SurfaceName::SpherePolar => r.sin(),
            SurfaceName::Flat => 1.0,
        }
    }

    pub fn warp_deriv(&self, r: f64) -> f64 {
        match self.name {
            SurfaceName::SphereBand => -r.sin(),
            SurfaceName::SpherePolar => r.cos(),
            SurfaceName::Flat => 0.0,
        }
    }

    pub fn warp_second(&self, r: f64) -> f64 {
        match self.name {
            SurfaceName::SphereBand => -r.cos(),
            SurfaceName::SpherePolar => -r.sin(),
            SurfaceName::Flat => 0.0,
        }
    }

    /// Antiderivative of `w`, used for closed-form areas.
    pub fn warp_antiderivative(&self, r: f64) -> f64 {
        match self.name {
            SurfaceName::SphereBand => r.sin(),
            SurfaceName::SpherePolar => -r.cos(),
            SurfaceName::Flat => r,
        }
    }

    /// `K = -w''/w`. At a pole the limit is returned.
    pub fn gauss_curvature(&self, r: f64) -> f64 {
        let w = self.warp(r);
        if w == 0.0 {
            // -w''/w -> -w'''(r)/w'(r) at a simple zero; both spheres give 1.
            return match self.name {
                SurfaceName::Flat => 0.0,
                _ => 1.0,
            };
        }
        -self.warp_second(r) / w
    }

    /// Embedding of the chart point `(r, theta)` in `R^3` when the chart is a
    /// piece of the unit sphere.
    pub fn sphere_embedding(&self, r: f64, theta: f64) -> Option<[f64; 3]> {
        match self.name {
            SurfaceName::SphereBand => {
                Some([r.cos() * theta.cos(), r.cos() * theta.sin(), r.sin()])
            }
            SurfaceName::SpherePolar => {
                Some([r.sin() * theta.cos(), r.sin() * theta.sin(), r.cos()])
            }
            SurfaceName::Flat => None,
        }
    }

    /// Number of independent ambient isometries that move a rotationally
    /// symmetric domain of this chart (the expected Jacobi nullity).
    pub fn expected_symmetry_count(&self, kind: &DomainKind) -> usize {
        match (self.name, kind) {
            // rotations about the two axes orthogonal to the symmetry axis
            (SurfaceName::SphereBand | SurfaceName::SpherePolar, _) => 2,
            // translation along the cylinder axis
            (SurfaceName::Flat, DomainKind::Band { .. }) => 1,
            (SurfaceName::Flat, DomainKind::Disk { .. }) => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    Disk { r0: f64 },
    Band { r1: f64, r2: f64 },
}

/// One boundary circle `r = r_value` with its outward normal `normal_sign * d/dr`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCircle {
    pub r_value: f64,
    pub normal_sign: f64,
    pub length: f64,
    /// Geodesic curvature with respect to the outward normal.
    pub kappa_g: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialDomain {
    surface: WarpedSurface,
    kind: DomainKind,
}

impl RadialDomain {
    pub fn disk(surface: WarpedSurface, r0: f64) -> Result<Self> {
        if surface.chart_kind() != ChartKind::Polar {
            return Err(Error::InvalidDomain(format!(
                "disks need a polar chart, {} is not one",
                surface.name()
            )));
        }
        if !(r0 > surface.r_min() && r0 < surface.r_max()) {
            return Err(Error::InvalidDomain(format!(
                "disk radius {r0} outside ({}, {})",
                surface.r_min(),
                surface.r_max()
            )));
        }
        Ok(Self {
            surface,
            kind: DomainKind::Disk { r0 },
        })
    }

    pub fn band(surface: WarpedSurface, r1: f64, r2: f64) -> Result<Self> {
        if !(r1.is_finite() && r2.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "band bounds must be finite, got [{r1}, {r2}]"
            )));
        }
        if !(surface.r_min() < r1 && r1 < r2 && r2 < surface.r_max()) {
            return Err(Error::InvalidDomain(format!(
                "band [{r1}, {r2}] needs {} < r1 < r2 < {}",
                surface.r_min(),
                surface.r_max()
            )));
        }
        Ok(Self {
            surface,
            kind: DomainKind::Band { r1, r2 },
        })
    }

    /// `Band(-r0, r0)`.
    pub fn symmetric_band(surface: WarpedSurface, r0: f64) -> Result<Self> {
        Self::band(surface, -r0, r0)
    }

    pub fn surface(&self) -> &WarpedSurface {
        &self.surface
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn is_disk(&self) -> bool {
        matches!(self.kind, DomainKind::Disk { .. })
    }

    /// Radial extent `[a, b]`; for a disk `a` is the pole.
    pub fn radial_extent(&self) -> (f64, f64) {
        match self.kind {
            DomainKind::Disk { r0 } => (self.surface.r_min(), r0),
            DomainKind::Band { r1, r2 } => (r1, r2),
        }
    }

    pub fn euler_characteristic(&self) -> i32 {
        match self.kind {
            DomainKind::Disk { .. } => 1,
            DomainKind::Band { .. } => 0,
        }
    }

    fn circle(&self, r_value: f64, normal_sign: f64) -> BoundaryCircle {
        let w = self.surface.warp(r_value);
        BoundaryCircle {
            r_value,
            normal_sign,
            length: TAU * w,
            kappa_g: normal_sign * self.surface.warp_deriv(r_value) / w,
        }
    }

    /// Boundary circles; for bands the inner circle `r1` comes first.
    pub fn boundary(&self) -> Vec<BoundaryCircle> {
        match self.kind {
            DomainKind::Disk { r0 } => vec![self.circle(r0, 1.0)],
            DomainKind::Band { r1, r2 } => vec![self.circle(r1, -1.0), self.circle(r2, 1.0)],
        }
    }

    /// Closed-form area `2 pi (W(b) - W(a))`.
    pub fn area(&self) -> f64 {
        let (a, b) = self.radial_extent();
        TAU * (self.surface.warp_antiderivative(b) - self.surface.warp_antiderivative(a))
    }

    /// Area by composite Simpson quadrature of `2 pi w`.
    pub fn area_quadrature(&self) -> f64 {
        let (a, b) = self.radial_extent();
        let s = self.surface;
        simpson(|r| TAU * s.warp(r), a, b)
    }

    /// Total curvature `int K da`, by quadrature.
    pub fn total_curvature(&self) -> f64 {
        let (a, b) = self.radial_extent();
        let s = self.surface;
        simpson(|r| TAU * s.gauss_curvature(r) * s.warp(r), a, b)
    }

    /// `int_{boundary} kappa_g dl`.
    pub fn total_geodesic_curvature(&self) -> f64 {
        self.boundary().iter().map(|c| c.length * c.kappa_g).sum()
    }

    /// `|sum length*kappa_g + int K da - 2 pi chi|`.
    pub fn gauss_bonnet_defect(&self) -> f64 {
        (self.total_geodesic_curvature() + self.total_curvature()
            - TAU * self.euler_characteristic() as f64)
            .abs()
    }

    /// `sum_i values[i] * length_i`: the boundary integral of a function that
    /// is constant on each circle.
    pub fn boundary_integral_zero_mean(&self, values: &[f64]) -> Result<f64> {
        let circles = self.boundary();
        if values.len() != circles.len() {
            return Err(Error::Arity {
                expected: circles.len(),
                got: values.len(),
            });
        }
        Ok(values.iter().zip(&circles).map(|(v, c)| v * c.length).sum())
    }

    /// Short human-readable descriptor, e.g. `sphere-band Band(-0.5, 0.5)`.
    pub fn describe(&self) -> String {
        match self.kind {
            DomainKind::Disk { r0 } => format!("{} Disk({r0})", self.surface.name()),
            DomainKind::Band { r1, r2 } => format!("{} Band({r1}, {r2})", self.surface.name()),
        }
    }
}

impl fmt::Display for RadialDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}
