use std::f64::consts::{FRAC_PI_2, PI, TAU};

use proptest::prelude::*;

use extremal_core::banded::SymBanded;
use extremal_core::config::parse_grid;
use extremal_core::oracles;
use extremal_core::radial_eig::richardson;
use extremal_core::solver2d::{lambda1_2d, FourierCurve, PerturbedBand};
use extremal_core::stability::{mode_form, quadratic_form, SpectralContext};
use extremal_core::variation::BandFamily;
use extremal_core::{solve_lambda1, Mesh1D, RadialDomain, WarpedSurface};

fn lambda(d: &RadialDomain, nodes: usize) -> f64 {
    solve_lambda1(d, Mesh1D::for_domain(d, nodes).unwrap()).unwrap().lambda1
}

fn sphere_band() -> impl Strategy<Value = RadialDomain> {
    (-1.4..1.1f64, 0.2..1.0f64).prop_map(|(r1, len)| {
        RadialDomain::band(WarpedSurface::sphere_band(), r1, (r1 + len).min(1.5)).unwrap()
    })
}

fn any_domain() -> impl Strategy<Value = RadialDomain> {
    prop_oneof![
        sphere_band(),
        (0.2..2.9f64).prop_map(|r| RadialDomain::disk(WarpedSurface::sphere_polar(), r).unwrap()),
        (0.2..2.5f64).prop_map(|a| RadialDomain::symmetric_band(WarpedSurface::flat(), a).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gauss_bonnet_holds(d in any_domain()) {
        prop_assert!(d.gauss_bonnet_defect().abs() < 1e-10, "{d}: {}", d.gauss_bonnet_defect());
        prop_assert!((d.area() - d.area_quadrature()).abs() < 1e-9 * d.area().max(1.0));
    }

    #[test]
    fn slide_family_preserves_area(d in sphere_band(), frac in -1.0..1.0f64) {
        let fam = BandFamily::slide(d).unwrap();
        let member = fam.at(frac * fam.t_max).unwrap();
        prop_assert!((member.area() - d.area()).abs() < 1e-11 * d.area());
        let v = fam.normal_displacement();
        prop_assert!(d.boundary_integral_zero_mean(&v).unwrap().abs() < 1e-12);
    }

    #[test]
    fn flat_band_scaling(a in 0.2..3.0f64) {
        let lam = lambda(&RadialDomain::symmetric_band(WarpedSurface::flat(), a).unwrap(), 512);
        prop_assert!((lam * a * a / (FRAC_PI_2 * FRAC_PI_2) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sphere_band_reflection_invariance(d in sphere_band()) {
        let (r1, r2) = d.radial_extent();
        let mirrored = RadialDomain::band(*d.surface(), -r2, -r1).unwrap();
        let (a, b) = (lambda(&d, 512), lambda(&mirrored, 512));
        prop_assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn domain_monotonicity(d in sphere_band(), grow in 0.01..0.3f64) {
        let (r1, r2) = d.radial_extent();
        let bigger = RadialDomain::band(*d.surface(), r1, (r2 + grow).min(1.55)).unwrap();
        prop_assert!(lambda(&bigger, 512) < lambda(&d, 512));
    }

    #[test]
    fn disk_lambda_decreases_with_radius(r in 0.2..2.5f64, dr in 0.05..0.5f64) {
        let s = WarpedSurface::sphere_polar();
        let small = lambda(&RadialDomain::disk(s, r).unwrap(), 512);
        let big = lambda(&RadialDomain::disk(s, r + dr).unwrap(), 512);
        prop_assert!(big < small);
    }

    #[test]
    fn richardson_removes_quadratic_error(exact in -10.0..10.0f64, c in -5.0..5.0f64, h in 1e-3..0.1f64) {
        let coarse = exact + c * h * h;
        let fine = exact + c * h * h / 4.0;
        prop_assert!((richardson(coarse, fine) - exact).abs() < 1e-12 * (1.0 + exact.abs() + c.abs()));
    }

    #[test]
    fn grid_endpoints(start in -2.0..2.0f64, n in 0usize..40, step in 0.01..0.5f64) {
        let stop = start + n as f64 * step;
        let g = parse_grid("g", &format!("{start}:{stop}:{step}")).unwrap();
        prop_assert_eq!(g.len(), n + 1);
        prop_assert!((g[n] - stop).abs() < 1e-9);
    }

    #[test]
    fn banded_cholesky_inverts(n in 5usize..60, bw in 1usize..6, seed in any::<u64>()) {
        let mut a = SymBanded::zeros(n, bw);
        let mut s = seed | 1;
        let mut next = || { s ^= s << 13; s ^= s >> 7; s ^= s << 17; (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5 };
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                a.add(i, j, next());
            }
            a.add(i, i, bw as f64 + 1.0);
        }
        let x: Vec<f64> = (0..n).map(|_| next()).collect();
        let y = a.cholesky().unwrap().solve(&a.matvec(&x));
        for (p, q) in x.iter().zip(&y) {
            prop_assert!((p - q).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mode_forms_are_symmetric(d in any_domain(), k in 0u32..6) {
        let k = if d.is_disk() { k.max(1) } else { k };
        let ctx = SpectralContext::new(&d, 384).unwrap();
        let form = mode_form(&ctx, k).unwrap();
        prop_assert!(form.symmetry_defect < 1e-8, "{d} k={k}: {}", form.symmetry_defect);
        if form.dim() == 2 {
            let (u, v) = (&form.basis[0], &form.basis[1]);
            let (a, b) = (quadratic_form(&ctx, k, u, v).unwrap(), quadratic_form(&ctx, k, v, u).unwrap());
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn flat_mode_forms_match_hyperbolic_oracle(a in 0.2..1.5f64, k in 1u32..6) {
        // Q on symmetric and antisymmetric data is the DtN value plus kappa_g = 0
        let d = RadialDomain::symmetric_band(WarpedSurface::flat(), a).unwrap();
        let ctx = SpectralContext::new(&d, 1024).unwrap();
        let (sym, anti) = oracles::flat_band_dtn(a, k, ctx.lambda1());
        let q_sym = quadratic_form(&ctx, k, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        let q_anti = quadratic_form(&ctx, k, &[-1.0, 1.0], &[-1.0, 1.0]).unwrap();
        // two unit circles of length 2 pi, angular factor pi
        prop_assert!((q_sym - PI * 2.0 * sym).abs() < 1e-5 * (1.0 + q_sym.abs()), "{q_sym} vs {}", PI * 2.0 * sym);
        prop_assert!((q_anti - PI * 2.0 * anti).abs() < 1e-5 * (1.0 + q_anti.abs()), "{q_anti} vs {}", PI * 2.0 * anti);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn perturbed_band_symmetries(k in 1u32..4, amp in -0.05..0.05f64, shift in 0usize..16, phase0 in 0.0..TAU) {
        let (nt, ns) = (16, 32);
        let s = WarpedSurface::sphere_band();
        let mut top = FourierCurve::constant(0.7).rotated(0.0);
        top.add_cosine(k, amp);
        let top = top.rotated(phase0);
        let base = PerturbedBand::new(s, FourierCurve::constant(-0.6), top.clone(), nt, ns).unwrap();
        let lam = lambda1_2d(&base).unwrap().lambda1;
        // rotation by a whole number of grid cells maps the grid onto itself
        let rot = top.rotated(shift as f64 * TAU / nt as f64);
        let rotated = PerturbedBand::new(s, FourierCurve::constant(-0.6), rot, nt, ns).unwrap();
        let reflected = PerturbedBand::new(s, FourierCurve::constant(-0.6), top.reflected(), nt, ns).unwrap();
        for other in [rotated, reflected] {
            let l = lambda1_2d(&other).unwrap().lambda1;
            prop_assert!((l - lam).abs() < 1e-9 * lam, "{l} vs {lam}");
        }
    }
}
