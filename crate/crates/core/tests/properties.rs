use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use singlab_core::analysis::{corner_fourier_fit, geometric_radii, richardson};
use singlab_core::geometry::{AnnulusDomain, Cutoff, CutoffCenter, Point};
use singlab_core::levelset::trace_level;
use singlab_core::mesh::{generate_mesh, GradedMesh};
use singlab_core::solver::ScalarField;
use singlab_core::symmetry::{MeshSymmetry, SwapParity};

const OMEGA: f64 = 1.5 * PI;

fn square_mesh() -> Arc<GradedMesh> {
    static MESH: OnceLock<Arc<GradedMesh>> = OnceLock::new();
    MESH.get_or_init(|| Arc::new(generate_mesh(&AnnulusDomain::new(1.0, 1.0, 2.0).unwrap(), 0.2, 2.0).unwrap()))
        .clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polar_round_trip(corner in 1usize..=4, rho in 1e-3f64..0.5, theta in 0.0f64..OMEGA,
                        r2 in 0.3f64..1.5, l in 1.2f64..3.0) {
        let d = AnnulusDomain::new(1.0, r2, l).unwrap();
        let frame = d.frame(corner);
        let p = frame.from_polar(rho, theta);
        let q = frame.to_polar(p).unwrap();
        prop_assert!((q.rho - rho).abs() <= 1e-12);
        prop_assert!((q.theta - theta).abs() <= 1e-9);
        prop_assert!(q.in_sector);
    }

    #[test]
    fn cutoff_is_a_monotone_unit_bump(inner in 0.01f64..1.0, width in 0.01f64..1.0,
                                      d1 in 0.0f64..3.0, d2 in 0.0f64..3.0) {
        let c = Cutoff::new(CutoffCenter::Point(Point::default()), inner, inner + width);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let (a, b) = (c.profile(lo).0, c.profile(hi).0);
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(a >= b);
    }

    #[test]
    fn projection_is_symmetric_and_idempotent(seed in prop::collection::vec(-1.0f64..1.0, 8),
                                              odd in any::<bool>()) {
        let mesh = square_mesh();
        let sym = MeshSymmetry::new(&mesh).unwrap();
        let parity = if odd { SwapParity::Odd } else { SwapParity::Even };
        let mut v: Vec<f64> = mesh.vertices.iter().enumerate()
            .map(|(i, p)| seed[i % 8] * p.x + seed[(i + 3) % 8] * p.y * p.y)
            .collect();
        sym.project(&mut v, parity);
        prop_assert_eq!(sym.residual(&v, parity).max(), 0.0);
        let once = v.clone();
        sym.project(&mut v, parity);
        for (a, b) in once.iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()));
        }
    }

    /// Exact corner harmonics are recovered coefficient by coefficient, and
    /// the fit is linear in the sampled field.
    #[test]
    fn fourier_fit_recovers_corner_harmonics(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
        let d = AnnulusDomain::new(1.0, 1.0, 2.0).unwrap();
        let frame = d.frame(1);
        let radii = geometric_radii(0.05, 0.5, 6);
        let phi = |k: f64, t: f64| (2.0 / OMEGA).sqrt() * (k * PI / OMEGA * t).cos();
        let field = |p: Point| {
            let q = frame.to_polar(p)?;
            let e = PI / OMEGA;
            Ok(a * q.rho.powf(-e) * phi(1.0, q.theta)
                + b * q.rho.powf(e) * phi(1.0, q.theta)
                + c * q.rho.powf(2.0 * e) * phi(2.0, q.theta))
        };
        let fit = corner_fourier_fit(field, &frame, &radii, 4).unwrap();
        prop_assert!((fit.c1[1] - a).abs() <= 1e-8);
        prop_assert!((fit.c2[1] - b).abs() <= 1e-8);
        prop_assert!((fit.c2[2] - c).abs() <= 1e-8);
        prop_assert!(fit.c1[2].abs() <= 1e-8 && fit.c1[3].abs() <= 1e-8);
    }

    #[test]
    fn richardson_is_exact_on_pure_power_sequences(limit in -5.0f64..5.0, amp in 0.1f64..3.0, order in 0.5f64..3.0) {
        let v: Vec<f64> = (0..3).map(|l| limit + amp * 2f64.powf(-order * l as f64)).collect();
        let r = richardson(&v).unwrap();
        prop_assert!(r.order_observed);
        prop_assert!((r.order - order).abs() <= 1e-8);
        prop_assert!((r.extrapolated - limit).abs() <= 1e-9 * (1.0 + amp));
    }

    /// Traced points of a linear field sit on its zero line.
    #[test]
    fn contours_of_linear_fields_are_exact(gx in -1.0f64..1.0, gy in -1.0f64..1.0, k in -1.0f64..1.0) {
        prop_assume!(gx.abs() + gy.abs() > 0.1);
        let f = ScalarField::interpolate(square_mesh(), |p| gx * p.x + gy * p.y);
        let c = trace_level(&f, k);
        for p in c.points() {
            prop_assert!((gx * p.x + gy * p.y - k).abs() <= 1e-12);
        }
        prop_assert_eq!(c.interior_ends(), 0);
    }
}
