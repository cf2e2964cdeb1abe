use std::sync::Arc;

use singlab_core::geometry::{AnnulusDomain, BoundaryTag, Point};
use singlab_core::mesh::generate_mesh_family;
use singlab_core::solver::{solve, Problem, Source};

const H0: f64 = 0.1;

/// Nodal errors of a harmonic `u` on a uniform mesh and three refinements,
/// split into the corner vertices and everything at least 0.1 away.
struct Errors {
    corner: Vec<f64>,
    away: Vec<f64>,
    all: Vec<f64>,
}

fn nodal_errors(u: fn(Point) -> f64, grad: fn(Point) -> Point) -> Errors {
    let d = AnnulusDomain::new(1.0, 1.0, 2.0).unwrap();
    let flux = move |tag: BoundaryTag, p: Point| grad(p).dot(tag.outward_normal());
    let mut out = Errors {
        corner: Vec::new(),
        away: Vec::new(),
        all: Vec::new(),
    };
    for m in generate_mesh_family(&d, H0, 1.0, 3).unwrap() {
        let m = Arc::new(m);
        let problem = Problem {
            source: Source::Zero,
            neumann: Some(&flux),
            dirichlet_tags: &Problem::OUTER,
            dirichlet_value: Some(&u),
        };
        let (field, report) = solve(&m, &problem, 1e-14).unwrap();
        assert!(report.residual <= 1e-14);
        let (mut corner, mut away, mut all) = (0.0f64, 0.0f64, 0.0f64);
        for (p, v) in m.vertices.iter().zip(field.values()) {
            let e = (u(*p) - v).abs();
            let rho = d.corners().iter().map(|c| (*p - *c).norm()).fold(f64::INFINITY, f64::min);
            all = all.max(e);
            if rho == 0.0 {
                corner = corner.max(e);
            } else if rho >= 0.1 {
                away = away.max(e);
            }
        }
        out.corner.push(corner);
        out.away.push(away);
        out.all.push(all);
    }
    out
}

fn orders(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn quadratic_harmonic_is_nodally_exact_on_uniform_meshes() {
    let e = nodal_errors(|p| p.x * p.x - p.y * p.y, |p| Point::new(2.0 * p.x, -2.0 * p.y));
    for err in &e.all {
        assert!(*err < 1e-10, "{:?}", e.all);
    }
}

#[test]
fn bilinear_harmonic_is_second_order_away_from_corners() {
    let e = nodal_errors(|p| p.x * p.y, |p| Point::new(p.y, p.x));
    for o in orders(&e.away) {
        assert!(o >= 1.95, "away {:?}", e.away);
    }
    // The maximum sits on the reentrant corner vertices.
    for (c, a) in e.corner.iter().zip(&e.all) {
        assert_eq!(c, a);
    }
}

/// At a reentrant Neumann corner the Galerkin residual of `xy` is a point
/// load `h²/3` and the discrete Green's function grows like `ln(1/h)/ω`, so
/// the corner error is `h²(A + B ln(1/h))` with `B = 2/(9π)`.
#[test]
fn bilinear_corner_error_carries_logarithm() {
    let e = nodal_errors(|p| p.x * p.y, |p| Point::new(p.y, p.x));
    let scaled: Vec<f64> = e
        .corner
        .iter()
        .enumerate()
        .map(|(l, c)| c / (H0 / f64::powi(2.0, l as i32)).powi(2))
        .collect();
    let b_exact = 2.0 / (9.0 * core::f64::consts::PI);
    for w in scaled.windows(2) {
        let b = (w[1] - w[0]) / core::f64::consts::LN_2;
        assert!((b / b_exact - 1.0).abs() < 0.05, "scaled {scaled:?}");
    }
    for o in orders(&e.corner) {
        assert!(o > 1.7 && o < 1.9, "corner {:?}", e.corner);
    }
}
