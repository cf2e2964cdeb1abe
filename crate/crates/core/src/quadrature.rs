//! Gauss rules on intervals and triangles.

use alloc::vec::Vec;
use core::f64::consts::PI;


#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::Point;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `P_n(x)` and `P_n'(x)`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A quadrature rule on the reference triangle in barycentric coordinates;
/// weights sum to 1 so they multiply the physical area.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Symmetric 3-point rule, exact for quadratics.
    pub fn three_point() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Self {
            points: alloc::vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: alloc::vec![1.0 / 3.0; 3],
        }
    }

    /// Collapsed (Duffy) Gauss–Legendre product rule with `n²` points,
    /// exact for polynomials of degree `2n − 2`.
    pub fn conical(n: usize) -> Self {
        let g = GaussLegendre::new(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (u, wu) in g.on(0.0, 1.0) {
            for (v, wv) in g.on(0.0, 1.0) {
                // (u, v) ∈ [0,1]² ↦ λ₁ = u, λ₂ = (1 − u)v.
                let l1 = u;
                let l2 = (1.0 - u) * v;
                points.push([1.0 - l1 - l2, l1, l2]);
                weights.push(2.0 * wu * wv * (1.0 - u));
            }
        }
        Self { points, weights }
    }

    pub fn map(bary: &[f64; 3], v: &[Point; 3]) -> Point {
        Point::new(
            bary[0] * v[0].x + bary[1] * v[1].x + bary[2] * v[2].x,
            bary[0] * v[0].y + bary[1] * v[1].y + bary[2] * v[2].y,
        )
    }

    /// `∫_T f` over the triangle with vertices `v`.
    pub fn integrate(&self, v: &[Point; 3], f: impl Fn(Point) -> f64) -> f64 {
        let area = triangle_area(v).abs();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| w * f(Self::map(b, v)))
            .sum::<f64>()
            * area
    }
}

/// Signed area, positive for counterclockwise vertices.
pub fn triangle_area(v: &[Point; 3]) -> f64 {
    0.5 * (v[1] - v[0]).cross(v[2] - v[0])
}

/// Integrals over a triangle with one vertex at the singular point `v[0]` of
/// integrands `σ(dir)·t^p·(polynomial in t)`, where `t ∈ [0,1]` is the
/// fractional distance from `v[0]` toward the opposite edge. The radial
/// integral is done in closed form and the angular one by Gauss–Legendre.
#[derive(Debug, Clone)]
pub struct SingularVertexRule {
    angular: GaussLegendre,
}

impl SingularVertexRule {
    pub fn new(n: usize) -> Self {
        Self {
            angular: GaussLegendre::new(n),
        }
    }

    /// Evaluates `Σ_σ w_σ · 2|T| · g(P(σ))`, where `P(σ)` runs over the edge
    /// opposite `v[0]` and `g` returns the already radially integrated
    /// integrand along the ray from `v[0]` to `P`.
    pub fn integrate_rays(&self, v: &[Point; 3], g: impl Fn(Point, f64) -> f64) -> f64 {
        let area2 = 2.0 * triangle_area(v).abs();
        self.angular
            .on(0.0, 1.0)
            .map(|(s, w)| w * g(v[1] + (v[2] - v[1]) * s, s))
            .sum::<f64>()
            * area2
    }
}

/// `∫₀¹ t^p dt` for `p > −1`.
pub fn power_moment(p: f64) -> f64 {
    1.0 / (p + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1, 2, 3, 8, 17, 64, 256] {
            let g = GaussLegendre::new(n);
            let wsum: f64 = g.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-12, "n={n} {wsum}");
            let deg = (2 * n - 1).min(40);
            for k in 0..=deg {
                let q = g.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-12, "n={n} k={k} {q} {exact}");
            }
        }
    }

    #[test]
    fn triangle_rules_exactness() {
        let v = [Point::new(0.1, 0.2), Point::new(1.3, 0.4), Point::new(0.5, 1.1)];
        let three = TriangleRule::three_point();
        let area = triangle_area(&v);
        // ∫ x dA = area * centroid.x
        let cx = (v[0].x + v[1].x + v[2].x) / 3.0;
        assert!((three.integrate(&v, |p| p.x) - area * cx).abs() < 1e-14);
        // Degree 2 exactness against the high order conical rule.
        let hi = TriangleRule::conical(8);
        let f = |p: Point| p.x * p.y + 3.0 * p.x * p.x - p.y;
        assert!((three.integrate(&v, f) - hi.integrate(&v, f)).abs() < 1e-13);
        let g = |p: Point| (p.x * p.y).powi(3) + p.y.powi(6);
        let h6 = TriangleRule::conical(4).integrate(&v, g);
        assert!((h6 - hi.integrate(&v, g)).abs() < 1e-13);
    }

    #[test]
    fn singular_vertex_rule_matches_polar_integral() {
        // ∫ over the quarter disk sector-like triangle of ρ^{-4/3}:
        // compare with a fine conical rule on a subdivided geometry.
        let v = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let rule = SingularVertexRule::new(32);
        let exact = rule.integrate_rays(&v, |p, _| {
            // ρ = t|P|, integrand ρ^{-4/3}, Jacobian factor t.
            p.norm().powf(-4.0 / 3.0) * power_moment(1.0 - 4.0 / 3.0)
        });
        // Reference: ∫_0^{π/2} ∫_0^{R(φ)} r^{-1/3} dr dφ, R = 1/(cos φ + sin φ).
        let g = GaussLegendre::new(64);
        let reference = g.integrate(0.0, 0.5 * PI, |phi| {
            let r = 1.0 / (phi.cos() + phi.sin());
            1.5 * r.powf(2.0 / 3.0)
        });
        assert!((exact - reference).abs() < 1e-12, "{exact} {reference}");
    }
}
