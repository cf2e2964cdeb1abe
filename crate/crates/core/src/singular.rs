//! The dual singular function `S̃ = c₀(w + Σ ηᵢ sᵢ)` with
//! `sᵢ = ρᵢ^{-2/3} cos(2θᵢ/3)`, and the singular solution `S` of `ΔS = S̃`.
//!
//! Only `w` is discretized. The templates are evaluated analytically, so
//! `S̃` can be sampled arbitrarily close to a corner.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{AnnulusDomain, BoundaryTag, CornerFrame, Cutoff, Point, PowerMode, OMEGA};
use crate::mesh::GradedMesh;
use crate::quadrature::{triangle_area, SingularVertexRule, TriangleRule};
use crate::solver::{solve, CgReport, Problem, ScalarField, Source};
use crate::symmetry::{MeshSymmetry, SwapParity, SymmetryResidual};

/// `Δ(η·s)` for the template `s = ρ^{-2/3}cos(2θ/3)`, i.e. `sΔη + 2∇η·∇s`.
///
/// Zero wherever `η` is locally constant.
pub fn template_laplacian(frame: &CornerFrame, cutoff: &Cutoff, p: Point) -> f64 {
    if cutoff.is_flat_one(p) || cutoff.is_zero(p) {
        return 0.0;
    }
    let Ok(pol) = frame.to_polar(p) else {
        return 0.0;
    };
    let s = PowerMode::TEMPLATE.value(pol.rho, pol.theta);
    let (gr, gt) = PowerMode::TEMPLATE.polar_gradient(pol.rho, pol.theta);
    let (er, et) = frame.basis(pol.theta);
    let grad_s = er * gr + et * gt;
    s * cutoff.laplacian(p) + 2.0 * cutoff.gradient(p).dot(grad_s)
}

/// Corner data of the templates.
#[derive(Debug, Clone, Copy)]
struct Templates {
    frames: [CornerFrame; 4],
    cutoffs: [Cutoff; 4],
}

impl Templates {
    fn new(domain: &AnnulusDomain) -> Self {
        Self {
            frames: domain.frames(),
            cutoffs: [1, 2, 3, 4].map(|i| domain.corner_cutoff(i)),
        }
    }

    /// `Σ ηᵢsᵢ(p)`; infinite at a corner.
    fn value(&self, p: Point) -> f64 {
        let mut sum = 0.0;
        for (f, c) in self.frames.iter().zip(&self.cutoffs) {
            if c.is_zero(p) {
                continue;
            }
            match f.to_polar(p) {
                Ok(pol) => sum += c.value(p) * PowerMode::TEMPLATE.value(pol.rho, pol.theta),
                Err(_) => return f64::INFINITY,
            }
        }
        sum
    }

    fn gradient(&self, p: Point) -> Point {
        let mut g = Point::default();
        for (f, c) in self.frames.iter().zip(&self.cutoffs) {
            if c.is_zero(p) {
                continue;
            }
            let Ok(pol) = f.to_polar(p) else {
                return Point::new(f64::INFINITY, f64::INFINITY);
            };
            let s = PowerMode::TEMPLATE.value(pol.rho, pol.theta);
            let (gr, gt) = PowerMode::TEMPLATE.polar_gradient(pol.rho, pol.theta);
            let (er, et) = f.basis(pol.theta);
            g = g + (er * gr + et * gt) * c.value(p) + c.gradient(p) * s;
        }
        g
    }

    fn laplacian(&self, p: Point) -> f64 {
        self.frames
            .iter()
            .zip(&self.cutoffs)
            .map(|(f, c)| template_laplacian(f, c, p))
            .sum()
    }
}

/// The normalized very weak solution `S̃` on a mesh.
#[derive(Debug, Clone)]
pub struct SingularFunction {
    w: ScalarField,
    c0: f64,
    nodal: ScalarField,
    templates: Templates,
    parity: SwapParity,
    pub cg: CgReport,
    /// Symmetry violation of the nodal `S̃` before projection.
    pub raw_symmetry_residual: SymmetryResidual,
}

/// Points per triangle away from the corners.
const VOLUME_RULE_N: usize = 4;
/// Angular points per corner triangle.
const CORNER_RULE_N: usize = 24;

/// Builds `S̃` on a symmetric mesh.
///
/// Solves `−Δw = Δ(Σηᵢsᵢ)` with `∂w/∂n = 0` on `Γ` and `w = 0` on `Γ̃`,
/// then normalizes `w + Σηᵢsᵢ` in `L²(Ω)` with `c₀ > 0`.
pub fn build_very_weak(mesh: &Arc<GradedMesh>, rel_tol: f64) -> Result<SingularFunction> {
    let domain = *mesh.domain();
    let templates = Templates::new(&domain);
    check_corner_cells(mesh, &templates)?;
    let source = |p: Point| templates.laplacian(p);
    let problem = Problem {
        source: Source::Pointwise(&source),
        neumann: None,
        dirichlet_tags: &Problem::OUTER,
        dirichlet_value: None,
    };
    let (mut w, cg) = solve(mesh, &problem, rel_tol)?;
    let sym = MeshSymmetry::new(mesh)?;
    let parity = if domain.is_square() {
        SwapParity::Odd
    } else {
        SwapParity::None
    };
    sym.project(w.values_mut(), parity);

    let mut s = SingularFunction {
        w,
        c0: 1.0,
        nodal: ScalarField::zeros(mesh.clone()),
        templates,
        parity,
        cg,
        raw_symmetry_residual: SymmetryResidual::default(),
    };
    let norm = s.l2_norm();
    if !(norm > 1e-8) || !norm.is_finite() {
        return Err(Error::Normalization(norm));
    }
    s.c0 = 1.0 / norm;

    let mut nodal: Vec<f64> = mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(v, p)| {
            let w = s.w.values()[v];
            if mesh.is_corner_vertex(v).is_some() {
                s.c0 * w
            } else {
                s.c0 * (w + templates.value(*p))
            }
        })
        .collect();
    s.raw_symmetry_residual = sym.residual(&nodal, parity);
    sym.project(&mut nodal, parity);
    s.nodal = ScalarField::new(mesh.clone(), nodal)?;
    Ok(s)
}

/// Every triangle at a corner must sit where `η = 1` and no other template
/// reaches, so the radial integrals there are exact.
fn check_corner_cells(mesh: &GradedMesh, templates: &Templates) -> Result<()> {
    for i in 1..=4 {
        let c = mesh.corner_vertex(i);
        for t in 0..mesh.num_triangles() {
            if !mesh.triangles[t].contains(&c) {
                continue;
            }
            for p in mesh.triangle_points(t) {
                if !templates.cutoffs[i - 1].is_flat_one(p) {
                    return Err(Error::InvalidMeshParameters(
                        "corner triangles must lie inside the cutoff plateau",
                    ));
                }
            }
        }
    }
    Ok(())
}

/// A triangle with one vertex at a corner, reordered so that vertex comes
/// first.
struct CornerCell {
    corner: usize,
    local: [usize; 3],
    points: [Point; 3],
}

impl SingularFunction {
    pub fn mesh(&self) -> &Arc<GradedMesh> {
        self.w.mesh()
    }

    pub fn domain(&self) -> &AnnulusDomain {
        self.w.mesh().domain()
    }

    /// `c₀ = 1/‖w + Σηᵢsᵢ‖`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// The unnormalized regular part `w`.
    pub fn w(&self) -> &ScalarField {
        &self.w
    }

    /// Nodal values of `S̃`, with `c₀w` at the corner vertices.
    pub fn nodal(&self) -> &ScalarField {
        &self.nodal
    }

    pub fn parity(&self) -> SwapParity {
        self.parity
    }

    pub fn frame(&self, i: usize) -> &CornerFrame {
        &self.templates.frames[i - 1]
    }

    fn w_at(&self, t: usize, b: [f64; 3]) -> f64 {
        let tri = self.mesh().triangles[t];
        let w = self.w.values();
        b[0] * w[tri[0]] + b[1] * w[tri[1]] + b[2] * w[tri[2]]
    }

    /// `S̃(p)` with the templates evaluated exactly.
    pub fn evaluate(&self, p: Point) -> Result<f64> {
        let (t, b) = self.mesh().locate(p).ok_or(Error::OutsideMesh(p.x, p.y))?;
        Ok(self.c0 * (self.w_at(t, b) + self.templates.value(p)))
    }

    /// `S̃ − c₀ηᵢsᵢ`, bounded up to the corner.
    pub fn regular_part(&self, p: Point) -> Result<f64> {
        let (t, b) = self.mesh().locate(p).ok_or(Error::OutsideMesh(p.x, p.y))?;
        Ok(self.c0 * self.w_at(t, b))
    }

    pub fn gradient(&self, p: Point) -> Result<Point> {
        let (t, _) = self.mesh().locate(p).ok_or(Error::OutsideMesh(p.x, p.y))?;
        Ok((self.w.triangle_gradient(t) + self.templates.gradient(p)) * self.c0)
    }

    fn corner_cell(&self, t: usize) -> Option<CornerCell> {
        let mesh = self.mesh();
        let tri = mesh.triangles[t];
        (0..3).find_map(|k| {
            mesh.is_corner_vertex(tri[k]).map(|corner| {
                let local = [k, (k + 1) % 3, (k + 2) % 3];
                CornerCell {
                    corner,
                    local,
                    points: local.map(|j| mesh.vertices[tri[j]]),
                }
            })
        })
    }

    /// Along the ray from the corner to `P` on the opposite edge,
    /// `w + s = w₀ + tδ + κt^{-2/3}` with `κ = L^{-2/3}cos(2θ/3)`.
    fn ray_data(&self, cell: &CornerCell, t: usize, p: Point, s: f64) -> (f64, f64, f64) {
        let tri = self.mesh().triangles[t];
        let w = self.w.values();
        let w0 = w[tri[cell.local[0]]];
        let wp = (1.0 - s) * w[tri[cell.local[1]]] + s * w[tri[cell.local[2]]];
        let frame = &self.templates.frames[cell.corner - 1];
        let pol = frame.to_polar(p).expect("opposite edge avoids the corner");
        let kappa = pol.rho.powf(-2.0 / 3.0) * (2.0 / 3.0 * pol.theta).cos();
        (w0, wp - w0, kappa)
    }

    /// `‖S̃‖²` contribution of each triangle, unnormalized.
    fn triangle_square_integral(&self, t: usize, rule: &TriangleRule, corner_rule: &SingularVertexRule) -> f64 {
        if let Some(cell) = self.corner_cell(t) {
            // ∫₀¹ t (w₀ + tδ + κt^{-2/3})² dt in closed form.
            return corner_rule.integrate_rays(&cell.points, |p, s| {
                let (w0, d, k) = self.ray_data(&cell, t, p, s);
                w0 * w0 / 2.0
                    + 2.0 * w0 * d / 3.0
                    + d * d / 4.0
                    + 2.0 * k * (0.75 * w0 + 3.0 * d / 7.0)
                    + 1.5 * k * k
            });
        }
        let v = self.mesh().triangle_points(t);
        let area = triangle_area(&v).abs();
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(b, wt)| {
                let x = self.w_at(t, *b) + self.templates.value(TriangleRule::map(b, &v));
                wt * x * x
            })
            .sum::<f64>()
            * area
    }

    fn unnormalized_square(&self) -> f64 {
        let rule = TriangleRule::conical(VOLUME_RULE_N);
        let corner_rule = SingularVertexRule::new(CORNER_RULE_N);
        (0..self.mesh().num_triangles())
            .map(|t| self.triangle_square_integral(t, &rule, &corner_rule))
            .sum()
    }

    /// `‖S̃‖_{L²(Ω)}` by the same quadrature that fixed `c₀`.
    pub fn l2_norm(&self) -> f64 {
        self.c0 * self.unnormalized_square().sqrt()
    }

    /// `∫_T S̃ φₖ` for the three hats of triangle `t`.
    pub fn hat_moments(&self, t: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        if let Some(cell) = self.corner_cell(t) {
            let rule = SingularVertexRule::new(CORNER_RULE_N);
            // Hats along the ray: 1 − t at the corner, t(1−s) and ts at the
            // other two vertices.
            for k in 0..3 {
                out[cell.local[k]] = rule.integrate_rays(&cell.points, |p, s| {
                    let (w0, d, kap) = self.ray_data(&cell, t, p, s);
                    let with_one_minus_t = w0 / 6.0 + d / 12.0 + kap * (0.75 - 3.0 / 7.0);
                    let with_t = w0 / 3.0 + d / 4.0 + kap * 3.0 / 7.0;
                    match k {
                        0 => with_one_minus_t,
                        1 => (1.0 - s) * with_t,
                        _ => s * with_t,
                    }
                });
            }
        } else {
            let rule = TriangleRule::conical(VOLUME_RULE_N);
            let v = self.mesh().triangle_points(t);
            let area = triangle_area(&v).abs();
            for (b, wt) in rule.points.iter().zip(&rule.weights) {
                let x = self.w_at(t, *b) + self.templates.value(TriangleRule::map(b, &v));
                for k in 0..3 {
                    out[k] += wt * x * b[k] * area;
                }
            }
        }
        out.map(|m| m * self.c0)
    }

    /// `∫_Ω S̃ g` for a bounded `g` that vanishes near the corners.
    pub fn integrate_against(&self, g: impl Fn(Point) -> f64) -> Result<f64> {
        let rule = TriangleRule::conical(VOLUME_RULE_N);
        let mut sum = 0.0;
        for t in 0..self.mesh().num_triangles() {
            let v = self.mesh().triangle_points(t);
            if self.corner_cell(t).is_some() {
                if v.iter().any(|p| g(*p) != 0.0) || g(TriangleRule::map(&[1.0 / 3.0; 3], &v)) != 0.0 {
                    return Err(Error::InvalidProblem("weight must vanish near the corners"));
                }
                continue;
            }
            let area = triangle_area(&v).abs();
            sum += rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(b, wt)| {
                    let p = TriangleRule::map(b, &v);
                    let gp = g(p);
                    if gp == 0.0 {
                        0.0
                    } else {
                        wt * gp * (self.w_at(t, *b) + self.templates.value(p))
                    }
                })
                .sum::<f64>()
                * area;
        }
        Ok(self.c0 * sum)
    }

    /// `∫ S̃` over an inner side: the `w` part exactly over the boundary
    /// edges, the template part in closed form on the cutoff plateau and by
    /// Gauss–Legendre across the cutoff ramp.
    ///
    /// Returns the integral and the drift between two ramp orders.
    pub fn side_integral(&self, tag: BoundaryTag) -> Result<(f64, f64)> {
        if !tag.is_inner() {
            return Err(Error::InvalidProblem("side integrals are over inner sides"));
        }
        let mesh = self.mesh();
        let w_part: f64 = mesh
            .boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| {
                let [a, b] = e.vertices;
                0.5 * (self.w.values()[a] + self.w.values()[b]) * mesh.vertices[a].dist(mesh.vertices[b])
            })
            .sum();
        let (a, b) = self.domain().segment(tag);
        let mut template = [0.0; 2];
        for (slot, n) in template.iter_mut().zip([16usize, 32]) {
            let gl = crate::quadrature::GaussLegendre::new(n);
            for (end, dir) in [(a, b - a), (b, a - b)] {
                let corner = self.domain().corners().iter().position(|c| *c == end).expect("side ends at corners");
                let frame = &self.templates.frames[corner];
                let cut = &self.templates.cutoffs[corner];
                let len = dir.norm();
                let unit = dir * (1.0 / len);
                // θ is 0 or 3π/2 along the side, so s = ±ρ^{-2/3}.
                let sign = (2.0 / 3.0 * frame.to_polar(end + unit * (0.5 * cut.radius_inner))?.theta).cos();
                let (r0, r1) = (cut.radius_inner, cut.radius_outer.min(len));
                let plateau = 3.0 * r0.powf(1.0 / 3.0);
                let ramp = gl.integrate(r0, r1, |r| cut.profile(r).0 * r.powf(-2.0 / 3.0));
                *slot += sign * (plateau + ramp);
            }
        }
        let drift = (template[1] - template[0]).abs() / template[1].abs().max(f64::MIN_POSITIVE);
        if drift > 5e-3 {
            return Err(Error::QuadratureDrift { drift });
        }
        Ok((self.c0 * (w_part + template[1]), drift))
    }
}

/// Solves `ΔS = S̃` with `∂S/∂n = 0` on `Γ` and `S = 0` on `Γ̃`.
pub fn build_singular_solution(stilde: &SingularFunction, rel_tol: f64) -> Result<(ScalarField, CgReport)> {
    let mesh = stilde.mesh().clone();
    let moments = |t: usize| stilde.hat_moments(t).map(|m| -m);
    let problem = Problem {
        source: Source::Elementwise(&moments),
        neumann: None,
        dirichlet_tags: &Problem::OUTER,
        dirichlet_value: None,
    };
    let (mut s, cg) = solve(&mesh, &problem, rel_tol)?;
    MeshSymmetry::new(&mesh)?.project(s.values_mut(), stilde.parity());
    Ok((s, cg))
}

/// The coefficient `c = −∫_Ω S̃Δf` computed by the side route and the
/// volume route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientReport {
    pub a: f64,
    pub b: f64,
    /// `−(2aα₁ + 2bβ₁)`.
    pub c_sides: f64,
    /// `−∫_Ω S̃Δf`.
    pub c_volume: f64,
    /// `|c_sides − c_volume| / max(|2aα₁|, |2bβ₁|, ε)`.
    pub discrepancy: f64,
}

/// Floor for the relative discrepancy denominator.
pub const DISCREPANCY_FLOOR: f64 = 1e-12;

pub fn coefficient_c(stilde: &SingularFunction, alpha1: f64, beta1: f64, a: f64, b: f64) -> Result<CoefficientReport> {
    let f = crate::geometry::AuxFunction::new(stilde.domain(), a, b);
    let volume = stilde.integrate_against(|p| f.laplacian(p))?;
    let (ta, tb) = (2.0 * a * alpha1, 2.0 * b * beta1);
    let scale = ta.abs().max(tb.abs()).max(DISCREPANCY_FLOOR);
    Ok(CoefficientReport {
        a,
        b,
        c_sides: -(ta + tb),
        c_volume: -volume,
        discrepancy: ((ta + tb) - volume).abs() / scale,
    })
}

/// Samples `(ρ, θ)` on an arc around corner `i`, avoiding the sides.
pub fn arc_points(frame: &CornerFrame, rho: f64, n: usize) -> Vec<(f64, Point)> {
    (0..n)
        .map(|j| {
            let theta = (j as f64 + 0.5) * OMEGA / n as f64;
            (theta, frame.from_polar(rho, theta))
        })
        .collect()
}

/// Lower bound `|∇S̃| ≥ (2/3)c₀ρ^{-5/3} − Cρ^{-1/3}` on arcs near a corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientBound {
    pub corner: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub min_gradient: f64,
    /// Smallest `C` making the bound hold at every sample.
    pub fitted_c: f64,
    /// Smallest `|∇S̃| / ((2/3)c₀ρ^{-5/3})` over the samples.
    pub min_ratio: f64,
}

pub fn gradient_bound(stilde: &SingularFunction, corner: usize, radii: &[f64], samples: usize) -> Result<GradientBound> {
    let frame = *stilde.frame(corner);
    let mut out = GradientBound {
        corner,
        rho_min: f64::INFINITY,
        rho_max: 0.0,
        min_gradient: f64::INFINITY,
        fitted_c: 0.0,
        min_ratio: f64::INFINITY,
    };
    for &rho in radii {
        out.rho_min = out.rho_min.min(rho);
        out.rho_max = out.rho_max.max(rho);
        for (_, p) in arc_points(&frame, rho, samples) {
            let g = stilde.gradient(p)?.norm();
            out.min_gradient = out.min_gradient.min(g);
            let lead = 2.0 / 3.0 * stilde.c0() * rho.powf(-5.0 / 3.0);
            out.fitted_c = out.fitted_c.max((lead - g) * rho.powf(1.0 / 3.0));
            out.min_ratio = out.min_ratio.min(g / lead);
        }
    }
    Ok(out)
}

/// One row of the `(M, k)` scan over `U^M = {ρ ≤ M^{-3/2}|cos(2θ/3)|^{3/2}}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauRow {
    pub m: f64,
    /// Smallest sampled `|S̃|` in `U^M` above the noise radius.
    pub k: f64,
    /// `S̃` has the sign of `cos(2θ/3)` at every sample.
    pub sign_consistent: bool,
    pub samples: usize,
}

/// Samples `U^M` at corner `i` for each `M`, on radii from `rho_noise` up.
pub fn plateau_scan(stilde: &SingularFunction, corner: usize, ms: &[f64], rho_noise: f64) -> Result<Vec<PlateauRow>> {
    let frame = *stilde.frame(corner);
    let reach = stilde.domain().corner_reach();
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        let mut row = PlateauRow {
            m,
            k: f64::INFINITY,
            sign_consistent: true,
            samples: 0,
        };
        let n_theta = 96;
        for j in 0..n_theta {
            let theta = (j as f64 + 0.5) * OMEGA / n_theta as f64;
            let c = (2.0 / 3.0 * theta).cos();
            let top = (m.powf(-1.5) * c.abs().powf(1.5)).min(0.7 * reach);
            if top <= rho_noise {
                continue;
            }
            let n_rho = 12;
            for q in 0..n_rho {
                let rho = rho_noise * (top / rho_noise).powf(q as f64 / (n_rho - 1) as f64);
                let v = stilde.evaluate(frame.from_polar(rho, theta))?;
                row.samples += 1;
                row.k = row.k.min(v.abs());
                if v * c <= 0.0 {
                    row.sign_consistent = false;
                }
            }
        }
        if row.samples == 0 {
            row.k = 0.0;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Smallest `M` of the scan whose plateau keeps the template sign.
pub fn plateau_threshold(rows: &[PlateauRow]) -> Option<f64> {
    rows.iter()
        .filter(|r| r.sign_consistent && r.samples > 0 && r.k > 0.0)
        .map(|r| r.m)
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.min(m))))
}

/// Angular monotonicity of `S̃` on one arc, outside `U^M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcMonotonicity {
    pub corner: usize,
    pub rho: f64,
    pub samples: usize,
    /// Samples left after removing `U^M`.
    pub kept: usize,
    pub strictly_decreasing: bool,
    /// Largest increase between consecutive kept samples (negative when
    /// strictly decreasing).
    pub worst_step: f64,
}

pub fn arc_monotonicity(stilde: &SingularFunction, corner: usize, rho: f64, m: f64, samples: usize) -> Result<ArcMonotonicity> {
    let frame = *stilde.frame(corner);
    let mut kept = Vec::new();
    for (theta, p) in arc_points(&frame, rho, samples) {
        let c = (2.0 / 3.0 * theta).cos().abs();
        let in_plateau = rho <= m.powf(-1.5) * c.powf(1.5);
        if !in_plateau {
            kept.push(stilde.evaluate(p)?);
        }
    }
    let worst_step = kept.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(ArcMonotonicity {
        corner,
        rho,
        samples,
        kept: kept.len(),
        strictly_decreasing: kept.len() >= 2 && worst_step < 0.0,
        worst_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_mesh;
    use crate::solver::hat_gradients;

    fn stilde(r2: f64, h: f64) -> SingularFunction {
        let d = AnnulusDomain::new(1.0, r2, 2.0).unwrap();
        let m = Arc::new(generate_mesh(&d, h, 3.0).unwrap());
        build_very_weak(&m, 1e-12).unwrap()
    }

    #[test]
    fn template_laplacian_matches_finite_differences() {
        let d = AnnulusDomain::new(1.0, 0.5, 2.0).unwrap();
        let (frame, cut) = (d.frame(2), d.corner_cutoff(2));
        let g = |p: Point| {
            let pol = frame.to_polar(p).unwrap();
            cut.value(p) * PowerMode::TEMPLATE.value(pol.rho, pol.theta)
        };
        let step = 1e-4;
        let mut checked = 0;
        for k in 0..100 {
            let rho = cut.radius_inner + (cut.radius_outer - cut.radius_inner) * (k as f64 + 0.5) / 100.0;
            let theta = 0.1 + (OMEGA - 0.2) * ((k * 37) % 100) as f64 / 100.0;
            let p = frame.from_polar(rho, theta);
            let fd = (g(p + Point::new(step, 0.0)) + g(p - Point::new(step, 0.0)) + g(p + Point::new(0.0, step))
                + g(p - Point::new(0.0, step))
                - 4.0 * g(p))
                / (step * step);
            let exact = template_laplacian(&frame, &cut, p);
            assert!((fd - exact).abs() < 1e-4 * (1.0 + exact.abs()), "{fd} {exact}");
            checked += 1;
        }
        assert_eq!(checked, 100);
        let inside = frame.from_polar(0.5 * cut.radius_inner, 1.0);
        let outside = frame.from_polar(1.01 * cut.radius_outer, 1.0);
        assert_eq!(template_laplacian(&frame, &cut, inside), 0.0);
        assert_eq!(template_laplacian(&frame, &cut, outside), 0.0);
    }

    #[test]
    fn normalized_and_symmetric() {
        let s = stilde(1.0, 0.1);
        assert!(s.c0() > 0.0);
        assert!((s.l2_norm() - 1.0).abs() < 1e-12);
        let sym = MeshSymmetry::new(s.mesh()).unwrap();
        assert_eq!(sym.residual(s.nodal().values(), SwapParity::Odd).max(), 0.0);
        assert!(s.raw_symmetry_residual.max() < 1e-8);
    }

    #[test]
    fn regular_part_is_bounded_at_corners() {
        let s = stilde(0.5, 0.05);
        for i in 1..=4 {
            let f = *s.frame(i);
            let mut last: Option<f64> = None;
            for k in 1..6 {
                let p = f.from_polar(10f64.powi(-k), 1.0);
                let r = s.regular_part(p).unwrap();
                if let Some(prev) = last {
                    assert!((r - prev).abs() < 0.05);
                }
                last = Some(r);
            }
        }
    }

    #[test]
    fn square_side_integrals_have_opposite_signs() {
        let s = stilde(1.0, 0.1);
        let (a1, _) = s.side_integral(BoundaryTag::Inner(crate::geometry::Side::Top)).unwrap();
        let (a3, _) = s.side_integral(BoundaryTag::Inner(crate::geometry::Side::Bottom)).unwrap();
        let (b1, _) = s.side_integral(BoundaryTag::Inner(crate::geometry::Side::Left)).unwrap();
        let (b2, _) = s.side_integral(BoundaryTag::Inner(crate::geometry::Side::Right)).unwrap();
        assert!(a1 < 0.0 && b1 > 0.0);
        assert!((a1 - a3).abs() < 1e-12 && (b1 - b2).abs() < 1e-12);
        assert!((a1 + b1).abs() < 1e-3 * a1.abs());
    }

    #[test]
    fn zero_probe_has_zero_coefficient() {
        let s = stilde(0.5, 0.1);
        let r = coefficient_c(&s, -1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(r.c_sides, 0.0);
        assert_eq!(r.c_volume, 0.0);
    }

    #[test]
    fn singular_solution_satisfies_weak_form() {
        let s = stilde(1.0, 0.1);
        let (field, _) = build_singular_solution(&s, 1e-13).unwrap();
        let mesh = s.mesh();
        let sym = MeshSymmetry::new(mesh).unwrap();
        assert_eq!(sym.residual(field.values(), SwapParity::Odd).max(), 0.0);
        // ∫∇S·∇φ + ∫S̃φ = 0 for the hats of free vertices.
        let mut r = alloc::vec![0.0; mesh.num_vertices()];
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangles[t];
            let g = hat_gradients(&mesh.triangle_points(t));
            let area = triangle_area(&mesh.triangle_points(t)).abs();
            let gs = field.triangle_gradient(t);
            let mom = s.hat_moments(t);
            for k in 0..3 {
                r[tri[k]] += area * gs.dot(g[k]) + mom[k];
            }
        }
        let scale = field.max_abs();
        for (v, x) in r.iter().enumerate() {
            if !mesh.on_outer_boundary(v) {
                assert!(x.abs() < 1e-8 * scale.max(1.0), "{v} {x}");
            }
        }
    }
}
