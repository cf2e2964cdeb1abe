//! P1 finite elements for `−Δu = F` with Dirichlet data on some outer sides
//! and Neumann data elsewhere, solved by Jacobi-preconditioned conjugate
//! gradients.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Point, Side};
use crate::mesh::GradedMesh;
use crate::quadrature::{triangle_area, TriangleRule};
use crate::symmetry::{MeshSymmetry, SwapParity};

/// Default relative residual target for [`solve_cg`].
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// A continuous piecewise-linear function on a mesh.
#[derive(Debug, Clone)]
pub struct ScalarField {
    mesh: Arc<GradedMesh>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: Arc<GradedMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::MeshMismatch);
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<GradedMesh>) -> Self {
        let n = mesh.num_vertices();
        Self {
            mesh,
            values: alloc::vec![0.0; n],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<GradedMesh>, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices.iter().map(|p| f(*p)).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<GradedMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn evaluate(&self, p: Point) -> Result<f64> {
        let (t, b) = self.mesh.locate(p).ok_or(Error::OutsideMesh(p.x, p.y))?;
        let tri = self.mesh.triangles[t];
        Ok(b[0] * self.values[tri[0]] + b[1] * self.values[tri[1]] + b[2] * self.values[tri[2]])
    }

    /// Constant gradient on triangle `t`.
    pub fn triangle_gradient(&self, t: usize) -> Point {
        let tri = self.mesh.triangles[t];
        let v = tri.map(|i| self.mesh.vertices[i]);
        let g = hat_gradients(&v);
        g[0] * self.values[tri[0]] + g[1] * self.values[tri[1]] + g[2] * self.values[tri[2]]
    }

    pub fn gradient(&self, p: Point) -> Result<Point> {
        let (t, _) = self.mesh.locate(p).ok_or(Error::OutsideMesh(p.x, p.y))?;
        Ok(self.triangle_gradient(t))
    }

    /// Exact `L²` norm of the piecewise-linear function.
    pub fn l2_norm(&self) -> f64 {
        let rule = TriangleRule::three_point();
        let mut sum = 0.0;
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let v = self.mesh.triangle_points(t);
            let u = tri.map(|i| self.values[i]);
            let area = triangle_area(&v).abs();
            sum += area
                * rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(b, w)| {
                        let x = b[0] * u[0] + b[1] * u[1] + b[2] * u[2];
                        w * x * x
                    })
                    .sum::<f64>();
        }
        sum.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        if !Arc::ptr_eq(&self.mesh, &other.mesh) {
            return Err(Error::MeshMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Gradients of the three barycentric hat functions.
pub fn hat_gradients(v: &[Point; 3]) -> [Point; 3] {
    let area2 = (v[1] - v[0]).cross(v[2] - v[0]);
    let rot = |e: Point| Point::new(e.y, -e.x) * (1.0 / area2);
    [rot(v[1] - v[2]), rot(v[2] - v[0]), rot(v[0] - v[1])]
}

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given (sorted, deduplicated) row patterns.
    fn with_pattern(rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows {
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self {
            n: rows.len(),
            row_ptr,
            col_idx,
            values: alloc::vec![0.0; nnz],
        }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.values[k])
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry in sparsity pattern");
        self.values[k] += v;
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `max |A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.values[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum()
    }
}

/// Unconstrained P1 stiffness matrix `∫∇φᵢ·∇φⱼ` over all vertices.
pub fn stiffness_matrix(mesh: &GradedMesh) -> CsrMatrix {
    let mut rows = mesh.vertex_neighbors();
    for (i, r) in rows.iter_mut().enumerate() {
        if let Err(k) = r.binary_search(&i) {
            r.insert(k, i);
        }
    }
    let mut k = CsrMatrix::with_pattern(&rows);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let v = mesh.triangle_points(t);
        let g = hat_gradients(&v);
        let area = triangle_area(&v).abs();
        for a in 0..3 {
            for b in 0..3 {
                k.add(tri[a], tri[b], area * g[a].dot(g[b]));
            }
        }
    }
    k
}

/// Volume source `F` in `−Δu = F`.
#[allow(missing_debug_implementations)]
pub enum Source<'a> {
    Zero,
    /// Integrated against the hats with the symmetric 3-point rule.
    Pointwise(&'a dyn Fn(Point) -> f64),
    /// Returns `∫_T F φ_k` for the three local hats of triangle `t`.
    Elementwise(&'a dyn Fn(usize) -> [f64; 3]),
}

/// Data for `−Δu = F` in `Ω`, `u = g` on the Dirichlet sides and
/// `∂u/∂n = q` on the remaining boundary.
#[allow(missing_debug_implementations)]
pub struct Problem<'a> {
    pub source: Source<'a>,
    /// Flux `q(tag, p)`; `None` means homogeneous Neumann data.
    pub neumann: Option<&'a dyn Fn(BoundaryTag, Point) -> f64>,
    /// Must be outer sides.
    pub dirichlet_tags: &'a [BoundaryTag],
    /// Boundary values `g(p)`; `None` means `g = 0`.
    pub dirichlet_value: Option<&'a dyn Fn(Point) -> f64>,
}

impl Problem<'_> {
    /// Homogeneous Dirichlet data on all of `Γ̃`.
    pub const OUTER: [BoundaryTag; 4] = [
        BoundaryTag::Outer(Side::Top),
        BoundaryTag::Outer(Side::Left),
        BoundaryTag::Outer(Side::Bottom),
        BoundaryTag::Outer(Side::Right),
    ];
}

/// The reduced system `A x = b` over the free vertices.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    mesh: Arc<GradedMesh>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Free-vertex index of each vertex, `None` when constrained.
    pub dof_of_vertex: Vec<Option<usize>>,
    pub vertex_of_dof: Vec<usize>,
    /// Values imposed on constrained vertices (zero on free ones).
    pub boundary_values: Vec<f64>,
}

impl LinearSystem {
    pub fn mesh(&self) -> &Arc<GradedMesh> {
        &self.mesh
    }

    pub fn dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    /// Scatters a free-vertex vector into a nodal field with the boundary
    /// values restored.
    pub fn to_field(&self, x: &[f64]) -> ScalarField {
        let mut values = self.boundary_values.clone();
        for (d, &v) in self.vertex_of_dof.iter().enumerate() {
            values[v] = x[d];
        }
        ScalarField {
            mesh: self.mesh.clone(),
            values,
        }
    }
}

/// Per-vertex load vector `∫Fφᵢ + ∫_N qφᵢ` before constraints.
pub fn load_vector(mesh: &GradedMesh, problem: &Problem<'_>) -> Result<Vec<f64>> {
    let mut load = alloc::vec![0.0; mesh.num_vertices()];
    match problem.source {
        Source::Zero => {}
        Source::Pointwise(f) => {
            let rule = TriangleRule::three_point();
            for (t, tri) in mesh.triangles.iter().enumerate() {
                let v = mesh.triangle_points(t);
                let area = triangle_area(&v).abs();
                for (b, w) in rule.points.iter().zip(&rule.weights) {
                    let fx = f(TriangleRule::map(b, &v));
                    if !fx.is_finite() {
                        return Err(Error::NonFinite("volume source"));
                    }
                    for k in 0..3 {
                        load[tri[k]] += area * w * fx * b[k];
                    }
                }
            }
        }
        Source::Elementwise(f) => {
            for (t, tri) in mesh.triangles.iter().enumerate() {
                let l = f(t);
                if !l.iter().all(|x| x.is_finite()) {
                    return Err(Error::NonFinite("volume source"));
                }
                for k in 0..3 {
                    load[tri[k]] += l[k];
                }
            }
        }
    }
    if let Some(q) = problem.neumann {
        let g = 0.5 / 3.0.sqrt();
        for e in &mesh.boundary_edges {
            if problem.dirichlet_tags.contains(&e.tag) {
                continue;
            }
            let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
            let half = 0.5 * a.dist(b);
            for s in [0.5 - g, 0.5 + g] {
                let qx = q(e.tag, a + (b - a) * s);
                if !qx.is_finite() {
                    return Err(Error::NonFinite("neumann data"));
                }
                load[e.vertices[0]] += half * qx * (1.0 - s);
                load[e.vertices[1]] += half * qx * s;
            }
        }
    }
    Ok(load)
}

/// Assembles the P1 system with Dirichlet vertices eliminated symmetrically.
pub fn assemble(mesh: &Arc<GradedMesh>, problem: &Problem<'_>) -> Result<LinearSystem> {
    if problem.dirichlet_tags.is_empty() {
        return Err(Error::InvalidProblem("at least one Dirichlet side is required"));
    }
    if problem.dirichlet_tags.iter().any(|t| t.is_inner()) {
        return Err(Error::InvalidProblem("Dirichlet data is only supported on outer sides"));
    }
    let n = mesh.num_vertices();
    let mut constrained = alloc::vec![false; n];
    for e in &mesh.boundary_edges {
        if problem.dirichlet_tags.contains(&e.tag) {
            constrained[e.vertices[0]] = true;
            constrained[e.vertices[1]] = true;
        }
    }
    let mut boundary_values = alloc::vec![0.0; n];
    if let Some(g) = problem.dirichlet_value {
        for i in (0..n).filter(|&i| constrained[i]) {
            boundary_values[i] = g(mesh.vertices[i]);
            if !boundary_values[i].is_finite() {
                return Err(Error::NonFinite("dirichlet data"));
            }
        }
    }
    let mut dof_of_vertex = alloc::vec![None; n];
    let mut vertex_of_dof = Vec::new();
    for i in 0..n {
        if !constrained[i] {
            dof_of_vertex[i] = Some(vertex_of_dof.len());
            vertex_of_dof.push(i);
        }
    }

    let full = stiffness_matrix(mesh);
    let load = load_vector(mesh, problem)?;
    let rows: Vec<Vec<usize>> = vertex_of_dof
        .iter()
        .map(|&v| {
            full.col_idx[full.row_ptr[v]..full.row_ptr[v + 1]]
                .iter()
                .filter_map(|&j| dof_of_vertex[j])
                .collect()
        })
        .collect();
    let mut matrix = CsrMatrix::with_pattern(&rows);
    let mut rhs = Vec::with_capacity(vertex_of_dof.len());
    for (d, &v) in vertex_of_dof.iter().enumerate() {
        let mut b = load[v];
        for k in full.row_ptr[v]..full.row_ptr[v + 1] {
            let j = full.col_idx[k];
            match dof_of_vertex[j] {
                Some(dj) => matrix.add(d, dj, full.values[k]),
                None => b -= full.values[k] * boundary_values[j],
            }
        }
        rhs.push(b);
    }
    Ok(LinearSystem {
        mesh: mesh.clone(),
        matrix,
        rhs,
        dof_of_vertex,
        vertex_of_dof,
        boundary_values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// True relative residual `‖b − Ax‖/‖b‖` of the returned iterate.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned CG from a zero initial guess. Fails after
/// `10·n` iterations.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], rel_tol: f64) -> Result<(Vec<f64>, CgReport)> {
    let n = a.n;
    let bnorm = dot(b, b).sqrt();
    let mut x = alloc::vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            CgReport {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let cap = 10 * n.max(1);
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut ap = alloc::vec![0.0; n];
    // Restart from the true residual if the recurrence drifted.
    for _ in 0..4 {
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < cap {
            if dot(&r, &r).sqrt() <= rel_tol * bnorm {
                break;
            }
            iterations += 1;
            a.mul_vec(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        a.mul_vec(&x, &mut ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        let residual = dot(&r, &r).sqrt() / bnorm;
        if !residual.is_finite() {
            return Err(Error::NonFinite("conjugate gradient iterate"));
        }
        if residual <= rel_tol {
            return Ok((x, CgReport { iterations, residual }));
        }
        if iterations >= cap {
            return Err(Error::CgNotConverged { iterations, residual });
        }
    }
    let residual = dot(&r, &r).sqrt() / bnorm;
    Err(Error::CgNotConverged { iterations, residual })
}

/// Solves an assembled system; the field carries the Dirichlet values.
pub fn solve_cg(system: &LinearSystem, rel_tol: f64) -> Result<(ScalarField, CgReport)> {
    let (x, report) = conjugate_gradient(&system.matrix, &system.rhs, rel_tol)?;
    Ok((system.to_field(&x), report))
}

/// Assembles and solves in one step.
pub fn solve(mesh: &Arc<GradedMesh>, problem: &Problem<'_>, rel_tol: f64) -> Result<(ScalarField, CgReport)> {
    solve_cg(&assemble(mesh, problem)?, rel_tol)
}

/// Solution of the flux problem with its solver diagnostics.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub field: ScalarField,
    pub cg: CgReport,
    /// Largest symmetry violation before projection.
    pub raw_symmetry_residual: f64,
}

/// `Δu = 0`, `u = 0` on `Γ̃`, `∂u/∂n = a` on `Γ₁, Γ₃` and `b` on `Γ₂, Γ₄`.
///
/// The data are invariant under both mirrors (and under the swap when the
/// domain is a square and `a = b`), so the nodal values are projected onto
/// that symmetry class.
pub fn solve_neumann_problem(mesh: &Arc<GradedMesh>, a: f64, b: f64, rel_tol: f64) -> Result<NeumannSolution> {
    let flux = move |tag: BoundaryTag, _: Point| match tag {
        BoundaryTag::Inner(s) if s.is_horizontal() => a,
        BoundaryTag::Inner(_) => b,
        BoundaryTag::Outer(_) => 0.0,
    };
    let problem = Problem {
        source: Source::Zero,
        neumann: Some(&flux),
        dirichlet_tags: &Problem::OUTER,
        dirichlet_value: None,
    };
    let (mut field, cg) = solve(mesh, &problem, rel_tol)?;
    let sym = MeshSymmetry::new(mesh)?;
    let parity = if a == b { SwapParity::Even } else { SwapParity::None };
    let raw_symmetry_residual = sym.residual(field.values(), parity).max();
    sym.project(field.values_mut(), parity);
    Ok(NeumannSolution {
        field,
        cg,
        raw_symmetry_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnnulusDomain;
    use crate::mesh::generate_mesh;

    fn mesh(r2: f64, h: f64, mu: f64) -> Arc<GradedMesh> {
        Arc::new(generate_mesh(&AnnulusDomain::new(1.0, r2, 2.0).unwrap(), h, mu).unwrap())
    }

    #[test]
    fn stiffness_is_symmetric_with_zero_row_sums() {
        let m = mesh(0.5, 0.1, 3.0);
        let k = stiffness_matrix(&m);
        assert_eq!(k.asymmetry(), 0.0);
        for i in 0..k.n {
            assert!(k.row_sum(i).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = mesh(1.0, 0.2, 2.0);
        let s = solve_neumann_problem(&m, 0.0, 0.0, DEFAULT_REL_TOL).unwrap();
        assert_eq!(s.field.max_abs(), 0.0);
        assert_eq!(s.cg.iterations, 0);
    }

    #[test]
    fn cg_finite_termination_on_diagonal_system() {
        let rows: Vec<Vec<usize>> = (0..5).map(|i| alloc::vec![i]).collect();
        let mut a = CsrMatrix::with_pattern(&rows);
        for i in 0..5 {
            a.add(i, i, (i + 1) as f64);
        }
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (x, rep) = conjugate_gradient(&a, &b, 1e-14).unwrap();
        assert!(rep.iterations <= 5);
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_inner_dirichlet_and_non_finite_data() {
        let m = mesh(1.0, 0.2, 1.0);
        let tags = [BoundaryTag::Inner(Side::Top)];
        let p = Problem {
            source: Source::Zero,
            neumann: None,
            dirichlet_tags: &tags,
            dirichlet_value: None,
        };
        assert!(matches!(assemble(&m, &p), Err(Error::InvalidProblem(_))));
        let nan = |_: Point| f64::NAN;
        let p = Problem {
            source: Source::Pointwise(&nan),
            neumann: None,
            dirichlet_tags: &Problem::OUTER,
            dirichlet_value: None,
        };
        assert!(matches!(assemble(&m, &p), Err(Error::NonFinite(_))));
    }

    #[test]
    fn galerkin_residual_and_energy_identity() {
        let m = mesh(0.5, 0.1, 3.0);
        let sys = assemble(
            &m,
            &Problem {
                source: Source::Pointwise(&|p: Point| p.x * p.x),
                neumann: Some(&|_, p: Point| p.y),
                dirichlet_tags: &Problem::OUTER,
                dirichlet_value: None,
            },
        )
        .unwrap();
        let (x, rep) = conjugate_gradient(&sys.matrix, &sys.rhs, 1e-12).unwrap();
        assert!(rep.residual <= 1e-12);
        let mut ax = alloc::vec![0.0; x.len()];
        sys.matrix.mul_vec(&x, &mut ax);
        let bnorm = dot(&sys.rhs, &sys.rhs).sqrt();
        let xnorm = dot(&x, &x).sqrt();
        assert!((dot(&x, &ax) - dot(&sys.rhs, &x)).abs() <= 1e-12 * bnorm * xnorm * 10.0);
    }

    #[test]
    fn load_matches_brute_force_galerkin_integrals() {
        // ∫∇f·∇φᵢ = ∫(−Δf)φᵢ + ∫_∂Ω (∂f/∂n)φᵢ for smooth f; the left side
        // is integrated with a high-order rule, the right side is the load.
        let grad = |p: Point| Point::new(-2.0 * (2.0 * p.x).sin() * p.y * p.y, 2.0 * (2.0 * p.x).cos() * p.y);
        let mlap = |p: Point| (2.0 * p.x).cos() * (4.0 * p.y * p.y - 2.0);
        let flux = |tag: BoundaryTag, p: Point| grad(p).dot(tag.outward_normal());
        let hi = TriangleRule::conical(6);
        let rel = |h: f64| {
            let m = mesh(1.0, h, 3.0);
            let load = load_vector(
                &m,
                &Problem {
                    source: Source::Pointwise(&mlap),
                    neumann: Some(&flux),
                    dirichlet_tags: &[],
                    dirichlet_value: None,
                },
            )
            .unwrap();
            let mut exact = alloc::vec![0.0; m.num_vertices()];
            for (t, tri) in m.triangles.iter().enumerate() {
                let v = m.triangle_points(t);
                let g = hat_gradients(&v);
                for k in 0..3 {
                    exact[tri[k]] += hi.integrate(&v, |p| grad(p).dot(g[k]));
                }
            }
            let scale = exact.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let err = load.iter().zip(&exact).fold(0.0f64, |a, (l, q)| a.max((l - q).abs()));
            err / scale
        };
        let (coarse, fine) = (rel(0.1), rel(0.05));
        assert!(fine < 1e-3 && coarse / fine > 3.5, "{coarse} {fine}");
    }

    #[test]
    fn symmetric_data_give_symmetric_solutions() {
        let m = mesh(1.0, 0.1, 3.0);
        let sym = MeshSymmetry::new(&m).unwrap();
        let s = solve_neumann_problem(&m, 1.0, 1.0, DEFAULT_REL_TOL).unwrap();
        assert!(s.raw_symmetry_residual < 1e-8);
        assert_eq!(sym.residual(s.field.values(), SwapParity::Even).max(), 0.0);
        let s = solve_neumann_problem(&m, 1.0, 0.0, DEFAULT_REL_TOL).unwrap();
        let r = sym.residual(s.field.values(), SwapParity::Even);
        assert_eq!(r.mirror_x.max(r.mirror_y), 0.0);
        assert!(r.swap.unwrap() > 1e-3);
    }
}
