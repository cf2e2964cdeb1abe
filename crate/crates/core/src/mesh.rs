//! Conforming triangulations of the annulus graded toward the reentrant
//! corners.
//!
//! The first quadrant is meshed from a structured grid of right triangles
//! and refined by newest-vertex bisection until every triangle meets the
//! radial size law `h·(ρ/ρ_ref)^{1−1/μ}`. The quadrant is then mirrored
//! across both axes, so the full mesh is invariant under `x ↦ −x` and
//! `y ↦ −y` exactly, and under `(x, y) ↦ (y, x)` when `r₁ = r₂`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{segment_distance, AnnulusDomain, BoundaryLocation, BoundaryTag, Point};
use crate::quadrature::triangle_area;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone)]
pub struct GradedMesh {
    domain: AnnulusDomain,
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub grading_exponent: f64,
    pub nominal_h: f64,
    corner_vertices: [usize; 4],
    on_outer: Vec<bool>,
    locator: Locator,
}

/// Summary of the structural checks run over a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshAudit {
    pub vertices: usize,
    pub triangles: usize,
    pub boundary_edges: usize,
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    pub min_area: f64,
    pub max_diameter: f64,
    pub min_diameter: f64,
    /// Σ|T| / |Ω|; 1 for a mesh without gaps or overlaps.
    pub area_ratio: f64,
    /// Largest `diam(T) / (√2·h·(ρ_T/ρ_ref)^{1−1/μ})` over graded triangles.
    pub grading_ratio: f64,
    pub conforming: bool,
}

/// Minimum interior angle enforced by [`generate_mesh`].
pub const MIN_ANGLE_DEG: f64 = 20.0;

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn coord_key(p: Point) -> (u64, u64) {
    // +0.0 and -0.0 must collide.
    ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())
}

/// Newest-vertex bisection state for the quadrant mesh. The refinement
/// edge of `[a, b, c]` is `(a, b)`.
struct Bisection {
    verts: Vec<Point>,
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
    split: BTreeMap<(usize, usize), usize>,
    edge_tris: BTreeMap<(usize, usize), Vec<usize>>,
}

impl Bisection {
    fn new(verts: Vec<Point>) -> Self {
        Self {
            verts,
            tris: Vec::new(),
            alive: Vec::new(),
            split: BTreeMap::new(),
            edge_tris: BTreeMap::new(),
        }
    }

    fn edges(t: [usize; 3]) -> [(usize, usize); 3] {
        [
            edge_key(t[0], t[1]),
            edge_key(t[1], t[2]),
            edge_key(t[2], t[0]),
        ]
    }

    fn add(&mut self, t: [usize; 3]) -> usize {
        let id = self.tris.len();
        self.tris.push(t);
        self.alive.push(true);
        for e in Self::edges(t) {
            self.edge_tris.entry(e).or_default().push(id);
        }
        id
    }

    fn kill(&mut self, id: usize) {
        self.alive[id] = false;
        for e in Self::edges(self.tris[id]) {
            if let Some(list) = self.edge_tris.get_mut(&e) {
                list.retain(|&t| t != id);
            }
        }
    }

    fn has_hanging_node(&self, id: usize) -> bool {
        Self::edges(self.tris[id])
            .iter()
            .any(|e| self.split.contains_key(e))
    }

    /// Bisects `t0` and everything needed to keep the mesh conforming.
    fn refine(&mut self, t0: usize) {
        let mut stack = alloc::vec![t0];
        while let Some(t) = stack.pop() {
            if !self.alive[t] {
                continue;
            }
            let [a, b, c] = self.tris[t];
            let e = edge_key(a, b);
            let m = match self.split.get(&e) {
                Some(&m) => m,
                None => {
                    let m = self.verts.len();
                    self.verts.push(self.verts[a].midpoint(self.verts[b]));
                    self.split.insert(e, m);
                    if let Some(list) = self.edge_tris.get(&e) {
                        stack.extend(list.iter().copied().filter(|&o| o != t));
                    }
                    m
                }
            };
            self.kill(t);
            for child in [[a, c, m], [c, b, m]] {
                let id = self.add(child);
                if self.has_hanging_node(id) {
                    stack.push(id);
                }
            }
        }
    }

    fn longest_edge(&self, t: [usize; 3]) -> f64 {
        let v = t.map(|i| self.verts[i]);
        v[0].dist(v[1]).max(v[1].dist(v[2])).max(v[2].dist(v[0]))
    }
}

/// Grid lines on `[0, a] ∪ [a, b]`, each piece split into near-`h` parts.
fn grid_lines(a: f64, b: f64, h: f64) -> Vec<f64> {
    let parts = |len: f64| ((len / h) - 1e-9).ceil().max(1.0) as usize;
    let (n1, n2) = (parts(a), parts(b - a));
    let mut xs = Vec::with_capacity(n1 + n2 + 1);
    for j in 0..n1 {
        xs.push(a * j as f64 / n1 as f64);
    }
    for j in 0..n2 {
        xs.push(a + (b - a) * j as f64 / n2 as f64);
    }
    xs.push(b);
    xs
}

/// Target element size law shared by generation and the audit.
#[derive(Debug, Clone, Copy)]
struct SizeLaw {
    h: f64,
    mu: f64,
    rho_ref: f64,
    h_min: f64,
}

impl SizeLaw {
    fn new(domain: &AnnulusDomain, h: f64, mu: f64) -> Self {
        let rho_ref = domain.min_half_width();
        // Innermost layer: where h·(ρ/ρ_ref)^{1−1/μ} meets ρ.
        let h_min = (h * rho_ref.powf(1.0 / mu - 1.0)).powf(mu).min(h);
        Self {
            h,
            mu,
            rho_ref,
            h_min,
        }
    }

    fn graded(&self, rho: f64) -> f64 {
        if rho >= self.rho_ref {
            self.h
        } else {
            self.h * (rho / self.rho_ref).powf(1.0 - 1.0 / self.mu)
        }
    }

    fn target(&self, rho: f64) -> f64 {
        self.graded(rho).max(self.h_min)
    }
}

/// Builds the graded, symmetric mesh of `domain`.
///
/// `nominal_h` is the leg length of the initial right triangles away from the
/// corners; `grading_exponent = 1` yields a uniform mesh.
pub fn generate_mesh(domain: &AnnulusDomain, nominal_h: f64, grading_exponent: f64) -> Result<GradedMesh> {
    let mut family = generate_mesh_family(domain, nominal_h, grading_exponent, 0)?;
    Ok(family.remove(0))
}

/// Nested graded meshes for `h, h/2, …, h/2^levels`.
///
/// Each level bisects every triangle of the previous one twice, which halves
/// all element sizes and keeps the local patterns, and then refines only the
/// innermost corner layers required by the smaller `h`.
pub fn generate_mesh_family(
    domain: &AnnulusDomain,
    nominal_h: f64,
    grading_exponent: f64,
    levels: usize,
) -> Result<Vec<GradedMesh>> {
    if !(nominal_h > 0.0 && nominal_h.is_finite()) {
        return Err(Error::InvalidMeshParameters("h must be positive"));
    }
    if nominal_h >= domain.min_half_width() / 4.0 {
        return Err(Error::InvalidMeshParameters("h must be below min(r1, r2)/4"));
    }
    if !(grading_exponent >= 1.0 && grading_exponent.is_finite()) {
        return Err(Error::InvalidMeshParameters("grading exponent must be >= 1"));
    }
    let passes = |family: &[GradedMesh]| {
        family.iter().all(|m| {
            let a = m.audit();
            a.conforming && a.min_angle_deg >= MIN_ANGLE_DEG
        })
    };
    let family = build(domain, nominal_h, grading_exponent, nominal_h, levels)?;
    if passes(&family) {
        return Ok(family);
    }
    // Retry once with a slightly different structured grid; uneven piece
    // lengths are what produce skinny initial triangles.
    let retry = build(domain, nominal_h, grading_exponent, 0.8 * nominal_h, levels)?;
    for m in &retry {
        let audit = m.audit();
        if !audit.conforming {
            return Err(Error::MeshAudit {
                what: "non-conforming mesh",
                value: audit.area_ratio,
            });
        }
        if audit.min_angle_deg < MIN_ANGLE_DEG {
            return Err(Error::MeshAudit {
                what: "minimum angle below 20 degrees",
                value: audit.min_angle_deg,
            });
        }
    }
    Ok(retry)
}

impl Bisection {
    /// Bisects until every triangle meets the size law.
    fn grade(&mut self, domain: &AnnulusDomain, law: &SizeLaw) {
        let corners = domain.corners();
        // Distance from the corners to the closed triangle; it can only grow
        // under bisection.
        let corner_distance = |v: [Point; 3]| {
            corners
                .iter()
                .map(|c| {
                    segment_distance(*c, v[0], v[1])
                        .min(segment_distance(*c, v[1], v[2]))
                        .min(segment_distance(*c, v[2], v[0]))
                })
                .fold(f64::INFINITY, f64::min)
        };
        let slack = 1.0 + 1e-9;
        loop {
            let marked: Vec<usize> = (0..self.tris.len())
                .filter(|&t| self.alive[t])
                .filter(|&t| {
                    let tri = self.tris[t];
                    let rho = corner_distance(tri.map(|v| self.verts[v]));
                    self.longest_edge(tri) > core::f64::consts::SQRT_2 * law.target(rho) * slack
                })
                .collect();
            if marked.is_empty() {
                break;
            }
            for t in marked {
                self.refine(t);
            }
        }
    }

    fn bisect_all(&mut self) {
        let current: Vec<usize> = (0..self.tris.len()).filter(|&t| self.alive[t]).collect();
        for t in current {
            self.refine(t);
        }
    }

    /// Mirrors the quadrant mesh into the full annulus.
    fn mirrored(&self, domain: &AnnulusDomain, mu: f64, h: f64) -> Result<GradedMesh> {
        let quad_tris: Vec<[usize; 3]> = (0..self.tris.len())
            .filter(|&t| self.alive[t])
            .map(|t| self.tris[t])
            .collect();
        let mut vertices: Vec<Point> = Vec::new();
        let mut index: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        let mut triangles = Vec::with_capacity(4 * quad_tris.len());
        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
            let map: Vec<usize> = self
                .verts
                .iter()
                .map(|p| {
                    let q = Point::new(sx * p.x + 0.0, sy * p.y + 0.0);
                    *index.entry(coord_key(q)).or_insert_with(|| {
                        vertices.push(q);
                        vertices.len() - 1
                    })
                })
                .collect();
            for t in &quad_tris {
                triangles.push(t.map(|v| map[v]));
            }
        }
        GradedMesh::from_parts(*domain, vertices, triangles, mu, h)
    }
}

fn build(domain: &AnnulusDomain, h: f64, mu: f64, grid_h: f64, levels: usize) -> Result<Vec<GradedMesh>> {
    let (r1, r2, l) = (domain.r1(), domain.r2(), domain.lambda0());
    let xs = grid_lines(r1, l * r1, grid_h);
    let ys = grid_lines(r2, l * r2, grid_h);
    let nx = xs.len();

    let mut verts = Vec::new();
    let mut grid_index = alloc::vec![usize::MAX; nx * ys.len()];
    let mut node = |i: usize, j: usize, verts: &mut Vec<Point>| {
        let slot = &mut grid_index[j * nx + i];
        if *slot == usize::MAX {
            *slot = verts.len();
            verts.push(Point::new(xs[i], ys[j]));
        }
        *slot
    };
    let mut cells = Vec::new();
    for j in 0..ys.len() - 1 {
        for i in 0..nx - 1 {
            if xs[i + 1] <= r1 && ys[j + 1] <= r2 {
                continue;
            }
            let bl = node(i, j, &mut verts);
            let br = node(i + 1, j, &mut verts);
            let tr = node(i + 1, j + 1, &mut verts);
            let tl = node(i, j + 1, &mut verts);
            cells.push(([bl, br, tr, tl], (i + j) % 2 == 0));
        }
    }
    let mut nvb = Bisection::new(verts);
    // Diagonals alternate in a checkerboard: the pattern continues across
    // the mirror axes, and two bisections of it give the same pattern at
    // half the size.
    for ([bl, br, tr, tl], rising) in cells {
        if rising {
            nvb.add([bl, tr, br]);
            nvb.add([tr, bl, tl]);
        } else {
            nvb.add([br, tl, bl]);
            nvb.add([tl, br, tr]);
        }
    }

    let mut family = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        let hl = h / (1u64 << level) as f64;
        if level > 0 {
            nvb.bisect_all();
            nvb.bisect_all();
        }
        nvb.grade(domain, &SizeLaw::new(domain, hl, mu));
        family.push(nvb.mirrored(domain, mu, hl)?);
    }
    Ok(family)
}

impl GradedMesh {
    /// Assembles a mesh from raw vertices and triangles, orienting triangles
    /// counterclockwise and tagging boundary edges from the geometry.
    pub fn from_parts(
        domain: AnnulusDomain,
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        grading_exponent: f64,
        nominal_h: f64,
    ) -> Result<Self> {
        for t in triangles.iter_mut() {
            let v = t.map(|i| vertices[i]);
            if triangle_area(&v) < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut edge_count: BTreeMap<(usize, usize), (usize, [usize; 2])> = BTreeMap::new();
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let entry = edge_count.entry(edge_key(a, b)).or_insert((0, [a, b]));
                entry.0 += 1;
            }
        }
        let scale = domain.lambda0() * domain.r1().max(domain.r2());
        let tol = 1e-12 * scale;
        let mut boundary_edges = Vec::new();
        for (count, [a, b]) in edge_count.values() {
            if *count != 1 {
                continue;
            }
            let mid = vertices[*a].midpoint(vertices[*b]);
            match domain.locate_boundary(mid, tol) {
                Some(BoundaryLocation::Segment(tag)) => boundary_edges.push(BoundaryEdge {
                    vertices: [*a, *b],
                    tag,
                }),
                _ => {
                    return Err(Error::MeshAudit {
                        what: "boundary edge off the domain boundary",
                        value: mid.x,
                    })
                }
            }
        }
        let mut corner_vertices = [usize::MAX; 4];
        for (i, c) in domain.corners().iter().enumerate() {
            corner_vertices[i] = vertices
                .iter()
                .position(|p| p == c)
                .ok_or(Error::MeshAudit {
                    what: "corner is not a mesh vertex",
                    value: (i + 1) as f64,
                })?;
        }
        let mut on_outer = alloc::vec![false; vertices.len()];
        for e in &boundary_edges {
            if !e.tag.is_inner() {
                on_outer[e.vertices[0]] = true;
                on_outer[e.vertices[1]] = true;
            }
        }
        let locator = Locator::new(&domain, &vertices, &triangles);
        Ok(Self {
            domain,
            vertices,
            triangles,
            boundary_edges,
            grading_exponent,
            nominal_h,
            corner_vertices,
            on_outer,
            locator,
        })
    }

    pub fn domain(&self) -> &AnnulusDomain {
        &self.domain
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Vertex index of inner corner `Sᵢ`, `i ∈ 1..=4`.
    pub fn corner_vertex(&self, i: usize) -> usize {
        self.corner_vertices[i - 1]
    }

    pub fn is_corner_vertex(&self, v: usize) -> Option<usize> {
        self.corner_vertices.iter().position(|&c| c == v).map(|i| i + 1)
    }

    /// True for vertices on the Dirichlet boundary `Γ̃`.
    pub fn on_outer_boundary(&self, v: usize) -> bool {
        self.on_outer[v]
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let v = self.triangle_points(t);
        v[0].dist(v[1]).max(v[1].dist(v[2])).max(v[2].dist(v[0]))
    }

    /// Largest diameter among triangles touching corner `Sᵢ`.
    pub fn corner_cell_size(&self, i: usize) -> f64 {
        let c = self.corner_vertex(i);
        (0..self.triangles.len())
            .filter(|&t| self.triangles[t].contains(&c))
            .map(|t| self.diameter(t))
            .fold(0.0, f64::max)
    }

    /// Largest diameter among triangles meeting the ball `B(p, r)`, a proxy
    /// for the local mesh size around `p`.
    pub fn local_size(&self, p: Point, r: f64) -> f64 {
        self.locator
            .candidates_near(p, r)
            .filter(|&t| {
                let v = self.triangle_points(t);
                v.iter().any(|q| q.dist(p) <= r) || point_in_triangle(&v, p).is_some()
            })
            .map(|t| self.diameter(t))
            .fold(0.0, f64::max)
    }

    /// Finds the triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        self.locator.locate(p, &self.vertices, &self.triangles)
    }

    /// Uniform red refinement: every triangle is split into four, boundary
    /// edges are bisected and inherit their tags, and parent vertices keep
    /// their indices.
    pub fn refine(&self) -> GradedMesh {
        let mut vertices = self.vertices.clone();
        let mut mids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| {
            *mids.entry(edge_key(a, b)).or_insert_with(|| {
                vertices.push(vertices[a].midpoint(vertices[b]));
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let (ab, bc, ca) = (
                mid(a, b, &mut vertices),
                mid(b, c, &mut vertices),
                mid(c, a, &mut vertices),
            );
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mesh = GradedMesh::from_parts(
            self.domain,
            vertices,
            triangles,
            self.grading_exponent,
            0.5 * self.nominal_h,
        )
        .expect("red refinement of a valid mesh is valid");
        debug_assert_eq!(mesh.boundary_edges.len(), 2 * self.boundary_edges.len());
        mesh
    }

    pub fn audit(&self) -> MeshAudit {
        let mut min_angle = f64::INFINITY;
        let mut max_angle: f64 = 0.0;
        let mut min_area = f64::INFINITY;
        let mut max_diam: f64 = 0.0;
        let mut min_diam = f64::INFINITY;
        let mut total = 0.0;
        let law = SizeLaw::new(&self.domain, self.nominal_h, self.grading_exponent);
        let corners = self.domain.corners();
        let mut grading_ratio: f64 = 0.0;
        for t in 0..self.triangles.len() {
            let v = self.triangle_points(t);
            let area = triangle_area(&v);
            min_area = min_area.min(area);
            total += area.abs();
            let diam = self.diameter(t);
            max_diam = max_diam.max(diam);
            min_diam = min_diam.min(diam);
            for k in 0..3 {
                let (p, q, r) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
                let (u, w) = (q - p, r - p);
                let ang = u.cross(w).abs().atan2(u.dot(w)).to_degrees();
                min_angle = min_angle.min(ang);
                max_angle = max_angle.max(ang);
            }
            let rho = v
                .iter()
                .flat_map(|p| corners.iter().map(move |c| p.dist(*c)))
                .fold(f64::INFINITY, f64::min);
            if rho > 0.0 && diam > core::f64::consts::SQRT_2 * law.h_min * (1.0 + 1e-9) {
                let bound = core::f64::consts::SQRT_2 * law.graded(rho);
                grading_ratio = grading_ratio.max(diam / bound);
            }
        }
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *edge_count.entry(edge_key(t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        let single = edge_count.values().filter(|&&c| c == 1).count();
        let area_ratio = total / self.domain.area();
        let conforming = edge_count.values().all(|&c| c <= 2)
            && single == self.boundary_edges.len()
            && (area_ratio - 1.0).abs() < 1e-10;
        MeshAudit {
            vertices: self.vertices.len(),
            triangles: self.triangles.len(),
            boundary_edges: self.boundary_edges.len(),
            min_angle_deg: min_angle,
            max_angle_deg: max_angle,
            min_area,
            max_diameter: max_diam,
            min_diameter: min_diam,
            area_ratio,
            grading_ratio,
            conforming,
        }
    }

    /// Triangles sharing each edge: for every triangle, the neighbour across
    /// the edge opposite each local vertex (`usize::MAX` on the boundary).
    pub fn triangle_neighbors(&self) -> Vec<[usize; 3]> {
        let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut nb = alloc::vec![[usize::MAX; 3]; self.triangles.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let e = edge_key(tri[(k + 1) % 3], tri[(k + 2) % 3]);
                if let Some(&o) = owner.get(&e) {
                    nb[t][k] = o;
                    let otri = self.triangles[o];
                    for kk in 0..3 {
                        if edge_key(otri[(kk + 1) % 3], otri[(kk + 2) % 3]) == e {
                            nb[o][kk] = t;
                        }
                    }
                } else {
                    owner.insert(e, t);
                }
            }
        }
        nb
    }

    /// Sorted, deduplicated vertex neighbour lists.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = alloc::vec![Vec::new(); self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                adj[t[k]].push(t[(k + 1) % 3]);
                adj[t[k]].push(t[(k + 2) % 3]);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Vertex index lookup by exact coordinates.
    pub fn vertex_index(&self) -> BTreeMap<(u64, u64), usize> {
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, p)| (coord_key(*p), i))
            .collect()
    }

    pub fn find_vertex(index: &BTreeMap<(u64, u64), usize>, p: Point) -> Option<usize> {
        index.get(&coord_key(p)).copied()
    }
}

/// Barycentric coordinates of `p` if it lies in the (closed) triangle up to a
/// small tolerance.
fn point_in_triangle(v: &[Point; 3], p: Point) -> Option<[f64; 3]> {
    let b = barycentric(v, p);
    let tol = -1e-12;
    (b[0] >= tol && b[1] >= tol && b[2] >= tol).then_some(b)
}

pub fn barycentric(v: &[Point; 3], p: Point) -> [f64; 3] {
    let det = (v[1] - v[0]).cross(v[2] - v[0]);
    let l1 = (p - v[0]).cross(v[2] - v[0]) / det;
    let l2 = (v[1] - v[0]).cross(p - v[0]) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Uniform bucket grid for point location.
#[derive(Debug, Clone)]
struct Locator {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    items: Vec<usize>,
}

impl Locator {
    fn new(domain: &AnnulusDomain, vertices: &[Point], triangles: &[[usize; 3]]) -> Self {
        let (wx, wy) = (domain.lambda0() * domain.r1(), domain.lambda0() * domain.r2());
        let n = triangles.len().max(1) as f64;
        let cell = (4.0 * wx * wy / n).sqrt() * 1.5;
        let nx = ((2.0 * wx / cell).ceil() as usize).max(1);
        let ny = ((2.0 * wy / cell).ceil() as usize).max(1);
        let (x0, y0) = (-wx, -wy);
        let clamp_x = |x: f64| (((x - x0) / cell).floor().max(0.0) as usize).min(nx - 1);
        let clamp_y = |y: f64| (((y - y0) / cell).floor().max(0.0) as usize).min(ny - 1);
        let mut counts = alloc::vec![0usize; nx * ny + 1];
        let ranges: Vec<(usize, usize, usize, usize)> = triangles
            .iter()
            .map(|t| {
                let v = t.map(|i| vertices[i]);
                let (xa, xb) = (v[0].x.min(v[1].x).min(v[2].x), v[0].x.max(v[1].x).max(v[2].x));
                let (ya, yb) = (v[0].y.min(v[1].y).min(v[2].y), v[0].y.max(v[1].y).max(v[2].y));
                (clamp_x(xa), clamp_x(xb), clamp_y(ya), clamp_y(yb))
            })
            .collect();
        for &(i0, i1, j0, j1) in &ranges {
            for j in j0..=j1 {
                for i in i0..=i1 {
                    counts[j * nx + i + 1] += 1;
                }
            }
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut items = alloc::vec![0usize; counts[nx * ny]];
        for (t, &(i0, i1, j0, j1)) in ranges.iter().enumerate() {
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let slot = &mut fill[j * nx + i];
                    items[*slot] = t;
                    *slot += 1;
                }
            }
        }
        Self {
            x0,
            y0,
            cell,
            nx,
            ny,
            start: counts,
            items,
        }
    }

    fn bucket(&self, p: Point) -> (usize, usize) {
        let i = (((p.x - self.x0) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let j = (((p.y - self.y0) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    fn bucket_items(&self, i: usize, j: usize) -> &[usize] {
        let k = j * self.nx + i;
        &self.items[self.start[k]..self.start[k + 1]]
    }

    fn candidates_near(&self, p: Point, r: f64) -> impl Iterator<Item = usize> + '_ {
        let (i0, j0) = self.bucket(Point::new(p.x - r, p.y - r));
        let (i1, j1) = self.bucket(Point::new(p.x + r, p.y + r));
        let mut seen: Vec<usize> = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                seen.extend_from_slice(self.bucket_items(i, j));
            }
        }
        seen.sort_unstable();
        seen.dedup();
        seen.into_iter()
    }

    fn locate(&self, p: Point, vertices: &[Point], triangles: &[[usize; 3]]) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.bucket(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in self.bucket_items(i, j) {
            let v = triangles[t].map(|k| vertices[k]);
            let b = barycentric(&v, p);
            let m = b[0].min(b[1]).min(b[2]);
            if m >= 0.0 {
                return Some((t, b));
            }
            if best.is_none_or(|(_, _, bm)| m > bm) {
                best = Some((t, b, m));
            }
        }
        match best {
            Some((t, b, m)) if m >= -1e-9 => {
                // Points a rounding error outside the closure snap back in.
                let c = b.map(|x| x.max(0.0));
                let s = c[0] + c[1] + c[2];
                let _ = m;
                Some((t, c.map(|x| x / s)))
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> AnnulusDomain {
        AnnulusDomain::new(1.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        let d = square();
        assert!(generate_mesh(&d, 0.3, 1.0).is_err());
        assert!(generate_mesh(&d, 0.1, 0.5).is_err());
        assert!(generate_mesh(&d, -0.1, 1.0).is_err());
    }

    #[test]
    fn uniform_mesh_sizes() {
        let m = generate_mesh(&square(), 0.1, 1.0).unwrap();
        let a = m.audit();
        assert!(a.conforming);
        assert!(a.max_diameter <= 2.0 * 0.1 && a.min_diameter >= 0.5 * 0.1, "{a:?}");
        assert!((a.min_angle_deg - 45.0).abs() < 1e-9);
        // 12 units of area in right triangles of area h²/2.
        assert_eq!(m.num_triangles(), 2400);
    }

    #[test]
    fn graded_mesh_audit() {
        let d = square();
        let m = generate_mesh(&d, 0.1, 3.0).unwrap();
        let a = m.audit();
        assert!(a.conforming, "{a:?}");
        assert!(a.min_angle_deg >= MIN_ANGLE_DEG);
        assert!(a.min_area > 0.0);
        assert!(a.grading_ratio <= 1.0 + 1e-9, "{a:?}");
        // Innermost corner cells are of size ~ h³.
        let inner = m.corner_cell_size(1);
        assert!((1e-4..=2e-3).contains(&inner), "{inner}");
    }

    #[test]
    fn red_refinement_counts_and_nesting() {
        let m = generate_mesh(&AnnulusDomain::new(1.0, 0.5, 2.0).unwrap(), 0.1, 2.0).unwrap();
        let r = m.refine();
        assert_eq!(r.num_triangles(), 4 * m.num_triangles());
        assert_eq!(r.boundary_edges.len(), 2 * m.boundary_edges.len());
        assert_eq!(&r.vertices[..m.num_vertices()], &m.vertices[..]);
        assert!(r.audit().conforming);
        for e in &r.boundary_edges {
            let (a, b) = r.domain().segment(e.tag);
            for v in e.vertices {
                assert!(crate::geometry::segment_distance(r.vertices[v], a, b) < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_vertices_lie_on_segments() {
        let m = generate_mesh(&AnnulusDomain::new(1.0, 0.5, 2.0).unwrap(), 0.05, 3.0).unwrap();
        for e in &m.boundary_edges {
            let (a, b) = m.domain().segment(e.tag);
            for v in e.vertices {
                assert!(crate::geometry::segment_distance(m.vertices[v], a, b) < 1e-12);
            }
        }
        let total: f64 = m
            .boundary_edges
            .iter()
            .map(|e| m.vertices[e.vertices[0]].dist(m.vertices[e.vertices[1]]))
            .sum();
        let perimeter = 4.0 * (1.0 + 0.5) * (1.0 + 2.0);
        assert!((total - perimeter).abs() < 1e-10);
    }

    #[test]
    fn mesh_is_mirror_symmetric() {
        let m = generate_mesh(&square(), 0.1, 3.0).unwrap();
        let idx = m.vertex_index();
        for p in &m.vertices {
            for q in [p.mirror_x(), p.mirror_y(), p.swap()] {
                assert!(GradedMesh::find_vertex(&idx, q).is_some(), "{q:?}");
            }
        }
    }

    #[test]
    fn locate_returns_containing_triangle() {
        let m = generate_mesh(&AnnulusDomain::new(1.0, 0.5, 2.0).unwrap(), 0.1, 3.0).unwrap();
        for k in 0..200 {
            let t = k as f64 / 200.0;
            let p = Point::new(-1.9 + 3.8 * t, 0.5 + 0.45 * (13.0 * t).sin().abs());
            let (tri, b) = m.locate(p).expect("inside");
            let v = m.triangle_points(tri);
            let q = crate::quadrature::TriangleRule::map(&b, &v);
            assert!(q.dist(p) < 1e-12);
        }
        assert!(m.locate(Point::new(0.0, 0.0)).is_none());
        assert!(m.locate(Point::new(3.0, 0.0)).is_none());
    }
}
