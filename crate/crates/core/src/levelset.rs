//! Level sets of P1 fields by marching triangles, zero-set topology and the
//! sign structure of `S̃`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Result;
use crate::geometry::{segment_distance, AnnulusDomain, BoundaryLocation, BoundaryTag, Point, Side};
use crate::singular::{arc_points, SingularFunction};
use crate::solver::ScalarField;

/// Where a traced chain ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    /// Within the capture radius of `Sᵢ`.
    Corner(usize),
    InnerSide(Side),
    /// On `Γ̃`; `Some(i)` when within the capture radius of the outer corner.
    Outer(Option<usize>),
    /// An open end away from the boundary.
    Interior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Point>,
    pub closed: bool,
    /// Both ends, `None` for closed loops.
    pub ends: Option<[Endpoint; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    pub level: f64,
    pub polylines: Vec<Polyline>,
    pub capture_radius: f64,
}

/// Vertex sign with ties counted as above the level.
fn above(v: f64, k: f64) -> bool {
    v >= k
}

/// Vertex signs relative to `k`. A vertex of `Γ̃` sitting exactly on the
/// level takes the sign of its interior neighbours, so a field vanishing on
/// `Γ̃` yields curves that end there instead of running along it.
fn vertex_signs(field: &ScalarField, k: f64) -> Vec<bool> {
    let mesh = field.mesh();
    let vals = field.values();
    let neighbors = mesh.vertex_neighbors();
    (0..vals.len())
        .map(|v| {
            if vals[v] != k || !mesh.on_outer_boundary(v) {
                return above(vals[v], k);
            }
            let s: f64 = neighbors[v]
                .iter()
                .filter(|&&n| !mesh.on_outer_boundary(n))
                .map(|&n| vals[n] - k)
                .sum();
            s >= 0.0
        })
        .collect()
}

/// Traces `{field = k}` on the P1 field. Chain ends are classified with a
/// corner capture radius `3h`.
pub fn trace_level(field: &ScalarField, k: f64) -> ContourSet {
    let mesh = field.mesh();
    let vals = field.values();
    let sign = vertex_signs(field, k);
    let mut crossing: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut points: Vec<Point> = Vec::new();
    let mut boundary_point: Vec<bool> = Vec::new();
    let mut adjacency: Vec<Vec<usize>> = Vec::new();
    let boundary_edges: BTreeMap<(usize, usize), ()> = mesh
        .boundary_edges
        .iter()
        .map(|e| ((e.vertices[0].min(e.vertices[1]), e.vertices[0].max(e.vertices[1])), ()))
        .collect();
    let mut node = |a: usize, b: usize, points: &mut Vec<Point>, adjacency: &mut Vec<Vec<usize>>, bp: &mut Vec<bool>| {
        let key = (a.min(b), a.max(b));
        *crossing.entry(key).or_insert_with(|| {
            let (i, j) = key;
            let (vi, vj) = (vals[i], vals[j]);
            let t = if vi == vj { 0.5 } else { ((k - vi) / (vj - vi)).clamp(0.0, 1.0) };
            let (pi, pj) = (mesh.vertices[i], mesh.vertices[j]);
            points.push(pi + (pj - pi) * t);
            adjacency.push(Vec::new());
            bp.push(boundary_edges.contains_key(&key));
            points.len() - 1
        })
    };
    for tri in &mesh.triangles {
        let mut cut = Vec::with_capacity(2);
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            if sign[a] != sign[b] {
                cut.push(node(a, b, &mut points, &mut adjacency, &mut boundary_point));
            }
        }
        if cut.len() == 2 {
            adjacency[cut[0]].push(cut[1]);
            adjacency[cut[1]].push(cut[0]);
        }
    }

    let domain = *mesh.domain();
    let capture_radius = 3.0 * mesh.nominal_h;
    let mut used = alloc::vec![false; points.len()];
    let mut polylines = Vec::new();
    let walk = |start: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut chain = alloc::vec![start];
        used[start] = true;
        let mut prev = usize::MAX;
        let mut cur = start;
        loop {
            let next = adjacency[cur].iter().copied().find(|&n| n != prev && !used[n]);
            match next {
                Some(n) => {
                    used[n] = true;
                    chain.push(n);
                    prev = cur;
                    cur = n;
                }
                None => {
                    let closes = chain.len() > 2 && adjacency[cur].contains(&start);
                    return (chain, closes);
                }
            }
        }
    };
    // Open chains first, from their degree-one ends.
    for s in 0..points.len() {
        if !used[s] && adjacency[s].len() <= 1 {
            let (chain, _) = walk(s, &mut used);
            let pts: Vec<Point> = chain.iter().map(|&i| points[i]).collect();
            let ends = [
                classify_end(&domain, pts[0], boundary_point[chain[0]], capture_radius),
                classify_end(&domain, pts[pts.len() - 1], boundary_point[chain[chain.len() - 1]], capture_radius),
            ];
            polylines.push(Polyline {
                points: pts,
                closed: false,
                ends: Some(ends),
            });
        }
    }
    for s in 0..points.len() {
        if !used[s] {
            let (chain, _) = walk(s, &mut used);
            let mut pts: Vec<Point> = chain.iter().map(|&i| points[i]).collect();
            pts.push(pts[0]);
            polylines.push(Polyline {
                points: pts,
                closed: true,
                ends: None,
            });
        }
    }
    ContourSet {
        level: k,
        polylines,
        capture_radius,
    }
}

fn classify_end(domain: &AnnulusDomain, p: Point, on_boundary: bool, capture: f64) -> Endpoint {
    if let Some(i) = domain.corners().iter().position(|c| c.dist(p) <= capture) {
        return Endpoint::Corner(i + 1);
    }
    if !on_boundary {
        return Endpoint::Interior;
    }
    let tol = 1e-9 * domain.lambda0() * domain.r1().max(domain.r2());
    match domain.locate_boundary(p, tol) {
        Some(BoundaryLocation::Segment(BoundaryTag::Inner(s))) => Endpoint::InnerSide(s),
        Some(BoundaryLocation::InnerCorner(i)) => Endpoint::Corner(i),
        Some(_) => {
            let outer = domain.outer_corners().iter().position(|c| c.dist(p) <= capture);
            Endpoint::Outer(outer.map(|i| i + 1))
        }
        None => Endpoint::Interior,
    }
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn open_chains(&self) -> impl Iterator<Item = &Polyline> {
        self.polylines.iter().filter(|p| !p.closed)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.polylines.iter().flat_map(|p| p.points.iter().copied())
    }

    /// Chains joining `Γ̃` to `Γ̃`.
    pub fn outer_to_outer(&self) -> usize {
        self.open_chains()
            .filter(|p| matches!(p.ends, Some([Endpoint::Outer(_), Endpoint::Outer(_)])))
            .count()
    }

    /// Open chains ending away from the boundary.
    pub fn interior_ends(&self) -> usize {
        self.open_chains()
            .map(|p| p.ends.map_or(0, |e| e.iter().filter(|x| **x == Endpoint::Interior).count()))
            .sum()
    }

    /// 2 or 4 chains, none closed, each with an end at some `Sᵢ`.
    pub fn chain_rule_holds(&self) -> bool {
        let n = self.polylines.len();
        (n == 2 || n == 4)
            && self.polylines.iter().all(|p| {
                p.ends
                    .is_some_and(|e| e.iter().any(|x| matches!(x, Endpoint::Corner(_))))
            })
    }

    /// Largest distance from a traced point to its nearest image under
    /// both mirrors.
    pub fn mirror_residual(&self) -> f64 {
        let pts: Vec<Point> = self.points().collect();
        let nearest = |q: Point| pts.iter().map(|p| p.dist(q)).fold(f64::INFINITY, f64::min);
        pts.iter()
            .map(|p| nearest(p.mirror_x()).max(nearest(p.mirror_y())))
            .fold(0.0, f64::max)
    }
}

/// Zero-set configurations, named by where the chain from `S₁` ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroTopology {
    TwoCurvesS1S2,
    TwoCurvesS1S4,
    FourCurvesToOuter,
    FourCurvesToGamma1,
    FourCurvesToGamma4,
    /// Four chains from `Sᵢ` to the outer corners.
    Diagonals,
    Other,
}

impl ZeroTopology {
    pub fn label(self) -> &'static str {
        match self {
            ZeroTopology::TwoCurvesS1S2 => "TwoCurves_S1S2",
            ZeroTopology::TwoCurvesS1S4 => "TwoCurves_S1S4",
            ZeroTopology::FourCurvesToOuter => "FourCurves_ToOuter",
            ZeroTopology::FourCurvesToGamma1 => "FourCurves_ToGamma1",
            ZeroTopology::FourCurvesToGamma4 => "FourCurves_ToGamma4",
            ZeroTopology::Diagonals => "Diagonals",
            ZeroTopology::Other => "Other",
        }
    }
}

pub fn classify_zero_topology(contours: &ContourSet) -> ZeroTopology {
    if !contours.chain_rule_holds() || contours.outer_to_outer() > 0 || contours.interior_ends() > 0 {
        return ZeroTopology::Other;
    }
    // Pair of ends with the corner first.
    let mut chains: Vec<(usize, Endpoint)> = Vec::new();
    for p in &contours.polylines {
        let [a, b] = p.ends.expect("open chain");
        match (a, b) {
            (Endpoint::Corner(i), other) => chains.push((i, other)),
            (other, Endpoint::Corner(i)) => chains.push((i, other)),
            _ => return ZeroTopology::Other,
        }
    }
    let Some(&(_, second)) = chains.iter().find(|(i, _)| *i == 1) else {
        // With two corner-to-corner chains the S₁ end may be listed second.
        return ZeroTopology::Other;
    };
    let n = chains.len();
    match (n, second) {
        (2, Endpoint::Corner(2)) => ZeroTopology::TwoCurvesS1S2,
        (2, Endpoint::Corner(4)) => ZeroTopology::TwoCurvesS1S4,
        (4, Endpoint::Outer(_)) => {
            let diagonal = chains
                .iter()
                .all(|(i, e)| matches!(e, Endpoint::Outer(Some(j)) if j == i));
            if diagonal {
                ZeroTopology::Diagonals
            } else {
                ZeroTopology::FourCurvesToOuter
            }
        }
        (4, Endpoint::InnerSide(Side::Top)) | (4, Endpoint::InnerSide(Side::Bottom)) => ZeroTopology::FourCurvesToGamma1,
        (4, Endpoint::InnerSide(Side::Right)) | (4, Endpoint::InnerSide(Side::Left)) => ZeroTopology::FourCurvesToGamma4,
        _ => ZeroTopology::Other,
    }
}

/// Max over traced points of the distance to `segments`, and over samples of
/// `segments` of the distance to the traced points, each divided by the
/// local mesh size there.
pub fn relative_hausdorff(contours: &ContourSet, segments: &[(Point, Point)], field: &ScalarField, samples: usize) -> (f64, f64) {
    let mesh = field.mesh();
    let local = |p: Point| mesh.local_size(p, 0.0).max(f64::MIN_POSITIVE);
    let seg_dist = |p: Point| {
        segments
            .iter()
            .map(|(a, b)| segment_distance(p, *a, *b))
            .fold(f64::INFINITY, f64::min)
    };
    let pts: Vec<Point> = contours.points().collect();
    let mut plain = 0.0f64;
    let mut relative = 0.0f64;
    for p in &pts {
        let d = seg_dist(*p);
        plain = plain.max(d);
        relative = relative.max(d / local(*p));
    }
    let chain_dist = |q: Point| {
        contours
            .polylines
            .iter()
            .flat_map(|pl| pl.points.windows(2).map(|w| segment_distance(q, w[0], w[1])))
            .fold(f64::INFINITY, f64::min)
    };
    for (a, b) in segments {
        for j in 0..=samples {
            let q = *a + (*b - *a) * (j as f64 / samples as f64);
            let d = chain_dist(q);
            plain = plain.max(d);
            relative = relative.max(d / local(q));
        }
    }
    (plain, relative)
}

/// A connected set of triangles whose centroid values share a sign.
#[derive(Debug, Clone, PartialEq)]
pub struct SignRegion {
    pub positive: bool,
    pub triangles: usize,
    pub area: f64,
    /// Inner sides with a boundary edge in the region.
    pub touches: Vec<Side>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub regions: Vec<SignRegion>,
    /// `sup S̃` over samples of `Γ₁` at distance `≥ 10h` from the corners.
    pub sup_gamma1: f64,
    /// `inf S̃` over samples of `Γ₂` likewise.
    pub inf_gamma2: f64,
    /// Sides whose samples all carry one sign: `(side, Some(positive))`.
    pub side_signs: Vec<(Side, Option<bool>)>,
    pub samples_per_side: usize,
}

impl RegionReport {
    /// `sup_{Γ₁} S̃ ≤ 0 or inf_{Γ₂} S̃ ≥ 0`.
    pub fn dichotomy_holds(&self) -> bool {
        self.sup_gamma1 <= 0.0 || self.inf_gamma2 >= 0.0
    }
}

/// Flood-fills triangles by the sign of `S̃` at their centroids and samples
/// the inner sides away from the corners.
pub fn sign_regions(stilde: &SingularFunction, samples_per_side: usize) -> Result<RegionReport> {
    let mesh = stilde.mesh();
    let nodal = stilde.nodal().values();
    let sign: Vec<bool> = mesh
        .triangles
        .iter()
        .map(|t| nodal[t[0]] + nodal[t[1]] + nodal[t[2]] >= 0.0)
        .collect();
    let neighbors = mesh.triangle_neighbors();
    let mut edge_side: BTreeMap<(usize, usize), Side> = BTreeMap::new();
    for e in &mesh.boundary_edges {
        if let BoundaryTag::Inner(s) = e.tag {
            let [a, b] = e.vertices;
            edge_side.insert((a.min(b), a.max(b)), s);
        }
    }
    let mut region_of = alloc::vec![usize::MAX; mesh.num_triangles()];
    let mut regions = Vec::new();
    for seed in 0..mesh.num_triangles() {
        if region_of[seed] != usize::MAX {
            continue;
        }
        let id = regions.len();
        let mut region = SignRegion {
            positive: sign[seed],
            triangles: 0,
            area: 0.0,
            touches: Vec::new(),
        };
        let mut stack = alloc::vec![seed];
        region_of[seed] = id;
        while let Some(t) = stack.pop() {
            region.triangles += 1;
            region.area += crate::quadrature::triangle_area(&mesh.triangle_points(t)).abs();
            let tri = mesh.triangles[t];
            for k in 0..3 {
                let n = neighbors[t][k];
                if n == usize::MAX {
                    let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    if let Some(s) = edge_side.get(&(a.min(b), a.max(b))) {
                        if !region.touches.contains(s) {
                            region.touches.push(*s);
                        }
                    }
                } else if region_of[n] == usize::MAX && sign[n] == sign[t] {
                    region_of[n] = id;
                    stack.push(n);
                }
            }
        }
        region.touches.sort();
        regions.push(region);
    }

    let domain = *stilde.domain();
    let margin = 10.0 * mesh.nominal_h;
    let mut side_signs = Vec::new();
    let (mut sup1, mut inf2) = (f64::NEG_INFINITY, f64::INFINITY);
    for side in Side::ALL {
        let (a, b) = domain.segment(BoundaryTag::Inner(side));
        let len = a.dist(b);
        let (mut pos, mut neg) = (0usize, 0usize);
        for j in 0..samples_per_side {
            let s = margin + (len - 2.0 * margin) * (j as f64 + 0.5) / samples_per_side as f64;
            let v = stilde.evaluate(a + (b - a) * (s / len))?;
            if v > 0.0 {
                pos += 1;
            } else if v < 0.0 {
                neg += 1;
            }
            match side {
                Side::Top => sup1 = sup1.max(v),
                Side::Left => inf2 = inf2.min(v),
                _ => {}
            }
        }
        let uniform = if neg == 0 && pos > 0 {
            Some(true)
        } else if pos == 0 && neg > 0 {
            Some(false)
        } else {
            None
        };
        side_signs.push((side, uniform));
    }
    Ok(RegionReport {
        regions,
        sup_gamma1: sup1,
        inf_gamma2: inf2,
        side_signs,
        samples_per_side,
    })
}

/// A connected group of near-critical triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalCluster {
    pub centroid: Point,
    pub triangles: usize,
    pub min_gradient: f64,
    /// Some triangle of the cluster is cut by the zero set.
    pub meets_zero_set: bool,
    /// Distance from the centroid to the nearest inner corner.
    pub corner_distance: f64,
    /// Smallest vertex distance to `Γ̃`. Where `Λ₀` meets `Γ̃` the gradient
    /// vanishes on the boundary, so clusters hug those endpoints.
    pub outer_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalScan {
    pub threshold: f64,
    pub median_gradient: f64,
    pub flagged: usize,
    pub clusters: Vec<CriticalCluster>,
}

/// Relative threshold of the near-critical detector.
pub const CRITICAL_FRACTION: f64 = 0.02;

/// Flags triangles with `|∇u| ≤ 0.02·median|∇u|` and groups them.
pub fn critical_point_scan(field: &ScalarField) -> CriticalScan {
    let mesh = field.mesh();
    let vals = field.values();
    let grads: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| field.triangle_gradient(t).norm())
        .collect();
    let mut sorted = grads.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = if sorted.is_empty() {
        0.0
    } else {
        sorted[sorted.len() / 2]
    };
    // Roundoff floor so exactly flat fields flag everywhere.
    let scale = field.max_abs() / mesh.domain().outer_corners()[0].norm();
    let threshold = CRITICAL_FRACTION * median + 1e-12 * scale;
    let flagged: Vec<bool> = grads.iter().map(|g| *g <= threshold).collect();
    let neighbors = mesh.triangle_neighbors();
    let corners = mesh.domain().corners();
    let [outer_corner, ..] = mesh.domain().outer_corners();
    let (ox, oy) = (outer_corner.x.abs(), outer_corner.y.abs());
    let mut seen = alloc::vec![false; grads.len()];
    let mut clusters = Vec::new();
    for seed in 0..grads.len() {
        if !flagged[seed] || seen[seed] {
            continue;
        }
        seen[seed] = true;
        let mut stack = alloc::vec![seed];
        let (mut n, mut sum, mut min_g, mut meets) = (0usize, Point::default(), f64::INFINITY, false);
        let mut outer = f64::INFINITY;
        while let Some(t) = stack.pop() {
            n += 1;
            let v = mesh.triangle_points(t);
            sum = sum + (v[0] + v[1] + v[2]) * (1.0 / 3.0);
            min_g = min_g.min(grads[t]);
            let tri = mesh.triangles[t];
            let s = tri.map(|i| above(vals[i], 0.0));
            meets |= s[0] != s[1] || s[1] != s[2];
            for &v in &tri {
                let p = mesh.vertices[v];
                outer = outer.min((ox - p.x.abs()).min(oy - p.y.abs()));
            }
            for &m in &neighbors[t] {
                if m != usize::MAX && flagged[m] && !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        let centroid = sum * (1.0 / n as f64);
        clusters.push(CriticalCluster {
            centroid,
            triangles: n,
            min_gradient: min_g,
            meets_zero_set: meets,
            corner_distance: corners.iter().map(|c| c.dist(centroid)).fold(f64::INFINITY, f64::min),
            outer_distance: outer.max(0.0),
        });
    }
    CriticalScan {
        threshold,
        median_gradient: median,
        flagged: flagged.iter().filter(|f| **f).count(),
        clusters,
    }
}

impl CriticalScan {
    /// Clusters on the zero set at least `noise_radius` from the inner
    /// corners and `outer_margin` from `Γ̃`.
    pub fn zero_set_violations(&self, noise_radius: f64, outer_margin: f64) -> Vec<&CriticalCluster> {
        self.clusters
            .iter()
            .filter(|c| c.meets_zero_set && c.corner_distance >= noise_radius && c.outer_distance >= outer_margin)
            .collect()
    }
}

/// Number of sign changes of `S̃ − k` along the arc `ρᵢ = rho`.
pub fn arc_crossings(stilde: &SingularFunction, corner: usize, rho: f64, k: f64, samples: usize) -> Result<usize> {
    let frame = *stilde.frame(corner);
    let mut prev: Option<bool> = None;
    let mut count = 0;
    for (_, p) in arc_points(&frame, rho, samples) {
        let s = above(stilde.evaluate(p)?, k);
        if prev.is_some_and(|q| q != s) {
            count += 1;
        }
        prev = Some(s);
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_mesh;
    use alloc::sync::Arc;

    fn square_field(f: impl Fn(Point) -> f64) -> ScalarField {
        let d = AnnulusDomain::new(1.0, 1.0, 2.0).unwrap();
        ScalarField::interpolate(Arc::new(generate_mesh(&d, 0.1, 3.0).unwrap()), f)
    }

    #[test]
    fn saddle_fixture_gives_diagonals() {
        let f = square_field(|p| p.x * p.x - p.y * p.y);
        let c = trace_level(&f, 0.0);
        assert_eq!(c.polylines.len(), 4);
        assert_eq!(classify_zero_topology(&c), ZeroTopology::Diagonals);
        let diag = [
            (Point::new(1.0, 1.0), Point::new(2.0, 2.0)),
            (Point::new(-1.0, 1.0), Point::new(-2.0, 2.0)),
            (Point::new(-1.0, -1.0), Point::new(-2.0, -2.0)),
            (Point::new(1.0, -1.0), Point::new(2.0, -2.0)),
        ];
        let (plain, _) = relative_hausdorff(&c, &diag, &f, 50);
        assert!(plain < 1e-12);
        assert!(c.mirror_residual() < 1e-12);
    }

    #[test]
    fn level_above_range_is_empty() {
        let f = square_field(|p| p.x * p.x - p.y * p.y);
        assert!(trace_level(&f, 2.0 * f.max_abs() + 1.0).is_empty());
    }

    #[test]
    fn outer_to_outer_chain_is_other() {
        // Zero set is the line y = 1.5, crossing Γ̃ twice and no corner.
        let f = square_field(|p| p.y - 1.5);
        let c = trace_level(&f, 0.0);
        assert_eq!(c.outer_to_outer(), 1);
        assert_eq!(classify_zero_topology(&c), ZeroTopology::Other);
    }

    #[test]
    fn closed_loops_are_traced() {
        let f = square_field(|p| (p.x - 1.5).powi(2) + p.y * p.y);
        let c = trace_level(&f, 0.04);
        assert_eq!(c.polylines.len(), 1);
        assert!(c.polylines[0].closed);
        for p in c.points() {
            assert!(((p.x - 1.5).powi(2) + p.y * p.y).sqrt() - 0.2 < 0.01);
        }
    }

    #[test]
    fn constant_field_is_all_critical() {
        let f = square_field(|_| 1.0);
        let scan = critical_point_scan(&f);
        assert_eq!(scan.flagged, f.mesh().num_triangles());
    }
}
