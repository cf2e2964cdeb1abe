//! The subcommands as functions from a configuration to serializable reports.

use std::cell::OnceCell;
use std::sync::Arc;

use serde::Serialize;
use singlab_core::analysis::{
    corner_fourier_fit, exponent_fit, geometric_radii, kappa_of_field, richardson, singular_solution_exponent,
    RegularityLine, Richardson,
};
use singlab_core::geometry::{BoundaryTag, Point, Side};
use singlab_core::levelset::{
    arc_crossings, classify_zero_topology, critical_point_scan, relative_hausdorff, sign_regions, trace_level,
    ContourSet, Endpoint,
};
use singlab_core::mesh::generate_mesh_family;
use singlab_core::singular::{
    arc_monotonicity, build_singular_solution, build_very_weak, coefficient_c, gradient_bound, plateau_scan,
    plateau_threshold,
};
use singlab_core::solver::solve_neumann_problem;
use singlab_core::symmetry::{MeshSymmetry, SwapParity};
use singlab_core::{AnnulusDomain, GradedMesh, ScalarField, SingularFunction};

use crate::config::RunConfig;

/// Relative floor under which a regularity functional counts as zero.
const FUNCTIONAL_FLOOR: f64 = 1e-6;

/// Meshes and singular functions shared by the subcommands of one run.
#[derive(Debug)]
pub struct Lab {
    pub config: RunConfig,
    pub domain: AnnulusDomain,
    pub meshes: Vec<Arc<GradedMesh>>,
    stilde: Vec<OnceCell<SingularFunction>>,
    lines: Vec<OnceCell<(RegularityLine, [f64; 2])>>,
}

impl Lab {
    pub fn new(config: &RunConfig) -> singlab_core::Result<Self> {
        let domain = config.domain()?;
        let meshes: Vec<Arc<GradedMesh>> = generate_mesh_family(
            &domain,
            config.mesh.h,
            config.mesh.grading_exponent,
            config.mesh.refinements,
        )?
        .into_iter()
        .map(Arc::new)
        .collect();
        let n = meshes.len();
        Ok(Self {
            config: config.clone(),
            domain,
            meshes,
            stilde: (0..n).map(|_| OnceCell::new()).collect(),
            lines: (0..n).map(|_| OnceCell::new()).collect(),
        })
    }

    pub fn finest(&self) -> usize {
        self.meshes.len() - 1
    }

    pub fn stilde(&self, level: usize) -> singlab_core::Result<&SingularFunction> {
        if let Some(s) = self.stilde[level].get() {
            return Ok(s);
        }
        let s = build_very_weak(&self.meshes[level], self.config.solver.rel_tol)?;
        Ok(self.stilde[level].get_or_init(|| s))
    }

    /// `(α₁, β₁)` with the quadrature drifts of both side integrals.
    pub fn line(&self, level: usize) -> singlab_core::Result<(RegularityLine, [f64; 2])> {
        if let Some(l) = self.lines[level].get() {
            return Ok(*l);
        }
        let s = self.stilde(level)?;
        let (alpha, da) = s.side_integral(BoundaryTag::Inner(Side::Top))?;
        let (beta, db) = s.side_integral(BoundaryTag::Inner(Side::Left))?;
        let l = (RegularityLine::from_integrals(alpha, beta), [da, db]);
        Ok(*self.lines[level].get_or_init(|| l))
    }

    fn mesh_levels(&self) -> Vec<MeshLevel> {
        self.meshes
            .iter()
            .enumerate()
            .map(|(level, m)| MeshLevel {
                level,
                nominal_h: m.nominal_h,
                vertices: m.num_vertices(),
                triangles: m.num_triangles(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshLevel {
    pub level: usize,
    pub nominal_h: f64,
    pub vertices: usize,
    pub triangles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub finest: f64,
    pub order: f64,
    pub order_observed: bool,
    pub extrapolated: f64,
    pub error_bar: f64,
}

impl From<Richardson> for Extrapolation {
    fn from(r: Richardson) -> Self {
        Self {
            finest: r.finest,
            order: r.order,
            order_observed: r.order_observed,
            extrapolated: r.extrapolated,
            error_bar: r.error_bar,
        }
    }
}

// ---- solve ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeLevel {
    pub mesh_level: usize,
    pub max_abs: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub raw_symmetry_residual: f64,
    /// Coefficient of `ρ^{2/3}cos(2θ/3)` at `S₁`.
    pub kappa: f64,
    pub fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub a: f64,
    pub b: f64,
    pub levels: Vec<ProbeLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub meshes: Vec<MeshLevel>,
    pub probes: Vec<ProbeReport>,
}

pub struct SolveFields {
    pub report: SolveReport,
    /// Finest-level field of each probe.
    pub fields: Vec<ScalarField>,
}

pub fn solve(lab: &Lab) -> singlab_core::Result<SolveFields> {
    let cfg = &lab.config;
    let radii = cfg.fit_radii();
    let mut probes = Vec::new();
    let mut fields = Vec::new();
    for &[a, b] in &cfg.probes {
        let mut levels = Vec::new();
        let mut finest = None;
        for (level, mesh) in lab.meshes.iter().enumerate() {
            let sol = solve_neumann_problem(mesh, a, b, cfg.solver.rel_tol)?;
            let k = kappa_of_field(&sol.field, a, b, &radii, cfg.analysis.mode_cap)?;
            levels.push(ProbeLevel {
                mesh_level: level,
                max_abs: sol.field.max_abs(),
                cg_iterations: sol.cg.iterations,
                cg_residual: sol.cg.residual,
                raw_symmetry_residual: sol.raw_symmetry_residual,
                kappa: k.kappa,
                fit_residual: k.expansion.residual,
            });
            finest = Some(sol.field);
        }
        fields.push(finest.expect("at least one level"));
        probes.push(ProbeReport { a, b, levels });
    }
    Ok(SolveFields {
        report: SolveReport {
            meshes: lab.mesh_levels(),
            probes,
        },
        fields,
    })
}

// ---- singular ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularLevel {
    pub mesh_level: usize,
    pub nominal_h: f64,
    pub c0: f64,
    pub l2_norm: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    /// Largest mirror violation before projection.
    pub raw_symmetry_residual: f64,
    /// Mirror violations after projection.
    pub symmetry_residual: [f64; 3],
    /// `max|S̃(x,y) + S̃(y,x)|` over the nodes, squares only.
    pub swap_antisymmetry: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularReport {
    pub meshes: Vec<MeshLevel>,
    pub levels: Vec<SingularLevel>,
}

pub fn singular(lab: &Lab) -> singlab_core::Result<SingularReport> {
    let mut levels = Vec::new();
    for level in 0..lab.meshes.len() {
        let s = lab.stilde(level)?;
        let sym = MeshSymmetry::new(s.mesh())?;
        let r = sym.residual(s.nodal().values(), s.parity());
        let swap = if lab.domain.is_square() {
            sym.residual(s.nodal().values(), SwapParity::Odd).swap
        } else {
            None
        };
        levels.push(SingularLevel {
            mesh_level: level,
            nominal_h: s.mesh().nominal_h,
            c0: s.c0(),
            l2_norm: s.l2_norm(),
            cg_iterations: s.cg.iterations,
            cg_residual: s.cg.residual,
            raw_symmetry_residual: s.raw_symmetry_residual.max(),
            symmetry_residual: [r.mirror_x, r.mirror_y, r.point],
            swap_antisymmetry: swap,
        });
    }
    Ok(SingularReport {
        meshes: lab.mesh_levels(),
        levels,
    })
}

// ---- regline ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineLevel {
    pub mesh_level: usize,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha1_drift: f64,
    pub beta1_drift: f64,
    /// Unit `(a, b)` on the line computed at this level.
    pub direction: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub mesh_level: usize,
    pub a: f64,
    pub b: f64,
    /// `2aα₁ + 2bβ₁`.
    pub sides: f64,
    /// `∫_Ω S̃Δf`.
    pub volume: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnLineKappa {
    pub mesh_level: usize,
    pub a: f64,
    pub b: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReglineReport {
    pub levels: Vec<LineLevel>,
    pub alpha1: Extrapolation,
    pub beta1: Extrapolation,
    /// Line `{aα₁ + bβ₁ = 0}` from the extrapolated values, as a unit
    /// direction `(β₁, −α₁)`.
    pub direction: [f64; 2],
    pub alpha_nonpositive: bool,
    pub beta_nonnegative: bool,
    pub dichotomy: bool,
    /// Both integrals lie within their error bars of zero.
    pub inconclusive: bool,
    /// Square only: `|α₁ + β₁|/|α₁|` and the angle to `{a = b}` in degrees.
    pub square: Option<SquareLine>,
    pub identity: Vec<IdentityRow>,
    /// `κ` at each level for `(a, b)` on the line of that level.
    pub on_line: Vec<OnLineKappa>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquareLine {
    pub mesh_level: usize,
    pub relative_sum: f64,
    pub angle_deg: f64,
}

pub fn regline(lab: &Lab) -> singlab_core::Result<ReglineReport> {
    let cfg = &lab.config;
    let mut levels = Vec::new();
    for level in 0..lab.meshes.len() {
        let (l, [da, db]) = lab.line(level)?;
        let d = l.direction();
        levels.push(LineLevel {
            mesh_level: level,
            alpha1: l.alpha1,
            beta1: l.beta1,
            alpha1_drift: da,
            beta1_drift: db,
            direction: [d.x, d.y],
        });
    }
    let alpha = richardson(&levels.iter().map(|l| l.alpha1).collect::<Vec<_>>());
    let beta = richardson(&levels.iter().map(|l| l.beta1).collect::<Vec<_>>());
    let finest = lab.finest();
    let (lf, [da, db]) = lab.line(finest)?;
    // A single level has no extrapolation; its bar is the quadrature drift.
    let single = |v: f64, drift: f64| Richardson {
        finest: v,
        order: 0.0,
        order_observed: false,
        extrapolated: v,
        error_bar: drift * v.abs(),
    };
    let alpha = alpha.unwrap_or_else(|_| single(lf.alpha1, da));
    let beta = beta.unwrap_or_else(|_| single(lf.beta1, db));
    let ext = RegularityLine::from_integrals(alpha.extrapolated, beta.extrapolated);
    let dir = ext.direction();
    let signs = lf.signs();
    let noise = alpha.error_bar.max(beta.error_bar);
    let square = lab.domain.is_square().then(|| SquareLine {
        mesh_level: finest,
        relative_sum: (lf.alpha1 + lf.beta1).abs() / lf.alpha1.abs(),
        angle_deg: lf.angle_to_deg(1.0, 1.0),
    });

    let s = lab.stilde(finest)?;
    let mut identity = Vec::new();
    for &[a, b] in &cfg.probes {
        let c = coefficient_c(s, lf.alpha1, lf.beta1, a, b)?;
        identity.push(IdentityRow {
            mesh_level: finest,
            a,
            b,
            sides: -c.c_sides,
            volume: -c.c_volume,
            discrepancy: c.discrepancy,
        });
    }

    let radii = cfg.fit_radii();
    let mut on_line = Vec::new();
    for (level, mesh) in lab.meshes.iter().enumerate() {
        let [a, b] = levels[level].direction;
        let u = solve_neumann_problem(mesh, a, b, cfg.solver.rel_tol)?.field;
        let k = kappa_of_field(&u, a, b, &radii, cfg.analysis.mode_cap)?;
        on_line.push(OnLineKappa {
            mesh_level: level,
            a,
            b,
            kappa: k.kappa,
        });
    }

    Ok(ReglineReport {
        levels,
        alpha1: alpha.into(),
        beta1: beta.into(),
        direction: [dir.x, dir.y],
        alpha_nonpositive: signs.alpha_nonpositive,
        beta_nonnegative: signs.beta_nonnegative,
        dichotomy: signs.dichotomy_holds(),
        inconclusive: lf.inconclusive(noise),
        square,
        identity,
        on_line,
    })
}

// ---- cornerfit ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerFitRow {
    pub corner: usize,
    /// Log-log slope of the leading mode of `S̃` on the fit radii.
    pub stilde_slope: f64,
    /// The same on [`EXPONENT_WINDOW`], where the regular part of the mode
    /// is negligible.
    pub stilde_slope_asymptotic: f64,
    /// `|c₁,ₖ|/|c₁,₁|` for `k = 2, 3`.
    pub mode_ratios: [f64; 2],
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub fit_residual: f64,
    /// Slope of the first mode of `S` after removing its forced part.
    pub singular_solution_slope: f64,
    pub gradient: GradientRow,
    /// Smallest scanned `M` whose `U^M` keeps the template sign.
    pub plateau_m: Option<f64>,
    pub arcs: Vec<ArcRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientRow {
    pub rho_min: f64,
    pub rho_max: f64,
    pub min_gradient: f64,
    pub fitted_c: f64,
    /// Smallest `|∇S̃|/((2/3)c₀ρ^{-5/3})`.
    pub min_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcRow {
    pub rho: f64,
    pub samples: usize,
    /// Samples outside `U^M`.
    pub kept: usize,
    pub strictly_decreasing: bool,
    pub worst_step: f64,
    /// Monotonicity over all samples of the arc, which implies it outside
    /// `U^M` for every `M`.
    pub full_arc_decreasing: bool,
    pub full_arc_worst_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerfitReport {
    pub mesh_level: usize,
    pub fit_radii: Vec<f64>,
    pub corners: Vec<CornerFitRow>,
    pub s_cg_iterations: usize,
}

/// Window `[lo, hi]·min{r₁, r₂}` of the asymptotic exponent fit.
pub const EXPONENT_WINDOW: [f64; 2] = [0.005, 0.05];

pub fn exponent_radii(min_half_width: f64) -> Vec<f64> {
    geometric_radii(EXPONENT_WINDOW[0] * min_half_width, EXPONENT_WINDOW[1] * min_half_width, 6)
}

/// `M` values of the plateau scan.
pub const PLATEAU_MS: [f64; 9] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
/// Arc radii of the monotonicity check, as fractions of `min{r₁, r₂}`.
pub const ARC_FRACTIONS: [f64; 3] = [0.02, 0.05, 0.1];
pub const ARC_SAMPLES: usize = 64;
/// Noise radius in units of the local mesh size at the corner.
pub const NOISE_CELLS: f64 = 10.0;

pub fn cornerfit(lab: &Lab) -> singlab_core::Result<CornerfitReport> {
    let cfg = &lab.config;
    let level = lab.finest();
    let s = lab.stilde(level)?;
    let (big_s, cg) = build_singular_solution(s, cfg.solver.rel_tol)?;
    let radii = cfg.fit_radii();
    let m = lab.domain.min_half_width();
    let mut corners = Vec::new();
    for i in 1..=4 {
        let frame = *s.frame(i);
        let field = |p: Point| s.evaluate(p);
        let slope = exponent_fit(field, &frame, &radii)?;
        let asymptotic = exponent_fit(field, &frame, &exponent_radii(m))?;
        let fit = corner_fourier_fit(field, &frame, &radii, cfg.analysis.mode_cap)?;
        let ratios = [fit.c1[2].abs() / fit.c1[1].abs(), fit.c1[3].abs() / fit.c1[1].abs()];
        let s_slope = singular_solution_exponent(&big_s, s.c0(), &frame, &radii)?;
        let noise = NOISE_CELLS * s.mesh().corner_cell_size(i);
        let g = gradient_bound(s, i, &geometric_radii(noise.max(1e-3 * m), 0.1 * m, 8), ARC_SAMPLES)?;
        let rows = plateau_scan(s, i, &PLATEAU_MS, noise)?;
        let plateau_m = plateau_threshold(&rows);
        let mut arcs = Vec::new();
        for f in ARC_FRACTIONS {
            let a = arc_monotonicity(s, i, f * m, plateau_m.unwrap_or(f64::INFINITY), ARC_SAMPLES)?;
            let full = arc_monotonicity(s, i, f * m, f64::INFINITY, ARC_SAMPLES)?;
            arcs.push(ArcRow {
                rho: a.rho,
                samples: a.samples,
                kept: a.kept,
                strictly_decreasing: a.strictly_decreasing,
                worst_step: a.worst_step,
                full_arc_decreasing: full.strictly_decreasing,
                full_arc_worst_step: full.worst_step,
            });
        }
        corners.push(CornerFitRow {
            corner: i,
            stilde_slope: slope,
            stilde_slope_asymptotic: asymptotic,
            mode_ratios: ratios,
            c1: fit.c1.clone(),
            c2: fit.c2.clone(),
            fit_residual: fit.residual,
            singular_solution_slope: s_slope,
            gradient: GradientRow {
                rho_min: g.rho_min,
                rho_max: g.rho_max,
                min_gradient: g.min_gradient,
                fitted_c: g.fitted_c,
                min_ratio: g.min_ratio,
            },
            plateau_m,
            arcs,
        });
    }
    Ok(CornerfitReport {
        mesh_level: level,
        fit_radii: radii,
        corners,
        s_cg_iterations: cg.iterations,
    })
}

// ---- levelset ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRow {
    pub closed: bool,
    pub ends: Option<[String; 2]>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRow {
    pub positive: bool,
    pub triangles: usize,
    pub area: f64,
    pub touches: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalRow {
    pub threshold: f64,
    pub median_gradient: f64,
    pub flagged: usize,
    pub clusters: usize,
    /// Clusters on the zero set outside the corner-noise layer and the
    /// capture layer along `Γ̃`.
    pub zero_set_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcCrossingRow {
    pub corner: usize,
    pub rho: f64,
    pub level: f64,
    pub crossings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelsetReport {
    pub mesh_level: usize,
    pub level: f64,
    pub topology: String,
    pub chains: Vec<ChainRow>,
    pub chain_rule: bool,
    pub outer_to_outer: usize,
    pub interior_ends: usize,
    pub capture_radius: f64,
    pub mirror_residual: f64,
    /// Square at `k = 0`: distance to the diagonals, absolute and in units
    /// of the local element size.
    pub diagonal_hausdorff: Option<[f64; 2]>,
    pub regions: Vec<RegionRow>,
    pub sup_gamma1: f64,
    pub inf_gamma2: f64,
    pub sign_dichotomy: bool,
    pub side_signs: Vec<(String, Option<String>)>,
    pub critical: CriticalRow,
    pub arc_crossings: Vec<ArcCrossingRow>,
}

pub struct LevelsetOutput {
    pub report: LevelsetReport,
    pub contours: ContourSet,
}

fn endpoint_label(e: Endpoint) -> String {
    match e {
        Endpoint::Corner(i) => format!("S{i}"),
        Endpoint::InnerSide(s) => BoundaryTag::Inner(s).label().to_string(),
        Endpoint::Outer(Some(i)) => format!("outer_corner{i}"),
        Endpoint::Outer(None) => "outer".to_string(),
        Endpoint::Interior => "interior".to_string(),
    }
}

/// Boundary samples per inner side for the sign verdict.
pub const SIDE_SAMPLES: usize = 200;
/// Levels `k/‖S̃‖` of the single-crossing check on small arcs.
pub const ARC_LEVELS: [f64; 3] = [-0.5, 0.0, 0.5];

pub fn levelset(lab: &Lab, k: f64) -> singlab_core::Result<LevelsetOutput> {
    let level = lab.finest();
    let s = lab.stilde(level)?;
    let c = trace_level(s.nodal(), k);
    let h = s.mesh().nominal_h;
    let chains = c
        .polylines
        .iter()
        .map(|p| ChainRow {
            closed: p.closed,
            ends: p.ends.map(|[a, b]| [endpoint_label(a), endpoint_label(b)]),
            points: p.points.len(),
        })
        .collect();
    let diagonal_hausdorff = (lab.domain.is_square() && k == 0.0).then(|| {
        let segs: Vec<(Point, Point)> = lab.domain.corners().into_iter().zip(lab.domain.outer_corners()).collect();
        let (plain, rel) = relative_hausdorff(&c, &segs, s.nodal(), 200);
        [plain, rel]
    });
    let regions = sign_regions(s, SIDE_SAMPLES)?;
    let scan = critical_point_scan(s.nodal());
    let m = lab.domain.min_half_width();
    let mut arcs = Vec::new();
    for i in 1..=4 {
        for f in ARC_FRACTIONS {
            for kk in ARC_LEVELS {
                let kk = kk * s.l2_norm();
                arcs.push(ArcCrossingRow {
                    corner: i,
                    rho: f * m,
                    level: kk,
                    crossings: arc_crossings(s, i, f * m, kk, 400)?,
                });
            }
        }
    }
    let report = LevelsetReport {
        mesh_level: level,
        level: k,
        topology: classify_zero_topology(&c).label().to_string(),
        chains,
        chain_rule: c.chain_rule_holds(),
        outer_to_outer: c.outer_to_outer(),
        interior_ends: c.interior_ends(),
        capture_radius: c.capture_radius,
        mirror_residual: c.mirror_residual(),
        diagonal_hausdorff,
        regions: regions
            .regions
            .iter()
            .map(|r| RegionRow {
                positive: r.positive,
                triangles: r.triangles,
                area: r.area,
                touches: r.touches.iter().map(|s| BoundaryTag::Inner(*s).label().to_string()).collect(),
            })
            .collect(),
        sup_gamma1: regions.sup_gamma1,
        inf_gamma2: regions.inf_gamma2,
        sign_dichotomy: regions.dichotomy_holds(),
        side_signs: regions
            .side_signs
            .iter()
            .map(|(side, sign)| {
                let sign = sign.map(|p| if p { "positive" } else { "negative" }.to_string());
                (BoundaryTag::Inner(*side).label().to_string(), sign)
            })
            .collect(),
        critical: CriticalRow {
            threshold: scan.threshold,
            median_gradient: scan.median_gradient,
            flagged: scan.flagged,
            clusters: scan.clusters.len(),
            zero_set_violations: scan.zero_set_violations(NOISE_CELLS * h, c.capture_radius).len(),
        },
        arc_crossings: arcs,
    };
    Ok(LevelsetOutput { report, contours: c })
}

// ---- report ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullReport {
    pub config: RunConfig,
    pub solve: SolveReport,
    pub singular: SingularReport,
    pub regline: ReglineReport,
    pub cornerfit: CornerfitReport,
    pub levelset: LevelsetReport,
}

pub struct FullOutput {
    pub report: FullReport,
    pub solve_fields: Vec<ScalarField>,
    pub contours: ContourSet,
}

pub fn report(lab: &Lab) -> singlab_core::Result<FullOutput> {
    let solve = solve(lab)?;
    let singular = singular(lab)?;
    let regline = regline(lab)?;
    let cornerfit = cornerfit(lab)?;
    let ls = levelset(lab, lab.config.analysis.level)?;
    Ok(FullOutput {
        report: FullReport {
            config: lab.config.clone(),
            solve: solve.report,
            singular,
            regline,
            cornerfit,
            levelset: ls.report,
        },
        solve_fields: solve.fields,
        contours: ls.contours,
    })
}

/// `κ/(aα₁ + bβ₁)` for the probes whose functional is not negligible.
pub fn kappa_ratios(solve: &SolveReport, line: &LineLevel) -> Vec<f64> {
    let l = RegularityLine::from_integrals(line.alpha1, line.beta1);
    let scale = line.alpha1.abs().max(line.beta1.abs());
    solve
        .probes
        .iter()
        .filter_map(|p| {
            let f = l.functional(p.a, p.b);
            let k = p.levels.get(line.mesh_level)?.kappa;
            (f.abs() > FUNCTIONAL_FLOOR * scale * (p.a.abs() + p.b.abs())).then(|| k / f)
        })
        .collect()
}
