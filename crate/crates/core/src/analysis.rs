//! Side integrals, the regularity line `{aα₁ + bβ₁ = 0}`, Richardson
//! extrapolation and corner Fourier fits.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{AuxFunction, BoundaryTag, CornerFrame, Point, Side, OMEGA};
use crate::mesh::GradedMesh;
use crate::quadrature::GaussLegendre;
use crate::singular::SingularFunction;
use crate::solver::{solve_neumann_problem, ScalarField};

/// `α₁ = ∫_{Γ₁}S̃` and `β₁ = ∫_{Γ₂}S̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityLine {
    pub alpha1: f64,
    pub beta1: f64,
}

/// Which halves of the dichotomy `α₁ ≤ 0 or β₁ ≥ 0` hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignVerdict {
    pub alpha_nonpositive: bool,
    pub beta_nonnegative: bool,
}

impl SignVerdict {
    pub fn dichotomy_holds(&self) -> bool {
        self.alpha_nonpositive || self.beta_nonnegative
    }
}

impl RegularityLine {
    pub fn from_integrals(alpha1: f64, beta1: f64) -> Self {
        Self { alpha1, beta1 }
    }

    /// Integrates `S̃` over `Γ₁` and `Γ₂`.
    pub fn compute(stilde: &SingularFunction) -> Result<Self> {
        let (alpha1, _) = stilde.side_integral(BoundaryTag::Inner(Side::Top))?;
        let (beta1, _) = stilde.side_integral(BoundaryTag::Inner(Side::Left))?;
        Ok(Self { alpha1, beta1 })
    }

    /// Unit normal `(α₁, β₁)/|(α₁, β₁)|` of the line.
    pub fn normal(&self) -> Point {
        let n = Point::new(self.alpha1, self.beta1);
        n * (1.0 / n.norm())
    }

    /// A direction `(a, b)` along the line.
    pub fn direction(&self) -> Point {
        Point::new(self.beta1, -self.alpha1)
    }

    /// `aα₁ + bβ₁`.
    pub fn functional(&self, a: f64, b: f64) -> f64 {
        a * self.alpha1 + b * self.beta1
    }

    /// Angle in degrees between this line and the line spanned by `(a, b)`.
    pub fn angle_to_deg(&self, a: f64, b: f64) -> f64 {
        let d = self.direction();
        let e = Point::new(a, b);
        d.cross(e).abs().atan2(d.dot(e).abs()).to_degrees()
    }

    pub fn signs(&self) -> SignVerdict {
        SignVerdict {
            alpha_nonpositive: self.alpha1 <= 0.0,
            beta_nonnegative: self.beta1 >= 0.0,
        }
    }

    /// Both integrals below `noise`: no line can be inferred.
    pub fn inconclusive(&self, noise: f64) -> bool {
        self.alpha1.abs() < noise && self.beta1.abs() < noise
    }
}

/// Richardson extrapolation of a sequence on meshes with ratio 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Richardson {
    pub finest: f64,
    /// Observed order, or the assumed one when the differences do not
    /// contract.
    pub order: f64,
    pub order_observed: bool,
    pub extrapolated: f64,
    /// `|extrapolated − finest|`.
    pub error_bar: f64,
}

/// Order assumed when the observed one is unusable.
pub const ASSUMED_ORDER: f64 = 4.0 / 3.0;

pub fn richardson(values: &[f64]) -> Result<Richardson> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidFit("Richardson needs at least two levels"));
    }
    let finest = values[n - 1];
    let (mut order, mut observed) = (ASSUMED_ORDER, false);
    if n >= 3 {
        let (d1, d2) = (values[n - 2] - values[n - 3], finest - values[n - 2]);
        if d1 != 0.0 && d2 != 0.0 && d1.signum() == d2.signum() && d2.abs() < d1.abs() {
            order = (d1 / d2).log2();
            observed = true;
        }
    }
    let correction = (finest - values[n - 2]) / (2f64.powf(order) - 1.0);
    Ok(Richardson {
        finest,
        order,
        order_observed: observed,
        extrapolated: finest + correction,
        error_bar: correction.abs(),
    })
}

/// Angular modes `φ₀ = ω^{-1/2}`, `φₖ = (2/ω)^{1/2} cos(kπθ/ω)`.
pub fn angular_mode(k: usize, theta: f64) -> f64 {
    if k == 0 {
        1.0 / OMEGA.sqrt()
    } else {
        (2.0 / OMEGA).sqrt() * (k as f64 * core::f64::consts::PI / OMEGA * theta).cos()
    }
}

/// Angular quadrature points per arc.
pub const ARC_POINTS: usize = 256;
/// Largest mode index accepted by [`corner_fourier_fit`].
pub const MAX_MODES: usize = 16;
/// Smallest accepted ratio between consecutive fit radii.
pub const MIN_RADIUS_RATIO: f64 = 1.2;

/// Fitted expansion
/// `c₁,₀ ln r + c₂,₀ + Σₖ (c₁,ₖ r^{-kπ/ω} + c₂,ₖ r^{kπ/ω}) φₖ(θ)` at a corner.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerExpansion {
    pub corner: usize,
    pub omega: f64,
    /// `c₁,ₖ` for `k = 0..=K`.
    pub c1: Vec<f64>,
    /// `c₂,ₖ` for `k = 0..=K`.
    pub c2: Vec<f64>,
    pub fit_radii: Vec<f64>,
    /// `wₖ(δⱼ)`, indexed `[j][k]`.
    pub mode_samples: Vec<Vec<f64>>,
    /// Relative `L²` misfit of the reconstruction on the arcs.
    pub residual: f64,
}

impl CornerExpansion {
    fn radial(k: usize, r: f64) -> (f64, f64) {
        if k == 0 {
            (r.ln(), 1.0)
        } else {
            let e = k as f64 * core::f64::consts::PI / OMEGA;
            (r.powf(-e), r.powf(e))
        }
    }

    /// `wₖ(r)` of the fitted model.
    pub fn mode(&self, k: usize, r: f64) -> f64 {
        let (s, t) = Self::radial(k, r);
        self.c1[k] * s + self.c2[k] * t
    }

    pub fn reconstruct(&self, r: f64, theta: f64) -> f64 {
        (0..self.c1.len()).map(|k| self.mode(k, r) * angular_mode(k, theta)).sum()
    }

    pub fn modes(&self) -> usize {
        self.c1.len() - 1
    }

    /// `|c₂,ₖ|δ^{kπ/ω}` at radius `delta`.
    pub fn tail_magnitudes(&self, delta: f64) -> Vec<f64> {
        (0..self.c2.len()).map(|k| self.c2[k].abs() * Self::radial(k, delta).1).collect()
    }
}

/// Samples a field on arcs around a corner and fits the expansion mode by
/// mode, least squares over all radii.
pub fn corner_fourier_fit(
    field: impl Fn(Point) -> Result<f64>,
    frame: &CornerFrame,
    radii: &[f64],
    modes: usize,
) -> Result<CornerExpansion> {
    if radii.len() < 2 {
        return Err(Error::InvalidFit("need at least two radii"));
    }
    if modes > MAX_MODES {
        return Err(Error::InvalidFit("mode cap above 16"));
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    if sorted[0] <= 0.0 || sorted.windows(2).any(|w| w[1] / w[0] < MIN_RADIUS_RATIO) {
        return Err(Error::InvalidFit("radius pair closer than ratio 1.2"));
    }
    let gl = GaussLegendre::new(ARC_POINTS);
    let nodes: Vec<(f64, f64)> = gl.on(0.0, OMEGA).collect();
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(sorted.len());
    let mut mode_samples = Vec::with_capacity(sorted.len());
    for &r in &sorted {
        let vals: Vec<f64> = nodes
            .iter()
            .map(|(th, _)| field(frame.from_polar(r, *th)))
            .collect::<Result<_>>()?;
        let w: Vec<f64> = (0..=modes)
            .map(|k| {
                nodes
                    .iter()
                    .zip(&vals)
                    .map(|((th, wt), v)| wt * v * angular_mode(k, *th))
                    .sum()
            })
            .collect();
        samples.push(vals);
        mode_samples.push(w);
    }
    // Scale radii by their geometric mean so r^{±e} stay comparable.
    let r_ref = (sorted.iter().map(|r| r.ln()).sum::<f64>() / sorted.len() as f64).exp();
    let mut c1 = Vec::with_capacity(modes + 1);
    let mut c2 = Vec::with_capacity(modes + 1);
    for k in 0..=modes {
        let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (j, &r) in sorted.iter().enumerate() {
            let (p, q) = CornerExpansion::radial(k, r / r_ref);
            let y = mode_samples[j][k];
            s11 += p * p;
            s12 += p * q;
            s22 += q * q;
            b1 += p * y;
            b2 += q * y;
        }
        let det = s11 * s22 - s12 * s12;
        if det.abs() <= 1e-14 * s11 * s22 {
            return Err(Error::InvalidFit("singular radial system"));
        }
        let x1 = (b1 * s22 - b2 * s12) / det;
        let x2 = (s11 * b2 - s12 * b1) / det;
        // Undo the scaling.
        if k == 0 {
            c1.push(x1);
            c2.push(x2 - x1 * r_ref.ln());
        } else {
            let (p, q) = CornerExpansion::radial(k, r_ref);
            c1.push(x1 / p);
            c2.push(x2 / q);
        }
    }
    let mut exp = CornerExpansion {
        corner: frame.index,
        omega: OMEGA,
        c1,
        c2,
        fit_radii: sorted.clone(),
        mode_samples,
        residual: 0.0,
    };
    let (mut num, mut den) = (0.0, 0.0);
    for (j, &r) in sorted.iter().enumerate() {
        for ((th, wt), v) in nodes.iter().zip(&samples[j]) {
            let e = v - exp.reconstruct(r, *th);
            num += wt * e * e;
            den += wt * v * v;
        }
    }
    exp.residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(exp)
}

/// Least-squares slope of `ln|y|` against `ln r`.
pub fn log_log_slope(radii: &[f64], values: &[f64]) -> Result<f64> {
    if radii.len() < 4 || radii.len() != values.len() {
        return Err(Error::InvalidFit("need at least four radii"));
    }
    let (lo, hi) = radii
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    if hi / lo < 10.0 * (1.0 - 1e-9) {
        return Err(Error::InvalidFit("radii must span a decade"));
    }
    let floor = 1e-300;
    if values.iter().any(|v| !(v.abs() > floor)) {
        return Err(Error::InvalidFit("mode magnitude below noise floor"));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// `w₁(r)` of a field at each radius.
pub fn leading_mode(field: impl Fn(Point) -> Result<f64>, frame: &CornerFrame, radii: &[f64]) -> Result<Vec<f64>> {
    let gl = GaussLegendre::new(ARC_POINTS);
    radii
        .iter()
        .map(|&r| {
            gl.on(0.0, OMEGA)
                .map(|(th, wt)| field(frame.from_polar(r, th)).map(|v| wt * v * angular_mode(1, th)))
                .sum()
        })
        .collect()
}

/// Slope of `|w₁(r)|` in log-log coordinates.
pub fn exponent_fit(field: impl Fn(Point) -> Result<f64>, frame: &CornerFrame, radii: &[f64]) -> Result<f64> {
    log_log_slope(radii, &leading_mode(field, frame, radii)?)
}

/// Slope of the leading non-smooth mode of `S` (with `ΔS = S̃`), after
/// removing the particular part `(3/4)c₀ρ^{4/3}cos(2θ/3)` forced by the
/// template.
pub fn singular_solution_exponent(s: &ScalarField, c0: f64, frame: &CornerFrame, radii: &[f64]) -> Result<f64> {
    let w1 = leading_mode(|p| s.evaluate(p), frame, radii)?;
    let forced = 0.75 * c0 * (OMEGA / 2.0).sqrt();
    let rest: Vec<f64> = w1
        .iter()
        .zip(radii)
        .map(|(w, r)| w - forced * r.powf(4.0 / 3.0))
        .collect();
    log_log_slope(radii, &rest)
}

/// Geometric radii from `lo` to `hi`.
pub fn geometric_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| lo * (hi / lo).powf(j as f64 / (n - 1).max(1) as f64))
        .collect()
}

/// Default fit radii: six from `0.05` to `0.5` of `min{r₁, r₂}`.
pub fn default_fit_radii(min_half_width: f64) -> Vec<f64> {
    geometric_radii(0.05 * min_half_width, 0.5 * min_half_width, 6)
}

/// The `ρ^{2/3}cos(2θ/3)` coefficient of a flux solution at `S₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaReport {
    pub a: f64,
    pub b: f64,
    pub kappa: f64,
    pub expansion: CornerExpansion,
}

/// Relative arc misfit above which a κ fit is rejected.
pub const KAPPA_RESIDUAL_MAX: f64 = 1e-2;

/// Solves the flux problem and fits `u − f_loc` at `S₁`, where `f_loc` is the
/// linear function carrying the local Neumann data; `κ = c₂,₁`.
pub fn singular_coefficient_of_solution(
    mesh: &Arc<GradedMesh>,
    a: f64,
    b: f64,
    radii: &[f64],
    modes: usize,
    rel_tol: f64,
) -> Result<KappaReport> {
    let u = solve_neumann_problem(mesh, a, b, rel_tol)?.field;
    kappa_of_field(&u, a, b, radii, modes)
}

pub fn kappa_of_field(u: &ScalarField, a: f64, b: f64, radii: &[f64], modes: usize) -> Result<KappaReport> {
    let domain = *u.mesh().domain();
    let f = AuxFunction::new(&domain, a, b);
    let frame = domain.frame(1);
    let expansion = corner_fourier_fit(|p| Ok(u.evaluate(p)? - f.local_linear(1, p)), &frame, radii, modes)?;
    let scale = u.max_abs();
    if scale > 0.0 && expansion.residual > KAPPA_RESIDUAL_MAX {
        return Err(Error::FitResidual {
            residual: expansion.residual,
            threshold: KAPPA_RESIDUAL_MAX,
        });
    }
    Ok(KappaReport {
        a,
        b,
        kappa: expansion.c2[1],
        expansion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AnnulusDomain, PowerMode};

    fn frame() -> CornerFrame {
        AnnulusDomain::new(1.0, 1.0, 2.0).unwrap().frame(1)
    }

    fn polar_field(g: impl Fn(f64, f64) -> f64) -> impl Fn(Point) -> Result<f64> {
        let f = frame();
        move |p| {
            let pol = f.to_polar(p)?;
            Ok(g(pol.rho, pol.theta))
        }
    }

    #[test]
    fn template_is_a_single_singular_mode() {
        let radii = default_fit_radii(1.0);
        let e = corner_fourier_fit(polar_field(|r, t| PowerMode::TEMPLATE.value(r, t)), &frame(), &radii, 4).unwrap();
        let expect = (OMEGA / 2.0).sqrt();
        assert!((e.c1[1] - expect).abs() < 1e-8);
        for k in 0..=4 {
            if k != 1 {
                assert!(e.c1[k].abs() < 1e-8, "c1[{k}] = {}", e.c1[k]);
            }
            assert!(e.c2[k].abs() < 1e-8, "c2[{k}] = {}", e.c2[k]);
        }
        assert!(e.residual < 1e-10);
    }

    #[test]
    fn regular_mode_is_recovered() {
        let radii = default_fit_radii(1.0);
        let e = corner_fourier_fit(polar_field(|r, t| PowerMode::SINGULAR_H1.value(r, t)), &frame(), &radii, 3).unwrap();
        assert!((e.c2[1] - (OMEGA / 2.0).sqrt()).abs() < 1e-8);
        assert!(e.c1.iter().all(|c| c.abs() < 1e-8));
    }

    #[test]
    fn log_and_constant_modes() {
        let radii = default_fit_radii(1.0);
        let e = corner_fourier_fit(polar_field(|r, _| 2.0 * r.ln() - 0.5), &frame(), &radii, 2).unwrap();
        let s = OMEGA.sqrt();
        assert!((e.c1[0] - 2.0 * s).abs() < 1e-8);
        assert!((e.c2[0] + 0.5 * s).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_radii() {
        let f = polar_field(|_, _| 1.0);
        assert!(corner_fourier_fit(&f, &frame(), &[0.1], 2).is_err());
        assert!(corner_fourier_fit(&f, &frame(), &[0.1, 0.11], 2).is_err());
        assert!(corner_fourier_fit(&f, &frame(), &[0.1, 0.2], 17).is_err());
    }

    #[test]
    fn template_exponent() {
        let radii = geometric_radii(0.01, 0.1, 5);
        let s = exponent_fit(polar_field(|r, t| PowerMode::TEMPLATE.value(r, t)), &frame(), &radii).unwrap();
        assert!((s + 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn richardson_recovers_power_law() {
        let v: Vec<f64> = (0..3).map(|l| 2.0 + 0.3 * (0.1 / 2f64.powi(l)).powf(1.5)).collect();
        let r = richardson(&v).unwrap();
        assert!(r.order_observed);
        assert!((r.order - 1.5).abs() < 1e-9);
        assert!((r.extrapolated - 2.0).abs() < 1e-12);
    }

    #[test]
    fn line_geometry() {
        let l = RegularityLine::from_integrals(-1.0, 1.0);
        assert!(l.angle_to_deg(1.0, 1.0) < 1e-12);
        assert!((l.angle_to_deg(1.0, 0.0) - 45.0).abs() < 1e-12);
        assert!(l.signs().dichotomy_holds());
        assert_eq!(l.functional(1.0, 1.0), 0.0);
        assert!(RegularityLine::from_integrals(1e-9, -1e-9).inconclusive(1e-6));
    }
}
