//! The annulus `Ω = λ₀R₁ ∖ R̄₁`, its boundary decomposition, corner frames
//! and cutoff functions.
//!
//! Corner and side labels follow the figure convention: `S₁ = (r₁, r₂)` is the
//! top-right inner corner and the labels run counterclockwise, `Γ₁` is the top
//! inner side, `Γ₂` the left one, `Γ₃` the bottom and `Γ₄` the right one. The
//! outer sides `Γ̃ᵢ` and corners `S̃ᵢ` are labelled the same way.

use core::f64::consts::{FRAC_PI_2, PI};
use core::ops::{Add, Mul, Neg, Sub};


#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Opening angle of every reentrant corner of the annulus.
pub const OMEGA: f64 = 1.5 * PI;

/// Leading singular exponent `π/ω` at a `3π/2` corner.
pub const SINGULAR_EXPONENT: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new((self.x + other.x) * 0.5, (self.y + other.y) * 0.5)
    }

    pub fn mirror_x(self) -> Point {
        Point::new(-self.x, self.y)
    }

    pub fn mirror_y(self) -> Point {
        Point::new(self.x, -self.y)
    }

    pub fn swap(self) -> Point {
        Point::new(self.y, self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// One of the four sides of a rectangle, counterclockwise from the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Top,
    Left,
    Bottom,
    Right,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Top, Side::Left, Side::Bottom, Side::Right];

    /// 1-based label: `Γ₁` is the top side, `Γ₄` the right one.
    pub fn index(self) -> usize {
        match self {
            Side::Top => 1,
            Side::Left => 2,
            Side::Bottom => 3,
            Side::Right => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Side> {
        match i {
            1 => Some(Side::Top),
            2 => Some(Side::Left),
            3 => Some(Side::Bottom),
            4 => Some(Side::Right),
            _ => None,
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Side::Top | Side::Bottom)
    }
}

/// Tag of a boundary segment: an inner side `Γᵢ` (Neumann) or an outer side
/// `Γ̃ᵢ` (Dirichlet).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    Inner(Side),
    Outer(Side),
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 8] = [
        BoundaryTag::Inner(Side::Top),
        BoundaryTag::Inner(Side::Left),
        BoundaryTag::Inner(Side::Bottom),
        BoundaryTag::Inner(Side::Right),
        BoundaryTag::Outer(Side::Top),
        BoundaryTag::Outer(Side::Left),
        BoundaryTag::Outer(Side::Bottom),
        BoundaryTag::Outer(Side::Right),
    ];

    pub fn side(self) -> Side {
        match self {
            BoundaryTag::Inner(s) | BoundaryTag::Outer(s) => s,
        }
    }

    pub fn is_inner(self) -> bool {
        matches!(self, BoundaryTag::Inner(_))
    }

    /// Outer unit normal of `Ω` on this segment.
    pub fn outward_normal(self) -> Point {
        // On the inner rectangle the normal of Ω points into the hole.
        let n = match self.side() {
            Side::Top => Point::new(0.0, 1.0),
            Side::Left => Point::new(-1.0, 0.0),
            Side::Bottom => Point::new(0.0, -1.0),
            Side::Right => Point::new(1.0, 0.0),
        };
        if self.is_inner() {
            -n
        } else {
            n
        }
    }

    /// Short ASCII label used in exported files: `G1`..`G4`, `GT1`..`GT4`.
    pub fn label(self) -> &'static str {
        match self {
            BoundaryTag::Inner(Side::Top) => "G1",
            BoundaryTag::Inner(Side::Left) => "G2",
            BoundaryTag::Inner(Side::Bottom) => "G3",
            BoundaryTag::Inner(Side::Right) => "G4",
            BoundaryTag::Outer(Side::Top) => "GT1",
            BoundaryTag::Outer(Side::Left) => "GT2",
            BoundaryTag::Outer(Side::Bottom) => "GT3",
            BoundaryTag::Outer(Side::Right) => "GT4",
        }
    }

    pub fn from_label(s: &str) -> Option<BoundaryTag> {
        BoundaryTag::ALL.into_iter().find(|t| t.label() == s)
    }
}

/// Where a point of `∂Ω` sits in the boundary partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryLocation {
    InnerCorner(usize),
    OuterCorner(usize),
    Segment(BoundaryTag),
}

/// The rectangular annulus `λ₀R₁ ∖ R̄₁` with `R₁ = (−r₁, r₁) × (−r₂, r₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusDomain {
    r1: f64,
    r2: f64,
    lambda0: f64,
}

impl AnnulusDomain {
    pub fn new(r1: f64, r2: f64, lambda0: f64) -> Result<Self> {
        if !(r1.is_finite() && r2.is_finite() && lambda0.is_finite()) {
            return Err(Error::InvalidDomain("parameters must be finite"));
        }
        if r1 <= 0.0 || r2 <= 0.0 {
            return Err(Error::InvalidDomain("half-widths must be positive"));
        }
        if lambda0 <= 1.0 {
            return Err(Error::InvalidDomain("lambda0 must exceed 1"));
        }
        Ok(Self { r1, r2, lambda0 })
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// `min{r₁, r₂}`, the length scale of every corner neighbourhood.
    pub fn min_half_width(&self) -> f64 {
        self.r1.min(self.r2)
    }

    pub fn is_square(&self) -> bool {
        self.r1 == self.r2
    }

    /// Radius of the largest ball around an inner corner whose intersection
    /// with `Ω` is the full `3π/2` sector.
    pub fn corner_reach(&self) -> f64 {
        self.min_half_width() * (self.lambda0 - 1.0).min(1.0)
    }

    /// Inner corners `S₁..S₄` (top-right, top-left, bottom-left, bottom-right).
    pub fn corners(&self) -> [Point; 4] {
        let (a, b) = (self.r1, self.r2);
        [
            Point::new(a, b),
            Point::new(-a, b),
            Point::new(-a, -b),
            Point::new(a, -b),
        ]
    }

    pub fn corner(&self, i: usize) -> Point {
        self.corners()[i - 1]
    }

    pub fn outer_corners(&self) -> [Point; 4] {
        let (a, b) = (self.lambda0 * self.r1, self.lambda0 * self.r2);
        [
            Point::new(a, b),
            Point::new(-a, b),
            Point::new(-a, -b),
            Point::new(a, -b),
        ]
    }

    /// Endpoints of a boundary segment, oriented counterclockwise around the
    /// rectangle it belongs to.
    pub fn segment(&self, tag: BoundaryTag) -> (Point, Point) {
        let c = match tag {
            BoundaryTag::Inner(_) => self.corners(),
            BoundaryTag::Outer(_) => self.outer_corners(),
        };
        match tag.side() {
            Side::Top => (c[0], c[1]),
            Side::Left => (c[1], c[2]),
            Side::Bottom => (c[2], c[3]),
            Side::Right => (c[3], c[0]),
        }
    }

    /// Inner corners at the ends of an inner side, as 1-based indices in
    /// segment order.
    pub fn side_corners(side: Side) -> (usize, usize) {
        match side {
            Side::Top => (1, 2),
            Side::Left => (2, 3),
            Side::Bottom => (3, 4),
            Side::Right => (4, 1),
        }
    }

    /// Membership in the open set `Ω`.
    pub fn contains(&self, p: Point) -> bool {
        let (ax, ay) = (p.x.abs(), p.y.abs());
        let outer = ax < self.lambda0 * self.r1 && ay < self.lambda0 * self.r2;
        let in_hole_closure = ax <= self.r1 && ay <= self.r2;
        outer && !in_hole_closure
    }

    /// Membership in the closure `Ω̄`.
    pub fn contains_closed(&self, p: Point) -> bool {
        let (ax, ay) = (p.x.abs(), p.y.abs());
        let outer = ax <= self.lambda0 * self.r1 && ay <= self.lambda0 * self.r2;
        let in_hole = ax < self.r1 && ay < self.r2;
        outer && !in_hole
    }

    /// Classifies a point of `∂Ω` (within `tol`) into the boundary partition.
    pub fn locate_boundary(&self, p: Point, tol: f64) -> Option<BoundaryLocation> {
        for (i, c) in self.corners().iter().enumerate() {
            if p.dist(*c) <= tol {
                return Some(BoundaryLocation::InnerCorner(i + 1));
            }
        }
        for (i, c) in self.outer_corners().iter().enumerate() {
            if p.dist(*c) <= tol {
                return Some(BoundaryLocation::OuterCorner(i + 1));
            }
        }
        BoundaryTag::ALL
            .into_iter()
            .find(|&tag| {
                let (a, b) = self.segment(tag);
                segment_distance(p, a, b) <= tol
            })
            .map(BoundaryLocation::Segment)
    }

    pub fn frame(&self, i: usize) -> CornerFrame {
        CornerFrame::new(self, i)
    }

    pub fn frames(&self) -> [CornerFrame; 4] {
        [self.frame(1), self.frame(2), self.frame(3), self.frame(4)]
    }

    /// Polar coordinates of `p` around corner `Sᵢ`.
    pub fn corner_polar(&self, i: usize, p: Point) -> Result<Polar> {
        self.frame(i).to_polar(p)
    }

    /// Corner cutoff `ηᵢ`: 1 within `0.35·reach`, 0 beyond `0.7·reach`.
    pub fn corner_cutoff(&self, i: usize) -> Cutoff {
        let reach = self.corner_reach();
        Cutoff::new(
            CutoffCenter::Point(self.corner(i)),
            0.35 * reach,
            0.7 * reach,
        )
    }

    /// Side cutoff `ψᵢ`: 1 within a band around `Γ̄ᵢ`, 0 well before `Γ̃`.
    pub fn side_cutoff(&self, side: Side) -> Cutoff {
        let band = (self.lambda0 - 1.0).min(1.0) * self.min_half_width();
        let (a, b) = self.segment(BoundaryTag::Inner(side));
        Cutoff::new(CutoffCenter::Segment(a, b), 0.25 * band, 0.5 * band)
    }

    pub fn area(&self) -> f64 {
        4.0 * self.r1 * self.r2 * (self.lambda0 * self.lambda0 - 1.0)
    }
}

pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Polar coordinates around an inner corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polar {
    pub rho: f64,
    /// Angle in `[0, 3π/2]` for points of the sector; outside the sector the
    /// raw angle in `[−π/4, 7π/4)` is kept.
    pub theta: f64,
    /// False when the direction points into the hole `R₁`.
    pub in_sector: bool,
}

/// Polar frame at an inner corner `Sᵢ`.
///
/// `θᵢ = 0` on the vertical incident side and `θᵢ = 3π/2` on the horizontal
/// one. The frame is counterclockwise for `i = 1, 3` and clockwise for
/// `i = 2, 4`, so the template `ρ^{-2/3}cos(2θ/3)` is positive along the
/// vertical sides for every corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerFrame {
    pub index: usize,
    pub origin: Point,
    /// Polar angle (in the plane) of the direction `θ = 0`.
    start: f64,
    /// `+1` counterclockwise, `−1` clockwise.
    orientation: f64,
}

impl CornerFrame {
    fn new(domain: &AnnulusDomain, i: usize) -> Self {
        assert!((1..=4).contains(&i), "corner index must be 1..=4");
        let (start, orientation) = match i {
            1 => (-FRAC_PI_2, 1.0),
            2 => (-FRAC_PI_2, -1.0),
            3 => (FRAC_PI_2, 1.0),
            _ => (FRAC_PI_2, -1.0),
        };
        Self {
            index: i,
            origin: domain.corner(i),
            start,
            orientation,
        }
    }

    pub fn opening(&self) -> f64 {
        OMEGA
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn to_polar(&self, p: Point) -> Result<Polar> {
        let d = p - self.origin;
        let rho = d.norm();
        if rho == 0.0 {
            return Err(Error::AtCorner(self.index));
        }
        let phi = d.y.atan2(d.x);
        let mut theta = self.orientation * (phi - self.start);
        let lo = -0.25 * PI;
        while theta < lo {
            theta += 2.0 * PI;
        }
        while theta >= lo + 2.0 * PI {
            theta -= 2.0 * PI;
        }
        let eps = 1e-12;
        let in_sector = theta >= -eps && theta <= OMEGA + eps;
        if in_sector {
            theta = theta.clamp(0.0, OMEGA);
        }
        Ok(Polar {
            rho,
            theta,
            in_sector,
        })
    }

    pub fn from_polar(&self, rho: f64, theta: f64) -> Point {
        let phi = self.start + self.orientation * theta;
        self.origin + Point::new(phi.cos(), phi.sin()) * rho
    }

    /// Unit vectors `(e_ρ, e_θ)` at angle `θ`, `e_θ` pointing toward
    /// increasing `θ`.
    pub fn basis(&self, theta: f64) -> (Point, Point) {
        let phi = self.start + self.orientation * theta;
        let (s, c) = phi.sin_cos();
        (
            Point::new(c, s),
            Point::new(-s, c) * self.orientation,
        )
    }
}

/// The corner mode `ρ^α cos(βθ)` in a corner frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMode {
    pub exponent: f64,
    pub frequency: f64,
}

impl PowerMode {
    /// `ρ^{-2/3} cos(2θ/3)`, the singular template of the dual function.
    pub const TEMPLATE: PowerMode = PowerMode {
        exponent: -SINGULAR_EXPONENT,
        frequency: SINGULAR_EXPONENT,
    };

    /// `ρ^{2/3} cos(2θ/3)`, the leading singular mode of `H¹` solutions.
    pub const SINGULAR_H1: PowerMode = PowerMode {
        exponent: SINGULAR_EXPONENT,
        frequency: SINGULAR_EXPONENT,
    };

    pub fn value(&self, rho: f64, theta: f64) -> f64 {
        rho.powf(self.exponent) * (self.frequency * theta).cos()
    }

    /// `(∂_ρ, ρ⁻¹∂_θ)` components of the gradient.
    pub fn polar_gradient(&self, rho: f64, theta: f64) -> (f64, f64) {
        let r = rho.powf(self.exponent - 1.0);
        let (s, c) = (self.frequency * theta).sin_cos();
        (self.exponent * r * c, -self.frequency * r * s)
    }

    /// Laplacian by the polar formula `(α² − β²)ρ^{α−2}cos(βθ)`.
    pub fn laplacian(&self, rho: f64, theta: f64) -> f64 {
        let (a, b) = (self.exponent, self.frequency);
        (a * a - b * b) * rho.powf(a - 2.0) * (b * theta).cos()
    }

    pub fn gradient(&self, frame: &CornerFrame, p: Point) -> Result<Point> {
        let pol = frame.to_polar(p)?;
        let (gr, gt) = self.polar_gradient(pol.rho, pol.theta);
        let (er, et) = frame.basis(pol.theta);
        Ok(er * gr + et * gt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffCenter {
    Point(Point),
    Segment(Point, Point),
}

/// A `C²` bump `φ(d)` of the distance `d` to a point or a segment: 1 for
/// `d ≤ inner`, 0 for `d ≥ outer`, quintic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub center: CutoffCenter,
    pub radius_inner: f64,
    pub radius_outer: f64,
}

impl Cutoff {
    pub fn new(center: CutoffCenter, radius_inner: f64, radius_outer: f64) -> Self {
        assert!(0.0 < radius_inner && radius_inner < radius_outer);
        Self {
            center,
            radius_inner,
            radius_outer,
        }
    }

    /// Distance to the center, its gradient and its Laplacian.
    fn distance(&self, p: Point) -> (f64, Point, f64) {
        let (foot, cap) = match self.center {
            CutoffCenter::Point(c) => (c, true),
            CutoffCenter::Segment(a, b) => {
                let ab = b - a;
                let t = (p - a).dot(ab) / ab.dot(ab);
                if t <= 0.0 {
                    (a, true)
                } else if t >= 1.0 {
                    (b, true)
                } else {
                    (a + ab * t, false)
                }
            }
        };
        let d = p - foot;
        let r = d.norm();
        if r == 0.0 {
            return (0.0, Point::default(), 0.0);
        }
        let lap = if cap { 1.0 / r } else { 0.0 };
        (r, d * (1.0 / r), lap)
    }

    /// Profile `φ(d)` with its first two derivatives.
    pub fn profile(&self, d: f64) -> (f64, f64, f64) {
        if d <= self.radius_inner {
            return (1.0, 0.0, 0.0);
        }
        if d >= self.radius_outer {
            return (0.0, 0.0, 0.0);
        }
        let len = self.radius_outer - self.radius_inner;
        let t = (d - self.radius_inner) / len;
        let t2 = t * t;
        let p = t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
        let dp = 30.0 * t2 * (1.0 - t) * (1.0 - t);
        let ddp = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (1.0 - p, -dp / len, -ddp / (len * len))
    }

    pub fn value(&self, p: Point) -> f64 {
        self.profile(self.distance(p).0).0
    }

    pub fn gradient(&self, p: Point) -> Point {
        let (d, grad, _) = self.distance(p);
        grad * self.profile(d).1
    }

    pub fn laplacian(&self, p: Point) -> f64 {
        let (d, _, lap_d) = self.distance(p);
        let (_, d1, d2) = self.profile(d);
        d2 + d1 * lap_d
    }

    /// True when `p` lies where the cutoff is identically 1.
    pub fn is_flat_one(&self, p: Point) -> bool {
        self.distance(p).0 <= self.radius_inner
    }

    pub fn is_zero(&self, p: Point) -> bool {
        self.distance(p).0 >= self.radius_outer
    }
}

/// The lifting `f = −a(y−r₂)ψ₁ + b(x+r₁)ψ₂ + a(y+r₂)ψ₃ − b(x−r₁)ψ₄` of the
/// piecewise-constant Neumann data: `∂f/∂n = a` on `Γ₁, Γ₃`, `b` on `Γ₂, Γ₄`,
/// and `f = 0` near `Γ̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxFunction {
    pub a: f64,
    pub b: f64,
    r1: f64,
    r2: f64,
    psi: [Cutoff; 4],
}

impl AuxFunction {
    pub fn new(domain: &AnnulusDomain, a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            r1: domain.r1(),
            r2: domain.r2(),
            psi: Side::ALL.map(|s| domain.side_cutoff(s)),
        }
    }

    pub fn with_cutoffs(domain: &AnnulusDomain, a: f64, b: f64, psi: [Cutoff; 4]) -> Self {
        Self {
            a,
            b,
            r1: domain.r1(),
            r2: domain.r2(),
            psi,
        }
    }

    pub fn cutoffs(&self) -> &[Cutoff; 4] {
        &self.psi
    }

    /// The four linear factors with their (constant) gradients.
    fn linear_terms(&self, p: Point) -> [(f64, Point); 4] {
        let (a, b) = (self.a, self.b);
        [
            (-a * (p.y - self.r2), Point::new(0.0, -a)),
            (b * (p.x + self.r1), Point::new(b, 0.0)),
            (a * (p.y + self.r2), Point::new(0.0, a)),
            (-b * (p.x - self.r1), Point::new(-b, 0.0)),
        ]
    }

    pub fn value(&self, p: Point) -> f64 {
        self.linear_terms(p)
            .iter()
            .zip(&self.psi)
            .map(|((l, _), psi)| l * psi.value(p))
            .sum()
    }

    pub fn gradient(&self, p: Point) -> Point {
        self.linear_terms(p)
            .iter()
            .zip(&self.psi)
            .fold(Point::default(), |acc, ((l, gl), psi)| {
                acc + *gl * psi.value(p) + psi.gradient(p) * *l
            })
    }

    pub fn laplacian(&self, p: Point) -> f64 {
        self.linear_terms(p)
            .iter()
            .zip(&self.psi)
            .map(|((l, gl), psi)| l * psi.laplacian(p) + 2.0 * gl.dot(psi.gradient(p)))
            .sum()
    }

    /// The harmonic linear function that coincides with `f` near corner `Sᵢ`.
    pub fn local_linear(&self, i: usize, p: Point) -> f64 {
        let (a, b) = (self.a, self.b);
        let (r1, r2) = (self.r1, self.r2);
        match i {
            1 => -a * (p.y - r2) - b * (p.x - r1),
            2 => -a * (p.y - r2) + b * (p.x + r1),
            3 => a * (p.y + r2) + b * (p.x + r1),
            _ => a * (p.y + r2) - b * (p.x - r1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec::Vec;

    fn square() -> AnnulusDomain {
        AnnulusDomain::new(1.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn build_domain_examples() {
        let d = square();
        assert_eq!(d.corner(1), Point::new(1.0, 1.0));
        let (a, b) = d.segment(BoundaryTag::Inner(Side::Top));
        assert_eq!((a, b), (Point::new(1.0, 1.0), Point::new(-1.0, 1.0)));
        let r = AnnulusDomain::new(1.0, 0.5, 2.0).unwrap();
        assert_eq!(r.corner(4), Point::new(1.0, -0.5));
        assert_eq!(
            AnnulusDomain::new(1.0, 1.0, 1.0),
            Err(Error::InvalidDomain("lambda0 must exceed 1"))
        );
        assert!(AnnulusDomain::new(0.0, 1.0, 2.0).is_err());
        assert!(AnnulusDomain::new(1.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn membership_matches_set_definition() {
        let d = AnnulusDomain::new(1.0, 0.5, 2.0).unwrap();
        assert!(d.contains(Point::new(1.5, 0.0)));
        assert!(!d.contains(Point::new(0.5, 0.25)));
        assert!(!d.contains(Point::new(1.0, 0.25)));
        assert!(d.contains_closed(Point::new(1.0, 0.25)));
        assert!(!d.contains(Point::new(2.0, 0.0)));
        assert!(d.contains_closed(Point::new(2.0, 1.0)));
        assert!(!d.contains_closed(Point::new(2.01, 0.0)));
    }

    #[test]
    fn sides_meet_at_their_corners() {
        let d = AnnulusDomain::new(1.0, 0.5, 2.0).unwrap();
        for side in Side::ALL {
            let (a, b) = d.segment(BoundaryTag::Inner(side));
            let (i, j) = AnnulusDomain::side_corners(side);
            assert_eq!(a, d.corner(i));
            assert_eq!(b, d.corner(j));
        }
    }

    #[test]
    fn polar_boundary_alignment() {
        let d = square();
        let f = d.frame(1);
        // On Γ₄ just below S₁ and on Γ₁ just left of S₁.
        let down = f.to_polar(Point::new(1.0, 0.9)).unwrap();
        let left = f.to_polar(Point::new(0.9, 1.0)).unwrap();
        assert_eq!(down.theta, 0.0);
        assert!((left.theta - OMEGA).abs() < 1e-15);
        for i in 1..=4 {
            let f = d.frame(i);
            let c = d.corner(i);
            // The bisector of the reentrant sector points away from the origin.
            let dir = Point::new(c.x.signum(), c.y.signum()) * (0.01 / 2f64.sqrt());
            let pol = f.to_polar(c + dir).unwrap();
            assert!((pol.theta - 0.5 * OMEGA).abs() < 1e-12, "corner {i}");
            assert!((pol.rho - 0.01).abs() < 1e-15);
        }
        assert_eq!(f.to_polar(d.corner(1)), Err(Error::AtCorner(1)));
        // Points in the hole are flagged.
        assert!(!f.to_polar(Point::new(0.9, 0.9)).unwrap().in_sector);
    }

    #[test]
    fn vertical_sides_have_theta_zero() {
        let d = AnnulusDomain::new(1.0, 0.5, 2.0).unwrap();
        for i in 1..=4 {
            let f = d.frame(i);
            let c = d.corner(i);
            let vertical = Point::new(c.x, c.y * 0.5);
            let horizontal = Point::new(c.x * 0.5, c.y);
            assert_eq!(f.to_polar(vertical).unwrap().theta, 0.0, "corner {i}");
            assert!((f.to_polar(horizontal).unwrap().theta - OMEGA).abs() < 1e-14);
        }
    }

    #[test]
    fn template_is_neumann_compatible() {
        let m = PowerMode::TEMPLATE;
        for rho in [1e-3, 0.1, 0.7] {
            assert_eq!(m.polar_gradient(rho, 0.0).1, 0.0);
            assert!(m.polar_gradient(rho, OMEGA).1.abs() < 1e-12 * rho.powf(-5.0 / 3.0));
        }
    }

    #[test]
    fn template_harmonic_by_finite_differences() {
        let d = square();
        let f = d.frame(2);
        let eval = |p: Point| {
            let pol = f.to_polar(p).unwrap();
            PowerMode::TEMPLATE.value(pol.rho, pol.theta)
        };
        let step = 1e-4;
        let mut worst: f64 = 0.0;
        for k in 1..20 {
            let theta = OMEGA * k as f64 / 20.0;
            let p = f.from_polar(0.3, theta);
            let fd = (eval(p + Point::new(step, 0.0))
                + eval(p - Point::new(step, 0.0))
                + eval(p + Point::new(0.0, step))
                + eval(p - Point::new(0.0, step))
                - 4.0 * eval(p))
                / (step * step);
            worst = worst.max(fd.abs());
            assert_eq!(PowerMode::TEMPLATE.laplacian(0.3, theta), 0.0);
        }
        assert!(worst < 1e-4, "fd laplacian {worst}");
    }

    #[test]
    fn aux_function_boundary_conditions() {
        let d = AnnulusDomain::new(1.0, 0.5, 2.0).unwrap();
        let (a, b) = (0.7, -1.3);
        let f = AuxFunction::new(&d, a, b);
        for side in Side::ALL {
            let tag = BoundaryTag::Inner(side);
            let (p0, p1) = d.segment(tag);
            let n = tag.outward_normal();
            let want = if side.is_horizontal() { a } else { b };
            for k in 1..10 {
                let p = p0 + (p1 - p0) * (k as f64 / 10.0);
                let dn = f.gradient(p).dot(n);
                assert!((dn - want).abs() < 1e-12, "{side:?} {dn}");
            }
        }
        for k in 0..40 {
            let t = k as f64 / 40.0;
            for tag in BoundaryTag::ALL.iter().filter(|t| !t.is_inner()) {
                let (p0, p1) = d.segment(*tag);
                assert_eq!(f.value(p0 + (p1 - p0) * t), 0.0);
            }
        }
        let zero = AuxFunction::new(&d, 0.0, 0.0);
        assert_eq!(zero.value(Point::new(1.2, 0.6)), 0.0);
        assert_eq!(zero.laplacian(Point::new(1.2, 0.6)), 0.0);
    }

    #[test]
    fn aux_function_vanishes_linearly_at_corners() {
        let d = square();
        let f = AuxFunction::new(&d, 1.0, 2.0);
        let mut worst: f64 = 0.0;
        for i in 1..=4 {
            let fr = d.frame(i);
            for k in 0..=16 {
                let theta = OMEGA * k as f64 / 16.0;
                for rho in [1e-4, 1e-3, 1e-2, 0.1] {
                    let p = fr.from_polar(rho, theta);
                    worst = worst.max(f.value(p).abs() / rho);
                }
            }
        }
        assert!(worst <= 2.0 * 3.0 + 1e-9, "|f|/rho {worst}");
    }

    #[test]
    fn aux_function_laplacian_matches_finite_differences() {
        let d = AnnulusDomain::new(1.0, 0.5, 2.0).unwrap();
        let f = AuxFunction::new(&d, 1.0, -0.5);
        let step = 1e-4;
        let pts: Vec<Point> = (0..50)
            .map(|k| {
                let t = k as f64 / 50.0;
                Point::new(-1.8 + 3.6 * t, 0.55 + 0.35 * (7.0 * t).sin().abs())
            })
            .collect();
        for p in pts {
            let fd = (f.value(p + Point::new(step, 0.0))
                + f.value(p - Point::new(step, 0.0))
                + f.value(p + Point::new(0.0, step))
                + f.value(p - Point::new(0.0, step))
                - 4.0 * f.value(p))
                / (step * step);
            // Δd jumps across x = ±r₁; skip the kink line.
            if (p.x.abs() - 1.0).abs() < 2.0 * step {
                continue;
            }
            assert!((fd - f.laplacian(p)).abs() < 1e-4 * (1.0 + fd.abs()), "{p:?}");
        }
    }

    #[test]
    fn cutoff_profile_is_c2() {
        let c = Cutoff::new(CutoffCenter::Point(Point::default()), 0.35, 0.7);
        let (v0, d0, dd0) = c.profile(0.35 + 1e-9);
        let (v1, d1, dd1) = c.profile(0.7 - 1e-9);
        assert!((v0 - 1.0).abs() < 1e-12 && d0.abs() < 1e-12 && dd0.abs() < 1e-5);
        assert!(v1.abs() < 1e-12 && d1.abs() < 1e-12 && dd1.abs() < 1e-5);
        assert_eq!(c.profile(0.1), (1.0, 0.0, 0.0));
        assert_eq!(c.profile(0.9), (0.0, 0.0, 0.0));
    }

    #[test]
    fn corner_cutoff_support_stays_in_sector() {
        for (r1, r2, l) in [(1.0, 1.0, 2.0), (1.0, 0.5, 2.0), (1.0, 1.0, 1.2)] {
            let d = AnnulusDomain::new(r1, r2, l).unwrap();
            let eta = d.corner_cutoff(1);
            assert!(eta.radius_outer <= d.min_half_width());
            assert!(eta.radius_outer < d.corner_reach() + 1e-15);
        }
    }
}
