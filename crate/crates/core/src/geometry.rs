//! Planar primitives: discs, axis-aligned squares, annulus caps and the
//! handful of exact area/distance/angle computations the rest of the crate
//! is built on.
//!
//! Areas are reported in the normalized Lebesgue measure `m₂`, i.e. the
//! standard area divided by π, so that the unit disc has measure 1.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// A point of the plane.
pub type ComplexPoint = Complex64;

/// Relative tolerance used by all geometric predicates.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
}

fn check_point(p: ComplexPoint, what: &'static str) -> Result<(), GeometryError> {
    if p.re.is_finite() && p.im.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonFinite(what))
    }
}

fn check_positive(v: f64, what: &'static str) -> Result<(), GeometryError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::NonPositive { what, value: v })
    }
}

/// Absolute tolerance for predicates on inputs of magnitude `scale`.
#[inline]
pub fn tol_for(scale: f64) -> f64 {
    GEOM_TOL * scale.max(f64::MIN_POSITIVE)
}

/// Closed disc `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Disc {
    pub center: ComplexPoint,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: ComplexPoint, radius: f64) -> Result<Self, GeometryError> {
        check_point(center, "disc center")?;
        check_positive(radius, "disc radius")?;
        Ok(Self { center, radius })
    }

    /// Constructor for values already known to be valid (hot paths).
    #[inline]
    pub(crate) fn new_unchecked(center: ComplexPoint, radius: f64) -> Self {
        debug_assert!(radius > 0.0 && center.re.is_finite() && center.im.is_finite());
        Self { center, radius }
    }

    /// Concentric enlargement `factor · B`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::new_unchecked(self.center, self.radius * factor)
    }

    pub fn contains(&self, z: ComplexPoint) -> bool {
        (z - self.center).norm() <= self.radius + tol_for(self.radius.max(z.norm()))
    }

    /// Whether `other` lies inside `self` (up to tolerance).
    pub fn contains_disc(&self, other: &Disc) -> bool {
        let d = (other.center - self.center).norm();
        d + other.radius <= self.radius + tol_for(self.radius.max(self.center.norm()))
    }

    pub fn translated(&self, by: ComplexPoint) -> Self {
        Self::new_unchecked(self.center + by, self.radius)
    }
}

/// Closed axis-aligned square given by its center and side length.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Square {
    pub center: ComplexPoint,
    pub side: f64,
}

impl Square {
    pub fn new(center: ComplexPoint, side: f64) -> Result<Self, GeometryError> {
        check_point(center, "square center")?;
        check_positive(side, "square side")?;
        Ok(Self { center, side })
    }

    #[inline]
    pub(crate) fn new_unchecked(center: ComplexPoint, side: f64) -> Self {
        Self { center, side }
    }

    pub fn half(&self) -> f64 {
        0.5 * self.side
    }

    /// Corners in counterclockwise order starting at the lower-left one.
    pub fn vertices(&self) -> [ComplexPoint; 4] {
        let h = self.half();
        let c = self.center;
        [
            c + Complex64::new(-h, -h),
            c + Complex64::new(h, -h),
            c + Complex64::new(h, h),
            c + Complex64::new(-h, h),
        ]
    }

    pub fn contains(&self, z: ComplexPoint) -> bool {
        let h = self.half() + tol_for(self.side.max(self.center.norm()));
        let w = z - self.center;
        w.re.abs() <= h && w.im.abs() <= h
    }

    /// Euclidean distance from `z` to the (filled) square; 0 inside.
    pub fn distance_to_point(&self, z: ComplexPoint) -> f64 {
        let w = z - self.center;
        let h = self.half();
        let dx = (w.re.abs() - h).max(0.0);
        let dy = (w.im.abs() - h).max(0.0);
        dx.hypot(dy)
    }

    /// Distance from `z` to the boundary curve of the square.
    pub fn distance_to_boundary(&self, z: ComplexPoint) -> f64 {
        let w = z - self.center;
        let h = self.half();
        let (ax, ay) = (w.re.abs(), w.im.abs());
        if ax <= h && ay <= h {
            (h - ax).min(h - ay)
        } else {
            self.distance_to_point(z)
        }
    }

    /// Distance from `z` to the farthest point of the square.
    pub fn max_distance_to_point(&self, z: ComplexPoint) -> f64 {
        let w = z - self.center;
        let h = self.half();
        (w.re.abs() + h).hypot(w.im.abs() + h)
    }
}

/// The annulus `A(center, R) = B(center, R) \ B(center, R/2)`, optionally
/// intersected with a clipping disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusCap {
    pub center: ComplexPoint,
    pub outer_radius: f64,
    pub clip: Option<Disc>,
}

impl AnnulusCap {
    pub fn new(
        center: ComplexPoint,
        outer_radius: f64,
        clip: Option<Disc>,
    ) -> Result<Self, GeometryError> {
        check_point(center, "annulus center")?;
        check_positive(outer_radius, "annulus radius")?;
        if let Some(d) = clip {
            Disc::new(d.center, d.radius)?;
        }
        Ok(Self {
            center,
            outer_radius,
            clip,
        })
    }

    pub fn inner_radius(&self) -> f64 {
        0.5 * self.outer_radius
    }

    pub fn contains(&self, z: ComplexPoint) -> bool {
        let t = (z - self.center).norm();
        t >= self.inner_radius()
            && t <= self.outer_radius
            && self.clip.is_none_or(|c| c.contains(z))
    }
}

/// A region over which kernel integrals can be taken.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Disc(Disc),
    Square(Square),
    AnnulusCap(AnnulusCap),
    /// Simple polygon, vertices counterclockwise.
    Polygon(Vec<ComplexPoint>),
}

impl From<Disc> for Region {
    fn from(d: Disc) -> Self {
        Region::Disc(d)
    }
}

impl From<Square> for Region {
    fn from(s: Square) -> Self {
        Region::Square(s)
    }
}

impl From<AnnulusCap> for Region {
    fn from(a: AnnulusCap) -> Self {
        Region::AnnulusCap(a)
    }
}

/// Regions with a well-defined normalized area in closed form.
pub trait Area {
    /// `m₂(self)`: area divided by π.
    fn normalized_area(&self) -> f64;
}

impl Area for Disc {
    fn normalized_area(&self) -> f64 {
        self.radius * self.radius
    }
}

impl Area for Square {
    fn normalized_area(&self) -> f64 {
        self.side * self.side / PI
    }
}

pub fn normalized_area<A: Area>(region: &A) -> f64 {
    region.normalized_area()
}

/// Normalized area of `d1 ∩ d2` via the two-circle lens formula.
pub fn lens_area(d1: &Disc, d2: &Disc) -> f64 {
    let (r1, r2) = (d1.radius, d2.radius);
    let d = (d1.center - d2.center).norm();
    let tol = tol_for(r1.max(r2).max(d));
    if d >= r1 + r2 - tol {
        return 0.0;
    }
    let small = r1.min(r2);
    if d <= (r1 - r2).abs() + tol {
        return small * small;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    let area = r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k.max(0.0).sqrt();
    (area / PI).clamp(0.0, small * small)
}

/// Angles θ ∈ [−π, π] with `center + t·e^{iθ} ∈ clip`, as 0, 1 or 2
/// closed intervals. The full circle is reported as `[(−π, π)]`.
pub fn circle_disc_angular_interval(center: ComplexPoint, t: f64, clip: &Disc) -> Vec<(f64, f64)> {
    match arc_half_width(center, t, clip) {
        ArcInside::Empty => Vec::new(),
        ArcInside::Full => vec![(-PI, PI)],
        ArcInside::Arc { mid, half } => {
            let (a, b) = (mid - half, mid + half);
            if a < -PI {
                vec![(-PI, b), (a + 2.0 * PI, PI)]
            } else if b > PI {
                vec![(-PI, b - 2.0 * PI), (a, PI)]
            } else {
                vec![(a, b)]
            }
        }
    }
}

/// Which part of the circle `|ξ − center| = t` lies in `clip`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ArcInside {
    Empty,
    Full,
    /// The arc `[mid − half, mid + half]`, `0 < half < π`.
    Arc { mid: f64, half: f64 },
}

pub(crate) fn arc_half_width(center: ComplexPoint, t: f64, clip: &Disc) -> ArcInside {
    let w = clip.center - center;
    let d = w.norm();
    let rho = clip.radius;
    let tol = tol_for(rho.max(d).max(t));
    // A circle internally tangent to the clip is still contained.
    if d + t <= rho + tol {
        return ArcInside::Full;
    }
    if d >= t + rho - tol || t >= d + rho - tol {
        return ArcInside::Empty;
    }
    let cos_h = ((t * t + d * d - rho * rho) / (2.0 * t * d)).clamp(-1.0, 1.0);
    ArcInside::Arc {
        mid: w.arg(),
        half: cos_h.acos(),
    }
}

/// Distance between two discs (0 if they overlap).
pub fn disc_disc_distance(a: &Disc, b: &Disc) -> f64 {
    ((a.center - b.center).norm() - a.radius - b.radius).max(0.0)
}

/// Distance between a disc and a filled square (0 if they overlap).
pub fn disc_square_distance(d: &Disc, s: &Square) -> f64 {
    (s.distance_to_point(d.center) - d.radius).max(0.0)
}

/// Distance between two filled squares.
pub fn square_square_distance(a: &Square, b: &Square) -> f64 {
    let w = a.center - b.center;
    let h = a.half() + b.half();
    let dx = (w.re.abs() - h).max(0.0);
    let dy = (w.im.abs() - h).max(0.0);
    dx.hypot(dy)
}

/// Distance from a disc to the boundary curve of a square.
///
/// For a disc inside the square this is the clearance to the nearest edge;
/// otherwise it is 0 when the disc crosses the boundary, or the ordinary
/// set distance when the disc is outside.
pub fn disc_square_boundary_distance(d: &Disc, s: &Square) -> f64 {
    let w = d.center - s.center;
    let h = s.half();
    if w.re.abs() <= h && w.im.abs() <= h {
        let inner = (h - w.re.abs()).min(h - w.im.abs());
        let outer = s.max_distance_to_point(d.center);
        if d.radius <= inner {
            inner - d.radius
        } else if d.radius >= outer {
            d.radius - outer
        } else {
            0.0
        }
    } else {
        disc_square_distance(d, s)
    }
}

/// Exact normalized area of `disc ∩ square`.
pub fn disc_square_intersection_area(disc: &Disc, square: &Square) -> f64 {
    let r = disc.radius;
    let w = square.center - disc.center;
    let h = square.half();
    let (x0, x1) = (w.re - h, w.re + h);
    let (y0, y1) = (w.im - h, w.im + h);
    // Column-wise integration of the chord length; the integrand is one of
    // four closed-form pieces between consecutive breakpoints.
    let mut xs = vec![x0.max(-r), x1.min(r)];
    if xs[0] >= xs[1] {
        return 0.0;
    }
    for y in [y0, y1] {
        if y.abs() < r {
            let s = (r * r - y * y).sqrt();
            xs.push(s);
            xs.push(-s);
        }
    }
    let (lo, hi) = (xs[0], xs[1]);
    xs.retain(|&x| x >= lo && x <= hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let circ = |x: f64| {
        let u = (x / r).clamp(-1.0, 1.0);
        0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * u.asin())
    };
    let mut area = 0.0;
    for pair in xs.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let m = 0.5 * (a + b);
        let s = (r * r - m * m).max(0.0).sqrt();
        let top_is_circle = s < y1;
        let bot_is_circle = -s > y0;
        let top = if top_is_circle { s } else { y1 };
        let bot = if bot_is_circle { -s } else { y0 };
        if top <= bot {
            continue;
        }
        let upper = if top_is_circle {
            circ(b) - circ(a)
        } else {
            y1 * (b - a)
        };
        let lower = if bot_is_circle {
            -(circ(b) - circ(a))
        } else {
            y0 * (b - a)
        };
        area += upper - lower;
    }
    (area / PI).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> ComplexPoint {
        Complex64::new(re, im)
    }

    fn disc(x: f64, y: f64, r: f64) -> Disc {
        Disc::new(c(x, y), r).unwrap()
    }

    #[test]
    fn normalized_areas() {
        assert_eq!(disc(0.0, 0.0, 1.0).normalized_area(), 1.0);
        assert_eq!(disc(3.0, -1.0, 0.25).normalized_area(), 0.0625);
        let (r, big) = (1.0 / 128.0, 1.0);
        let sq = Square::new(c(0.0, 0.0), (PI * r * big).sqrt()).unwrap();
        assert!((sq.normalized_area() - r * big).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_shapes() {
        assert!(Disc::new(c(0.0, 0.0), 0.0).is_err());
        assert!(Disc::new(c(f64::NAN, 0.0), 1.0).is_err());
        assert!(Square::new(c(0.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn lens_simple_cases() {
        let u = disc(0.0, 0.0, 1.0);
        assert_eq!(lens_area(&u, &u), 1.0);
        assert_eq!(lens_area(&u, &disc(5.0, 0.0, 1.0)), 0.0);
        assert_eq!(lens_area(&u, &disc(2.0, 0.0, 1.0)), 0.0);
        assert_eq!(lens_area(&u, &disc(0.1, 0.0, 0.5)), 0.25);
    }

    /// Grid-counting oracle for the lens of two unit discs at distance 1.
    #[test]
    fn lens_matches_grid_oracle() {
        let n = 4000usize;
        let h = 2.0 / n as f64;
        let mut inside = 0u64;
        // Exploit symmetry about the real axis: count the upper half only,
        // using midpoints in [−0.5, 1.5] × [0, 1].
        let rows = n / 2;
        let mut sub = 0.0;
        for j in 0..rows {
            let y = (j as f64 + 0.5) * h;
            for i in 0..n {
                let x = -0.5 + (i as f64 + 0.5) * h;
                if x * x + y * y <= 1.0 && (x - 1.0) * (x - 1.0) + y * y <= 1.0 {
                    inside += 1;
                }
            }
        }
        sub += inside as f64 * h * h * 2.0 / PI;
        let exact = lens_area(&disc(0.0, 0.0, 1.0), &disc(1.0, 0.0, 1.0));
        // Closed form: (2π/3 − √3/2)/π.
        let closed = (2.0 * PI / 3.0 - 3f64.sqrt() / 2.0) / PI;
        assert!((exact - closed).abs() < 1e-14);
        assert!((exact - sub).abs() < 1e-5, "{exact} vs grid {sub}");
    }

    #[test]
    fn angular_interval_cases() {
        let clip = disc(0.0, 0.0, 2.0);
        assert_eq!(circle_disc_angular_interval(c(0.1, 0.0), 1.0, &clip), vec![(-PI, PI)]);
        assert!(circle_disc_angular_interval(c(10.0, 0.0), 1.0, &clip).is_empty());
        // Center on ∂B(i, 1): θ ∈ [asin(t/2), π − asin(t/2)].
        let clip = disc(0.0, 1.0, 1.0);
        for &t in &[0.3, 0.75, 1.0, 1.6] {
            let iv = circle_disc_angular_interval(c(0.0, 0.0), t, &clip);
            assert_eq!(iv.len(), 1);
            let a = (t / 2.0).asin();
            assert!((iv[0].0 - a).abs() < 1e-14 && (iv[0].1 - (PI - a)).abs() < 1e-14);
        }
    }

    #[test]
    fn angular_interval_wraps_around() {
        let clip = disc(-2.0, 0.0, 1.0);
        let iv = circle_disc_angular_interval(c(0.0, 0.0), 2.0, &clip);
        assert_eq!(iv.len(), 2);
        let total: f64 = iv.iter().map(|(a, b)| b - a).sum();
        let expected = 2.0 * ((4.0 + 4.0 - 1.0) / 8.0f64).acos();
        assert!((total - expected).abs() < 1e-13);
    }

    #[test]
    fn angular_interval_agrees_with_membership_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let center = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let clip = disc(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0));
            let t = rng.gen_range(0.05..3.0);
            let iv = circle_disc_angular_interval(center, t, &clip);
            for k in 0..1000 {
                let th = -PI + (k as f64 + 0.5) * 2.0 * PI / 1000.0;
                let p = center + Complex64::from_polar(t, th);
                let dist = (p - clip.center).norm() - clip.radius;
                if dist.abs() < 1e-9 {
                    continue;
                }
                let member = dist < 0.0;
                let claimed = iv.iter().any(|&(a, b)| th >= a && th <= b);
                assert_eq!(member, claimed, "center {center} t {t} clip {clip:?} th {th}");
            }
        }
    }

    #[test]
    fn distances() {
        let sq = Square::new(c(0.0, 0.0), 4.0).unwrap();
        let d = disc(0.0, 0.0, 0.5);
        assert!((disc_square_boundary_distance(&d, &sq) - 1.5).abs() < 1e-15);
        assert_eq!(disc_disc_distance(&d, &d), 0.0);
        assert_eq!(square_square_distance(&sq, &sq), 0.0);
        assert_eq!(disc_disc_distance(&disc(0.0, 0.0, 1.0), &disc(3.0, 0.0, 1.0)), 1.0);
        assert_eq!(disc_square_distance(&disc(5.0, 0.0, 1.0), &sq), 2.0);
    }

    #[test]
    fn disc_square_area_matches_grid() {
        let d = disc(0.1, -0.2, 1.0);
        let sq = Square::new(c(0.7, 0.4), 1.1).unwrap();
        let n = 3000;
        let h = sq.side / n as f64;
        let v = sq.vertices()[0];
        let mut cnt = 0u64;
        for i in 0..n {
            for j in 0..n {
                let p = v + c((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if (p - d.center).norm() <= 1.0 {
                    cnt += 1;
                }
            }
        }
        let grid = cnt as f64 * h * h / PI;
        let exact = disc_square_intersection_area(&d, &sq);
        assert!((exact - grid).abs() < 1e-5, "{exact} vs {grid}");
        // Containment extremes.
        let big = Square::new(c(0.0, 0.0), 10.0).unwrap();
        assert!((disc_square_intersection_area(&d, &big) - 1.0).abs() < 1e-14);
        let inner = Square::new(c(0.1, -0.2), 0.5).unwrap();
        assert!((disc_square_intersection_area(&d, &inner) - 0.25 / PI).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn lens_is_symmetric_and_bounded(
            x in -3.0..3.0f64, y in -3.0..3.0f64, r1 in 0.01..2.0f64, r2 in 0.01..2.0f64,
        ) {
            let a = disc(0.0, 0.0, r1);
            let b = disc(x, y, r2);
            let l = lens_area(&a, &b);
            proptest::prop_assert!((l - lens_area(&b, &a)).abs() < 1e-14);
            proptest::prop_assert!(l <= r1.min(r2).powi(2) + 1e-15);
            proptest::prop_assert!(l <= lens_area(&a, &disc(x, y, r2 * 1.1)) + 1e-14);
        }

        #[test]
        fn rigid_motions_preserve_geometry(
            x in -3.0..3.0f64, y in -3.0..3.0f64, r in 0.1..2.0f64, t in 0.05..3.0f64,
            sx in -10.0..10.0f64, sy in -10.0..10.0f64, rot in -3.1..3.1f64,
        ) {
            let shift = c(sx, sy);
            let e = Complex64::from_polar(1.0, rot);
            let a = disc(0.0, 0.0, 1.0);
            let b = disc(x, y, r);
            let a2 = Disc::new(a.center * e + shift, 1.0).unwrap();
            let b2 = Disc::new(b.center * e + shift, r).unwrap();
            proptest::prop_assert!((lens_area(&a, &b) - lens_area(&a2, &b2)).abs() < 1e-12);
            let len = |v: Vec<(f64, f64)>| v.iter().map(|(p, q)| q - p).sum::<f64>();
            let l1 = len(circle_disc_angular_interval(a.center, t, &b));
            let l2 = len(circle_disc_angular_interval(a2.center, t, &b2));
            proptest::prop_assert!((l1 - l2).abs() < 1e-9);
        }
    }
}
