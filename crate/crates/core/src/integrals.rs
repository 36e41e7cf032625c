//! Integrals of `K(ω − ξ)` against normalized area over discs, polygons and
//! annulus caps.
//!
//! Three independent routes are provided:
//!
//! * closed forms: the disc integral vanishes at interior points and equals
//!   `r²·w̄/w² − r⁴/w³` outside (`w = ω − center`);
//! * boundary reduction: `K(ω−ξ) = ∂_ξ̄ F` with `F = −(ω̄−ξ̄)²/(2(ω−ξ)²)`, so a
//!   polygon integral is a sum of per-edge closed forms;
//! * radial reduction: in polar coordinates about the singularity the
//!   angular integral of `e^{−3iθ}` is explicit and only a 1-D integral in
//!   the radius remains.
//!
//! [`adaptive_quadrature`] is the reference the others are tested against.
//! It integrates in polar coordinates about `ω`, which cancels the `1/|ω−ξ|`
//! singularity against the Jacobian, and never uses any of the identities
//! above.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    circle_disc_angular_interval, tol_for, AnnulusCap, Area, ComplexPoint, Disc, Region, Square,
};
use crate::kernel::Kernel;
use crate::quadrature::{self, QuadratureError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    BoundaryReduction,
    RadialReduction,
    AdaptiveQuadrature,
    /// Tree evaluation with truncated multipole expansions for far clusters.
    FarFieldExpansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: Complex64,
    /// Estimated bound on `|value − exact|`.
    pub error_bound: f64,
    pub method: Method,
}

impl IntegralResult {
    pub fn closed_form(value: Complex64, error_bound: f64) -> Self {
        Self {
            value,
            error_bound,
            method: Method::ClosedForm,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegralError {
    #[error("polygon needs at least three vertices and positive area")]
    DegeneratePolygon,
    #[error("polygon vertices must be counterclockwise")]
    Clockwise,
    #[error("evaluation point lies on a polygon edge and the polygon is not supported by the fallback")]
    OnEdge,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

const EPS: f64 = f64::EPSILON;

/// `∫_d K(ω−ξ) dm₂(ξ)`: zero for `ω ∈ d`, closed form outside.
pub fn disc_integral(d: &Disc, omega: ComplexPoint) -> IntegralResult {
    let (value, err) = disc_integral_raw(d.center, d.radius, omega);
    IntegralResult::closed_form(value, err)
}

/// Closed form with a rounding estimate. Written as `r²(|w|² − r²)/w³`,
/// which is the same expression with the cancellation near `|w| = r` done
/// exactly.
#[inline]
pub(crate) fn disc_integral_raw(center: ComplexPoint, r: f64, omega: ComplexPoint) -> (Complex64, f64) {
    let w = omega - center;
    let n = w.norm();
    if n <= r {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    let r2 = r * r;
    let gap = (n - r) * (n + r);
    let w3 = w * w * w;
    let v = w3.inv() * (r2 * gap);
    (v, 8.0 * EPS * r2 * (n * n + r2) / (n * n * n))
}

/// Integral over a simple counterclockwise polygon via per-edge closed forms.
pub fn polygon_integral(vertices: &[ComplexPoint], omega: ComplexPoint) -> Result<IntegralResult, IntegralError> {
    let area2 = signed_area2(vertices);
    if vertices.len() < 3 || !(area2.abs() > 0.0) {
        return Err(IntegralError::DegeneratePolygon);
    }
    if area2 < 0.0 {
        return Err(IntegralError::Clockwise);
    }
    let scale = vertices
        .iter()
        .map(|v| v.norm())
        .fold(omega.norm(), f64::max)
        .max((area2 * 0.5).sqrt());
    let near = edge_distance(vertices, omega) <= tol_for(scale);
    if near {
        let region = Region::Polygon(vertices.to_vec());
        return adaptive_quadrature(&region, omega, 1e-10);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    let n = vertices.len();
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        let (v, m) = edge_term(a, b, omega);
        acc += v;
        mag += m;
    }
    // (1/π)·(1/2i)·∮F dξ
    let value = acc / Complex64::new(0.0, 2.0 * PI);
    Ok(IntegralResult {
        value,
        error_bound: 64.0 * EPS * mag / (2.0 * PI),
        method: Method::BoundaryReduction,
    })
}

/// `∫_{[a,b]} F(ξ) dξ` for `F = −(ω̄−ξ̄)²/(2(ω−ξ)²)`, plus a magnitude used
/// for the rounding estimate.
fn edge_term(a: ComplexPoint, b: ComplexPoint, omega: ComplexPoint) -> (Complex64, f64) {
    let d = b - a;
    if d.norm() == 0.0 {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    let e = d.conj() / d;
    let u0 = omega - a;
    let u1 = omega - b;
    // On the edge line ū = e·u + c.
    let c = u0.conj() - e * u0;
    let ratio = u1 / u0;
    let log = ratio.ln();
    assert!(
        log.im.abs() < PI,
        "argument jump along an edge: the pole is on the segment"
    );
    let t1 = e * e * (u1 - u0);
    let t2 = e * c * log * 2.0;
    let t3 = c * c * (u0.inv() - u1.inv());
    ((t1 + t2 + t3) * 0.5, t1.norm() + t2.norm() + t3.norm())
}

fn signed_area2(v: &[ComplexPoint]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|k| {
            let (p, q) = (v[k], v[(k + 1) % n]);
            p.re * q.im - q.re * p.im
        })
        .sum()
}

fn segment_distance(a: ComplexPoint, b: ComplexPoint, z: ComplexPoint) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let s = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * s)).norm()
}

fn edge_distance(v: &[ComplexPoint], z: ComplexPoint) -> f64 {
    let n = v.len();
    (0..n)
        .map(|k| segment_distance(v[k], v[(k + 1) % n], z))
        .fold(f64::INFINITY, f64::min)
}

/// Integral over a square through its four edges.
pub fn square_integral(sq: &Square, omega: ComplexPoint) -> Result<IntegralResult, IntegralError> {
    polygon_integral(&sq.vertices(), omega)
}

/// Default tolerance for the outer radial integral of cap integrals.
pub const CAP_TOL: f64 = 1e-10;

/// `∫_cap K(center − ξ) dm₂(ξ)` by radial reduction about the annulus
/// center: exact angular integrals per circle, adaptive Gauss–Kronrod in
/// the radius, split where the clip circle starts or stops meeting the
/// circles about the center.
pub fn annulus_cap_integral(cap: &AnnulusCap) -> Result<IntegralResult, IntegralError> {
    annulus_cap_integral_tol(cap, CAP_TOL)
}

pub fn annulus_cap_integral_tol(cap: &AnnulusCap, tol: f64) -> Result<IntegralResult, IntegralError> {
    let (lo, hi) = (cap.inner_radius(), cap.outer_radius);
    let Some(clip) = cap.clip else {
        // ∫ e^{−3iθ} over a full turn vanishes on every circle.
        return Ok(IntegralResult {
            value: Complex64::new(0.0, 0.0),
            error_bound: 0.0,
            method: Method::RadialReduction,
        });
    };
    let d = (clip.center - cap.center).norm();
    let mut cuts = vec![lo, hi];
    for t in [(d - clip.radius).abs(), d + clip.radius] {
        if t > lo && t < hi {
            cuts.push(t);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let inner = |t: f64| -> Complex64 {
        let ivs = circle_disc_angular_interval(cap.center, t, &clip);
        if ivs.len() == 1 && ivs[0] == (-PI, PI) {
            return Complex64::new(0.0, 0.0);
        }
        ivs.iter()
            .map(|&(a, b)| {
                (Complex64::from_polar(1.0, -3.0 * a) - Complex64::from_polar(1.0, -3.0 * b))
                    / Complex64::new(0.0, 3.0)
            })
            .sum()
    };
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let pieces = (cuts.len() - 1) as f64;
    for w in cuts.windows(2) {
        let r = quadrature::integrate_sqrt_endpoints(inner, w[0], w[1], tol * PI / pieces, 2000)?;
        value += r.value;
        err += r.error;
    }
    Ok(IntegralResult {
        value: -value / PI,
        error_bound: err / PI,
        method: Method::RadialReduction,
    })
}

/// `∫ K(z−ξ) dm₂(ξ)` over `disc ∩ {t_lo ≤ |ξ − z| ≤ t_hi}`, using the
/// symmetric arc form of the angular integral: the clip circle meets the
/// circle of radius `t` about `z` in an arc of half-width `h(t)` centred on
/// `arg(c − z)`, and `∫ e^{−3iθ}` over it is `e^{−3iφ}·2 sin(3h)/3`.
///
/// Returns the value and an error estimate. `tol` is absolute.
pub fn disc_shell_integral(
    z: ComplexPoint,
    disc: &Disc,
    t_lo: f64,
    t_hi: f64,
    tol: f64,
) -> Result<(Complex64, f64), QuadratureError> {
    let w = disc.center - z;
    let d = w.norm();
    let rho = disc.radius;
    let lo = t_lo.max((d - rho).abs());
    let hi = t_hi.min(d + rho);
    if d == 0.0 || !(hi > lo) {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let f = |t: f64| -> Complex64 {
        // sin h from the triangle (t, d, ρ): the law of cosines loses
        // digits when ρ ≪ d, the area form does not.
        let s = (2.0 * triangle_area(t, d, rho) / (t * d)).min(1.0);
        Complex64::new(s * (3.0 - 4.0 * s * s), 0.0)
    };
    let scale = 2.0 / (3.0 * PI);
    let r = quadrature::integrate_sqrt_endpoints(f, lo, hi, tol / scale, 400)?;
    let phase = Complex64::from_polar(1.0, -3.0 * w.arg());
    Ok((-phase * (r.value.re * scale), r.error * scale))
}

/// Area of the triangle with sides `a, b, c` (Kahan's arrangement of
/// Heron's formula); 0 if the sides violate the triangle inequality.
fn triangle_area(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * p.max(0.0).sqrt()
}

/// Tight upper bound for `∫_region |K(ω−ξ)| dm₂(ξ)` over all `ω`: the
/// extremal set is a disc centred at the singularity, where the integral is
/// `2·radius = 2·√m₂`.
pub fn abs_kernel_mass_bound<A: Area>(region: &A) -> f64 {
    2.0 * region.normalized_area().sqrt()
}

// ---------------------------------------------------------------------------
// Reference 2-D quadrature
// ---------------------------------------------------------------------------

/// Panel budget of the outer angular integration.
pub const QUAD_MAX_PANELS: usize = 20_000;

/// Reference integral of `K(ω−ξ)` over `region` to absolute tolerance `tol`.
pub fn adaptive_quadrature(region: &Region, omega: ComplexPoint, tol: f64) -> Result<IntegralResult, IntegralError> {
    adaptive_quadrature_kernel(region, omega, tol, Kernel::ThreeRevolutions)
}

pub fn adaptive_quadrature_kernel(
    region: &Region,
    omega: ComplexPoint,
    tol: f64,
    kernel: Kernel,
) -> Result<IntegralResult, IntegralError> {
    integrate_region(region, omega, tol, |u| kernel.eval(u))
}

/// `∫_region g(ω − ξ) dm₂(ξ)` for integrands with at most a `1/|u|`
/// singularity at `u = 0`.
///
/// Outer integral in the direction `θ` of `ξ − ω`, inner in the distance `t`
/// along the ray, with `dm₂ = t dt dθ / π`. The ray meets the region in a
/// union of intervals that is computed exactly; the outer panels are split
/// at directions where that union changes combinatorially (corners,
/// tangencies, circle intersections).
pub fn integrate_region<G: Fn(Complex64) -> Complex64>(
    region: &Region,
    omega: ComplexPoint,
    tol: f64,
    g: G,
) -> Result<IntegralResult, IntegralError> {
    if !(tol > 0.0) {
        return Err(QuadratureError::BadTolerance(tol).into());
    }
    let mut cuts = angular_breakpoints(region, omega);
    cuts.push(-PI);
    cuts.push(PI);
    cuts.retain(|t| t.is_finite() && (-PI..=PI).contains(t));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let inner_tol = tol / (16.0 * PI);
    let mut inner_err: f64 = 0.0;
    let mut failure = None;
    let outer = quadrature::integrate(
        |theta: f64| {
            let e = Complex64::from_polar(1.0, theta);
            let mut sum = Complex64::new(0.0, 0.0);
            for (t0, t1) in ray_intervals(region, omega, e) {
                let f = |t: f64| g(-e * t) * t;
                let mut f = f;
                let (v, err) = quadrature::gk15(&mut f, t0, t1);
                if err <= inner_tol {
                    sum += v;
                    inner_err = inner_err.max(err);
                } else {
                    match quadrature::integrate(f, &[t0, t1], inner_tol, 2000) {
                        Ok(r) => {
                            sum += r.value;
                            inner_err = inner_err.max(r.error);
                        }
                        Err(e) => failure = Some(e),
                    }
                }
            }
            sum
        },
        &cuts,
        tol * PI * 0.5,
        QUAD_MAX_PANELS,
    )?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(IntegralResult {
        value: outer.value / PI,
        error_bound: outer.error / PI + 2.0 * inner_err,
        method: Method::AdaptiveQuadrature,
    })
}

fn push_angle(out: &mut Vec<f64>, from: ComplexPoint, to: ComplexPoint) {
    let w = to - from;
    if w.norm() > 0.0 {
        out.push(w.arg());
    }
}

fn wrap(a: f64) -> f64 {
    let mut a = a;
    while a > PI {
        a -= 2.0 * PI;
    }
    while a < -PI {
        a += 2.0 * PI;
    }
    a
}

fn circle_breakpoints(out: &mut Vec<f64>, omega: ComplexPoint, c: ComplexPoint, r: f64) {
    let w = c - omega;
    let d = w.norm();
    let phi = w.arg();
    if d > r {
        let b = (r / d).asin();
        out.push(wrap(phi + b));
        out.push(wrap(phi - b));
    } else if (d - r).abs() <= tol_for(r.max(d)) {
        out.push(wrap(phi + PI / 2.0));
        out.push(wrap(phi - PI / 2.0));
    }
}

fn circle_circle_points(c1: ComplexPoint, r1: f64, c2: ComplexPoint, r2: f64) -> Vec<ComplexPoint> {
    let w = c2 - c1;
    let d = w.norm();
    if d == 0.0 || d > r1 + r2 || d < (r1 - r2).abs() {
        return Vec::new();
    }
    let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h = (r1 * r1 - a * a).max(0.0).sqrt();
    let u = w / d;
    let base = c1 + u * a;
    let perp = u * Complex64::new(0.0, 1.0);
    vec![base + perp * h, base - perp * h]
}

fn angular_breakpoints(region: &Region, omega: ComplexPoint) -> Vec<f64> {
    let mut out = Vec::new();
    match region {
        Region::Disc(d) => circle_breakpoints(&mut out, omega, d.center, d.radius),
        Region::Square(s) => {
            for v in s.vertices() {
                push_angle(&mut out, omega, v);
            }
        }
        Region::Polygon(vs) => {
            for &v in vs {
                push_angle(&mut out, omega, v);
            }
        }
        Region::AnnulusCap(cap) => {
            let circles: Vec<(ComplexPoint, f64)> = [
                Some((cap.center, cap.outer_radius)),
                Some((cap.center, cap.inner_radius())),
                cap.clip.map(|d| (d.center, d.radius)),
            ]
            .into_iter()
            .flatten()
            .collect();
            for &(c, r) in &circles {
                circle_breakpoints(&mut out, omega, c, r);
            }
            for i in 0..circles.len() {
                for j in i + 1..circles.len() {
                    for p in circle_circle_points(circles[i].0, circles[i].1, circles[j].0, circles[j].1) {
                        push_angle(&mut out, omega, p);
                    }
                }
            }
        }
    }
    out
}

/// `{t ≥ 0 : |o + t e − c| ≤ r}` as an interval.
fn ray_disc(o: ComplexPoint, e: Complex64, c: ComplexPoint, r: f64) -> Option<(f64, f64)> {
    let p = o - c;
    let b = p.re * e.re + p.im * e.im;
    let q = p.norm_sqr() - r * r;
    let disc = b * b - q;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // Stable roots of t² + 2bt + q = 0.
    let (t0, t1) = if b >= 0.0 {
        let t0 = -b - s;
        (t0, if t0 != 0.0 { q / t0 } else { -b + s })
    } else {
        let t1 = -b + s;
        (q / t1, t1)
    };
    let (t0, t1) = (t0.min(t1), t0.max(t1));
    if t1 <= 0.0 {
        return None;
    }
    Some((t0.max(0.0), t1))
}

fn ray_square(o: ComplexPoint, e: Complex64, s: &Square) -> Option<(f64, f64)> {
    let p = o - s.center;
    let h = s.half();
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    for (pc, ec) in [(p.re, e.re), (p.im, e.im)] {
        if ec == 0.0 {
            if pc.abs() > h {
                return None;
            }
        } else {
            let a = (-h - pc) / ec;
            let b = (h - pc) / ec;
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    (hi > lo).then_some((lo, hi))
}

fn ray_polygon(o: ComplexPoint, e: Complex64, vs: &[ComplexPoint]) -> Vec<(f64, f64)> {
    let cross = |a: Complex64, b: Complex64| a.re * b.im - a.im * b.re;
    let n = vs.len();
    let mut ts = Vec::new();
    for k in 0..n {
        let a = vs[k];
        let d = vs[(k + 1) % n] - a;
        let den = cross(e, d);
        if den == 0.0 {
            continue;
        }
        let ao = a - o;
        let t = cross(ao, d) / den;
        let s = cross(ao, e) / den;
        if t > 0.0 && (0.0..1.0).contains(&s) {
            ts.push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    // Parity of crossings beyond the origin of the ray decides whether it
    // starts inside.
    let mut out = Vec::new();
    let mut start = if ts.len() % 2 == 1 { Some(0.0) } else { None };
    for t in ts {
        match start.take() {
            Some(s) => out.push((s, t)),
            None => start = Some(t),
        }
    }
    out
}

fn intersect(a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (hi > lo).then_some((lo, hi))
}

fn ray_intervals(region: &Region, o: ComplexPoint, e: Complex64) -> Vec<(f64, f64)> {
    match region {
        Region::Disc(d) => ray_disc(o, e, d.center, d.radius).into_iter().collect(),
        Region::Square(s) => ray_square(o, e, s).into_iter().collect(),
        Region::Polygon(vs) => ray_polygon(o, e, vs),
        Region::AnnulusCap(cap) => {
            let Some(outer) = ray_disc(o, e, cap.center, cap.outer_radius) else {
                return Vec::new();
            };
            let mut pieces = match ray_disc(o, e, cap.center, cap.inner_radius()) {
                None => vec![outer],
                Some(hole) => [(outer.0, hole.0), (hole.1, outer.1)]
                    .into_iter()
                    .filter(|(a, b)| b > a)
                    .collect(),
            };
            if let Some(clip) = cap.clip {
                match ray_disc(o, e, clip.center, clip.radius) {
                    None => pieces.clear(),
                    Some(ci) => {
                        pieces = pieces.into_iter().filter_map(|p| intersect(p, ci)).collect();
                    }
                }
            }
            pieces
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disc(x: f64, y: f64, r: f64) -> Disc {
        Disc::new(c(x, y), r).unwrap()
    }

    #[test]
    fn disc_closed_form_values() {
        let u = disc(0.0, 0.0, 1.0);
        assert_eq!(disc_integral(&u, c(0.3, 0.4)).value, c(0.0, 0.0));
        assert_eq!(disc_integral(&u, c(1.0, 0.0)).value, c(0.0, 0.0));
        let v = disc_integral(&u, c(2.0, 0.0)).value;
        assert!((v - c(0.375, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn disc_closed_form_is_continuous_at_the_boundary() {
        let u = disc(0.0, 0.0, 1.0);
        let v = disc_integral(&u, Complex64::from_polar(1.0 + 1e-9, 0.7)).value;
        assert!(v.norm() < 3e-9);
    }

    #[test]
    fn quadrature_reproduces_disc_values() {
        let u: Region = disc(0.0, 0.0, 1.0).into();
        let r = adaptive_quadrature(&u, c(0.5, 0.0), 1e-8).unwrap();
        assert!(r.value.norm() <= 1e-8, "{r:?}");
        let r = adaptive_quadrature(&u, c(2.0, 0.0), 1e-10).unwrap();
        assert!((r.value - c(0.375, 0.0)).norm() <= 1e-8, "{r:?}");
        let r = adaptive_quadrature(&u, c(1.0, 0.0), 1e-10).unwrap();
        assert!(r.value.norm() <= 1e-8, "{r:?}");
    }

    #[test]
    fn square_centered_at_singularity_vanishes() {
        let sq = Square::new(c(0.3, -0.2), 0.7).unwrap();
        let r = square_integral(&sq, sq.center).unwrap();
        assert!(r.value.norm() < 1e-14, "{r:?}");
        let q = adaptive_quadrature(&Region::Square(sq), sq.center, 1e-10).unwrap();
        assert!(q.value.norm() < 1e-10);
    }

    #[test]
    fn unit_square_far_point_matches_quadrature() {
        let sq = vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)];
        let exact = polygon_integral(&sq, c(5.0, 0.0)).unwrap();
        let q = adaptive_quadrature(&Region::Polygon(sq), c(5.0, 0.0), 1e-11).unwrap();
        assert!((exact.value - q.value).norm() < 1e-10, "{exact:?} {q:?}");
    }

    #[test]
    fn inscribed_polygon_approaches_disc() {
        let n = 512;
        let vs: Vec<_> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
            .collect();
        let v = polygon_integral(&vs, c(2.0, 0.0)).unwrap().value;
        // Area defect of the inscribed n-gon in normalized units.
        let defect = 1.0 - n as f64 * (2.0 * PI / n as f64).sin() / (2.0 * PI);
        assert!((v - c(0.375, 0.0)).norm() <= 2.0 * defect.sqrt(), "{v}");
        assert!((v - c(0.375, 0.0)).norm() <= 2.0 * defect);
    }

    #[test]
    fn polygon_rejects_bad_input() {
        assert_eq!(
            polygon_integral(&[c(0.0, 0.0), c(1.0, 0.0)], c(3.0, 0.0)),
            Err(IntegralError::DegeneratePolygon)
        );
        let cw = vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 1.0), c(1.0, 0.0)];
        assert_eq!(polygon_integral(&cw, c(3.0, 0.0)), Err(IntegralError::Clockwise));
    }

    #[test]
    fn polygon_on_edge_falls_back_to_quadrature() {
        let sq = vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)];
        let r = polygon_integral(&sq, c(0.5, 0.0)).unwrap();
        assert_eq!(r.method, Method::AdaptiveQuadrature);
        // Interior limit of the closed form from just inside.
        let inside = polygon_integral(&sq, c(0.5, 1e-7)).unwrap();
        assert!((r.value - inside.value).norm() < 1e-5, "{r:?} {inside:?}");
    }

    #[test]
    fn polygon_additivity() {
        let a = vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)];
        let b = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 1.0), c(1.0, 1.0)];
        let ab = vec![c(0.0, 0.0), c(2.0, 0.0), c(2.0, 1.0), c(0.0, 1.0)];
        for w in [c(0.3, 0.4), c(1.5, 0.2), c(-2.0, 3.0), c(0.9, 0.9)] {
            let sum = polygon_integral(&a, w).unwrap().value + polygon_integral(&b, w).unwrap().value;
            let whole = polygon_integral(&ab, w).unwrap().value;
            assert!((sum - whole).norm() < 1e-10);
        }
    }

    #[test]
    fn full_annulus_vanishes() {
        let cap = AnnulusCap::new(c(0.2, 0.1), 1.0, None).unwrap();
        assert_eq!(annulus_cap_integral(&cap).unwrap().value, c(0.0, 0.0));
    }

    #[test]
    fn misbalance_cap_value() {
        // A(0,1) ∩ B(i,1): the whole integral is i·c̃.
        let cap = AnnulusCap::new(c(0.0, 0.0), 1.0, Some(disc(0.0, 1.0, 1.0))).unwrap();
        let r = annulus_cap_integral(&cap).unwrap();
        assert!(r.value.re.abs() < 1e-12);
        assert!((r.value.im - 0.041_519_029_470_838_67).abs() < 1e-10, "{r:?}");
        let q = adaptive_quadrature(&Region::AnnulusCap(cap), cap.center, 1e-11).unwrap();
        assert!((q.value - r.value).norm() < 1e-9, "{q:?}");
    }

    #[test]
    fn shell_matches_disc_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let d = disc(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.05..0.5));
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let (v, e) = disc_shell_integral(z, &d, 0.0, 10.0, 1e-14).unwrap();
            let cf = disc_integral(&d, z).value;
            assert!((v - cf).norm() < 1e-12 + e, "{v} {cf}");
        }
    }

    #[test]
    fn shell_agrees_with_cap_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let clip = disc(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0));
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let r = rng.gen_range(0.1..1.5);
            let cap = AnnulusCap::new(z, r, Some(clip)).unwrap();
            let a = annulus_cap_integral_tol(&cap, 1e-12).unwrap().value;
            let (b, _) = disc_shell_integral(z, &clip, r / 2.0, r, 1e-13).unwrap();
            assert!((a - b).norm() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn abs_mass_bound_is_tight_for_centered_disc() {
        let d = disc(0.4, 0.1, 0.3);
        let q = integrate_region(&Region::Disc(d), d.center, 1e-12, |u| Complex64::new(1.0 / u.norm(), 0.0))
            .unwrap();
        assert!((q.value.re - 0.6).abs() < 1e-10);
        assert!((abs_kernel_mass_bound(&d) - 0.6).abs() < 1e-15);
        let big = disc(0.4, 0.1, 0.3 * 7.0);
        assert!((abs_kernel_mass_bound(&big) - 7.0 * abs_kernel_mass_bound(&d)).abs() < 1e-14);
    }

    #[test]
    fn abs_mass_bound_dominates_square_integrals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sq = Square::new(c(0.0, 0.0), 1.0).unwrap();
        let bound = abs_kernel_mass_bound(&sq);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let w = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let q = integrate_region(&Region::Square(sq), w, 1e-10, |u| Complex64::new(1.0 / u.norm(), 0.0))
                .unwrap();
            worst = worst.max(q.value.re);
            assert!(q.value.re <= bound);
        }
        // Centered square is the worst case: (4/π)·asinh(1)·side... ≈ 1.122 < 2/√π ≈ 1.128.
        assert!(worst < bound && worst > 1.0);
    }

    #[test]
    fn cauchy_kernel_is_not_reflectionless() {
        let u: Region = disc(0.0, 0.0, 1.0).into();
        let w = c(0.5, 0.2);
        let r = adaptive_quadrature_kernel(&u, w, 1e-10, Kernel::Cauchy).unwrap();
        // ∫_{B(0,1)} dm₂(ξ)/(ω−ξ) = ω̄ inside the unit disc.
        assert!((r.value - w.conj()).norm() < 1e-9, "{r:?}");
    }
}
