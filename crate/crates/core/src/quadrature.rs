//! Adaptive Gauss–Kronrod (7/15) integration of complex-valued functions on
//! an interval, with user supplied breakpoints and a panel budget.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge: estimate {estimate} with error {error:e} after {panels} panels (tol {tol:e})")]
    NotConverged {
        estimate: Complex64,
        error: f64,
        panels: usize,
        tol: f64,
    },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

/// One 15-point Kronrod panel: (estimate, |K15 − G7|).
pub fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    let err = (k - g).norm();
    // Rounding floor so a converged panel is never reported as exact.
    let floor = 50.0 * f64::EPSILON * k.norm();
    (k, err.max(floor))
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Default panel budget for [`integrate`].
pub const DEFAULT_MAX_PANELS: usize = 4000;

/// Globally adaptive integration of `f` over `[points[0], points[last]]`,
/// with the interior `points` as forced panel boundaries. Bisects the panel
/// with the largest error estimate until the summed estimate is `≤ tol`.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    points: &[f64],
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult, QuadratureError> {
    if !(tol > 0.0) {
        return Err(QuadratureError::BadTolerance(tol));
    }
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Panel> = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a {
            let (value, error) = gk15(&mut f, a, b);
            heap.push(Panel { a, b, value, error });
        }
    }
    let mut panels = heap.len();
    loop {
        let total_err: f64 = heap.iter().chain(done.iter()).map(|p| p.error).sum();
        if total_err <= tol || heap.is_empty() {
            let value = heap
                .iter()
                .chain(done.iter())
                .fold(Complex64::new(0.0, 0.0), |acc, p| acc + p.value);
            if total_err <= tol {
                return Ok(QuadResult {
                    value,
                    error: total_err,
                    panels,
                });
            }
            return Err(QuadratureError::NotConverged {
                estimate: value,
                error: total_err,
                panels,
                tol,
            });
        }
        if panels >= max_panels {
            let value = heap
                .iter()
                .chain(done.iter())
                .fold(Complex64::new(0.0, 0.0), |acc, p| acc + p.value);
            return Err(QuadratureError::NotConverged {
                estimate: value,
                error: total_err,
                panels,
                tol,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // Cannot split further in floating point.
            done.push(worst);
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        heap.push(Panel {
            a: worst.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: m,
            b: worst.b,
            value: v2,
            error: e2,
        });
        panels += 1;
    }
}

/// Integrates `f` over `[a, b]` after the substitution
/// `t = (a+b)/2 − (b−a)/2 · cos u`, which removes square-root behaviour at
/// both endpoints (as at tangency points of two circles).
pub fn integrate_sqrt_endpoints<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult, QuadratureError> {
    let m = 0.5 * (a + b);
    let w = 0.5 * (b - a);
    integrate(
        |u: f64| {
            let (s, c) = u.sin_cos();
            f(m - w * c) * (w * s)
        },
        &[0.0, PI],
        tol,
        max_panels,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real<F: Fn(f64) -> f64>(f: F) -> impl FnMut(f64) -> Complex64 {
        move |x| Complex64::new(f(x), 0.0)
    }

    #[test]
    fn gk15_integrates_polynomials_exactly() {
        let mut f = real(|x: f64| x.powi(20) - 3.0 * x.powi(7) + 1.0);
        let (v, _) = gk15(&mut f, -1.0, 2.0);
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0 + 3.0;
        assert!((v.re - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let r = integrate(real(|x: f64| x.sqrt()), &[0.0, 1.0], 1e-12, 2000).unwrap();
        assert!((r.value.re - 2.0 / 3.0).abs() < 1e-12);
        let r = integrate_sqrt_endpoints(real(|x: f64| (x * (1.0 - x)).sqrt()), 0.0, 1.0, 1e-14, 200)
            .unwrap();
        assert!((r.value.re - std::f64::consts::PI / 8.0).abs() < 1e-14);
        assert!(r.panels < 10);
    }

    #[test]
    fn complex_oscillatory() {
        let r = integrate(|x: f64| Complex64::from_polar(1.0, -3.0 * x), &[0.0, 1.0, 2.0 * PI], 1e-13, 1000)
            .unwrap();
        assert!(r.value.norm() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = integrate(real(|x: f64| 1.0 / x.abs().sqrt().max(1e-300)), &[-1.0, 1.0], 1e-14, 20);
        assert!(matches!(r, Err(QuadratureError::NotConverged { .. })));
        assert!(matches!(
            integrate(real(|x| x), &[0.0, 1.0], 0.0, 10),
            Err(QuadratureError::BadTolerance(_))
        ));
    }
}
