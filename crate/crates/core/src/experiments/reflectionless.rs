use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ExperimentReport, Parameters, Record, Rule};
use crate::geometry::{Disc, Region};
use crate::integrals::{adaptive_quadrature_kernel, disc_integral};
use crate::kernel::Kernel;

const QUAD_TOL: f64 = 1e-10;
const ZERO_BOUND: f64 = 1e-8;

/// A disc integrates `K(ω − ·)` to zero for every interior `ω`.
///
/// For `trials` random (disc, interior point) pairs: the closed form must
/// be exactly 0 and the reference quadrature at most `1e−8` in modulus.
/// As a control, the same discs with an exterior point must match the
/// closed form. With `Kernel::Cauchy` the interior records fail, which is
/// the point of that kernel.
pub fn check_reflectionless(trials: usize, seed: u64, kernel: Kernel) -> ExperimentReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(Disc, Complex64, Complex64)> = (0..trials)
        .map(|_| {
            let c = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let r = rng.gen_range(0.05f64.ln()..2f64.ln()).exp();
            // Interior point anywhere up to the boundary, including the centre.
            let u = rng.gen::<f64>().sqrt() * 0.999;
            let th = rng.gen_range(-PI..PI);
            let inside = c + Complex64::from_polar(r * u, th);
            let outside = c + Complex64::from_polar(r * rng.gen_range(1.05..4.0), rng.gen_range(-PI..PI));
            (Disc::new(c, r).expect("valid disc"), inside, outside)
        })
        .collect();

    let rows: Vec<(Record, bool, Record)> = cases
        .par_iter()
        .map(|(d, inside, outside)| {
            let region = Region::Disc(*d);
            let quad = |w| {
                adaptive_quadrature_kernel(&region, w, QUAD_TOL, kernel)
                    .map(|r| r.value)
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            };
            let q_in = quad(*inside);
            let exact_zero = disc_integral(d, *inside).value == Complex64::new(0.0, 0.0);
            let interior = Record::new("reflectionless", None, *inside, d.radius, q_in, ZERO_BOUND, Rule::AtMost);
            // Control: exterior quadrature against the closed form of K.
            let diff = quad(*outside) - disc_integral(d, *outside).value;
            let tol = ZERO_BOUND * disc_integral(d, *outside).value.norm().max(1e-6);
            let control = Record::new("reflectionless_control", None, *outside, d.radius, diff, tol, Rule::AtMost);
            (interior, exact_zero, control)
        })
        .collect();

    let mut params = Parameters {
        seed: Some(seed),
        ..Parameters::default()
    };
    params.values.insert("trials".into(), trials as f64);
    params.values.insert("quadrature_tol".into(), QUAD_TOL);
    params.values.insert("bound".into(), ZERO_BOUND);
    params.values.insert("kernel_cauchy".into(), f64::from(u8::from(kernel == Kernel::Cauchy)));
    let mut rep = ExperimentReport::new("reflectionless", params);

    let interior_pass = rows.iter().filter(|r| r.0.pass).count();
    let zeros = rows.iter().filter(|r| r.1).count();
    let control_pass = rows.iter().filter(|r| r.2.pass).count();
    let max_interior = rows.iter().map(|r| r.0.value.norm()).fold(0.0, f64::max);
    for (a, _, c) in rows {
        rep.records.push(a);
        rep.records.push(c);
    }
    rep.constant("max_interior_quadrature", max_interior);
    rep.check(
        "closed_form_zero",
        zeros == trials,
        format!("{zeros}/{trials} interior closed forms exactly 0"),
    );
    rep.check(
        "quadrature_small",
        interior_pass == trials,
        format!("{interior_pass}/{trials} interior quadratures ≤ {ZERO_BOUND:e} (max {max_interior:e})"),
    );
    if kernel == Kernel::ThreeRevolutions {
        rep.check(
            "exterior_control",
            control_pass == trials,
            format!("{control_pass}/{trials} exterior quadratures match the closed form"),
        );
    }
    rep.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_for_k_and_fails_for_cauchy() {
        let rep = check_reflectionless(20, 1, Kernel::ThreeRevolutions);
        assert!(rep.passed(), "{:?}", rep.summary);
        assert!(rep.records_consistent());
        let neg = check_reflectionless(20, 1, Kernel::Cauchy);
        assert!(!neg.passed());
    }
}
