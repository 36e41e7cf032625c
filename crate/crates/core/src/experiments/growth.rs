use num_complex::Complex64;
use rayon::prelude::*;

use super::{ExperimentReport, Parameters, Record, Rule};
use crate::construction::ConstructionTree;
use crate::geometry::{ComplexPoint, Disc};
use crate::measure::LevelMeasure;

/// Tolerance of the exact mass identities.
pub const MASS_TOL: f64 = 1e-12;

/// Total mass, mass of every enlarged disc at every level, and the
/// empirical growth constant `C₀ = max μ(B(z,r))/r` over `samples`
/// random discs, all for the deepest level measure.
pub fn measure_properties(tree: &ConstructionTree, samples: usize, seed: u64) -> ExperimentReport {
    let m = tree.depth();
    let measure = LevelMeasure::deepest(tree);
    let mut params = Parameters {
        schedule: Some(tree.schedule().ratios().to_vec()),
        depth: Some(m),
        seed: Some(seed),
        ..Parameters::default()
    };
    params.values.insert("samples".into(), samples as f64);
    let mut rep = ExperimentReport::new("measure", params);
    let z0 = ComplexPoint::new(0.0, 0.0);

    let total = measure.mass_on_disc(&Disc::new_unchecked(z0, 3.0));
    let rec = Record::new("total_mass_error", None, z0, 3.0, Complex64::new(total - 1.0, 0.0), MASS_TOL, Rule::AtMost);
    rep.check("total_mass", rec.pass, format!("μ(B(0,3)) = {total}"));
    rep.records.push(rec);

    let mut all = true;
    for k in 0..=m {
        let rk = tree.core_radius(k);
        // Worst deviation over every node of the level.
        let (worst, at) = (0..tree.level_len(k))
            .into_par_iter()
            .map(|j| {
                let d = tree.node(k, j).enlarged_disc();
                ((measure.mass_on_disc(&d) - rk).abs(), j)
            })
            .reduce(|| (0.0, 0), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        let rec = Record::new(
            "enlarged_disc_mass_error",
            Some(k),
            tree.centers(k)[at],
            tree.enlarged_radius(k),
            Complex64::new(worst / rk, 0.0),
            MASS_TOL,
            Rule::AtMost,
        );
        all &= rec.pass;
        rep.records.push(rec);
    }
    rep.check("enlarged_disc_masses", all, "μ(B⁽ᵏ⁾ⱼ) = r_k for every node, relative error ≤ 1e−12");

    let growth = measure.growth_scan(samples, seed);
    for s in &growth.samples {
        rep.records.push(Record::new("growth_ratio", None, s.z, s.r, Complex64::new(s.ratio, 0.0), f64::INFINITY, Rule::AtMost));
    }
    rep.constant("total_mass", total);
    rep.constant("growth_constant", growth.max_ratio);
    rep.check(
        "growth_finite",
        growth.max_ratio.is_finite() && growth.max_ratio > 0.0,
        format!("empirical C₀ = {}", growth.max_ratio),
    );
    rep.finish()
}
