use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ExperimentReport, Parameters, Record, Rule};
use crate::construction::ConstructionTree;
use crate::geometry::{ComplexPoint, Disc};
use crate::measure::LevelMeasure;

/// Density of the deepest measure at the scale `ρ_n = ¼√(r_{n−1} r_n)`.
///
/// For `samples` points per level `n ≤ m`, each within `ρ_n` of a random
/// level-`n` centre: `B(z, ρ_n)` must meet at most one level-`n` enlarged
/// disc, and `μ(B(z, ρ_n))/ρ_n ≤ 8√(r_n/r_{n−1})`. The per-level maximum of
/// that ratio must decrease strictly with `n`.
pub fn density_decay(tree: &ConstructionTree, samples: usize, seed: u64) -> ExperimentReport {
    let m = tree.depth();
    let sched = tree.schedule();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<(usize, ComplexPoint)> = Vec::new();
    for n in 1..=m {
        let rho = 0.25 * sched.geometric_mean(n);
        for _ in 0..samples {
            let c = tree.centers(n)[rng.gen_range(0..tree.level_len(n))];
            let u = rho * rng.gen::<f64>().sqrt();
            pts.push((n, c + Complex64::from_polar(u, rng.gen_range(-PI..PI))));
        }
    }
    let measure = LevelMeasure::deepest(tree);
    let rows: Vec<(usize, f64)> = pts
        .par_iter()
        .map(|&(n, z)| {
            let rho = 0.25 * sched.geometric_mean(n);
            let enl = tree.enlarged_radius(n);
            let meets = tree
                .nodes_near(z, n, rho + enl)
                .into_iter()
                .filter(|&j| (tree.centers(n)[j] - z).norm() < rho + enl)
                .count();
            (meets, measure.mass_on_disc(&Disc::new_unchecked(z, rho)) / rho)
        })
        .collect();

    let mut params = Parameters {
        schedule: Some(sched.ratios().to_vec()),
        depth: Some(m),
        seed: Some(seed),
        ..Parameters::default()
    };
    params.values.insert("samples".into(), samples as f64);
    let mut rep = ExperimentReport::new("density", params);
    let mut one_ok = true;
    let mut bound_ok = true;
    let mut max_by = vec![0.0f64; m + 1];
    for (&(n, z), &(meets, dens)) in pts.iter().zip(&rows) {
        let rho = 0.25 * sched.geometric_mean(n);
        let one = Record::new("discs_met", Some(n), z, rho, Complex64::new(meets as f64, 0.0), 1.0, Rule::AtMost);
        one_ok &= one.pass;
        rep.records.push(one);
        let bound = 8.0 * (sched.radius(n) / sched.radius(n - 1)).sqrt();
        let d = Record::new("density", Some(n), z, rho, Complex64::new(dens, 0.0), bound, Rule::AtMost);
        bound_ok &= d.pass;
        rep.records.push(d);
        max_by[n] = max_by[n].max(dens);
    }
    for n in 1..=m {
        rep.constant(&format!("max_density_{n}"), max_by[n]);
    }
    let decreasing = max_by[1..].windows(2).all(|w| w[1] < w[0]);
    rep.check("at_most_one_disc", one_ok, "B(z, ¼√(r_{n−1}r_n)) meets ≤ 1 level-n enlarged disc");
    rep.check("density_bound", bound_ok, "μ(B(z,ρ_n))/ρ_n ≤ 8√(r_n/r_{n−1})");
    rep.check(
        "density_decay",
        decreasing,
        format!("per-level maxima {:?} strictly decrease", &max_by[1..]),
    );
    rep.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_hierarchy, RadiiSchedule};

    #[test]
    fn decays_for_growing_ratios_only() {
        let t = build_hierarchy(&RadiiSchedule::from_ratios(&[112, 128]).unwrap(), 2).unwrap();
        let rep = density_decay(&t, 50, 3);
        assert!(rep.passed(), "{:#?}", rep.summary);
        assert!(rep.records_consistent());
        // A constant ratio makes the maxima equal up to sampling: no decay.
        let flat = build_hierarchy(&RadiiSchedule::from_ratios(&[128, 128]).unwrap(), 2).unwrap();
        let rep = density_decay(&flat, 50, 3);
        let m1 = rep.summary.constants["max_density_1"];
        let m2 = rep.summary.constants["max_density_2"];
        assert!((m1 - m2).abs() < 0.05 * m1, "{m1} {m2}");
    }
}
