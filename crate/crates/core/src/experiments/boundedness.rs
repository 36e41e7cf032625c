use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ExperimentReport, Parameters, Record, Rule};
use crate::construction::ConstructionTree;
use crate::geometry::{ComplexPoint, Square};
use crate::measure::LevelMeasure;

/// Sampling plan for [`boundedness_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    /// Points per stratum (holes, square edges and gaps are per level).
    pub per_stratum: usize,
    pub seed: u64,
    /// Tolerance of the accelerated evaluator.
    pub fast_tol: f64,
    /// Report `t1_fast` as the value (always cross-checked against exact).
    pub use_fast: bool,
    /// Hole points per level that also get the per-scale decomposition.
    pub decompose_per_level: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            per_stratum: 125,
            seed: 7,
            fast_tol: 1e-6,
            use_fast: true,
            decompose_per_level: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stratum {
    Hole,
    SquareEdge,
    Gap,
    NearCore,
    Far,
}

impl Stratum {
    fn name(self) -> &'static str {
        match self {
            Stratum::Hole => "hole",
            Stratum::SquareEdge => "square_edge",
            Stratum::Gap => "gap",
            Stratum::NearCore => "near_core",
            Stratum::Far => "far",
        }
    }
}

struct Sample {
    stratum: Stratum,
    level: Option<usize>,
    z: ComplexPoint,
    decompose: bool,
}

const MAX_TRIES: usize = 10_000;

fn random_in_disc(rng: &mut ChaCha8Rng, c: ComplexPoint, r: f64) -> ComplexPoint {
    c + Complex64::from_polar(r * rng.gen::<f64>().sqrt(), rng.gen_range(-PI..PI))
}

/// Distance from `z` to the nearest level-`n` square (0 inside one).
fn square_distance(tree: &ConstructionTree, z: ComplexPoint, n: usize, search: f64) -> f64 {
    let side = tree.schedule().square_side(n);
    let mut best = search;
    tree.spatial_index(n).for_each_candidate(z, search + side, |j| {
        let c = tree.square_center(n, j).expect("n ≥ 1");
        best = best.min(Square::new_unchecked(c, side).distance_to_point(z));
    });
    best
}

fn draw(tree: &ConstructionTree, spec: &SweepSpec) -> Vec<Sample> {
    let m = tree.depth();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::new();
    let k = spec.per_stratum;
    for n in 1..=m {
        let gm = tree.schedule().geometric_mean(n);
        let side = tree.schedule().square_side(n);
        // Deep inside a level-n hole: in a level-(n−1) enlarged disc, at
        // least ¼√(r_{n−1}r_n) from every level-n square.
        let mut got = 0;
        for _ in 0..k * MAX_TRIES {
            if got == k {
                break;
            }
            let p = tree.node(n - 1, rng.gen_range(0..tree.level_len(n - 1)));
            let z = random_in_disc(&mut rng, p.center(), p.enlarged_disc().radius);
            if square_distance(tree, z, n, 0.25 * gm) >= 0.25 * gm {
                out.push(Sample {
                    stratum: Stratum::Hole,
                    level: Some(n),
                    z,
                    decompose: got < spec.decompose_per_level,
                });
                got += 1;
            }
        }
        // Just off (either side of) a level-n square edge.
        for _ in 0..k {
            let node = tree.node(n, rng.gen_range(0..tree.level_len(n)));
            let sq = node.square().expect("n ≥ 1");
            let along = rng.gen_range(-0.5..0.5) * side;
            let off = rng.gen_range(1e-6f64.ln()..0.1f64.ln()).exp() * side;
            let normal = 0.5 * side + if rng.gen::<bool>() { off } else { -off };
            let rot = Complex64::new(0.0, 1.0).powu(rng.gen_range(0..4));
            out.push(Sample {
                stratum: Stratum::SquareEdge,
                level: Some(n),
                z: sq.center + rot * Complex64::new(normal, along),
                decompose: false,
            });
        }
        // Between an enlarged disc and the boundary of its square.
        let enl = tree.enlarged_radius(n);
        let mut got = 0;
        for _ in 0..k * MAX_TRIES {
            if got == k {
                break;
            }
            let node = tree.node(n, rng.gen_range(0..tree.level_len(n)));
            let sq = node.square().expect("n ≥ 1");
            let z = sq.center + Complex64::new(rng.gen_range(-0.5..0.5) * side, rng.gen_range(-0.5..0.5) * side);
            if (z - node.center()).norm() > enl {
                out.push(Sample {
                    stratum: Stratum::Gap,
                    level: Some(n),
                    z,
                    decompose: false,
                });
                got += 1;
            }
        }
    }
    let rm = tree.core_radius(m);
    for _ in 0..k {
        let c = tree.centers(m)[rng.gen_range(0..tree.level_len(m))];
        let delta = rng.gen_range(1e-6f64.ln()..0.0).exp();
        out.push(Sample {
            stratum: Stratum::NearCore,
            level: Some(m),
            z: c + Complex64::from_polar(rm * (1.0 + delta), rng.gen_range(-PI..PI)),
            decompose: false,
        });
    }
    for _ in 0..k {
        out.push(Sample {
            stratum: Stratum::Far,
            level: None,
            z: Complex64::from_polar(rng.gen_range(4.0..20.0), rng.gen_range(-PI..PI)),
            decompose: false,
        });
    }
    out
}

struct Eval {
    exact: Complex64,
    fast: Option<Complex64>,
    visits: usize,
    /// `(k, |contribution_k|, √s_k + √(ε/r_{k−1}))` for `k ≤ q`.
    scales: Vec<(usize, Complex64, f64)>,
}

/// `sup |T(1)|` over a stratified off-support sample of the deepest level.
///
/// Strata: deep inside level-`n` holes, just off level-`n` square edges,
/// in the gap between level-`n` enlarged discs and their squares (each for
/// every `n ≤ m`), near the level-`m` core discs, and the far field
/// `4 ≤ |z| ≤ 20`, where `|T1| ≤ 2/(|z| − 2)` is asserted. Hole points also
/// get `T1` telescoped along the nearest disc's ancestry; each scale's
/// contribution is normalized by `√s_k + √(ε/r_{k−1})` and the normalized
/// constants must not grow with `k` (at most doubling the running max).
pub fn boundedness_sweep(tree: &ConstructionTree, spec: &SweepSpec) -> ExperimentReport {
    let m = tree.depth();
    let measure = LevelMeasure::deepest(tree);
    let samples = draw(tree, spec);
    let sched = tree.schedule();
    let evals: Vec<Option<Eval>> = samples
        .par_iter()
        .map(|s| {
            let exact = measure.t1_exact(s.z).ok()?.value;
            let (fast, visits) = if spec.use_fast {
                let (r, st) = measure.t1_fast(s.z, spec.fast_tol).ok()?;
                (Some(r.value), st.visits())
            } else {
                (None, measure.leaf_count())
            };
            let mut scales = Vec::new();
            if s.decompose {
                let d = measure.scale_decomposition(s.z).ok()?;
                let q = (1..=m).find(|&k| sched.radius(k) <= d.epsilon).unwrap_or(m);
                for k in 1..=q {
                    let shape = sched.s(k).sqrt() + (d.epsilon / sched.radius(k - 1)).sqrt();
                    scales.push((k, d.contributions[k - 1], shape));
                }
            }
            Some(Eval {
                exact,
                fast,
                visits,
                scales,
            })
        })
        .collect();

    let mut params = Parameters {
        schedule: Some(sched.ratios().to_vec()),
        depth: Some(m),
        seed: Some(spec.seed),
        ..Parameters::default()
    };
    params.values.insert("per_stratum".into(), spec.per_stratum as f64);
    params.values.insert("fast_tol".into(), spec.fast_tol);
    let mut rep = ExperimentReport::new("boundedness", params);

    let mut sup = 0.0f64;
    let mut sup_by: Vec<(Stratum, f64)> = Vec::new();
    let mut max_fast_err = 0.0f64;
    let mut far_ok = true;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    let mut visits = 0usize;
    let mut scale_c = vec![0.0f64; m + 1];
    for (s, e) in samples.iter().zip(&evals) {
        let Some(e) = e else {
            skipped += 1;
            continue;
        };
        evaluated += 1;
        visits += e.visits;
        let value = e.fast.unwrap_or(e.exact);
        sup = sup.max(value.norm());
        match sup_by.iter_mut().find(|x| x.0 == s.stratum) {
            Some(x) => x.1 = x.1.max(value.norm()),
            None => sup_by.push((s.stratum, value.norm())),
        }
        let name = format!("t1_{}", s.stratum.name());
        let bound = if s.stratum == Stratum::Far {
            2.0 / (s.z.norm() - 2.0)
        } else {
            f64::INFINITY
        };
        let rec = Record::new(&name, s.level, s.z, 0.0, value, bound, Rule::AtMost);
        far_ok &= rec.pass;
        rep.records.push(rec);
        if let Some(f) = e.fast {
            let err = (f - e.exact).norm();
            max_fast_err = max_fast_err.max(err);
            rep.records.push(Record::new("t1_fast_minus_exact", s.level, s.z, 0.0, f - e.exact, spec.fast_tol, Rule::AtMost));
        }
        for &(k, c, shape) in &e.scales {
            scale_c[k] = scale_c[k].max(c.norm() / shape);
            rep.records.push(Record::new("scale_contribution", Some(k), s.z, shape, c, f64::INFINITY, Rule::AtMost));
        }
    }

    rep.constant("sup_abs_t1", sup);
    for (st, v) in &sup_by {
        rep.constant(&format!("sup_abs_t1_{}", st.name()), *v);
    }
    rep.constant("points", evaluated as f64);
    rep.constant("skipped_on_support", skipped as f64);
    rep.constant("max_fast_error", max_fast_err);
    if evaluated > 0 {
        rep.constant("mean_visits", visits as f64 / evaluated as f64);
        rep.constant("leaves", measure.leaf_count() as f64);
    }
    let measured: Vec<(usize, f64)> = (1..=m).filter(|&k| scale_c[k] > 0.0).map(|k| (k, scale_c[k])).collect();
    for &(k, c) in &measured {
        rep.constant(&format!("scale_constant_{k}"), c);
    }
    let scale_c_max = measured.iter().map(|x| x.1).fold(0.0, f64::max);
    rep.constant("scale_constant", scale_c_max);

    rep.check("far_field", far_ok, "|T1(z)| ≤ 2/(|z|−2) for 4 ≤ |z| ≤ 20");
    if spec.use_fast {
        rep.check(
            "fast_matches_exact",
            max_fast_err <= spec.fast_tol,
            format!("max |t1_fast − t1_exact| = {max_fast_err:e} (tol {:e})", spec.fast_tol),
        );
    }
    let mut running = 0.0f64;
    let mut monotone = true;
    for &(_, c) in &measured {
        if running > 0.0 && c > 2.0 * running {
            monotone = false;
        }
        running = running.max(c);
    }
    rep.check(
        "scale_profile",
        monotone && !measured.is_empty(),
        format!(
            "normalized per-scale constants {:?} do not grow",
            measured.iter().map(|x| x.1).collect::<Vec<_>>()
        ),
    );
    rep.check("sample_size", evaluated >= 1000 || spec.per_stratum < 125, format!("{evaluated} points"));
    rep.finish()
}

/// `max(a, b)/min(a, b)` for comparing sups across depths.
pub fn sup_ratio(a: f64, b: f64) -> f64 {
    a.max(b) / a.min(b)
}

/// Adds the depth-stability checks to `fine` given the sweep `coarse` one
/// level shallower: the sups differ by a factor ≤ 2, and the per-scale
/// constant at most doubles.
pub fn compare_depths(coarse: &ExperimentReport, mut fine: ExperimentReport) -> ExperimentReport {
    let get = |r: &ExperimentReport, k: &str| r.summary.constants.get(k).copied().unwrap_or(f64::NAN);
    let (a, b) = (get(coarse, "sup_abs_t1"), get(&fine, "sup_abs_t1"));
    let ratio = sup_ratio(a, b);
    fine.constant("sup_abs_t1_coarser", a);
    fine.constant("sup_ratio_across_depths", ratio);
    fine.check("sup_stable_in_depth", ratio <= 2.0, format!("sup |T1|: {a:.6} → {b:.6} (ratio {ratio:.4})"));
    let (ca, cb) = (get(coarse, "scale_constant"), get(&fine, "scale_constant"));
    fine.constant("scale_constant_coarser", ca);
    fine.check(
        "scale_constant_stable_in_depth",
        cb <= 2.0 * ca,
        format!("per-scale constant: {ca:.4} → {cb:.4}"),
    );
    fine.finish()
}
