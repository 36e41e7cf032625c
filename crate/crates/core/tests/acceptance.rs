//! Acceptance run: one line per criterion, `PASS` or `FAIL`.
//!
//! Runs without the libtest harness so the lines are always shown. Known
//! failures are printed as `FAIL (known)` and only affect the exit status
//! when `ACCEPTANCE_STRICT=1`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cantor_kernel::construction::{build_hierarchy, pack_squares, verify_separation, ConstructionTree, Coverage, RadiiSchedule};
use cantor_kernel::experiments::{self as exp, ExperimentReport, PvSpec, SweepSpec, CTILDE};
use cantor_kernel::integrals::{adaptive_quadrature, annulus_cap_integral, disc_integral, polygon_integral};
use cantor_kernel::{AnnulusCap, Disc, Kernel, Region};

struct Line {
    id: &'static str,
    passed: bool,
    known: bool,
    detail: String,
}

struct Run {
    lines: Vec<Line>,
}

impl Run {
    fn line(&mut self, id: &'static str, passed: bool, detail: impl Into<String>) {
        self.push(id, passed, false, detail.into());
    }

    fn known(&mut self, id: &'static str, passed: bool, detail: impl Into<String>) {
        self.push(id, passed, !passed, detail.into());
    }

    fn push(&mut self, id: &'static str, passed: bool, known: bool, detail: String) {
        let tag = match (passed, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:<4} {tag:<13} {detail}");
        self.lines.push(Line { id, passed, known, detail });
    }

    fn report(&mut self, id: &'static str, rep: &ExperimentReport, checks: &[&str]) -> bool {
        let mut ok = rep.records_consistent();
        let mut parts = Vec::new();
        for name in checks {
            match rep.summary.checks.iter().find(|c| c.name == *name) {
                Some(c) => {
                    ok &= c.passed;
                    parts.push(format!("{}: {}", c.name, c.detail));
                }
                None => {
                    ok = false;
                    parts.push(format!("{name}: missing"));
                }
            }
        }
        // Checks not listed (e.g. evaluation failures) must pass too.
        for c in rep.summary.checks.iter().filter(|c| !checks.contains(&c.name.as_str())) {
            if !c.passed && c.name != "counting_decay" {
                ok = false;
                parts.push(format!("{}: {}", c.name, c.detail));
            }
        }
        self.line(id, ok, parts.join("; "));
        ok
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn build(ratios: &[u64], depth: usize) -> ConstructionTree {
    build_hierarchy(&RadiiSchedule::from_ratios(ratios).unwrap(), depth).unwrap()
}

fn default_tree(depth: usize) -> ConstructionTree {
    build_hierarchy(&RadiiSchedule::desk_default(), depth).unwrap()
}

fn runtime(run: &mut Run, id: &'static str, took: Duration, budget_s: u64) {
    run.line(
        id,
        took <= Duration::from_secs(budget_s),
        format!("runtime {:.2} s (budget {budget_s} s)", took.as_secs_f64()),
    );
}

fn criterion_1(run: &mut Run) {
    let (rep, took) = timed(|| exp::check_reflectionless(100, 1, Kernel::ThreeRevolutions));
    run.report("1", &rep, &["closed_form_zero", "quadrature_small", "exterior_control"]);
    let neg = exp::check_reflectionless(20, 1, Kernel::Cauchy);
    run.line("1ctl", !neg.passed(), "negative control: the Cauchy kernel 1/z fails the interior check");
    runtime(run, "1t", took, 10);
}

/// Agreement to 1e−8 relative, or absolute below 1e−6.
fn agrees(a: Complex64, b: Complex64) -> bool {
    let d = (a - b).norm();
    if b.norm() < 1e-6 {
        d <= 1e-8
    } else {
        d <= 1e-8 * b.norm()
    }
}

fn criterion_2(run: &mut Run) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // Oracle tolerance, a hundredfold below the criterion.
    let tol = 1e-10;
    let golden = disc_integral(&Disc::new(Complex64::new(0.0, 0.0), 1.0).unwrap(), Complex64::new(2.0, 0.0)).value;
    run.line("2g", (golden - 0.375).norm() <= 1e-15, format!("∫_B(0,1) K(2−ξ) dm₂ = {golden}"));

    let mut bad = [0usize; 3];
    for _ in 0..100 {
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r = rng.gen_range(0.1..1.5);
        let d = Disc::new(c, r).unwrap();
        let w = c + Complex64::from_polar(r * rng.gen_range(1.01..5.0), rng.gen_range(-PI..PI));
        let q = adaptive_quadrature(&Region::Disc(d), w, tol).map(|r| r.value);
        bad[0] += usize::from(!q.is_ok_and(|q| agrees(disc_integral(&d, w).value, q)));

        // Star-shaped about c with angular gaps < π: simple and
        // counterclockwise. ω inside or outside.
        let k = rng.gen_range(4..9);
        let th: Vec<f64> = (0..k).map(|i| 2.0 * PI * (i as f64 + rng.gen_range(0.0..0.8)) / k as f64).collect();
        let verts: Vec<Complex64> = th.iter().map(|&a| c + Complex64::from_polar(rng.gen_range(0.3..1.0), a)).collect();
        let w = c + Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let exact = polygon_integral(&verts, w).unwrap().value;
        let q = adaptive_quadrature(&Region::Polygon(verts), w, tol).map(|r| r.value);
        bad[1] += usize::from(!q.is_ok_and(|q| agrees(exact, q)));

        let clip = Disc::new(c + Complex64::from_polar(rng.gen_range(0.0..1.5), rng.gen_range(-PI..PI)), rng.gen_range(0.2..1.2)).unwrap();
        let cap = AnnulusCap::new(c, rng.gen_range(0.2..1.5), Some(clip)).unwrap();
        let exact = annulus_cap_integral(&cap).unwrap().value;
        let q = adaptive_quadrature(&Region::AnnulusCap(cap), cap.center, tol).map(|r| r.value);
        bad[2] += usize::from(!q.is_ok_and(|q| agrees(exact, q)));
    }
    run.line(
        "2",
        bad == [0, 0, 0],
        format!(
            "mismatches vs quadrature oracle: disc {}/100, polygon {}/100, annulus cap {}/100",
            bad[0], bad[1], bad[2]
        ),
    );
    runtime(run, "2t", t.elapsed(), 60);
}

fn criterion_3(run: &mut Run) {
    let (rep, took) = timed(|| exp::ctilde_experiment(1e-13, 1000));
    let v = rep.summary.constants.get("ctilde").copied().unwrap_or(f64::NAN);
    run.report("3", &rep, &["ctilde_1d", "ctilde_grid", "ctilde_cap", "region_i_im", "region_ii_minus_iii"]);
    run.line("3g", (v - CTILDE).abs() <= 1e-6, format!("c̃ = {v} (frozen {CTILDE})"));
    runtime(run, "3t", took, 30);
}

fn criterion_4(run: &mut Run) {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (big_r, ratio) in [(1.0, 128u64), (1.0, 256), (1.0 / 128.0, 128)] {
        let p = pack_squares(big_r, ratio).unwrap();
        let count = p.squares.len() as u64 == ratio;
        let disjoint = p.interiors_disjoint();
        let contained = p.max_extent() <= p.containment_radius();
        let c = p.symmetric_difference_constant();
        ok &= count && disjoint && contained && c <= 10.0;
        parts.push(format!(
            "R={big_r}, R/r={ratio}: count {} disjoint {disjoint} extent {:.4}≤{:.4} C={c:.3}",
            p.squares.len(),
            p.max_extent() / big_r,
            p.containment_radius() / big_r
        ));
    }
    run.line("4", ok, parts.join("; "));
    runtime(run, "4t", t.elapsed(), 10);
}

fn criterion_5(run: &mut Run) {
    let rep = verify_separation(&build(&[128, 128], 2), Coverage::Exhaustive, 1e-12);
    run.line(
        "5a",
        rep.passed(),
        format!("depth 2 [128,128] exhaustive: {} violations", rep.total_violations()),
    );
    let (rep, took) = timed(|| {
        let t = default_tree(3);
        verify_separation(
            &t,
            Coverage::Sampled {
                nodes: 100_000,
                seed: 5,
            },
            1e-12,
        )
    });
    let pairs: u64 = rep.levels.iter().map(|l| l.pairs_checked).sum();
    run.line(
        "5b",
        rep.passed(),
        format!("depth 3 sampled: {} violations over {pairs} index pairs", rep.total_violations()),
    );
    runtime(run, "5t", took, 120);
}

fn criterion_6(run: &mut Run) {
    let t = Instant::now();
    let r2 = exp::measure_properties(&default_tree(2), 10_000, 6);
    let r3 = exp::measure_properties(&default_tree(3), 10_000, 6);
    let ok2 = run.report("6a", &r2, &["total_mass", "enlarged_disc_masses", "growth_finite"]);
    let ok3 = run.report("6b", &r3, &["total_mass", "enlarged_disc_masses", "growth_finite"]);
    let (c2, c3) = (r2.summary.constants["growth_constant"], r3.summary.constants["growth_constant"]);
    run.line(
        "6c",
        ok2 && ok3 && (c3 / c2 - 1.0).abs() <= 0.1,
        format!("C₀: depth 2 {c2:.4}, depth 3 {c3:.4} (change {:+.2}%)", 100.0 * (c3 / c2 - 1.0)),
    );
    runtime(run, "6t", t.elapsed(), 120);
}

fn criterion_7(run: &mut Run) {
    let t = Instant::now();
    let spec = SweepSpec::default();
    let coarse = exp::boundedness_sweep(&default_tree(2), &spec);
    let fine = exp::compare_depths(&coarse, exp::boundedness_sweep(&default_tree(3), &spec));
    run.report(
        "7",
        &fine,
        &[
            "far_field",
            "fast_matches_exact",
            "scale_profile",
            "sample_size",
            "sup_stable_in_depth",
            "scale_constant_stable_in_depth",
        ],
    );
    runtime(run, "7t", t.elapsed(), 600);
}

fn criterion_8(run: &mut Run) {
    let t = Instant::now();
    let tree = default_tree(3);
    let rep = exp::pv_failure(&tree, &PvSpec::default());
    let points = rep.records.iter().filter(|r| r.experiment == "annulus_t").count();
    run.line("8n", points >= 100, format!("{points} boundary points on levels 1 and 2"));
    run.report("8a", &rep, &["annulus_lower_bound", "lipschitz_drift"]);
    let osc = rep.records.iter().filter(|r| r.experiment == "truncation_oscillation").all(|r| r.pass);
    let ok = run.report("8b", &rep, &["truncation_additivity"]);
    run.line("8b'", ok && osc, "truncated T1 at ρ = r_n and r_n/2 differ by ≥ c̃/4 everywhere sampled");
    let count = rep.summary.checks.iter().find(|c| c.name == "counting_decay").unwrap();
    run.known("8c", count.passed, &count.detail);

    let mut moved = tree.clone();
    for j in 0..moved.level_len(1) {
        let by = Complex64::new(3.0 * moved.core_radius(1), 0.0);
        moved.displace_node(1, j, by);
    }
    let neg = exp::pv_failure(&moved, &PvSpec { trials: 20, ..PvSpec::default() });
    let neg_fails = neg.summary.checks.iter().any(|c| c.name == "annulus_lower_bound" && !c.passed);
    run.line("8ctl", neg_fails, "negative control: displaced level-1 discs fail the annulus bound");
    runtime(run, "8t", t.elapsed(), 600);
}

fn criterion_9(run: &mut Run) {
    let (rep, took) = timed(|| exp::density_decay(&default_tree(3), 200, 9));
    run.report("9", &rep, &["at_most_one_disc", "density_bound", "density_decay"]);
    runtime(run, "9t", took, 60);
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn criterion_10(run: &mut Run) {
    let tree = build(&[112, 128], 2);
    let jobs: Vec<(&str, Box<dyn Fn() -> ExperimentReport + Sync>)> = vec![
        ("reflectionless", Box::new(|| exp::check_reflectionless(30, 10, Kernel::ThreeRevolutions))),
        ("measure", Box::new(|| exp::measure_properties(&tree, 500, 10))),
        (
            "boundedness",
            Box::new(|| {
                exp::boundedness_sweep(
                    &tree,
                    &SweepSpec {
                        per_stratum: 20,
                        ..SweepSpec::default()
                    },
                )
            }),
        ),
        ("pv_failure", Box::new(|| exp::pv_failure(&tree, &PvSpec { trials: 20, ..PvSpec::default() }))),
        ("density", Box::new(|| exp::density_decay(&tree, 100, 10))),
    ];
    let mut same = Vec::new();
    for (name, job) in &jobs {
        let a = in_pool(1, job);
        let b = in_pool(4, job);
        let c = in_pool(4, job);
        let ok = a.to_csv() == b.to_csv() && b.to_csv() == c.to_csv() && a.summary_json() == b.summary_json() && b.summary_json() == c.summary_json();
        same.push((name, ok));
    }
    run.line(
        "10",
        same.iter().all(|x| x.1),
        format!("CSV and JSON byte-identical over 1/4/4 threads: {same:?}"),
    );
}

fn main() {
    // Filter and libtest flags are accepted but ignored.
    let mut run = Run { lines: Vec::new() };
    println!("acceptance: default schedule {:?}", RadiiSchedule::desk_default().ratios());
    criterion_1(&mut run);
    criterion_2(&mut run);
    criterion_3(&mut run);
    criterion_4(&mut run);
    criterion_5(&mut run);
    criterion_6(&mut run);
    criterion_7(&mut run);
    criterion_8(&mut run);
    criterion_9(&mut run);
    criterion_10(&mut run);

    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let failed: Vec<&Line> = run.lines.iter().filter(|l| !l.passed && (strict || !l.known)).collect();
    let known: Vec<&Line> = run.lines.iter().filter(|l| l.known).collect();
    println!(
        "acceptance: {} lines, {} failed, {} known failures{}",
        run.lines.len(),
        run.lines.iter().filter(|l| !l.passed).count(),
        known.len(),
        if strict { " (strict)" } else { "" }
    );
    for l in &known {
        println!("known failure {}: {}", l.id, l.detail);
    }
    if !failed.is_empty() {
        for l in failed {
            println!("failed {}: {}", l.id, l.detail);
        }
        std::process::exit(1);
    }
}
