mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cantor_kernel::construction::{
    build_hierarchy, render_node_svg, verify_separation, ConstructionTree, Coverage, SeparationReport, TreeFile,
};
use cantor_kernel::experiments::{self as exp, ExperimentReport, PvSpec, SweepSpec};
use cantor_kernel::measure::{LevelMeasure, MeasureError};
use cantor_kernel::{ComplexPoint, Kernel};

use config::{ConfigError, Format, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "cantor", version, about = "Build the disc hierarchy, evaluate T(1) and run the checks")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    cmd: Command,
}

/// Flags override values from `--config`.
#[derive(clap::Args, Debug)]
struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Successive ratios r_{n−1}/r_n, e.g. 112,128,144.
    #[arg(long, global = true, value_delimiter = ',')]
    schedule: Option<Vec<u64>>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance of the accelerated evaluator.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Load the tree from a file written by `build` instead of building it.
    #[arg(long, global = true)]
    tree: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the hierarchy, print level counts and a separation summary.
    Build,
    /// Check the separation properties.
    Verify {
        /// Check every node instead of a sample.
        #[arg(long)]
        exhaustive: bool,
        /// Nodes per level in sampled mode.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Run one experiment and write its report.
    Experiment { name: ExperimentName },
    /// Print T(1) at the given points (e.g. 10+0i, -0.5+2i).
    Eval {
        #[arg(required = true, allow_hyphen_values = true)]
        points: Vec<String>,
        /// Also evaluate with the far-field expansion.
        #[arg(long)]
        fast: bool,
        /// Measure level (default: the tree depth).
        #[arg(long)]
        level: Option<usize>,
    },
    /// Write an SVG of one node, or of truncated T(1) against ρ.
    Render {
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Plot ρ ↦ truncated T(1)(z, ρ) at this point instead.
        #[arg(long, allow_hyphen_values = true)]
        oscillation: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentName {
    Reflectionless,
    Ctilde,
    Measure,
    Boundedness,
    PvFailure,
    Density,
}

impl ExperimentName {
    fn stem(self) -> &'static str {
        match self {
            Self::Reflectionless => "reflectionless",
            Self::Ctilde => "ctilde",
            Self::Measure => "measure",
            Self::Boundedness => "boundedness",
            Self::PvFailure => "pv_failure",
            Self::Density => "density",
        }
    }
}

/// Exit status; the discriminants are the process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok = 0,
    Failed = 1,
    Config = 2,
    OnSupport = 3,
}

#[derive(Debug)]
struct Fail(Status, String);

impl From<ConfigError> for Fail {
    fn from(e: ConfigError) -> Self {
        Fail(Status::Config, e.to_string())
    }
}

fn failed(e: impl std::fmt::Display) -> Fail {
    Fail(Status::Failed, e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let status = match run(&cli, started) {
        Ok(s) => s,
        Err(Fail(s, msg)) => {
            eprintln!("error: {msg}");
            s
        }
    };
    ExitCode::from(status as u8)
}

fn resolve(o: &Overrides) -> Result<RunConfig, Fail> {
    let mut c = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &o.schedule {
        c.schedule.clone_from(s);
    }
    if let Some(d) = o.depth {
        c.depth = d;
    }
    if let Some(s) = o.seed {
        c.seed = s;
    }
    if let Some(t) = o.tol {
        c.tol = t;
    }
    if let Some(p) = &o.out {
        c.out.clone_from(p);
    }
    if let Some(t) = o.threads {
        c.threads = Some(t);
    }
    if let Some(f) = &o.format {
        c.formats.clone_from(f);
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: &Cli, started: Instant) -> Result<Status, Fail> {
    let mut cfg = resolve(&cli.opts)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(failed)?;
    }
    let tree = if let Some(p) = &cli.opts.tree {
        let text = std::fs::read_to_string(p).map_err(|e| Fail(Status::Config, format!("{}: {e}", p.display())))?;
        let t = TreeFile::from_json(&text)
            .and_then(TreeFile::into_tree)
            .map_err(|e| Fail(Status::Config, format!("{}: {e}", p.display())))?;
        cfg.schedule = t.schedule().ratios().to_vec();
        cfg.depth = t.depth();
        Some(t)
    } else {
        None
    };
    let get_tree = |cfg: &RunConfig| -> Result<ConstructionTree, Fail> {
        match &tree {
            Some(t) => Ok(t.clone()),
            None => build_hierarchy(&cfg.radii()?, cfg.depth).map_err(failed),
        }
    };
    let out = Output { cfg: &cfg, started };

    match &cli.cmd {
        Command::Build => {
            let t = get_tree(&cfg)?;
            for n in 1..=t.depth() {
                println!("level {n}: {} nodes", t.level_len(n));
            }
            if t.depth() == 0 {
                println!("level 0: 1 node (root disc only)");
            }
            let rep = verify_separation(&t, auto_coverage(&t, cfg.seed), 1e-12);
            print_separation(&rep);
            if cfg.wants(Format::Json) {
                let json = TreeFile::from_tree(&t).to_json().map_err(failed)?;
                out.write("tree", "json", &json)?;
            }
            Ok(pass_status(rep.passed()))
        }
        Command::Verify { exhaustive, samples } => {
            let t = get_tree(&cfg)?;
            let coverage = if *exhaustive {
                Coverage::Exhaustive
            } else {
                Coverage::Sampled {
                    nodes: *samples,
                    seed: cfg.seed,
                }
            };
            let rep = verify_separation(&t, coverage, 1e-12);
            print_separation(&rep);
            if cfg.wants(Format::Json) {
                out.write("verify", "json", &serde_json::to_string_pretty(&rep).map_err(failed)?)?;
            }
            Ok(pass_status(rep.passed()))
        }
        Command::Experiment { name } => {
            let rep = run_experiment(*name, &cfg, &get_tree)?;
            for c in &rep.summary.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for (k, v) in &rep.summary.constants {
                println!("  {k} = {v}");
            }
            let stem = name.stem();
            if cfg.wants(Format::Csv) {
                out.write(stem, "csv", &rep.to_csv())?;
            }
            if cfg.wants(Format::Json) {
                out.write(stem, "json", &rep.summary_json())?;
            }
            if cfg.wants(Format::Svg) && *name == ExperimentName::PvFailure {
                let t = get_tree(&cfg)?;
                let z = t.centers(1)[0] + ComplexPoint::new(t.enlarged_radius(1), 0.0);
                let svg = exp::pv_oscillation_svg(&t, z, t.core_radius(t.depth()), 2.0, 64).map_err(measure_fail)?;
                out.write("pv_oscillation", "svg", &svg)?;
            }
            Ok(pass_status(rep.passed()))
        }
        Command::Eval { points, fast, level } => {
            let t = get_tree(&cfg)?;
            let level = level.unwrap_or(t.depth());
            let m = LevelMeasure::new(&t, level).map_err(|e| Fail(Status::Config, e.to_string()))?;
            let mut rows = Vec::new();
            for p in points {
                let z = parse_point(p)?;
                let exact = m.t1_exact(z).map_err(measure_fail)?;
                println!("z = {z}: t1_exact = {} (error bound {:e})", exact.value, exact.error_bound);
                let mut row = EvalRow {
                    z: [z.re, z.im],
                    level,
                    t1_exact: [exact.value.re, exact.value.im],
                    error_bound: exact.error_bound,
                    t1_fast: None,
                };
                if *fast {
                    let (v, st) = m.t1_fast(z, cfg.tol).map_err(measure_fail)?;
                    println!("z = {z}: t1_fast = {} ({} node visits)", v.value, st.visits());
                    row.t1_fast = Some([v.value.re, v.value.im]);
                }
                rows.push(row);
            }
            if cfg.wants(Format::Json) {
                out.write("eval", "json", &serde_json::to_string_pretty(&rows).map_err(failed)?)?;
            }
            Ok(Status::Ok)
        }
        Command::Render {
            level,
            index,
            oscillation,
        } => {
            let t = get_tree(&cfg)?;
            if let Some(p) = oscillation {
                let z = parse_point(p)?;
                let svg = exp::pv_oscillation_svg(&t, z, t.core_radius(t.depth()), 2.0, 64).map_err(measure_fail)?;
                out.write("oscillation", "svg", &svg)?;
            } else {
                if *level > t.depth() || *index >= t.level_len(*level) {
                    return Err(Fail(Status::Config, format!("no node ({level}, {index}) in a depth-{} tree", t.depth())));
                }
                out.write(&format!("node_{level}_{index}"), "svg", &render_node_svg(&t, *level, *index))?;
            }
            Ok(Status::Ok)
        }
    }
}

fn run_experiment(
    name: ExperimentName,
    cfg: &RunConfig,
    get_tree: &dyn Fn(&RunConfig) -> Result<ConstructionTree, Fail>,
) -> Result<ExperimentReport, Fail> {
    let e = &cfg.experiments;
    Ok(match name {
        ExperimentName::Reflectionless => exp::check_reflectionless(e.reflectionless_trials, cfg.seed, Kernel::ThreeRevolutions),
        ExperimentName::Ctilde => exp::ctilde_experiment(e.ctilde_tol, e.ctilde_grid),
        ExperimentName::Measure => exp::measure_properties(&get_tree(cfg)?, e.growth_samples, cfg.seed),
        ExperimentName::Boundedness => {
            let spec = SweepSpec {
                per_stratum: e.sweep_per_stratum,
                seed: cfg.seed,
                fast_tol: cfg.tol,
                use_fast: true,
                decompose_per_level: e.sweep_decompose_per_level,
            };
            let t = get_tree(cfg)?;
            let fine = exp::boundedness_sweep(&t, &spec);
            if t.depth() >= 2 {
                let coarse_tree = build_hierarchy(t.schedule(), t.depth() - 1).map_err(failed)?;
                exp::compare_depths(&exp::boundedness_sweep(&coarse_tree, &spec), fine)
            } else {
                fine
            }
        }
        ExperimentName::PvFailure => {
            let spec = PvSpec {
                trials: e.pv_trials,
                seed: cfg.seed,
                c0: e.c0,
                ..PvSpec::default()
            };
            exp::pv_failure(&get_tree(cfg)?, &spec)
        }
        ExperimentName::Density => exp::density_decay(&get_tree(cfg)?, e.density_samples, cfg.seed),
    })
}

#[derive(Serialize)]
struct EvalRow {
    z: [f64; 2],
    level: usize,
    t1_exact: [f64; 2],
    error_bound: f64,
    t1_fast: Option<[f64; 2]>,
}

fn measure_fail(e: MeasureError) -> Fail {
    match e {
        MeasureError::OnSupport { .. } => Fail(Status::OnSupport, e.to_string()),
        MeasureError::BadRadius(_) | MeasureError::Level { .. } => Fail(Status::Config, e.to_string()),
        _ => failed(e),
    }
}

fn parse_point(s: &str) -> Result<ComplexPoint, Fail> {
    let z: ComplexPoint = s
        .trim()
        .parse()
        .map_err(|_| Fail(Status::Config, format!("cannot parse point {s:?} (expected e.g. 1.5-2i)")))?;
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Fail(Status::Config, format!("point {s:?} is not finite")))
    }
}

fn pass_status(ok: bool) -> Status {
    if ok {
        Status::Ok
    } else {
        Status::Failed
    }
}

/// Exhaustive up to 10⁵ nodes on the deepest level, sampled beyond.
fn auto_coverage(t: &ConstructionTree, seed: u64) -> Coverage {
    if t.level_len(t.depth()) <= 100_000 {
        Coverage::Exhaustive
    } else {
        Coverage::Sampled { nodes: 100_000, seed }
    }
}

fn print_separation(rep: &SeparationReport) {
    for l in &rep.levels {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4e}"));
        println!(
            "separation level {}: threshold {:.4e}, min pair distance {}, min square clearance {}, {} pairs, {} violations",
            l.level,
            l.threshold,
            fmt(l.min_pair_distance),
            fmt(l.min_square_clearance),
            l.pairs_checked,
            l.violations
        );
    }
    println!(
        "separation: {} ({} violations)",
        if rep.passed() { "pass" } else { "FAIL" },
        rep.total_violations()
    );
}

struct Output<'a> {
    cfg: &'a RunConfig,
    started: Instant,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    file: String,
    tool: &'static str,
    version: &'static str,
    args: Vec<String>,
    config: &'a RunConfig,
    threads: usize,
    unix_time: u64,
    elapsed_seconds: f64,
}

impl Output<'_> {
    /// Writes `<out>/<stem>.<ext>` plus `<stem>.<ext>.meta.json` carrying
    /// the provenance that must stay out of the data file.
    fn write(&self, stem: &str, ext: &str, body: &str) -> Result<(), Fail> {
        let dir = &self.cfg.out;
        std::fs::create_dir_all(dir).map_err(|e| failed(format!("{}: {e}", dir.display())))?;
        let file = format!("{stem}.{ext}");
        let path = dir.join(&file);
        write_file(&path, body)?;
        let meta = Sidecar {
            file: file.clone(),
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            args: std::env::args().collect(),
            config: self.cfg,
            threads: rayon::current_num_threads(),
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
        };
        let meta = serde_json::to_string_pretty(&meta).map_err(failed)?;
        write_file(&dir.join(format!("{file}.meta.json")), &meta)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), Fail> {
    std::fs::write(path, body).map_err(|e| failed(format!("{}: {e}", path.display())))
}
