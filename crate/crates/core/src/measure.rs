//! The level measures `μ⁽ⁿ⁾ = Σⱼ (1/r_n)·χ_{B̃⁽ⁿ⁾ⱼ}·m₂` and the operator
//! `T(1)(z) = ∫ K(z−ξ) dμ⁽ⁿ⁾(ξ)`.
//!
//! Every sum runs over the level-`n` discs in index order, which is the
//! preorder of the tree, with compensated accumulation: results do not
//! depend on how evaluation points are distributed over threads.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::construction::ConstructionTree;
use crate::geometry::{lens_area, ComplexPoint, Disc};
use crate::integrals::{disc_integral_raw, disc_shell_integral, IntegralResult, Method};
use crate::quadrature::QuadratureError;
use crate::summation::{ComplexSum, Neumaier};

/// Points closer than `ON_SUPPORT_FACTOR·r_n` to a core disc are rejected.
pub const ON_SUPPORT_FACTOR: f64 = 1e-9;

/// Order of the far-field expansions used by [`LevelMeasure::t1_fast`].
pub const EXPANSION_ORDER: usize = 16;

/// Relative tolerance (against the whole-disc magnitude) of the radial
/// quadratures inside
/// [`LevelMeasure::annulus_t`] and [`LevelMeasure::truncated_t1`].
pub const CLIP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("point {z} is on the support: distance {distance:e} to disc {index} of level {level}")]
    OnSupport {
        z: ComplexPoint,
        level: usize,
        index: usize,
        distance: f64,
    },
    #[error("level {requested} not built (tree depth {depth})")]
    Level { requested: usize, depth: usize },
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `μ⁽ⁿ⁾` on a built tree. Holds lazily built expansion data for
/// [`t1_fast`](Self::t1_fast).
pub struct LevelMeasure<'a> {
    tree: &'a ConstructionTree,
    level: usize,
    far: OnceLock<FarField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthSample {
    pub z: ComplexPoint,
    pub r: f64,
    pub mass: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub samples: Vec<GrowthSample>,
    /// Empirical `C₀ = max mass/r`.
    pub max_ratio: f64,
}

/// Counters from one [`LevelMeasure::t1_fast`] evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct FastStats {
    pub nodes_opened: usize,
    pub expansions: usize,
    pub exact_leaves: usize,
}

impl FastStats {
    /// Work units: nodes touched plus leaves summed exactly.
    pub fn visits(&self) -> usize {
        self.nodes_opened + self.expansions + self.exact_leaves
    }
}

/// `T(1)(z)` split by the scale at which each disc separates from the disc
/// nearest to `z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleDecomposition {
    pub z: ComplexPoint,
    /// Index of the nearest level-`n` disc `z*`.
    pub nearest: usize,
    /// `ε = dist(z, supp μ⁽ⁿ⁾)`.
    pub epsilon: f64,
    /// `contributions[k−1]` is the integral over `B⁽ᵏ⁻¹⁾(z*) \ B⁽ᵏ⁾(z*)`,
    /// `k = 1..=n`.
    pub contributions: Vec<Complex64>,
    /// Integral over the disc `z*` itself.
    pub own: Complex64,
    pub total: Complex64,
}

impl<'a> LevelMeasure<'a> {
    pub fn new(tree: &'a ConstructionTree, level: usize) -> Result<Self, MeasureError> {
        if level > tree.depth() {
            return Err(MeasureError::Level {
                requested: level,
                depth: tree.depth(),
            });
        }
        Ok(Self {
            tree,
            level,
            far: OnceLock::new(),
        })
    }

    /// The measure at the deepest built level.
    pub fn deepest(tree: &'a ConstructionTree) -> Self {
        Self::new(tree, tree.depth()).expect("depth is a valid level")
    }

    pub fn tree(&self) -> &'a ConstructionTree {
        self.tree
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// `r_n`.
    pub fn radius(&self) -> f64 {
        self.tree.core_radius(self.level)
    }

    pub fn leaf_count(&self) -> usize {
        self.tree.level_len(self.level)
    }

    pub fn leaf_disc(&self, j: usize) -> Disc {
        self.tree.node(self.level, j).core_disc()
    }

    /// Depth-first walk in preorder. `open(k, j)` decides whether node
    /// `(k, j)`, `k < n`, is entered; `leaf(j)` is called for every
    /// level-`n` disc reached, in increasing `j`.
    fn walk<O, L>(&self, mut open: O, mut leaf: L)
    where
        O: FnMut(usize, usize) -> bool,
        L: FnMut(usize),
    {
        let n = self.level;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((k, j)) = stack.pop() {
            if k == n {
                leaf(j);
                continue;
            }
            if !open(k, j) {
                continue;
            }
            let b = self.tree.branching(k);
            if k + 1 == n {
                for c in j * b..(j + 1) * b {
                    leaf(c);
                }
            } else {
                stack.extend((j * b..(j + 1) * b).rev().map(|c| (k + 1, c)));
            }
        }
    }

    /// `μ⁽ⁿ⁾(q) = Σⱼ m₂(q ∩ B̃ⱼ)/r_n`, skipping subtrees whose enlarged disc
    /// misses `q`.
    pub fn mass_on_disc(&self, q: &Disc) -> f64 {
        let rn = self.radius();
        let centers = self.tree.centers(self.level);
        let mut acc = Neumaier::new();
        self.walk(
            |k, j| !self.misses(k, j, q),
            |j| acc.add(lens_area(q, &Disc::new_unchecked(centers[j], rn)) / rn),
        );
        acc.total()
    }

    fn misses(&self, k: usize, j: usize, q: &Disc) -> bool {
        let c = self.tree.centers(k)[j];
        (c - q.center).norm() >= self.tree.enlarged_radius(k) + q.radius
    }

    /// Like [`mass_on_disc`](Self::mass_on_disc) but adds `r_k` at once for
    /// a level-`k` subtree whose enlarged disc lies inside `q` (exact:
    /// such a subtree carries mass `r_k`).
    fn mass_on_disc_shortcut(&self, q: &Disc) -> f64 {
        let n = self.level;
        let rn = self.radius();
        let mut acc = Neumaier::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((k, j)) = stack.pop() {
            let c = self.tree.centers(k)[j];
            let dist = (c - q.center).norm();
            if k == n {
                acc.add(lens_area(q, &Disc::new_unchecked(c, rn)) / rn);
                continue;
            }
            let e = self.tree.enlarged_radius(k);
            if dist >= e + q.radius {
                continue;
            }
            if dist + e <= q.radius {
                acc.add(self.tree.core_radius(k));
                continue;
            }
            let b = self.tree.branching(k);
            stack.extend((j * b..(j + 1) * b).rev().map(|c| (k + 1, c)));
        }
        acc.total()
    }

    /// Samples `mass/r` for discs `B(z, r)` with `r` log-uniform in
    /// `[r_n, 2]` and `z` uniform in `B(c, r)` around a random level-`n`
    /// centre `c`, so every sampled disc meets the support.
    pub fn growth_scan(&self, num_samples: usize, seed: u64) -> GrowthReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = self.tree.centers(self.level);
        let (lo, hi) = (self.radius().ln(), 2f64.ln());
        let discs: Vec<Disc> = (0..num_samples)
            .map(|_| {
                let c = centers[rng.gen_range(0..centers.len())];
                let r = rng.gen_range(lo..=hi).exp();
                let u = rng.gen::<f64>().sqrt() * r;
                let th = rng.gen_range(-PI..PI);
                Disc::new_unchecked(c + Complex64::from_polar(u, th), r)
            })
            .collect();
        let samples: Vec<GrowthSample> = discs
            .par_iter()
            .map(|q| {
                let mass = self.mass_on_disc_shortcut(q);
                GrowthSample {
                    z: q.center,
                    r: q.radius,
                    mass,
                    ratio: mass / q.radius,
                }
            })
            .collect();
        let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
        GrowthReport { samples, max_ratio }
    }

    /// `Ok(distance to the support)` if `z` is far enough from every core
    /// disc, otherwise the offending disc.
    pub fn check_off_support(&self, z: ComplexPoint) -> Result<f64, MeasureError> {
        let n = self.level;
        let rn = self.radius();
        if let Some((index, d)) = self.tree.nearest_core_within(z, n, rn * (1.0 + 2.0 * ON_SUPPORT_FACTOR)) {
            if d < ON_SUPPORT_FACTOR * rn {
                return Err(MeasureError::OnSupport {
                    z,
                    level: n,
                    index,
                    distance: d.max(0.0),
                });
            }
        }
        Ok(self.nearest_leaf(z).1)
    }

    /// Nearest level-`n` core disc to `z` and the distance to it (negative
    /// inside), by branch and bound over enlarged discs.
    pub fn nearest_leaf(&self, z: ComplexPoint) -> (usize, f64) {
        let n = self.level;
        let rn = self.radius();
        let centers = self.tree.centers(n);
        // Greedy descent for an initial bound.
        let mut j = 0;
        for k in 0..n {
            let b = self.tree.branching(k);
            j = (j * b..(j + 1) * b)
                .min_by(|&a, &c| {
                    let da = (self.tree.centers(k + 1)[a] - z).norm();
                    let dc = (self.tree.centers(k + 1)[c] - z).norm();
                    da.total_cmp(&dc).then(a.cmp(&c))
                })
                .expect("non-empty");
        }
        let mut best = ((centers[j] - z).norm() - rn, j);
        let mut stack = vec![(0usize, 0usize)];
        while let Some((k, i)) = stack.pop() {
            let d = (self.tree.centers(k)[i] - z).norm();
            if k == n {
                if (d - rn, i) < best {
                    best = (d - rn, i);
                }
                continue;
            }
            if d - self.tree.enlarged_radius(k) > best.0 {
                continue;
            }
            let b = self.tree.branching(k);
            stack.extend((i * b..(i + 1) * b).rev().map(|c| (k + 1, c)));
        }
        (best.1, best.0)
    }

    /// `Σⱼ ∫_{B̃ⱼ} K(z−ξ) dm₂(ξ)/r_n` over all level-`n` discs, closed form
    /// per disc, compensated sum in index order.
    pub fn t1_exact(&self, z: ComplexPoint) -> Result<IntegralResult, MeasureError> {
        self.check_off_support(z)?;
        let rn = self.radius();
        let mut acc = ComplexSum::new();
        let mut err = 0.0;
        for &c in self.tree.centers(self.level) {
            let (v, e) = disc_integral_raw(c, rn, z);
            acc.add(v / rn);
            err += e / rn;
        }
        Ok(IntegralResult::closed_form(
            acc.total(),
            err + 4.0 * f64::EPSILON * acc.abs_sum(),
        ))
    }

    fn far_field(&self) -> &FarField {
        self.far.get_or_init(|| FarField::build(self.tree, self.level))
    }

    /// `T(1)(z)` within `tol` of [`t1_exact`](Self::t1_exact).
    ///
    /// Walks the tree; a level-`k` cluster is replaced by its order-16
    /// expansion about the cluster centre once the rigorous truncation
    /// bound is at most `tol·r_k`, i.e. its share of `tol` by mass. Clusters
    /// that never qualify are summed exactly. `error_bound` is the budget
    /// actually spent plus rounding.
    pub fn t1_fast(&self, z: ComplexPoint, tol: f64) -> Result<(IntegralResult, FastStats), MeasureError> {
        self.check_off_support(z)?;
        let far = self.far_field();
        let n = self.level;
        let rn = self.radius();
        let leaves = self.tree.centers(n);
        let mut acc = ComplexSum::new();
        let mut spent = 0.0;
        let mut rounding = 0.0;
        let mut stats = FastStats::default();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((k, j)) = stack.pop() {
            if k == n {
                let (v, e) = disc_integral_raw(leaves[j], rn, z);
                acc.add(v / rn);
                rounding += e / rn;
                stats.exact_leaves += 1;
                continue;
            }
            let mass = self.tree.core_radius(k);
            if let Some((v, bound)) = far.eval(k, j, self.tree.centers(k)[j], z, mass) {
                if bound <= tol * mass {
                    acc.add(v);
                    spent += bound;
                    stats.expansions += 1;
                    continue;
                }
            }
            stats.nodes_opened += 1;
            let b = self.tree.branching(k);
            stack.extend((j * b..(j + 1) * b).rev().map(|c| (k + 1, c)));
        }
        Ok((
            IntegralResult {
                value: acc.total(),
                error_bound: spent + rounding + 8.0 * f64::EPSILON * acc.abs_sum(),
                method: Method::FarFieldExpansion,
            },
            stats,
        ))
    }

    /// `∫_{A(z,r)} K(z−ξ) dμ⁽ⁿ⁾(ξ)` over the annulus `r/2 < |ξ−z| < r`.
    /// `z` may lie on the support.
    pub fn annulus_t(&self, z: ComplexPoint, r: f64) -> Result<IntegralResult, MeasureError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(MeasureError::BadRadius(r));
        }
        self.shell(z, 0.5 * r, r)
    }

    /// `∫_{|z−ξ|>ρ} K(z−ξ) dμ⁽ⁿ⁾(ξ)`.
    pub fn truncated_t1(&self, z: ComplexPoint, rho: f64) -> Result<IntegralResult, MeasureError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(MeasureError::BadRadius(rho));
        }
        self.shell(z, rho, f64::INFINITY)
    }

    /// Integral over `t_lo ≤ |ξ−z| ≤ t_hi`: discs entirely inside the shell
    /// use the closed form, discs meeting its boundary the radial
    /// reduction, the rest are skipped.
    fn shell(&self, z: ComplexPoint, t_lo: f64, t_hi: f64) -> Result<IntegralResult, MeasureError> {
        let n = self.level;
        let rn = self.radius();
        let centers = self.tree.centers(n);
        let mut acc = ComplexSum::new();
        let mut err = 0.0;
        let mut clipped = false;
        let mut failure = None;
        self.walk(
            |k, j| {
                let d = (self.tree.centers(k)[j] - z).norm();
                let e = self.tree.enlarged_radius(k);
                d - e < t_hi && d + e > t_lo
            },
            |j| {
                if failure.is_some() {
                    return;
                }
                let c = centers[j];
                let d = (c - z).norm();
                if d + rn <= t_lo || d - rn >= t_hi {
                    return;
                }
                if d - rn >= t_lo && d + rn <= t_hi {
                    let (v, e) = disc_integral_raw(c, rn, z);
                    acc.add(v / rn);
                    err += e / rn;
                    return;
                }
                clipped = true;
                // The whole disc contributes about r_n²/d; ask for that to
                // relative precision CLIP_TOL.
                let tol = CLIP_TOL * rn * rn / d.max(rn);
                match disc_shell_integral(z, &Disc::new_unchecked(c, rn), t_lo, t_hi, tol) {
                    Ok((v, e)) => {
                        acc.add(v / rn);
                        err += e / rn;
                    }
                    Err(e) => failure = Some(e),
                }
            },
        );
        if let Some(e) = failure {
            return Err(e.into());
        }
        Ok(IntegralResult {
            value: acc.total(),
            error_bound: err + 4.0 * f64::EPSILON * acc.abs_sum(),
            method: if clipped {
                Method::RadialReduction
            } else {
                Method::ClosedForm
            },
        })
    }

    /// `T(1)(z)` telescoped along the ancestry of the nearest disc `z*`:
    /// every disc is attributed to the first level at which its ancestor
    /// differs from that of `z*`.
    pub fn scale_decomposition(&self, z: ComplexPoint) -> Result<ScaleDecomposition, MeasureError> {
        let epsilon = self.check_off_support(z)?;
        let (nearest, _) = self.nearest_leaf(z);
        let n = self.level;
        let rn = self.radius();
        // block[k] = number of level-n discs below one level-k node.
        let mut block = vec![1usize; n + 1];
        for k in (0..n).rev() {
            block[k] = block[k + 1] * self.tree.branching(k);
        }
        let mut parts: Vec<ComplexSum> = (0..n).map(|_| ComplexSum::new()).collect();
        let mut own = Complex64::new(0.0, 0.0);
        for (j, &c) in self.tree.centers(n).iter().enumerate() {
            let (v, _) = disc_integral_raw(c, rn, z);
            let v = v / rn;
            if j == nearest {
                own = v;
                continue;
            }
            let k = (1..=n)
                .find(|&k| j / block[k] != nearest / block[k])
                .expect("distinct discs part by level n");
            parts[k - 1].add(v);
        }
        let contributions: Vec<Complex64> = parts.iter().map(ComplexSum::total).collect();
        let mut total = ComplexSum::new();
        contributions.iter().for_each(|&v| total.add(v));
        total.add(own);
        Ok(ScaleDecomposition {
            z,
            nearest,
            epsilon,
            contributions,
            own,
            total: total.total(),
        })
    }
}

/// Multipole moments of every internal node about its core centre.
///
/// With `u = z − c` and `δ = ξ − c`,
/// `K(u − δ) = Σ_l (l+1)(ū δ^l − δ̄ δ^l)/u^{l+2}` for `|δ| < |u|`, so a
/// cluster contributes `Σ_l (l+1)(ū M_l − N_l)/u^{l+2}` with
/// `M_l = ∫δ^l dμ` and `N_l = ∫δ̄δ^l dμ`. Over a uniform disc `B(a, r)` of
/// mass `m` these are `m·a^l` and `m·(ā a^l + l a^{l−1} r²/2)`.
struct FarField {
    /// Per level `k < n`: `(P+1)` moments per node, flattened.
    m: Vec<Vec<Complex64>>,
    nm: Vec<Vec<Complex64>>,
    /// Per level: radius about the node centre containing all its discs.
    extent: Vec<Vec<f64>>,
}

impl FarField {
    fn build(tree: &ConstructionTree, n: usize) -> Self {
        const P1: usize = EXPANSION_ORDER + 1;
        let rn = tree.core_radius(n);
        let leaves = tree.centers(n);
        let half_r2 = 0.5 * rn * rn;
        let mut m = Vec::with_capacity(n);
        let mut nm = Vec::with_capacity(n);
        let mut extent = Vec::with_capacity(n);
        for k in 0..n {
            let count = tree.level_len(k);
            let per = leaves.len() / count;
            let results: Vec<([Complex64; P1], [Complex64; P1], f64)> = (0..count)
                .into_par_iter()
                .map(|j| {
                    let c = tree.centers(k)[j];
                    let mut mm = [Complex64::new(0.0, 0.0); P1];
                    let mut nn = [Complex64::new(0.0, 0.0); P1];
                    let mut ext: f64 = 0.0;
                    for &leaf in &leaves[j * per..(j + 1) * per] {
                        let a = leaf - c;
                        ext = ext.max(a.norm());
                        let ab = a.conj();
                        let mut pw = Complex64::new(1.0, 0.0); // a^l
                        let mut prev = Complex64::new(0.0, 0.0); // a^{l−1}
                        for l in 0..P1 {
                            mm[l] += pw;
                            nn[l] += ab * pw + prev * (l as f64 * half_r2);
                            prev = pw;
                            pw *= a;
                        }
                    }
                    for l in 0..P1 {
                        mm[l] *= rn;
                        nn[l] *= rn;
                    }
                    (mm, nn, ext + rn)
                })
                .collect();
            m.push(results.iter().flat_map(|r| r.0).collect());
            nm.push(results.iter().flat_map(|r| r.1).collect());
            extent.push(results.iter().map(|r| r.2).collect());
        }
        Self { m, nm, extent }
    }

    /// Expansion value and truncation bound for node `(k, j)`, or `None`
    /// when `z` is inside the node's extent.
    fn eval(&self, k: usize, j: usize, c: ComplexPoint, z: ComplexPoint, mass: f64) -> Option<(Complex64, f64)> {
        const P: usize = EXPANSION_ORDER;
        let u = z - c;
        let au = u.norm();
        let rho = self.extent[k][j];
        if !(au > rho) {
            return None;
        }
        let q = rho / au;
        let tail = q.powi(P as i32 + 1) * ((P as f64 + 2.0) / (1.0 - q) + q / ((1.0 - q) * (1.0 - q)));
        let bound = mass * (au + rho) / (au * au) * tail;
        let mm = &self.m[k][j * (P + 1)..(j + 1) * (P + 1)];
        let nn = &self.nm[k][j * (P + 1)..(j + 1) * (P + 1)];
        let v = u.inv();
        let ub = u.conj();
        let mut pw = v * v;
        let mut sum = Complex64::new(0.0, 0.0);
        for l in 0..=P {
            sum += (ub * mm[l] - nn[l]) * pw * (l as f64 + 1.0);
            pw *= v;
        }
        Some((sum, bound))
    }
}
