use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::tree::ConstructionTree;
use crate::geometry::{disc_square_boundary_distance, Square};
#[cfg(test)]
use crate::geometry::ComplexPoint;

/// How much of property (c) to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// Every node against every neighbour the index returns.
    Exhaustive,
    /// `nodes` random nodes per level against all their neighbours.
    Sampled { nodes: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Property {
    /// Child squares inside the parent enlarged disc.
    A,
    /// Enlarged disc inside its square, with clearance.
    B,
    /// Enlarged discs of one level mutually separated.
    C,
    /// Level counts and the `(1+s)r ≤ 2r` covering bound.
    Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub property: Property,
    pub level: usize,
    pub index: usize,
    pub other: Option<usize>,
    pub observed: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSeparation {
    pub level: usize,
    pub nodes: usize,
    pub expected_nodes: u64,
    /// `½√(r_{n−1}r_n)` (0 at level 0).
    pub threshold: f64,
    /// Largest `dist(center, point of child square) / enlarged radius`
    /// over this level's nodes; ≤ 1 means (a) holds.
    pub max_child_extent: Option<f64>,
    /// Smallest `dist(B⁽ⁿ⁾ⱼ, ∂Q⁽ⁿ⁾ⱼ)` with the disc inside the square.
    pub min_square_clearance: Option<f64>,
    /// Smallest distance between two enlarged discs found by the index.
    pub min_pair_distance: Option<f64>,
    pub pairs_checked: u64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub tolerance: f64,
    pub levels: Vec<LevelSeparation>,
    /// First violations found (capped), for diagnostics.
    pub examples: Vec<Violation>,
}

impl SeparationReport {
    pub fn passed(&self) -> bool {
        self.levels.iter().all(|l| l.violations == 0)
    }

    pub fn total_violations(&self) -> usize {
        self.levels.iter().map(|l| l.violations).sum()
    }
}

const MAX_EXAMPLES: usize = 64;

struct Sink {
    examples: Vec<Violation>,
    count: usize,
}

impl Sink {
    fn push(&mut self, v: Violation) {
        self.count += 1;
        if self.examples.len() < MAX_EXAMPLES {
            self.examples.push(v);
        }
    }
}

fn fmin(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |a| a.min(b)))
}

/// Checks properties (a), (b), (c) on every level, plus exact counts.
/// `tol` is an absolute slack on every comparison.
pub fn verify_separation(tree: &ConstructionTree, coverage: Coverage, tol: f64) -> SeparationReport {
    let sched = tree.schedule();
    let mut all = Vec::new();
    let mut levels = Vec::new();
    for n in 0..=tree.depth() {
        let mut sink = Sink {
            examples: Vec::new(),
            count: 0,
        };
        let nodes = tree.level_len(n);
        let expected = sched.count(n);
        let rn = sched.radius(n);
        let enl = tree.enlarged_radius(n);
        if nodes as u64 != expected || enl > 2.0 * rn {
            sink.push(Violation {
                property: Property::Counts,
                level: n,
                index: 0,
                other: None,
                observed: nodes as f64,
                threshold: expected as f64,
            });
        }
        let threshold = if n == 0 { 0.0 } else { sched.separation_threshold(n) };

        // (a): child squares, built from this node's centre, in B⁽ⁿ⁾ⱼ.
        let mut max_child_extent = None;
        if n < tree.depth() {
            let pattern = tree.pattern(n);
            for (j, &c) in tree.centers(n).iter().enumerate() {
                for sq in pattern.placed(c) {
                    let reach = sq.max_distance_to_point(c);
                    max_child_extent = Some(max_child_extent.map_or(reach / enl, |m: f64| m.max(reach / enl)));
                    if reach > enl + tol {
                        sink.push(Violation {
                            property: Property::A,
                            level: n,
                            index: j,
                            other: None,
                            observed: reach,
                            threshold: enl,
                        });
                    }
                }
            }
        }

        // (b): B⁽ⁿ⁾ⱼ ⊂ Q⁽ⁿ⁾ⱼ with clearance ½√(r_{n−1}r_n).
        let mut min_square_clearance = None;
        if n >= 1 {
            for node in tree.nodes(n) {
                let sq: Square = node.square().expect("n ≥ 1");
                let d = node.enlarged_disc();
                let inside = sq.contains(d.center) && sq.distance_to_boundary(d.center) >= d.radius;
                let clearance = if inside {
                    disc_square_boundary_distance(&d, &sq)
                } else {
                    -disc_square_boundary_distance(&d, &sq)
                };
                min_square_clearance = fmin(min_square_clearance, clearance);
                if clearance < threshold - tol {
                    sink.push(Violation {
                        property: Property::B,
                        level: n,
                        index: node.index,
                        other: None,
                        observed: clearance,
                        threshold,
                    });
                }
            }
        }

        // (c): pairwise separation via the index.
        let mut min_pair_distance = None;
        let mut pairs_checked = 0u64;
        if n >= 1 && nodes > 1 {
            let centers = tree.centers(n);
            let index = tree.spatial_index(n);
            // Wide enough to reach the nearest neighbours, so the reported
            // minimum is an actual separation, not just "above threshold".
            let search = 2.0 * enl + 2.0 * sched.geometric_mean(n);
            let mut check = |i: usize, both_ways: bool| {
                index.for_each_candidate(centers[i], search, |j| {
                    if j == i || (!both_ways && j < i) {
                        return;
                    }
                    pairs_checked += 1;
                    let dist = (centers[i] - centers[j]).norm() - 2.0 * enl;
                    min_pair_distance = fmin(min_pair_distance, dist);
                    if dist < threshold - tol {
                        sink.push(Violation {
                            property: Property::C,
                            level: n,
                            index: i.min(j),
                            other: Some(i.max(j)),
                            observed: dist,
                            threshold,
                        });
                    }
                });
            };
            match coverage {
                Coverage::Exhaustive => (0..nodes).for_each(|i| check(i, false)),
                Coverage::Sampled { nodes: k, seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                    for _ in 0..k {
                        check(rng.gen_range(0..nodes), true);
                    }
                }
            }
        }

        levels.push(LevelSeparation {
            level: n,
            nodes,
            expected_nodes: expected,
            threshold,
            max_child_extent,
            min_square_clearance,
            min_pair_distance,
            pairs_checked,
            violations: sink.count,
        });
        all.extend(sink.examples);
    }
    all.truncate(MAX_EXAMPLES);
    SeparationReport {
        tolerance: tol,
        levels,
        examples: all,
    }
}

/// `dist(B⁽ⁿ⁾ⱼ, ∂Q⁽ⁿ⁾ⱼ)` for a disc centred in its square:
/// `√(π r_{n−1} r_n)/2 − (1+s_{n+1}) r_n`.
pub fn centred_clearance(tree: &ConstructionTree, n: usize) -> f64 {
    0.5 * tree.schedule().square_side(n) - tree.enlarged_radius(n)
}
