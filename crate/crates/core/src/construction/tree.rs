use std::ops::Range;

use thiserror::Error;

use super::index::SpatialIndex;
use super::packing::{pack_squares, Packing, PackingError};
use super::schedule::{RadiiSchedule, ScheduleError};
use crate::geometry::{ComplexPoint, Disc, Square};

/// Refuse to materialize more nodes than this on one level.
pub const MAX_LEVEL_NODES: u64 = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error("level {level} would have {count} nodes (limit {MAX_LEVEL_NODES})")]
    TooLarge { level: usize, count: u64 },
    #[error("level {level} has {got} nodes, expected {expected}")]
    WrongCount { level: usize, got: usize, expected: u64 },
    #[error("non-finite centre at level {level}, index {index}")]
    NonFinite { level: usize, index: usize },
}

/// The hierarchy to a fixed depth.
///
/// Nodes live in flat per-level arrays of core-disc centres. With
/// `k = r_n/r_{n+1}`, the children of level-`n` node `j` are the level-`(n+1)`
/// nodes `j·k .. (j+1)·k`, child `j·k + l` sitting at the centre of the
/// `l`-th square of the packing pattern. Squares are always recomputed from
/// the parent centre and the pattern, never stored, so a displaced centre
/// shows up as a violated separation property.
#[derive(Debug, Clone)]
pub struct ConstructionTree {
    schedule: RadiiSchedule,
    depth: usize,
    centers: Vec<Vec<ComplexPoint>>,
    patterns: Vec<Packing>,
    index: Vec<SpatialIndex>,
}

/// Builds levels `0..=depth`. The schedule may extend deeper than `depth`,
/// in which case the next ratio fixes the enlargement of the deepest level.
pub fn build_hierarchy(schedule: &RadiiSchedule, depth: usize) -> Result<ConstructionTree, BuildError> {
    schedule.check_depth(depth)?;
    let patterns = make_patterns(schedule, depth)?;
    let mut centers = vec![vec![ComplexPoint::new(0.0, 0.0)]];
    for n in 0..depth {
        let pattern = &patterns[n];
        let parents = &centers[n];
        let mut level = Vec::with_capacity(parents.len() * pattern.squares.len());
        for &p in parents {
            level.extend(pattern.squares.iter().map(|s| p + s.square.center));
        }
        centers.push(level);
    }
    Ok(ConstructionTree::assemble(schedule.clone(), depth, centers, patterns))
}

fn make_patterns(schedule: &RadiiSchedule, depth: usize) -> Result<Vec<Packing>, BuildError> {
    (0..depth)
        .map(|n| {
            let count = schedule.count(n + 1);
            if count > MAX_LEVEL_NODES {
                return Err(BuildError::TooLarge { level: n + 1, count });
            }
            Ok(pack_squares(schedule.radius(n), schedule.ratio(n + 1))?)
        })
        .collect()
}

impl ConstructionTree {
    fn assemble(schedule: RadiiSchedule, depth: usize, centers: Vec<Vec<ComplexPoint>>, patterns: Vec<Packing>) -> Self {
        let index = centers
            .iter()
            .enumerate()
            .map(|(n, cs)| SpatialIndex::new(index_cell(&schedule, n), cs))
            .collect();
        Self {
            schedule,
            depth,
            centers,
            patterns,
            index,
        }
    }

    /// Rebuilds a tree from stored core centres (e.g. a file), checking
    /// counts against the schedule. Positions are taken as given.
    pub fn from_centers(
        schedule: RadiiSchedule,
        depth: usize,
        centers: Vec<Vec<ComplexPoint>>,
    ) -> Result<Self, BuildError> {
        schedule.check_depth(depth)?;
        let patterns = make_patterns(&schedule, depth)?;
        if centers.len() != depth + 1 {
            return Err(BuildError::WrongCount {
                level: centers.len().min(depth + 1),
                got: 0,
                expected: schedule.count(centers.len().min(depth)),
            });
        }
        for (n, level) in centers.iter().enumerate() {
            if level.len() as u64 != schedule.count(n) {
                return Err(BuildError::WrongCount {
                    level: n,
                    got: level.len(),
                    expected: schedule.count(n),
                });
            }
            if let Some(index) = level.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(BuildError::NonFinite { level: n, index });
            }
        }
        Ok(Self::assemble(schedule, depth, centers, patterns))
    }

    pub fn schedule(&self) -> &RadiiSchedule {
        &self.schedule
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level_len(&self, n: usize) -> usize {
        self.centers[n].len()
    }

    /// Core centres of level `n`, in node-index order.
    pub fn centers(&self, n: usize) -> &[ComplexPoint] {
        &self.centers[n]
    }

    /// The packing used to create level `n + 1` from level `n`.
    pub fn pattern(&self, n: usize) -> &Packing {
        &self.patterns[n]
    }

    pub fn spatial_index(&self, n: usize) -> &SpatialIndex {
        &self.index[n]
    }

    pub fn root(&self) -> TreeNode<'_> {
        self.node(0, 0)
    }

    pub fn node(&self, level: usize, index: usize) -> TreeNode<'_> {
        assert!(level <= self.depth && index < self.centers[level].len());
        TreeNode {
            tree: self,
            level,
            index,
        }
    }

    pub fn nodes(&self, level: usize) -> impl ExactSizeIterator<Item = TreeNode<'_>> + '_ {
        (0..self.centers[level].len()).map(move |j| self.node(level, j))
    }

    /// Number of children of a level-`n` node (`n < depth`).
    pub fn branching(&self, n: usize) -> usize {
        self.schedule.ratio(n + 1) as usize
    }

    pub fn core_radius(&self, n: usize) -> f64 {
        self.schedule.radius(n)
    }

    pub fn enlarged_radius(&self, n: usize) -> f64 {
        self.schedule.enlarged_radius(n)
    }

    /// Centre of square `Q⁽ⁿ⁾ⱼ`, from the parent centre and the pattern.
    pub fn square_center(&self, n: usize, j: usize) -> Option<ComplexPoint> {
        if n == 0 {
            return None;
        }
        let k = self.branching(n - 1);
        let parent = self.centers[n - 1][j / k];
        Some(parent + self.patterns[n - 1].squares[j % k].square.center)
    }

    /// The unique level-`n` node whose enlarged disc contains `z`.
    ///
    /// If displaced centres make the choice ambiguous, the node with the
    /// nearest centre wins (then the lower index).
    pub fn locate(&self, z: ComplexPoint, n: usize) -> Option<TreeNode<'_>> {
        assert!(n <= self.depth);
        let rad = self.enlarged_radius(n);
        let mut best: Option<(f64, usize)> = None;
        self.index[n].for_each_candidate(z, rad, |j| {
            let d = (self.centers[n][j] - z).norm();
            if d <= rad && best.is_none_or(|(bd, bj)| (d, j) < (bd, bj)) {
                best = Some((d, j));
            }
        });
        best.map(|(_, j)| self.node(n, j))
    }

    /// The level-`n` node (`n ≥ 1`) whose square contains `z`.
    pub fn locate_square(&self, z: ComplexPoint, n: usize) -> Option<TreeNode<'_>> {
        assert!(n >= 1 && n <= self.depth);
        let side = self.schedule.square_side(n);
        let mut best: Option<(f64, usize)> = None;
        self.index[n].for_each_candidate(z, side, |j| {
            let sq = Square::new_unchecked(self.square_center(n, j).expect("n ≥ 1"), side);
            if sq.contains(z) {
                let d = (sq.center - z).norm();
                if best.is_none_or(|(bd, bj)| (d, j) < (bd, bj)) {
                    best = Some((d, j));
                }
            }
        });
        best.map(|(_, j)| self.node(n, j))
    }

    /// Level-`n` nodes whose core centre lies within `radius` of `z`.
    pub fn nodes_near(&self, z: ComplexPoint, n: usize, radius: f64) -> Vec<usize> {
        let mut out: Vec<usize> = self.index[n]
            .candidates(z, radius)
            .into_iter()
            .filter(|&j| (self.centers[n][j] - z).norm() <= radius)
            .collect();
        out.sort_unstable();
        out
    }

    /// Smallest `dist(z, B̃⁽ⁿ⁾ⱼ)` over level-`n` core discs whose centre is
    /// within `search` of `z` (negative inside a disc), with its index.
    pub fn nearest_core_within(&self, z: ComplexPoint, n: usize, search: f64) -> Option<(usize, f64)> {
        let r = self.core_radius(n);
        let mut best: Option<(f64, usize)> = None;
        self.index[n].for_each_candidate(z, search, |j| {
            let d = (self.centers[n][j] - z).norm() - r;
            if best.is_none_or(|(bd, bj)| (d, j) < (bd, bj)) {
                best = Some((d, j));
            }
        });
        best.map(|(d, j)| (j, d))
    }

    /// Moves one stored core centre (negative controls only).
    pub fn displace_node(&mut self, level: usize, index: usize, by: ComplexPoint) {
        self.centers[level][index] += by;
        self.index[level] = SpatialIndex::new(index_cell(&self.schedule, level), &self.centers[level]);
    }
}

/// Cell size `√(r_{n−1} r_n)/4`; level 0 has a single node.
fn index_cell(schedule: &RadiiSchedule, n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        0.25 * schedule.geometric_mean(n)
    }
}

/// A view of one node of a [`ConstructionTree`].
#[derive(Debug, Clone, Copy)]
pub struct TreeNode<'a> {
    tree: &'a ConstructionTree,
    pub level: usize,
    pub index: usize,
}

impl<'a> TreeNode<'a> {
    pub fn center(&self) -> ComplexPoint {
        self.tree.centers[self.level][self.index]
    }

    /// `B̃⁽ⁿ⁾ⱼ`, radius `r_n`.
    pub fn core_disc(&self) -> Disc {
        Disc::new_unchecked(self.center(), self.tree.core_radius(self.level))
    }

    /// `B⁽ⁿ⁾ⱼ`, radius `(1 + s_{n+1}) r_n`.
    pub fn enlarged_disc(&self) -> Disc {
        Disc::new_unchecked(self.center(), self.tree.enlarged_radius(self.level))
    }

    /// `Q⁽ⁿ⁾ⱼ`; absent at level 0.
    pub fn square(&self) -> Option<Square> {
        let side = if self.level == 0 {
            return None;
        } else {
            self.tree.schedule.square_side(self.level)
        };
        self.tree
            .square_center(self.level, self.index)
            .map(|c| Square::new_unchecked(c, side))
    }

    pub fn is_leaf(&self) -> bool {
        self.level == self.tree.depth
    }

    pub fn parent(&self) -> Option<TreeNode<'a>> {
        (self.level > 0).then(|| {
            let k = self.tree.branching(self.level - 1);
            self.tree.node(self.level - 1, self.index / k)
        })
    }

    /// Indices of the children on level `level + 1` (empty for a leaf).
    pub fn child_range(&self) -> Range<usize> {
        if self.is_leaf() {
            return 0..0;
        }
        let k = self.tree.branching(self.level);
        self.index * k..(self.index + 1) * k
    }

    pub fn children(&self) -> impl ExactSizeIterator<Item = TreeNode<'a>> + 'a {
        let tree = self.tree;
        let level = self.level + 1;
        self.child_range().map(move |j| tree.node(level, j))
    }

    /// Range of descendant indices on level `m ≥ level`.
    pub fn descendants_on(&self, m: usize) -> Range<usize> {
        assert!(m >= self.level && m <= self.tree.depth);
        let mut lo = self.index;
        let mut hi = self.index + 1;
        for n in self.level..m {
            let k = self.tree.branching(n);
            lo *= k;
            hi *= k;
        }
        lo..hi
    }

    /// The ancestor on level `m ≤ level`.
    pub fn ancestor(&self, m: usize) -> TreeNode<'a> {
        assert!(m <= self.level);
        let mut j = self.index;
        for n in (m..self.level).rev() {
            j /= self.tree.branching(n);
        }
        self.tree.node(m, j)
    }
}
