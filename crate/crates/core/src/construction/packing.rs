use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{disc_square_intersection_area, Area, ComplexPoint, Disc, Square};
use crate::summation::Neumaier;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PackingError {
    #[error("packing needs R/r > 16, got R/r = {0}")]
    RatioTooSmall(u64),
    #[error("outer radius must be positive and finite, got {0}")]
    BadRadius(f64),
}

/// A lattice square: integer position `(i, j)` means
/// `[i·h, (i+1)·h] × [j·h, (j+1)·h]` with `h` the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PackedSquare {
    pub lattice: (i64, i64),
    pub square: Square,
}

/// `R/r` squares of side `√(πrR)` packed into `B(0, R)`, lattice anchored
/// at the disc centre. Offsets are relative to that centre.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Packing {
    pub outer_radius: f64,
    pub ratio: u64,
    pub side: f64,
    pub squares: Vec<PackedSquare>,
    /// Lattice squares meeting the open disc before any were discarded.
    pub candidates: usize,
}

/// Packs `ratio = R/r` lattice squares of side `√(πrR)` into `B(0, R)`.
///
/// Among the lattice squares meeting the disc (there are always more than
/// `R/r`, since together they cover it), the `R/r` whose centres are closest
/// to the origin are kept; ties go to the lexicographically smaller centre.
/// Ties are detected exactly on the integer key `(2i+1)² + (2j+1)²`.
pub fn pack_squares(outer_radius: f64, ratio: u64) -> Result<Packing, PackingError> {
    if ratio <= 16 {
        return Err(PackingError::RatioTooSmall(ratio));
    }
    if !(outer_radius > 0.0 && outer_radius.is_finite()) {
        return Err(PackingError::BadRadius(outer_radius));
    }
    let big_r = outer_radius;
    let r = big_r / ratio as f64;
    let h = (PI * r * big_r).sqrt();
    let reach = (big_r / h).ceil() as i64 + 1;

    let mut cand: Vec<(u64, i64, i64)> = Vec::new();
    for i in -reach..reach {
        for j in -reach..reach {
            // Nearest point of the closed square to the origin.
            let gap = |k: i64| {
                let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
                if lo > 0.0 {
                    lo
                } else if hi < 0.0 {
                    -hi
                } else {
                    0.0
                }
            };
            if gap(i).hypot(gap(j)) < big_r {
                let key = ((2 * i + 1) * (2 * i + 1) + (2 * j + 1) * (2 * j + 1)) as u64;
                cand.push((key, i, j));
            }
        }
    }
    let candidates = cand.len();
    cand.sort_unstable();
    cand.truncate(ratio as usize);
    let squares = cand
        .into_iter()
        .map(|(_, i, j)| PackedSquare {
            lattice: (i, j),
            square: Square::new_unchecked(Complex64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h), h),
        })
        .collect();
    Ok(Packing {
        outer_radius,
        ratio,
        side: h,
        squares,
        candidates,
    })
}

impl Packing {
    pub fn inner_radius(&self) -> f64 {
        self.outer_radius / self.ratio as f64
    }

    /// `R(1 + 4√(r/R))`, the radius guaranteed to contain every square.
    pub fn containment_radius(&self) -> f64 {
        self.outer_radius * (1.0 + 4.0 / (self.ratio as f64).sqrt())
    }

    /// Largest distance from the origin to a point of a kept square.
    pub fn max_extent(&self) -> f64 {
        self.squares
            .iter()
            .map(|p| p.square.max_distance_to_point(Complex64::new(0.0, 0.0)))
            .fold(0.0, f64::max)
    }

    /// Exact pairwise interior-disjointness: lattice positions are distinct.
    pub fn interiors_disjoint(&self) -> bool {
        let mut cells: Vec<_> = self.squares.iter().map(|p| p.lattice).collect();
        cells.sort_unstable();
        cells.windows(2).all(|w| w[0] != w[1])
    }

    /// Normalized `m₂(B(0,R) △ ⋃Q_j) = m₂(B) + Σm₂(Q_j) − 2Σm₂(B ∩ Q_j)`.
    pub fn symmetric_difference(&self) -> f64 {
        let disc = Disc::new_unchecked(Complex64::new(0.0, 0.0), self.outer_radius);
        let mut acc = Neumaier::new();
        acc.add(disc.normalized_area());
        for p in &self.squares {
            acc.add(p.square.normalized_area());
            acc.add(-2.0 * disc_square_intersection_area(&disc, &p.square));
        }
        acc.total().max(0.0)
    }

    /// The constant `C` in `m₂(B △ ⋃Q) ≤ C r^{1/2} R^{3/2}`.
    pub fn symmetric_difference_constant(&self) -> f64 {
        let r = self.inner_radius();
        self.symmetric_difference() / (r.sqrt() * self.outer_radius.powf(1.5))
    }

    /// Square centres translated to `center`.
    pub fn placed(&self, center: ComplexPoint) -> impl Iterator<Item = Square> + '_ {
        self.squares
            .iter()
            .map(move |p| Square::new_unchecked(center + p.square.center, self.side))
    }
}
