use crate::geometry::ComplexPoint;

/// Uniform grid over the points of one level: entries `(cx, cy, idx)`
/// sorted by cell, so a query is one binary search per grid column.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    cell: f64,
    entries: Vec<(i32, i32, u32)>,
}

impl SpatialIndex {
    pub fn new(cell: f64, points: &[ComplexPoint]) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        assert!(points.len() <= u32::MAX as usize);
        let mut entries: Vec<_> = points
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let (cx, cy) = cell_of(cell, z);
                (cx, cy, i as u32)
            })
            .collect();
        entries.sort_unstable();
        Self { cell, entries }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Calls `f` with the index of every point in a cell that meets the
    /// square `[z − radius, z + radius]²`: a superset of the points within
    /// `radius` of `z`. Callers filter by exact distance.
    pub fn for_each_candidate<F: FnMut(usize)>(&self, z: ComplexPoint, radius: f64, mut f: F) {
        let lo = cell_of(self.cell, z - ComplexPoint::new(radius, radius));
        let hi = cell_of(self.cell, z + ComplexPoint::new(radius, radius));
        let cols = (hi.0 as i64 - lo.0 as i64 + 1) as u128;
        let rows = (hi.1 as i64 - lo.1 as i64 + 1) as u128;
        if cols * rows >= self.entries.len() as u128 || cols >= 64 {
            for &(cx, cy, i) in &self.entries {
                if cx >= lo.0 && cx <= hi.0 && cy >= lo.1 && cy <= hi.1 {
                    f(i as usize);
                }
            }
            return;
        }
        for cx in lo.0..=hi.0 {
            let a = self.entries.partition_point(|e| (e.0, e.1) < (cx, lo.1));
            let b = self.entries.partition_point(|e| (e.0, e.1) <= (cx, hi.1));
            for e in &self.entries[a..b] {
                f(e.2 as usize);
            }
        }
    }

    pub fn candidates(&self, z: ComplexPoint, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_candidate(z, radius, |i| out.push(i));
        out
    }
}

fn cell_of(cell: f64, z: ComplexPoint) -> (i32, i32) {
    let q = |x: f64| (x / cell).floor().clamp(i32::MIN as f64 / 2.0, i32::MAX as f64 / 2.0) as i32;
    (q(z.re), q(z.im))
}
