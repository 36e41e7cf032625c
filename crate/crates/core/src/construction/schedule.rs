use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest admissible ratio is 101: the decay condition `r_j < r_{j−1}/100`
/// is strict.
pub const MIN_RATIO: u64 = 101;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("r_{level} < r_{prev}/100 violated (ratio r_{prev}/r_{level} = {ratio} must exceed 100)", prev = .level - 1)]
    TooSlow { level: usize, ratio: u64 },
    #[error("r_0 must be 1 (reciprocal 1), got reciprocal {0}")]
    RootNotUnit(u64),
    #[error("1/r_{level} = {reciprocal} is not a multiple of 1/r_{prev} = {previous}", prev = .level - 1)]
    NotNested {
        level: usize,
        reciprocal: u64,
        previous: u64,
    },
    #[error("1/r_{0} overflows a 64-bit integer")]
    Overflow(usize),
    #[error("schedule has no level {requested}; it defines levels 0..={depth}")]
    TooShallow { requested: usize, depth: usize },
}

/// Radii `r_0 = 1 > r_1 > … > r_depth`, carried as exact integer ratios
/// `r_{j−1}/r_j` and reciprocals `1/r_j`. Everything derived from them
/// (radii, `s_n`, side lengths) is floating point and computed on demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct RadiiSchedule {
    ratios: Vec<u64>,
    reciprocals: Vec<u64>,
}

impl RadiiSchedule {
    /// From successive ratios `r_0/r_1, r_1/r_2, …`.
    pub fn from_ratios(ratios: &[u64]) -> Result<Self, ScheduleError> {
        let mut reciprocals = Vec::with_capacity(ratios.len() + 1);
        reciprocals.push(1u64);
        for (i, &k) in ratios.iter().enumerate() {
            let level = i + 1;
            if k < MIN_RATIO {
                return Err(ScheduleError::TooSlow { level, ratio: k });
            }
            let prev = reciprocals[i];
            reciprocals.push(prev.checked_mul(k).ok_or(ScheduleError::Overflow(level))?);
        }
        Ok(Self {
            ratios: ratios.to_vec(),
            reciprocals,
        })
    }

    /// From reciprocals `1/r_0 = 1, 1/r_1, …`.
    pub fn from_reciprocals(reciprocals: &[u64]) -> Result<Self, ScheduleError> {
        match reciprocals.first() {
            Some(1) => {}
            Some(&other) => return Err(ScheduleError::RootNotUnit(other)),
            None => return Ok(Self::from_ratios(&[]).expect("empty schedule is valid")),
        }
        let mut ratios = Vec::with_capacity(reciprocals.len() - 1);
        for (i, w) in reciprocals.windows(2).enumerate() {
            let level = i + 1;
            if w[0] == 0 || w[1] % w[0] != 0 || w[1] == 0 {
                return Err(ScheduleError::NotNested {
                    level,
                    reciprocal: w[1],
                    previous: w[0],
                });
            }
            ratios.push(w[1] / w[0]);
        }
        Self::from_ratios(&ratios)
    }

    /// Ratios 112, 128, 144: about two million leaves at depth 3, and
    /// slowly growing so that `s_n` strictly decreases.
    pub fn desk_default() -> Self {
        Self::from_ratios(&[112, 128, 144]).expect("default schedule is valid")
    }

    /// Deepest level with a prescribed radius.
    pub fn depth(&self) -> usize {
        self.ratios.len()
    }

    pub fn ratios(&self) -> &[u64] {
        &self.ratios
    }

    pub fn reciprocals(&self) -> &[u64] {
        &self.reciprocals
    }

    /// `r_{n−1}/r_n` for `1 ≤ n ≤ depth`.
    pub fn ratio(&self, n: usize) -> u64 {
        self.ratios[n - 1]
    }

    /// `r_{n−1}/r_n` for any `n ≥ 1`: past the last prescribed level the
    /// last ratio is repeated. Only the enlargement factor of the deepest
    /// built level ever needs this.
    pub fn ratio_extended(&self, n: usize) -> u64 {
        assert!(n >= 1, "ratio_extended needs n ≥ 1");
        match self.ratios.get(n - 1) {
            Some(&k) => k,
            None => *self.ratios.last().unwrap_or(&128),
        }
    }

    /// Exact `1/r_n`.
    pub fn reciprocal(&self, n: usize) -> u64 {
        self.reciprocals[n]
    }

    /// Number of level-`n` discs, `1/r_n`.
    pub fn count(&self, n: usize) -> u64 {
        self.reciprocals[n]
    }

    pub fn radius(&self, n: usize) -> f64 {
        1.0 / self.reciprocals[n] as f64
    }

    /// `s_n = 4√(r_n/r_{n−1})`, `n ≥ 1` (extended past the last level).
    pub fn s(&self, n: usize) -> f64 {
        4.0 / (self.ratio_extended(n) as f64).sqrt()
    }

    /// Radius of a level-`n` enlarged disc, `(1 + s_{n+1}) r_n`.
    pub fn enlarged_radius(&self, n: usize) -> f64 {
        (1.0 + self.s(n + 1)) * self.radius(n)
    }

    /// `√(r_{n−1} r_n)`, the separation scale of level `n ≥ 1`.
    pub fn geometric_mean(&self, n: usize) -> f64 {
        (self.radius(n - 1) * self.radius(n)).sqrt()
    }

    /// Side of the level-`n` squares, `√(π r_{n−1} r_n)`.
    pub fn square_side(&self, n: usize) -> f64 {
        (std::f64::consts::PI * self.radius(n - 1) * self.radius(n)).sqrt()
    }

    /// Lower bound `½√(r_{n−1} r_n)` in properties (b) and (c).
    pub fn separation_threshold(&self, n: usize) -> f64 {
        0.5 * self.geometric_mean(n)
    }

    pub fn check_depth(&self, depth: usize) -> Result<(), ScheduleError> {
        if depth > self.depth() {
            Err(ScheduleError::TooShallow {
                requested: depth,
                depth: self.depth(),
            })
        } else {
            Ok(())
        }
    }

    /// The schedule cut to levels `0..=depth`.
    pub fn truncated(&self, depth: usize) -> Result<Self, ScheduleError> {
        self.check_depth(depth)?;
        Self::from_ratios(&self.ratios[..depth])
    }
}

impl TryFrom<Vec<u64>> for RadiiSchedule {
    type Error = ScheduleError;
    fn try_from(ratios: Vec<u64>) -> Result<Self, ScheduleError> {
        Self::from_ratios(&ratios)
    }
}

impl From<RadiiSchedule> for Vec<u64> {
    fn from(s: RadiiSchedule) -> Self {
        s.ratios
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_reciprocals() {
        let s = RadiiSchedule::from_ratios(&[128, 128, 128]).unwrap();
        assert_eq!(s.reciprocals(), &[1, 128, 16384, 2_097_152]);
        assert_eq!(s.radius(2), 1.0 / 16384.0);
        assert_eq!(s.count(3), 2_097_152);
        assert!((s.s(1) - 4.0 / 128f64.sqrt()).abs() < 1e-15);
        assert!((s.enlarged_radius(0) - (1.0 + 4.0 / 128f64.sqrt())).abs() < 1e-15);
        assert_eq!(RadiiSchedule::from_reciprocals(&[1, 128, 16384]).unwrap().ratios(), &[128, 128]);
    }

    #[test]
    fn decay_is_strict() {
        let e = RadiiSchedule::from_ratios(&[100]).unwrap_err();
        assert_eq!(e, ScheduleError::TooSlow { level: 1, ratio: 100 });
        assert!(e.to_string().contains("r_1 < r_0/100"));
        assert!(RadiiSchedule::from_ratios(&[101]).is_ok());
        assert!(RadiiSchedule::from_reciprocals(&[1, 100]).is_err());
        assert!(matches!(
            RadiiSchedule::from_reciprocals(&[1, 128, 16385]),
            Err(ScheduleError::NotNested { level: 2, .. })
        ));
        assert!(matches!(RadiiSchedule::from_reciprocals(&[2, 256]), Err(ScheduleError::RootNotUnit(2))));
        assert!(matches!(
            RadiiSchedule::from_ratios(&[1 << 20, 1 << 20, 1 << 20, 1 << 20]),
            Err(ScheduleError::Overflow(4))
        ));
    }

    #[test]
    fn enlarged_discs_at_most_double() {
        let s = RadiiSchedule::desk_default();
        for n in 0..=s.depth() {
            assert!(s.enlarged_radius(n) <= 2.0 * s.radius(n));
        }
        // s_n strictly decreasing for the default.
        assert!(s.s(1) > s.s(2) && s.s(2) > s.s(3));
    }

    #[test]
    fn serde_roundtrip_validates() {
        let s = RadiiSchedule::desk_default();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, "[112,128,144]");
        assert_eq!(serde_json::from_str::<RadiiSchedule>(&j).unwrap(), s);
        assert!(serde_json::from_str::<RadiiSchedule>("[50]").is_err());
    }
}
