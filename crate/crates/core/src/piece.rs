//! Intervals of the unit cake and finite unions of them.
//!
//! Intervals are closed and sets that differ on finitely many points are
//! identified, so a [`Piece`] keeps only positive-length intervals, sorted and
//! with touching neighbours merged. Two pieces covering the same cake up to
//! measure zero are therefore structurally equal.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{format_rational, max_rat, min_rat, one, parse_rational, zero, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo < zero() || hi > one() || lo > hi {
            return Err(Error::InvalidInterval(format!(
                "[{}, {}] is not a subinterval of [0, 1]",
                format_rational(&lo),
                format_rational(&hi)
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn unit() -> Self {
        Interval { lo: zero(), hi: one() }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    fn mirrored(&self) -> Interval {
        Interval {
            lo: one() - &self.hi,
            hi: one() - &self.lo,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            format_rational(&self.lo),
            format_rational(&self.hi)
        )
    }
}

/// A finite union of interior-disjoint intervals, in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Piece {
    intervals: Vec<Interval>,
}

impl Piece {
    pub fn empty() -> Self {
        Piece::default()
    }

    pub fn whole() -> Self {
        Piece {
            intervals: vec![Interval::unit()],
        }
    }

    /// Single-interval piece; validates `0 <= lo <= hi <= 1`.
    pub fn interval(lo: Rational, hi: Rational) -> Result<Self> {
        Ok(Piece::from_intervals(vec![Interval::new(lo, hi)?]))
    }

    /// Canonicalizes an arbitrary (possibly overlapping, unsorted) list.
    pub fn from_intervals(mut intervals: Vec<Interval>) -> Self {
        intervals.retain(|iv| !iv.is_degenerate());
        intervals.sort();
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        Piece { intervals: merged }
    }

    pub fn from_bounds(bounds: &[(Rational, Rational)]) -> Result<Self> {
        let intervals = bounds
            .iter()
            .map(|(lo, hi)| Interval::new(lo.clone(), hi.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Piece::from_intervals(intervals))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Contiguous means at most one interval (the empty piece counts).
    pub fn is_contiguous(&self) -> bool {
        self.intervals.len() <= 1
    }

    pub fn measure(&self) -> Rational {
        self.intervals.iter().map(Interval::length).sum()
    }

    /// Smallest and largest covered points, if any.
    pub fn hull(&self) -> Option<(Rational, Rational)> {
        let first = self.intervals.first()?;
        let last = self.intervals.last()?;
        Some((first.lo.clone(), last.hi.clone()))
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        self.intervals.iter().any(|iv| &iv.lo <= x && x <= &iv.hi)
    }

    pub fn union(&self, other: &Piece) -> Piece {
        let mut all = self.intervals.clone();
        all.extend(other.intervals.iter().cloned());
        Piece::from_intervals(all)
    }

    pub fn intersect(&self, other: &Piece) -> Piece {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let b = &other.intervals[j];
            let lo = max_rat(&a.lo, &b.lo);
            let hi = min_rat(&a.hi, &b.hi);
            if lo < hi {
                out.push(Interval { lo, hi });
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Piece::from_intervals(out)
    }

    pub fn subtract(&self, other: &Piece) -> Piece {
        self.intersect(&other.complement())
    }

    /// `[0, 1]` minus this piece.
    pub fn complement(&self) -> Piece {
        let mut out = Vec::new();
        let mut cursor = zero();
        for iv in &self.intervals {
            if cursor < iv.lo {
                out.push(Interval {
                    lo: cursor.clone(),
                    hi: iv.lo.clone(),
                });
            }
            cursor = iv.hi.clone();
        }
        if cursor < one() {
            out.push(Interval { lo: cursor, hi: one() });
        }
        Piece { intervals: out }
    }

    pub fn is_subset_of(&self, other: &Piece) -> bool {
        self.subtract(other).is_empty()
    }

    /// Measure of the overlap; zero means interior-disjoint.
    pub fn overlap(&self, other: &Piece) -> Rational {
        self.intersect(other).measure()
    }

    /// Reflection `x -> 1 - x`.
    pub fn mirrored(&self) -> Piece {
        Piece::from_intervals(self.intervals.iter().map(Interval::mirrored).collect())
    }

}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        let parts: Vec<String> = self.intervals.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

// Wire form: `[["0","1/2"],["3/4","1"]]`.
impl Serialize for Piece {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self
            .intervals
            .iter()
            .map(|iv| [format_rational(&iv.lo), format_rational(&iv.hi)])
            .collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Piece {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let pairs = Vec::<[String; 2]>::deserialize(d)?;
        let mut bounds = Vec::with_capacity(pairs.len());
        for [lo, hi] in &pairs {
            let lo = parse_rational(lo).map_err(D::Error::custom)?;
            let hi = parse_rational(hi).map_err(D::Error::custom)?;
            bounds.push((lo, hi));
        }
        Piece::from_bounds(&bounds).map_err(D::Error::custom)
    }
}

/// True if `x` lies strictly inside `(0, 1)`.
pub(crate) fn is_interior(x: &Rational) -> bool {
    x > &zero() && x < &one()
}
