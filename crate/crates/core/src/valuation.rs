//! Piecewise-constant value densities over the cake.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::piece::{is_interior, Piece};
use crate::rational::{
    format_rational, max_rat, min_rat, one, serde_rational_vec, zero, Rational,
};

/// A normalized step-function density on `[0, 1]`.
///
/// Segment `j` spans `[b_j, b_{j+1}]` with `b_0 = 0` and `b_{m+1} = 1`, where
/// `b_1 < ... < b_m` are the stored interior breakpoints. Adjacent segments
/// always carry different densities, so `m` is the true breakpoint count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawValuation", into = "RawValuation")]
pub struct Valuation {
    breakpoints: Vec<Rational>,
    densities: Vec<Rational>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawValuation {
    #[serde(with = "serde_rational_vec")]
    pub breakpoints: Vec<Rational>,
    #[serde(with = "serde_rational_vec")]
    pub densities: Vec<Rational>,
}

impl TryFrom<RawValuation> for Valuation {
    type Error = Error;

    fn try_from(raw: RawValuation) -> Result<Self> {
        Valuation::new(raw.breakpoints, raw.densities)
    }
}

impl From<Valuation> for RawValuation {
    fn from(v: Valuation) -> Self {
        RawValuation {
            breakpoints: v.breakpoints,
            densities: v.densities,
        }
    }
}

impl Valuation {
    /// Builds a valuation, rejecting anything that is not normalized.
    pub fn new(breakpoints: Vec<Rational>, densities: Vec<Rational>) -> Result<Self> {
        let v = Self::unchecked_canonical(breakpoints, densities)?;
        let total = v.total();
        if total != one() {
            return Err(Error::InvalidValuation(format!(
                "total value is {}, expected 1",
                format_rational(&total)
            )));
        }
        Ok(v)
    }

    /// Builds a valuation after rescaling the densities to total value 1.
    pub fn normalize(breakpoints: Vec<Rational>, densities: Vec<Rational>) -> Result<Self> {
        let v = Self::unchecked_canonical(breakpoints, densities)?;
        let total = v.total();
        if !total.is_positive() {
            return Err(Error::InvalidValuation(
                "cannot normalize a valuation with zero total".into(),
            ));
        }
        let densities = v.densities.iter().map(|d| d / &total).collect();
        Self::new(v.breakpoints, densities)
    }

    /// Segments `[0,c_1], [c_1,c_2], ..., [c_m,1]` carrying the given masses.
    pub fn from_masses(cuts: &[Rational], masses: &[Rational]) -> Result<Self> {
        if masses.len() != cuts.len() + 1 {
            return Err(Error::InvalidValuation(format!(
                "{} cut points need {} masses, got {}",
                cuts.len(),
                cuts.len() + 1,
                masses.len()
            )));
        }
        let mut bounds = Vec::with_capacity(cuts.len() + 2);
        bounds.push(zero());
        bounds.extend(cuts.iter().cloned());
        bounds.push(one());
        let mut densities = Vec::with_capacity(masses.len());
        for (w, mass) in bounds.windows(2).zip(masses) {
            let len = &w[1] - &w[0];
            if !len.is_positive() {
                return Err(Error::InvalidValuation(
                    "cut points must be strictly increasing inside (0, 1)".into(),
                ));
            }
            densities.push(mass / len);
        }
        Self::new(cuts.to_vec(), densities)
    }

    pub fn uniform() -> Self {
        Valuation {
            breakpoints: Vec::new(),
            densities: vec![one()],
        }
    }

    /// Density `1/|piece|` on `piece`, zero elsewhere.
    pub fn indicator(piece: &Piece) -> Result<Self> {
        let measure = piece.measure();
        if measure.is_zero() {
            return Err(Error::InvalidValuation(
                "indicator of a zero-measure piece".into(),
            ));
        }
        Self::weighted_pieces(&[(piece.clone(), one())]).inspect(|v| {
            debug_assert_eq!(v.total(), one());
        })
    }

    /// Uniform density on each piece carrying the paired mass; the pieces must
    /// be interior-disjoint and the masses must sum to 1.
    pub fn weighted_pieces(parts: &[(Piece, Rational)]) -> Result<Self> {
        let mut cells: Vec<(Rational, Rational, Rational)> = Vec::new();
        for (piece, mass) in parts {
            let measure = piece.measure();
            if mass.is_negative() {
                return Err(Error::InvalidValuation("negative mass".into()));
            }
            if measure.is_zero() {
                if mass.is_zero() {
                    continue;
                }
                return Err(Error::InvalidValuation(
                    "positive mass on a zero-measure piece".into(),
                ));
            }
            let density = mass / &measure;
            for iv in piece.intervals() {
                cells.push((iv.lo().clone(), iv.hi().clone(), density.clone()));
            }
        }
        cells.sort();
        let mut segments: Vec<(Rational, Rational)> = Vec::new();
        let mut cursor = zero();
        for (lo, hi, d) in cells {
            if lo < cursor {
                return Err(Error::InvalidValuation("weighted pieces overlap".into()));
            }
            if lo > cursor {
                segments.push((cursor.clone(), zero()));
            }
            segments.push((lo, d));
            cursor = hi;
        }
        if cursor < one() {
            segments.push((cursor, zero()));
        }
        let breakpoints = segments.iter().skip(1).map(|(lo, _)| lo.clone()).collect();
        let densities = segments.into_iter().map(|(_, d)| d).collect();
        Self::new(breakpoints, densities)
    }

    fn unchecked_canonical(breakpoints: Vec<Rational>, densities: Vec<Rational>) -> Result<Self> {
        if densities.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidValuation(format!(
                "{} breakpoints need {} densities, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                densities.len()
            )));
        }
        if let Some(b) = breakpoints.iter().find(|b| !is_interior(b)) {
            return Err(Error::InvalidValuation(format!(
                "breakpoint {} is not strictly inside (0, 1)",
                format_rational(b)
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidValuation(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if let Some(d) = densities.iter().find(|d| d.is_negative()) {
            return Err(Error::InvalidValuation(format!(
                "negative density {}",
                format_rational(d)
            )));
        }
        let mut out_b = Vec::with_capacity(breakpoints.len());
        let mut out_d: Vec<Rational> = Vec::with_capacity(densities.len());
        let mut dens = densities.into_iter();
        out_d.push(dens.next().expect("at least one density"));
        for (b, d) in breakpoints.into_iter().zip(dens) {
            if out_d.last() == Some(&d) {
                continue;
            }
            out_b.push(b);
            out_d.push(d);
        }
        Ok(Valuation {
            breakpoints: out_b,
            densities: out_d,
        })
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[Rational] {
        &self.densities
    }

    pub fn breakpoint_count(&self) -> usize {
        self.breakpoints.len()
    }

    /// `(lo, hi, density)` for every segment, left to right.
    pub fn segments(&self) -> impl Iterator<Item = (Rational, Rational, &Rational)> + '_ {
        (0..self.densities.len()).map(move |j| {
            let lo = if j == 0 {
                zero()
            } else {
                self.breakpoints[j - 1].clone()
            };
            let hi = if j == self.breakpoints.len() {
                one()
            } else {
                self.breakpoints[j].clone()
            };
            (lo, hi, &self.densities[j])
        })
    }

    fn total(&self) -> Rational {
        self.segments().map(|(lo, hi, d)| (hi - lo) * d).sum()
    }

    /// Density on the open segment containing `x`; at a breakpoint, the
    /// density to its right (to its left at `x = 1`).
    pub fn density_at(&self, x: &Rational) -> &Rational {
        let j = self.breakpoints.partition_point(|b| b <= x);
        &self.densities[j.min(self.densities.len() - 1)]
    }

    /// Density on the cell `[lo, hi]`, which must not straddle a breakpoint.
    pub(crate) fn density_on_cell(&self, lo: &Rational, hi: &Rational) -> &Rational {
        debug_assert!(lo < hi);
        let j = self.breakpoints.partition_point(|b| b <= lo);
        debug_assert!(j == self.breakpoints.len() || &self.breakpoints[j] >= hi);
        &self.densities[j]
    }

    /// `V([x, y])`. Arguments outside `[0, 1]` are clipped.
    pub fn value_between(&self, x: &Rational, y: &Rational) -> Rational {
        let mut total = zero();
        if x >= y {
            return total;
        }
        for (lo, hi, d) in self.segments() {
            if &hi <= x {
                continue;
            }
            if &lo >= y {
                break;
            }
            if d.is_zero() {
                continue;
            }
            let a = max_rat(&lo, x);
            let b = min_rat(&hi, y);
            total += (b - a) * d;
        }
        total
    }

    /// `V(X)` for a canonical piece.
    pub fn value(&self, piece: &Piece) -> Rational {
        piece
            .intervals()
            .iter()
            .map(|iv| self.value_between(iv.lo(), iv.hi()))
            .sum()
    }

    /// Leftmost `y >= x` with `V([x, y]) = r`, or `None` when `r` exceeds
    /// `V([x, 1])`. `cut(x, 0)` is `x`.
    pub fn cut(&self, x: &Rational, r: &Rational) -> Option<Rational> {
        if r.is_negative() {
            return None;
        }
        if r.is_zero() {
            return Some(x.clone());
        }
        let mut need = r.clone();
        for (lo, hi, d) in self.segments() {
            if &hi <= x || d.is_zero() {
                continue;
            }
            let start = max_rat(&lo, x);
            let mass = (&hi - &start) * d;
            if mass >= need {
                return Some(start + need / d);
            }
            need -= mass;
        }
        None
    }

    pub fn is_hungry(&self) -> bool {
        self.densities.iter().all(|d| d.is_positive())
    }

    /// The region where the density is zero.
    pub fn zero_region(&self) -> Piece {
        let bounds: Vec<_> = self
            .segments()
            .filter(|(_, _, d)| d.is_zero())
            .map(|(lo, hi, _)| (lo, hi))
            .collect();
        Piece::from_bounds(&bounds).expect("segments lie in [0, 1]")
    }

    /// Reflection `x -> 1 - x`.
    pub fn mirrored(&self) -> Valuation {
        Valuation {
            breakpoints: self.breakpoints.iter().rev().map(|b| one() - b).collect(),
            densities: self.densities.iter().rev().cloned().collect(),
        }
    }

    /// Stable text key used for deterministic tie-breaking.
    pub fn encoding(&self) -> String {
        let b: Vec<String> = self.breakpoints.iter().map(format_rational).collect();
        let d: Vec<String> = self.densities.iter().map(format_rational).collect();
        format!("{}|{}", b.join(","), d.join(","))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .segments()
            .map(|(lo, hi, d)| {
                format!(
                    "{} on [{}, {}]",
                    format_rational(d),
                    format_rational(&lo),
                    format_rational(&hi)
                )
            })
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}
