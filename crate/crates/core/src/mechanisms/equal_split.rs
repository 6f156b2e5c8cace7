//! A simple non-wasteful reference mechanism.

use num_bigint::BigInt;
use num_traits::Signed;

use super::{DeclaredProperty, Mechanism};
use crate::error::Result;
use crate::piece::Piece;
use crate::profile::{Allocation, Profile};
use crate::rational::Rational;

/// Cuts the cake at every agent's breakpoints and splits each resulting cell
/// into equal-length parts, left to right in agent order, among the agents
/// with positive density on it. Cells nobody wants are discarded.
#[derive(Debug, Clone, Copy, Default)]
pub struct EqualSplitNonwasteful;

impl Mechanism for EqualSplitNonwasteful {
    fn name(&self) -> String {
        "equal-split".into()
    }

    fn declared(&self) -> Vec<DeclaredProperty> {
        vec![DeclaredProperty::NonWasteful]
    }

    fn allocate(&self, profile: &Profile) -> Result<Allocation> {
        let mut bounds: Vec<Vec<(Rational, Rational)>> = vec![Vec::new(); profile.n()];
        let grid = profile.grid();
        for w in grid.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            let wanting: Vec<usize> = profile
                .valuations()
                .iter()
                .enumerate()
                .filter(|(_, v)| v.density_on_cell(lo, hi).is_positive())
                .map(|(i, _)| i)
                .collect();
            if wanting.is_empty() {
                continue;
            }
            let step = (hi - lo) / Rational::from_integer(BigInt::from(wanting.len()));
            let mut start = lo.clone();
            for (slot, &i) in wanting.iter().enumerate() {
                let end = if slot + 1 == wanting.len() {
                    hi.clone()
                } else {
                    &start + &step
                };
                bounds[i].push((start, end.clone()));
                start = end;
            }
        }
        let pieces = bounds
            .iter()
            .map(|b| Piece::from_bounds(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Allocation::from_pieces(pieces))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{validate_allocation, wasted_measure};
    use crate::rational::{int, one, rat, zero};
    use crate::valuation::Valuation;

    fn iv(a: Rational, b: Rational) -> Piece {
        Piece::interval(a, b).unwrap()
    }

    #[test]
    fn two_uniform_agents_share_one_cell() {
        let p = Profile::new(vec![Valuation::uniform(), Valuation::uniform()]).unwrap();
        let a = EqualSplitNonwasteful.allocate(&p).unwrap();
        assert_eq!(a.pieces, vec![iv(zero(), rat(1, 2)), iv(rat(1, 2), one())]);
        assert!(a.discarded.is_empty());
    }

    #[test]
    fn unwanted_cells_are_discarded() {
        let front = Valuation::new(vec![rat(1, 2)], vec![int(2), zero()]).unwrap();
        let p = Profile::new(vec![front.clone(), front]).unwrap();
        let a = EqualSplitNonwasteful.allocate(&p).unwrap();
        assert_eq!(a.discarded, iv(rat(1, 2), one()));
        assert_eq!(a.pieces, vec![iv(zero(), rat(1, 4)), iv(rat(1, 4), rat(1, 2))]);
        assert!(validate_allocation(&a, &p).unwrap().is_empty());
        assert_eq!(wasted_measure(&a, &p), zero());
    }

    #[test]
    fn three_agents_with_overlapping_support() {
        let u = Valuation::new(vec![rat(2, 3)], vec![rat(3, 2), zero()]).unwrap();
        let y = Valuation::new(vec![rat(2, 3)], vec![zero(), int(3)]).unwrap();
        let p = Profile::new(vec![u.clone(), u, y]).unwrap();
        let a = EqualSplitNonwasteful.allocate(&p).unwrap();
        assert_eq!(a.pieces[0], iv(zero(), rat(1, 3)));
        assert_eq!(a.pieces[1], iv(rat(1, 3), rat(2, 3)));
        assert_eq!(a.pieces[2], iv(rat(2, 3), one()));
        assert_eq!(wasted_measure(&a, &p), zero());
    }
}
