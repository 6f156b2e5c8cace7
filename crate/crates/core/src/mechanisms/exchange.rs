//! Post-processing that hands each agent's zero-value cake to someone who
//! wants it.

use num_traits::Signed;

use super::{DeclaredProperty, EpVariant, Mechanism};
use crate::error::Result;
use crate::piece::Piece;
use crate::profile::{Allocation, Profile};

/// Runs the inner mechanism, then moves every part of an agent's piece on
/// which its reported density is zero to the lowest-index agent reporting
/// positive density there. Transfers are computed from the inner output, so
/// received cake is never passed on again.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPieceExchange<M> {
    inner: M,
}

impl<M: Mechanism> ZeroPieceExchange<M> {
    pub fn new(inner: M) -> Self {
        ZeroPieceExchange { inner }
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    pub fn exchange(&self, base: &Allocation, profile: &Profile) -> Allocation {
        let mut pieces = base.pieces.clone();
        let grid = profile.grid();
        for w in grid.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            let Some(taker) = profile
                .valuations()
                .iter()
                .position(|v| v.density_on_cell(lo, hi).is_positive())
            else {
                continue;
            };
            let cell = Piece::interval(lo.clone(), hi.clone()).expect("grid cell");
            for (i, v) in profile.valuations().iter().enumerate() {
                if v.density_on_cell(lo, hi).is_positive() {
                    continue;
                }
                let part = base.pieces[i].intersect(&cell);
                if part.is_empty() {
                    continue;
                }
                pieces[i] = pieces[i].subtract(&part);
                pieces[taker] = pieces[taker].union(&part);
            }
        }
        Allocation {
            pieces,
            discarded: base.discarded.clone(),
        }
    }
}

impl<M: Mechanism> Mechanism for ZeroPieceExchange<M> {
    fn name(&self) -> String {
        match self.inner.name().as_str() {
            "even-paz" => "ep-exchange".into(),
            other => format!("{other}-exchange"),
        }
    }

    fn declared(&self) -> Vec<DeclaredProperty> {
        self.inner
            .declared()
            .into_iter()
            .filter(|p| *p != DeclaredProperty::Contiguous)
            .collect()
    }

    fn allocate(&self, profile: &Profile) -> Result<Allocation> {
        let base = self.inner.allocate(profile)?;
        Ok(self.exchange(&base, profile))
    }

    // The exchange changes incentives, so the cut-point search must not treat
    // the wrapper as a member of the Even-Paz family.
    fn ep_variant(&self) -> Option<EpVariant> {
        None
    }

    fn cut_points(&self, profile: &Profile) -> Result<Vec<crate::rational::Rational>> {
        self.inner.cut_points(profile)
    }
}
