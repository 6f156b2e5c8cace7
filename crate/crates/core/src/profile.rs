//! Valuation profiles and allocations.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::piece::Piece;
use crate::rational::{one, zero, Rational};
use crate::valuation::Valuation;

/// One reported valuation per agent (at least two agents).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct Profile {
    valuations: Vec<Valuation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProfile {
    pub agents: Vec<Valuation>,
}

impl TryFrom<RawProfile> for Profile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        Profile::new(raw.agents)
    }
}

impl From<Profile> for RawProfile {
    fn from(p: Profile) -> Self {
        RawProfile {
            agents: p.valuations,
        }
    }
}

impl Profile {
    pub fn new(valuations: Vec<Valuation>) -> Result<Self> {
        if valuations.len() < 2 {
            return Err(Error::InvalidProfile(format!(
                "a profile needs at least 2 agents, got {}",
                valuations.len()
            )));
        }
        Ok(Profile { valuations })
    }

    pub fn n(&self) -> usize {
        self.valuations.len()
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn agent(&self, i: usize) -> &Valuation {
        &self.valuations[i]
    }

    pub fn check_agent(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::AgentOutOfRange { agent: i, n: self.n() });
        }
        Ok(())
    }

    /// The same profile with agent `i`'s report replaced.
    pub fn with_agent(&self, i: usize, v: Valuation) -> Profile {
        let mut valuations = self.valuations.clone();
        valuations[i] = v;
        Profile { valuations }
    }

    pub fn swapped(&self, i: usize, j: usize) -> Profile {
        let mut valuations = self.valuations.clone();
        valuations.swap(i, j);
        Profile { valuations }
    }

    pub fn mirrored(&self) -> Profile {
        Profile {
            valuations: self.valuations.iter().map(Valuation::mirrored).collect(),
        }
    }

    /// Sorted union of every agent's breakpoints together with 0 and 1.
    pub fn grid(&self) -> Vec<Rational> {
        let mut points: BTreeSet<Rational> = BTreeSet::new();
        points.insert(zero());
        points.insert(one());
        for v in &self.valuations {
            points.extend(v.breakpoints().iter().cloned());
        }
        points.into_iter().collect()
    }
}

/// Pieces per agent plus the discarded remainder.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Allocation {
    pub pieces: Vec<Piece>,
    pub discarded: Piece,
}

impl Allocation {
    /// Allocation whose discarded part is whatever no agent received.
    pub fn from_pieces(pieces: Vec<Piece>) -> Self {
        let taken = pieces.iter().fold(Piece::empty(), |acc, p| acc.union(p));
        Allocation {
            discarded: taken.complement(),
            pieces,
        }
    }

    pub fn n(&self) -> usize {
        self.pieces.len()
    }

    pub fn piece(&self, i: usize) -> &Piece {
        &self.pieces[i]
    }

    pub fn is_contiguous(&self) -> bool {
        self.pieces.iter().all(Piece::is_contiguous)
    }

    pub fn swapped(&self, i: usize, j: usize) -> Allocation {
        let mut pieces = self.pieces.clone();
        pieces.swap(i, j);
        Allocation {
            pieces,
            discarded: self.discarded.clone(),
        }
    }

    pub fn mirrored(&self) -> Allocation {
        Allocation {
            pieces: self.pieces.iter().map(Piece::mirrored).collect(),
            discarded: self.discarded.mirrored(),
        }
    }

    pub fn values(&self, profile: &Profile) -> Vec<Rational> {
        self.pieces
            .iter()
            .zip(profile.valuations())
            .map(|(p, v)| v.value(p))
            .collect()
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.pieces.iter().enumerate() {
            writeln!(f, "agent {}: {}", i + 1, p)?;
        }
        write!(f, "discarded: {}", self.discarded)
    }
}

/// A broken allocation invariant, as reported by [`validate_allocation`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AllocationViolation {
    /// Two agents (or an agent and the discard pile) share positive measure.
    Overlap {
        first: String,
        second: String,
        region: Piece,
    },
    /// Part of the cake is neither allocated nor discarded.
    Uncovered { region: Piece },
    /// Discarded cake that `agent` values positively.
    FreeDisposal { agent: usize, region: Piece },
}

impl fmt::Display for AllocationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocationViolation::Overlap {
                first,
                second,
                region,
            } => write!(f, "{first} and {second} overlap on {region}"),
            AllocationViolation::Uncovered { region } => write!(f, "{region} is not covered"),
            AllocationViolation::FreeDisposal { agent, region } => write!(
                f,
                "discarded {region} is valued positively by agent {}",
                agent + 1
            ),
        }
    }
}

/// Checks disjointness, coverage and the free-disposal rule against `profile`.
pub fn validate_allocation(
    allocation: &Allocation,
    profile: &Profile,
) -> Result<Vec<AllocationViolation>> {
    if allocation.n() != profile.n() {
        return Err(Error::SizeMismatch {
            allocation: allocation.n(),
            profile: profile.n(),
        });
    }
    let mut out = Vec::new();
    let label = |i: usize| format!("agent {}", i + 1);
    for i in 0..allocation.n() {
        for j in i + 1..allocation.n() {
            let region = allocation.pieces[i].intersect(&allocation.pieces[j]);
            if !region.is_empty() {
                out.push(AllocationViolation::Overlap {
                    first: label(i),
                    second: label(j),
                    region,
                });
            }
        }
        let region = allocation.pieces[i].intersect(&allocation.discarded);
        if !region.is_empty() {
            out.push(AllocationViolation::Overlap {
                first: label(i),
                second: "discarded".into(),
                region,
            });
        }
    }
    let covered = allocation
        .pieces
        .iter()
        .fold(allocation.discarded.clone(), |acc, p| acc.union(p));
    let uncovered = covered.complement();
    if !uncovered.is_empty() {
        out.push(AllocationViolation::Uncovered { region: uncovered });
    }
    for (i, v) in profile.valuations().iter().enumerate() {
        let desired = allocation.discarded.subtract(&v.zero_region());
        if !desired.is_empty() {
            out.push(AllocationViolation::FreeDisposal {
                agent: i,
                region: desired,
            });
        }
    }
    Ok(out)
}

/// Measure of cake someone desires that is discarded or held by an agent
/// with zero density there.
pub fn wasted_measure(allocation: &Allocation, profile: &Profile) -> Rational {
    let grid = profile.grid();
    let mut wasted = zero();
    for w in grid.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let cell = Piece::interval(lo.clone(), hi.clone()).expect("grid cell");
        let desirers: Vec<usize> = profile
            .valuations()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.density_on_cell(lo, hi).is_positive())
            .map(|(i, _)| i)
            .collect();
        if desirers.is_empty() {
            continue;
        }
        let mut well_used = zero();
        for &i in &desirers {
            well_used += allocation.pieces[i].intersect(&cell).measure();
        }
        let lost = cell.measure() - well_used;
        if !lost.is_zero() {
            wasted += lost;
        }
    }
    wasted
}
