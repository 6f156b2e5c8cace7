//! Deterministic direct-revelation mechanisms.

mod equal_split;
mod even_paz;
mod exchange;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{Allocation, Profile};
use crate::rational::Rational;

pub use equal_split::EqualSplitNonwasteful;
pub use even_paz::{agent_cut, split_node, EvenPaz, ModifiedEvenPaz, NodeSplit, NodeTrace};
pub use exchange::ZeroPieceExchange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    DirectRevelation,
    QueryDriven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeclaredProperty {
    Contiguous,
    Proportional,
    NonWasteful,
    HungryOnly,
}

/// The two recursive-halving mechanisms the cut-point search understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpVariant {
    Plain,
    Modified,
}

pub trait Mechanism: Send + Sync {
    fn name(&self) -> String;

    fn kind(&self) -> MechanismKind {
        MechanismKind::DirectRevelation
    }

    fn declared(&self) -> Vec<DeclaredProperty>;

    fn allocate(&self, profile: &Profile) -> Result<Allocation>;

    /// Set for plain and modified Even-Paz only.
    fn ep_variant(&self) -> Option<EpVariant> {
        None
    }

    /// Points where the mechanism cut the cake on `profile`, if it tracks them.
    fn cut_points(&self, _profile: &Profile) -> Result<Vec<Rational>> {
        Ok(Vec::new())
    }
}

impl fmt::Debug for dyn Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mechanism({})", self.name())
    }
}

impl<M: Mechanism + ?Sized> Mechanism for Arc<M> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn kind(&self) -> MechanismKind {
        (**self).kind()
    }
    fn declared(&self) -> Vec<DeclaredProperty> {
        (**self).declared()
    }
    fn allocate(&self, profile: &Profile) -> Result<Allocation> {
        (**self).allocate(profile)
    }
    fn ep_variant(&self) -> Option<EpVariant> {
        (**self).ep_variant()
    }
    fn cut_points(&self, profile: &Profile) -> Result<Vec<Rational>> {
        (**self).cut_points(profile)
    }
}

impl<M: Mechanism + ?Sized> Mechanism for Box<M> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn kind(&self) -> MechanismKind {
        (**self).kind()
    }
    fn declared(&self) -> Vec<DeclaredProperty> {
        (**self).declared()
    }
    fn allocate(&self, profile: &Profile) -> Result<Allocation> {
        (**self).allocate(profile)
    }
    fn ep_variant(&self) -> Option<EpVariant> {
        (**self).ep_variant()
    }
    fn cut_points(&self, profile: &Profile) -> Result<Vec<Rational>> {
        (**self).cut_points(profile)
    }
}

pub const MECHANISM_NAMES: [&str; 5] = [
    "even-paz",
    "modified-ep",
    "equal-split",
    "ep-exchange",
    "modified-ep-exchange",
];

pub fn mechanism_by_name(name: &str) -> Result<Arc<dyn Mechanism>> {
    Ok(match name {
        "even-paz" => Arc::new(EvenPaz),
        "modified-ep" => Arc::new(ModifiedEvenPaz),
        "equal-split" => Arc::new(EqualSplitNonwasteful),
        "ep-exchange" => Arc::new(ZeroPieceExchange::new(EvenPaz)),
        "modified-ep-exchange" => Arc::new(ZeroPieceExchange::new(ModifiedEvenPaz)),
        _ => return Err(Error::UnknownMechanism(name.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trips_names() {
        for name in MECHANISM_NAMES {
            assert_eq!(mechanism_by_name(name).unwrap().name(), name);
        }
        assert!(matches!(
            mechanism_by_name("dictator"),
            Err(Error::UnknownMechanism(_))
        ));
    }
}
