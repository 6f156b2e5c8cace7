//! Recursive halving: plain Even-Paz and the variant that shares each
//! node's middle piece among all of the node's agents.

use num_bigint::BigInt;

use super::{DeclaredProperty, EpVariant, Mechanism};
use crate::error::Result;
use crate::piece::Piece;
use crate::profile::{Allocation, Profile};
use crate::rational::{one, zero, Rational};
use crate::valuation::Valuation;

/// The cut an agent reports at a node `[lo, hi]` shared by `k` agents:
/// the leftmost point leaving `floor(k/2)/k` of its node value to the left.
pub fn agent_cut(v: &Valuation, lo: &Rational, hi: &Rational, k: usize) -> Rational {
    let share = Rational::new(BigInt::from(k / 2), BigInt::from(k));
    let target = share * v.value_between(lo, hi);
    v.cut(lo, &target)
        .expect("a share of the node value is always reachable")
}

/// How a node's agents divide after reporting their cuts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSplit {
    /// `(agent, cut)` sorted by cut, ties broken by agent index.
    pub order: Vec<(usize, Rational)>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// `d_m` for `m = floor(k/2)`.
    pub lower: Rational,
    /// `d_{m+1}`.
    pub upper: Rational,
}

/// Splits a node with at least two agents; the first `floor(k/2)` agents in
/// `(cut, index)` order go left.
pub fn split_node(cuts: &[(usize, Rational)]) -> NodeSplit {
    assert!(cuts.len() >= 2, "a node split needs at least two agents");
    let mut order = cuts.to_vec();
    order.sort_by(|(i, a), (j, b)| a.cmp(b).then(i.cmp(j)));
    let m = order.len() / 2;
    NodeSplit {
        left: order[..m].iter().map(|(i, _)| *i).collect(),
        right: order[m..].iter().map(|(i, _)| *i).collect(),
        lower: order[m - 1].1.clone(),
        upper: order[m].1.clone(),
        order,
    }
}

/// One visited node of a run, for inspection and testing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeTrace {
    pub lo: Rational,
    pub hi: Rational,
    /// True for nodes of the plain recursion run on a middle piece.
    pub inner: bool,
    pub split: NodeSplit,
}

struct Run<'a> {
    profile: &'a Profile,
    pieces: Vec<Piece>,
    trace: Vec<NodeTrace>,
}

impl<'a> Run<'a> {
    fn new(profile: &'a Profile) -> Self {
        Run {
            profile,
            pieces: vec![Piece::empty(); profile.n()],
            trace: Vec::new(),
        }
    }

    fn give(&mut self, agent: usize, lo: &Rational, hi: &Rational) {
        let piece = Piece::interval(lo.clone(), hi.clone()).expect("node lies in [0, 1]");
        self.pieces[agent] = self.pieces[agent].union(&piece);
    }

    fn split(&mut self, lo: &Rational, hi: &Rational, agents: &[usize], inner: bool) -> NodeSplit {
        let cuts: Vec<(usize, Rational)> = agents
            .iter()
            .map(|&i| (i, agent_cut(self.profile.agent(i), lo, hi, agents.len())))
            .collect();
        let split = split_node(&cuts);
        self.trace.push(NodeTrace {
            lo: lo.clone(),
            hi: hi.clone(),
            inner,
            split: split.clone(),
        });
        split
    }

    fn plain(&mut self, lo: Rational, hi: Rational, agents: &[usize], inner: bool) {
        if let [only] = agents {
            self.give(*only, &lo, &hi);
            return;
        }
        let s = self.split(&lo, &hi, agents, inner);
        self.plain(lo, s.lower.clone(), &s.left, inner);
        self.plain(s.lower, hi, &s.right, inner);
    }

    fn modified(&mut self, lo: Rational, hi: Rational, agents: &[usize]) {
        if let [only] = agents {
            self.give(*only, &lo, &hi);
            return;
        }
        let s = self.split(&lo, &hi, agents, false);
        if s.lower < s.upper {
            self.plain(s.lower.clone(), s.upper.clone(), agents, true);
        }
        self.modified(lo, s.lower, &s.left);
        self.modified(s.upper, hi, &s.right);
    }

    fn finish(self) -> (Allocation, Vec<NodeTrace>) {
        (Allocation::from_pieces(self.pieces), self.trace)
    }
}

fn all_agents(profile: &Profile) -> Vec<usize> {
    (0..profile.n()).collect()
}

fn cut_points_of(trace: &[NodeTrace]) -> Vec<Rational> {
    let mut points: Vec<Rational> = trace
        .iter()
        .flat_map(|t| [t.split.lower.clone(), t.split.upper.clone()])
        .collect();
    points.sort();
    points.dedup();
    points
}

/// Plain Even-Paz: contiguous and proportional.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvenPaz;

impl EvenPaz {
    pub fn run(&self, profile: &Profile) -> (Allocation, Vec<NodeTrace>) {
        let mut run = Run::new(profile);
        run.plain(zero(), one(), &all_agents(profile), false);
        run.finish()
    }
}

impl Mechanism for EvenPaz {
    fn name(&self) -> String {
        "even-paz".into()
    }

    fn declared(&self) -> Vec<DeclaredProperty> {
        vec![DeclaredProperty::Contiguous, DeclaredProperty::Proportional]
    }

    fn allocate(&self, profile: &Profile) -> Result<Allocation> {
        Ok(self.run(profile).0)
    }

    fn ep_variant(&self) -> Option<EpVariant> {
        Some(EpVariant::Plain)
    }

    fn cut_points(&self, profile: &Profile) -> Result<Vec<Rational>> {
        Ok(cut_points_of(&self.run(profile).1))
    }
}

/// Even-Paz where each node's middle piece `[d_m, d_{m+1}]` is divided by
/// plain Even-Paz among all the node's agents. Proportional, not contiguous.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModifiedEvenPaz;

impl ModifiedEvenPaz {
    pub fn run(&self, profile: &Profile) -> (Allocation, Vec<NodeTrace>) {
        let mut run = Run::new(profile);
        run.modified(zero(), one(), &all_agents(profile));
        run.finish()
    }
}

impl Mechanism for ModifiedEvenPaz {
    fn name(&self) -> String {
        "modified-ep".into()
    }

    fn declared(&self) -> Vec<DeclaredProperty> {
        vec![DeclaredProperty::Proportional]
    }

    fn allocate(&self, profile: &Profile) -> Result<Allocation> {
        Ok(self.run(profile).0)
    }

    fn ep_variant(&self) -> Option<EpVariant> {
        Some(EpVariant::Modified)
    }

    fn cut_points(&self, profile: &Profile) -> Result<Vec<Rational>> {
        Ok(cut_points_of(&self.run(profile).1))
    }
}
