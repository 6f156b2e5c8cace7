//! Best response for the recursive-halving mechanisms, searched over cut
//! positions instead of valuations.
//!
//! At every node the manipulator's report matters only through where its cut
//! falls among the other agents' cuts, and, when it is the agent that decides
//! a boundary, through the exact boundary position. A dynamic program over the
//! recursion tree picks the best position per node from a finite candidate
//! set; a misreport realizing the chosen positions is then built bottom-up and
//! checked by re-running the mechanism.

use std::collections::HashMap;
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::grid::{anchor_points, offset_points, SearchConfig};
use super::{true_value, GainCertificate};
use crate::error::{Error, Result};
use crate::mechanisms::{agent_cut, split_node, EpVariant, Mechanism};
use crate::profile::Profile;
use crate::rational::{format_rational, one, zero, Rational};
use crate::valuation::Valuation;

/// Extra halvings of the finest grid offset used around the other agents'
/// cuts, where the best positions are approached but not attained.
const FINE_ROUNDS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

#[derive(Debug)]
enum Plan {
    Leaf {
        lo: Rational,
        hi: Rational,
    },
    Node {
        lo: Rational,
        hi: Rational,
        k: usize,
        modified: bool,
        side: Side,
        /// The manipulator's own cut is the boundary it lands next to.
        exact: bool,
        lower: Rational,
        upper: Rational,
        child: Rc<Plan>,
        middle: Option<Rc<Plan>>,
    },
}

/// Positive-mass cells `(lo, hi, mass)` tiling a node interval left to right.
type Cells = Vec<(Rational, Rational, Rational)>;

fn mass(cells: &Cells) -> Rational {
    cells.iter().map(|c| &c.2).sum()
}

fn scaled(cells: &Cells, total: &Rational) -> Cells {
    let factor = total / mass(cells);
    cells
        .iter()
        .map(|(a, b, m)| (a.clone(), b.clone(), m * &factor))
        .collect()
}

type Key = (Rational, Rational, Vec<usize>, bool);

struct Search<'a> {
    profile: &'a Profile,
    agent: usize,
    gammas: Vec<Rational>,
    root_points: Vec<Rational>,
    /// Interior breakpoints of every agent.
    breaks: Vec<Rational>,
    mirrored: Vec<Valuation>,
    memo: HashMap<Key, (Rational, Rc<Plan>)>,
}

impl<'a> Search<'a> {
    /// Cut positions tried at a node: around the other agents' cuts, at the
    /// manipulator's own breakpoints and truthful cut, and (at the root) at the
    /// profile's anchor points with midpoints between all of them.
    fn candidates(&self, lo: &Rational, hi: &Rational, others: &[(usize, Rational)], k: usize, modified: bool, root: bool) -> Vec<Rational> {
        let truth = self.profile.agent(self.agent);
        let mut pts: Vec<Rational> = Vec::new();
        let gammas = if root { &self.gammas[..] } else { &self.gammas[self.gammas.len() - 1..] };
        for (_, o) in others {
            pts.push(o.clone());
            for g in gammas {
                pts.push(o - g);
                pts.push(o + g);
            }
        }
        pts.extend(truth.breakpoints().iter().cloned());
        pts.push(agent_cut(truth, lo, hi, k));
        if root {
            pts.extend(self.root_points.iter().cloned());
        }
        pts.retain(|x| x > lo && x < hi);
        pts.sort();
        pts.dedup();
        let two = Rational::from_integer(2.into());
        let mut mids: Vec<Rational> = Vec::new();
        if root {
            let mut bounds = vec![lo.clone()];
            bounds.extend(pts.iter().cloned());
            bounds.push(hi.clone());
            mids.extend(bounds.windows(2).map(|w| (&w[0] + &w[1]) / &two));
        } else {
            let first = pts.first().unwrap_or(hi);
            mids.push((lo + first) / &two);
        }
        pts.extend(mids);
        pts.extend(self.window_events(lo, hi, others, k, modified));
        pts.retain(|x| x > lo && x < hi);
        pts.sort();
        pts.dedup();
        pts
    }

    /// Inside a window where the manipulator's cut is itself a boundary, its
    /// value is piecewise linear in that cut and kinks only where some agent's
    /// cut in the child or middle interval crosses a breakpoint. Returns those
    /// crossing positions together with the breakpoints inside the windows.
    fn window_events(&self, lo: &Rational, hi: &Rational, others: &[(usize, Rational)], k: usize, modified: bool) -> Vec<Rational> {
        let mut sorted = others.to_vec();
        sorted.sort_by(|(i, a), (j, b)| a.cmp(b).then(i.cmp(j)));
        let m = k / 2;
        let f = ratio(m, k);
        let mut out = Vec::new();
        let inside = |b: &&Rational, a: &Rational, z: &Rational| *b > a && *b < z;

        // The manipulator sits at position m - 1 and its cut is the left boundary.
        let wlo = if m >= 2 { sorted[m - 2].1.clone() } else { lo.clone() };
        let whi = sorted[m - 1].1.clone();
        out.extend(self.breaks.iter().filter(|b| inside(b, &wlo, &whi)).cloned());
        if m >= 2 {
            let fl = ratio(m / 2, m);
            for (j, _) in &sorted[..m - 1] {
                for b in self.breaks.iter().filter(|b| inside(b, lo, &whi)) {
                    out.extend(self.lo_anchored(*j, lo, b, &fl));
                }
            }
        }
        if modified {
            for (j, _) in others {
                for b in self.breaks.iter().filter(|b| inside(b, &wlo, &whi)) {
                    out.extend(self.hi_anchored(*j, b, &whi, &f));
                }
            }
            // The manipulator sits at position m and its cut is the right boundary.
            let rlo = sorted[m - 1].1.clone();
            let rhi = sorted.get(m).map_or_else(|| hi.clone(), |o| o.1.clone());
            out.extend(self.breaks.iter().filter(|b| inside(b, &rlo, &rhi)).cloned());
            let size = k - m;
            if size >= 2 {
                let fr = ratio(size / 2, size);
                for (j, _) in &sorted[m..] {
                    for b in self.breaks.iter().filter(|b| inside(b, &rlo, hi)) {
                        out.extend(self.hi_anchored(*j, b, hi, &fr));
                    }
                }
            }
            for (j, _) in others {
                for b in self.breaks.iter().filter(|b| inside(b, &rlo, &rhi)) {
                    out.extend(self.lo_anchored(*j, &rlo, b, &f));
                }
            }
        }
        out
    }

    /// The right end `c` at which agent `j`, cutting `[from, c]` at share
    /// `frac`, cuts exactly at `b`.
    fn lo_anchored(&self, j: usize, from: &Rational, b: &Rational, frac: &Rational) -> Option<Rational> {
        let v = self.profile.agent(j);
        let target = v.value_between(from, b) / frac;
        if target.is_zero() {
            return None;
        }
        v.cut(from, &target)
    }

    /// The left end `c` at which agent `j`, cutting `[c, to]` at share `frac`,
    /// cuts exactly at `b`.
    fn hi_anchored(&self, j: usize, b: &Rational, to: &Rational, frac: &Rational) -> Option<Rational> {
        let v = self.profile.agent(j);
        let target = frac / (one() - frac) * v.value_between(b, to);
        if target.is_zero() {
            return None;
        }
        self.mirrored[j].cut(&(one() - b), &target).map(|y| one() - y)
    }

    /// Best true value the manipulator can secure at a node it takes part in.
    fn best(&mut self, lo: Rational, hi: Rational, agents: Vec<usize>, modified: bool, root: bool) -> (Rational, Rc<Plan>) {
        if let [only] = agents[..] {
            debug_assert_eq!(only, self.agent);
            let value = self.profile.agent(self.agent).value_between(&lo, &hi);
            return (value, Rc::new(Plan::Leaf { lo, hi }));
        }
        let key = (lo.clone(), hi.clone(), agents.clone(), modified);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let k = agents.len();
        let others: Vec<(usize, Rational)> = agents
            .iter()
            .filter(|&&j| j != self.agent)
            .map(|&j| (j, agent_cut(self.profile.agent(j), &lo, &hi, k)))
            .collect();
        let m = k / 2;
        let mut seen: Vec<(Side, bool, Rational, Rational)> = Vec::new();
        let mut best: Option<(Rational, Rc<Plan>)> = None;
        for c in self.candidates(&lo, &hi, &others, k, modified, root) {
            let mut cuts = others.clone();
            cuts.push((self.agent, c));
            let s = split_node(&cuts);
            let side = if s.left.contains(&self.agent) { Side::Left } else { Side::Right };
            let exact = match side {
                Side::Left => s.order[m - 1].0 == self.agent,
                Side::Right => modified && s.order[m].0 == self.agent,
            };
            let outcome = (side, exact, s.lower.clone(), s.upper.clone());
            if seen.contains(&outcome) {
                continue;
            }
            seen.push(outcome);
            let (clo, chi, group) = match (side, modified) {
                (Side::Left, _) => (lo.clone(), s.lower.clone(), s.left.clone()),
                (Side::Right, false) => (s.lower.clone(), hi.clone(), s.right.clone()),
                (Side::Right, true) => (s.upper.clone(), hi.clone(), s.right.clone()),
            };
            let (mut value, child) = self.best(clo, chi, group, modified, false);
            let middle = if modified && s.lower < s.upper {
                let (mv, mp) = self.best(s.lower.clone(), s.upper.clone(), agents.clone(), false, false);
                value += mv;
                Some(mp)
            } else {
                None
            };
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                let plan = Plan::Node {
                    lo: lo.clone(),
                    hi: hi.clone(),
                    k,
                    modified,
                    side,
                    exact,
                    lower: s.lower,
                    upper: s.upper,
                    child,
                    middle,
                };
                best = Some((value, Rc::new(plan)));
            }
        }
        let best = best.expect("a node always has a candidate cut");
        self.memo.insert(key, best.clone());
        best
    }
}

fn ratio(num: usize, den: usize) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Spreads `total` over the non-empty targets in equal parts.
fn spread(targets: Vec<Cells>, total: &Rational, out: &mut Cells) {
    let live: Vec<Cells> = targets.into_iter().filter(|t| !t.is_empty()).collect();
    if live.is_empty() || total.is_zero() {
        return;
    }
    let share = total / Rational::from_integer(BigInt::from(live.len()));
    for t in live {
        out.extend(scaled(&t, &share));
    }
}

fn uniform(lo: &Rational, hi: &Rational) -> Cells {
    if lo < hi {
        vec![(lo.clone(), hi.clone(), one())]
    } else {
        Vec::new()
    }
}

/// Cells on the plan's interval whose induced cuts reproduce the plan.
fn synthesize(plan: &Plan) -> Cells {
    let Plan::Node { lo, hi, k, modified, side, exact, lower, upper, child, middle } = plan else {
        let Plan::Leaf { lo, hi } = plan else { unreachable!() };
        return uniform(lo, hi);
    };
    let f = ratio(k / 2, *k);
    let g = one() - &f;
    let two = Rational::from_integer(2.into());
    let child = synthesize(child);
    let m = mass(&child);
    let middle = middle.as_deref().map(synthesize).unwrap_or_default();
    let mut out: Cells = Vec::new();
    match (side, *modified) {
        (Side::Left, false) => {
            out.extend(child);
            let rest = if *exact { &m * &g / &f } else { &m * &g / (&two * &f) };
            spread(vec![uniform(lower, hi)], &rest, &mut out);
        }
        (Side::Right, false) => {
            spread(vec![uniform(lo, lower)], &(&f * &m / (&two * &g)), &mut out);
            out.extend(child);
        }
        (Side::Left, true) => {
            out.extend(child);
            let rest = if *exact { &m * &g / &f } else { &m * &g / (&two * &f) };
            spread(vec![middle, uniform(upper, hi)], &rest, &mut out);
        }
        (Side::Right, true) => {
            let before = if *exact { &f * &m / &g } else { &f * &m / (&two * &g) };
            spread(vec![uniform(lo, lower), middle], &before, &mut out);
            out.extend(child);
        }
    }
    out.sort();
    out
}

fn to_valuation(cells: &Cells) -> Result<Valuation> {
    let breakpoints: Vec<Rational> = cells.iter().skip(1).map(|c| c.0.clone()).collect();
    let densities: Vec<Rational> = cells.iter().map(|(a, b, m)| m / (b - a)).collect();
    Valuation::normalize(breakpoints, densities)
}

/// Exact best response of `agent` against plain or modified Even-Paz over the
/// candidate cut positions, returned as a re-verified certificate.
pub fn ep_cutpoint_best_response(
    mechanism: &dyn Mechanism,
    profile: &Profile,
    agent: usize,
    cfg: &SearchConfig,
) -> Result<GainCertificate> {
    let variant = mechanism
        .ep_variant()
        .ok_or_else(|| Error::UnsupportedMechanism(mechanism.name()))?;
    profile.check_agent(agent)?;
    let anchors = anchor_points(mechanism, profile)?;
    let base = SearchConfig::base_gamma(&anchors);
    let mut gammas: Vec<Rational> = (0..cfg.rounds).map(|r| cfg.gamma(&base, r)).collect();
    gammas.push(cfg.gamma(&base, cfg.rounds + FINE_ROUNDS));
    let root_points = offset_points(&anchors, &[]);
    let mut search = Search {
        profile,
        agent,
        gammas,
        root_points,
        breaks: profile.grid().into_iter().filter(|x| x.is_positive() && x < &one()).collect(),
        mirrored: profile.valuations().iter().map(Valuation::mirrored).collect(),
        memo: HashMap::new(),
    };
    let modified = variant == EpVariant::Modified;
    let all: Vec<usize> = (0..profile.n()).collect();
    let (value, plan) = search.best(zero(), one(), all, modified, true);

    let truthful = true_value(mechanism, profile, agent)?;
    if value <= truthful {
        return GainCertificate::with_baseline(mechanism, profile, agent, profile.agent(agent).clone(), truthful);
    }
    let misreport = to_valuation(&synthesize(&plan))?;
    let cert = GainCertificate::with_baseline(mechanism, profile, agent, misreport, truthful)?;
    if cert.deviated_value != value {
        return Err(Error::VerificationFailed(format!(
            "planned value {} but the synthesized report yields {}",
            format_rational(&value),
            format_rational(&cert.deviated_value)
        )));
    }
    debug_assert!(cert.gain.is_positive());
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{EqualSplitNonwasteful, EvenPaz, ModifiedEvenPaz};
    use crate::properties::best_response_gain;
    use crate::rational::rat;

    fn cfg() -> SearchConfig {
        SearchConfig::default()
    }

    fn near_worst() -> Profile {
        let v1 = Valuation::from_masses(&[rat(1, 100), rat(1, 2)], &[rat(1, 2), rat(49, 100), rat(1, 100)])
            .unwrap();
        Profile::new(vec![v1, Valuation::uniform()]).unwrap()
    }

    #[test]
    fn uniform_pair_has_no_gain() {
        let p = Profile::new(vec![Valuation::uniform(); 2]).unwrap();
        for agent in 0..2 {
            let c = ep_cutpoint_best_response(&EvenPaz, &p, agent, &cfg()).unwrap();
            assert_eq!(c.gain, zero());
        }
    }

    #[test]
    fn uniform_triple_has_no_gain() {
        let p = Profile::new(vec![Valuation::uniform(); 3]).unwrap();
        for agent in 0..3 {
            let c = ep_cutpoint_best_response(&EvenPaz, &p, agent, &cfg()).unwrap();
            assert_eq!(c.gain, zero());
        }
    }

    #[test]
    fn near_worst_fixture_approaches_the_supremum() {
        let p = near_worst();
        let c = ep_cutpoint_best_response(&EvenPaz, &p, 0, &cfg()).unwrap();
        c.verify(&EvenPaz).unwrap();
        // Agent 1 wins the tie at the other agent's cut and keeps all of [0, 1/2].
        assert_eq!(c.gain, rat(49, 100));
        assert_eq!(c.deviated_value, rat(99, 100));
        let grid = best_response_gain(&EvenPaz, &p, 0, &cfg()).unwrap();
        assert!(c.gain >= grid.gain);
    }

    #[test]
    fn modified_search_reproduces_its_plan() {
        let p = near_worst();
        for agent in 0..2 {
            let c = ep_cutpoint_best_response(&ModifiedEvenPaz, &p, agent, &cfg()).unwrap();
            c.verify(&ModifiedEvenPaz).unwrap();
            assert!(c.gain <= rat(1, 4));
        }
    }

    #[test]
    fn other_mechanisms_are_rejected() {
        assert!(matches!(
            ep_cutpoint_best_response(&EqualSplitNonwasteful, &near_worst(), 0, &cfg()),
            Err(Error::UnsupportedMechanism(_))
        ));
    }
}
