//! Grid search over simple misreports.
//!
//! Candidate breakpoints come from the profile (every agent's breakpoints
//! and the cuts of the truthful run) plus small offsets around them; masses
//! come from a rational simplex grid. The best gain found is a lower bound on
//! what the agent can gain, never an upper bound.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{true_value, GainCertificate};
use crate::error::Result;
use crate::mechanisms::Mechanism;
use crate::piece::Piece;
use crate::profile::Profile;
use crate::rational::{one, zero, Rational};
use crate::valuation::Valuation;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Offset refinement rounds; round `r` uses offsets `gamma0 / 2^r`.
    pub rounds: u32,
    /// Single-breakpoint masses are multiples of `1/mass_resolution`.
    pub mass_resolution: u32,
    /// Two-breakpoint masses are multiples of `1/pair_resolution`.
    pub pair_resolution: u32,
    /// Misreports evaluated per search, the truthful report included.
    pub max_misreports: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            rounds: 2,
            mass_resolution: 8,
            pair_resolution: 6,
            max_misreports: 600,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub(crate) fn base_gamma(points: &[Rational]) -> Rational {
        let min_gap = points
            .windows(2)
            .map(|w| &w[1] - &w[0])
            .filter(|g| g.is_positive())
            .min()
            .unwrap_or_else(one);
        min_gap / Rational::from_integer(64.into())
    }

    pub(crate) fn gamma(&self, base: &Rational, round: u32) -> Rational {
        base / Rational::from_integer(BigInt::from(2u32).pow(round))
    }
}

/// Every agent's breakpoints, the truthful run's cuts, 0 and 1, sorted.
pub(crate) fn anchor_points(mechanism: &dyn Mechanism, profile: &Profile) -> Result<Vec<Rational>> {
    let mut points = profile.grid();
    points.extend(mechanism.cut_points(profile)?);
    points.sort();
    points.dedup();
    Ok(points)
}

/// Anchors plus `+-gamma` offsets for each of the given rounds, restricted to
/// the open unit interval.
pub(crate) fn offset_points(anchors: &[Rational], gammas: &[Rational]) -> Vec<Rational> {
    let mut out: Vec<Rational> = Vec::new();
    for p in anchors {
        out.push(p.clone());
        for g in gammas {
            out.push(p - g);
            out.push(p + g);
        }
    }
    out.retain(|x| x.is_positive() && x < &one());
    out.sort();
    out.dedup();
    out
}

fn mass_grid(resolution: u32, n: usize) -> Vec<Rational> {
    let r = resolution.max(1);
    let mut masses: Vec<Rational> = (0..=r)
        .map(|j| Rational::new(BigInt::from(j), BigInt::from(r)))
        .collect();
    for k in 2..=n.max(2) {
        masses.push(Rational::new(BigInt::from(k / 2), BigInt::from(k)));
    }
    masses.sort();
    masses.dedup();
    masses
}

/// `v` rescaled to carry `left` of its mass on `[0, c]` and the rest on
/// `[c, 1]`, keeping its shape on each side (uniform where it has none).
fn reshaped(v: &Valuation, c: &Rational, left: &Rational) -> Option<Valuation> {
    let sides = [
        (zero(), c.clone(), left.clone()),
        (c.clone(), one(), one() - left),
    ];
    let mut parts: Vec<(Piece, Rational)> = Vec::new();
    for (lo, hi, mass) in sides {
        if mass.is_zero() {
            continue;
        }
        let own = v.value_between(&lo, &hi);
        if own.is_zero() {
            parts.push((Piece::interval(lo, hi).ok()?, mass));
            continue;
        }
        for (a, b, d) in v.segments() {
            let a = if a < lo { lo.clone() } else { a };
            let b = if b > hi { hi.clone() } else { b };
            if a >= b || d.is_zero() {
                continue;
            }
            let share = (&b - &a) * d / &own * &mass;
            parts.push((Piece::interval(a, b).ok()?, share));
        }
    }
    Valuation::weighted_pieces(&parts).ok()
}

/// The misreports a grid search with `cfg` would try, deduplicated and in a
/// deterministic order (truthful report first).
pub fn candidate_misreports(
    mechanism: &dyn Mechanism,
    profile: &Profile,
    agent: usize,
    cfg: &SearchConfig,
) -> Result<Vec<Valuation>> {
    profile.check_agent(agent)?;
    let truth = profile.agent(agent).clone();
    let anchors = anchor_points(mechanism, profile)?;
    let base = SearchConfig::base_gamma(&anchors);
    let gammas: Vec<Rational> = (0..cfg.rounds).map(|r| cfg.gamma(&base, r)).collect();
    let points = offset_points(&anchors, &gammas);
    let masses = mass_grid(cfg.mass_resolution, profile.n());

    let budget = cfg.max_misreports.saturating_sub(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen: BTreeSet<String> = BTreeSet::new();
    seen.insert(truth.encoding());
    let mut chosen: Vec<Valuation> = Vec::new();

    // Single-breakpoint reports and reshaped truths, indexed by
    // (point, mass, family) and subsampled before construction.
    let singles = points.len() * masses.len() * 2;
    let keep = (budget - budget / 4).min(singles);
    let mut picks: Vec<usize> = if keep == singles {
        (0..singles).collect()
    } else {
        sample(&mut rng, singles, keep).into_vec()
    };
    picks.sort_unstable();
    for p in picks {
        let c = &points[p / (masses.len() * 2)];
        let m = &masses[(p / 2) % masses.len()];
        let v = if p % 2 == 0 {
            Valuation::from_masses(std::slice::from_ref(c), &[m.clone(), one() - m]).ok()
        } else {
            reshaped(&truth, c, m)
        };
        if let Some(v) = v {
            if seen.insert(v.encoding()) {
                chosen.push(v);
            }
        }
    }

    let r3 = cfg.pair_resolution.max(1);
    let triples: Vec<(u32, u32)> = (0..=r3)
        .flat_map(|a| (0..=r3 - a).map(move |b| (a, b)))
        .collect();
    let pairs = points.len() * points.len().saturating_sub(1) / 2;
    let total = pairs * triples.len();
    let room = budget.saturating_sub(chosen.len());
    if room > 0 && total > 0 {
        let mut pair_index: Vec<(usize, usize)> = Vec::with_capacity(pairs);
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                pair_index.push((i, j));
            }
        }
        let picks = sample(&mut rng, total, room.min(total)).into_vec();
        let denom = BigInt::from(r3);
        let mut picks = picks;
        picks.sort_unstable();
        for p in picks {
            let (i, j) = pair_index[p / triples.len()];
            let (a, b) = triples[p % triples.len()];
            let ms = [
                Rational::new(BigInt::from(a), denom.clone()),
                Rational::new(BigInt::from(b), denom.clone()),
                Rational::new(BigInt::from(r3 - a - b), denom.clone()),
            ];
            if let Ok(v) = Valuation::from_masses(&[points[i].clone(), points[j].clone()], &ms) {
                if seen.insert(v.encoding()) {
                    chosen.push(v);
                }
            }
        }
    }

    let mut out = Vec::with_capacity(chosen.len() + 1);
    out.push(truth);
    out.extend(chosen);
    Ok(out)
}

/// Best certificate among `misreports`: highest gain, then the truthful
/// report, then the smallest encoding.
pub(crate) fn best_of(
    mechanism: &dyn Mechanism,
    profile: &Profile,
    agent: usize,
    misreports: Vec<Valuation>,
) -> Result<GainCertificate> {
    let truthful = true_value(mechanism, profile, agent)?;
    let truth = profile.agent(agent);
    let certs = misreports
        .into_par_iter()
        .map(|v| GainCertificate::with_baseline(mechanism, profile, agent, v, truthful.clone()))
        .collect::<Result<Vec<_>>>()?;
    let best = certs
        .into_iter()
        .map(|c| {
            let key = (c.misreport != *truth, c.misreport.encoding());
            (c, key)
        })
        .reduce(|(a, ka), (b, kb)| {
            let better = b.gain > a.gain || (b.gain == a.gain && kb < ka);
            if better {
                (b, kb)
            } else {
                (a, ka)
            }
        })
        .map(|(c, _)| c);
    match best {
        Some(c) if c.gain.is_positive() => Ok(c),
        _ => GainCertificate::with_baseline(mechanism, profile, agent, truth.clone(), truthful),
    }
}

/// Largest gain found by trying grid misreports for `agent`.
pub fn best_response_gain(
    mechanism: &dyn Mechanism,
    profile: &Profile,
    agent: usize,
    cfg: &SearchConfig,
) -> Result<GainCertificate> {
    let misreports = candidate_misreports(mechanism, profile, agent, cfg)?;
    best_of(mechanism, profile, agent, misreports)
}
