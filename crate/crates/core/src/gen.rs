//! Seeded random valuations and profiles for tests and experiments.

use num_bigint::BigInt;
use rand::seq::index::sample;
use rand::Rng;

use crate::profile::Profile;
use crate::rational::Rational;
use crate::valuation::Valuation;

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Upper bound on interior breakpoints per valuation.
    pub max_breakpoints: usize,
    /// Breakpoints are multiples of `1/grid`.
    pub grid: u32,
    /// Segment masses are drawn from `0..=max_weight` before normalizing.
    pub max_weight: u32,
    /// Whether a segment may carry zero mass.
    pub allow_zero: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_breakpoints: 3,
            grid: 24,
            max_weight: 9,
            allow_zero: true,
        }
    }
}

impl GenConfig {
    pub fn hungry() -> Self {
        GenConfig {
            allow_zero: false,
            ..GenConfig::default()
        }
    }
}

pub fn random_valuation<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> Valuation {
    let slots = cfg.grid.saturating_sub(1) as usize;
    let m = rng.gen_range(0..=cfg.max_breakpoints.min(slots));
    let mut ticks: Vec<usize> = sample(rng, slots, m).into_iter().map(|t| t + 1).collect();
    ticks.sort_unstable();
    let grid = BigInt::from(cfg.grid);
    let cuts: Vec<Rational> = ticks
        .iter()
        .map(|&t| Rational::new(BigInt::from(t), grid.clone()))
        .collect();
    let low = if cfg.allow_zero { 0 } else { 1 };
    loop {
        let masses: Vec<Rational> = (0..=m)
            .map(|_| Rational::from_integer(BigInt::from(rng.gen_range(low..=cfg.max_weight.max(1)))))
            .collect();
        let total: Rational = masses.iter().sum();
        if total == Rational::from_integer(BigInt::from(0)) {
            continue;
        }
        let masses: Vec<Rational> = masses.iter().map(|x| x / &total).collect();
        return Valuation::from_masses(&cuts, &masses).expect("masses sum to one");
    }
}

pub fn random_profile<R: Rng + ?Sized>(rng: &mut R, n: usize, cfg: &GenConfig) -> Profile {
    Profile::new((0..n).map(|_| random_valuation(rng, cfg)).collect())
        .expect("generated profiles have at least two agents")
}
