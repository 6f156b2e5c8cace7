//! Chain against contiguous mechanisms for three or more agents: two uniform
//! agents and `n - 2` agents that only want a short interval near the left.

use num_traits::Zero;

use super::{check_epsilon, pick, reciprocal, ChainName, ChainParameters, Checks, Recorder, ViolationWitness};
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::profile::Profile;
use crate::rational::{format_rational, max_rat, one, Rational};
use crate::valuation::Valuation;

/// The report of the `n - 2` narrow agents: uniform on `[s^2, s^2 + s]` with
/// `s = 1/n - eps`.
pub(crate) fn narrow(s: &Rational) -> Result<Valuation> {
    let lo = s * s;
    let hi = &lo + s;
    Valuation::from_masses(&[lo, hi], &[Rational::zero(), one(), Rational::zero()])
}

/// Left end of the support of the final report: the larger of
/// `c2 - s (c2 - c1)` and `s^2 + s`.
pub(crate) fn support_start(s: &Rational, c1: &Rational, c2: &Rational) -> Rational {
    max_rat(&(c2 - s * (c2 - c1)), &(s * s + s))
}

pub fn contiguous_chain(mechanism: &dyn Mechanism, params: &ChainParameters) -> Result<ViolationWitness> {
    params.check_keys(&["delta"])?;
    let n = params.n;
    if n < 3 {
        return Err(Error::InfeasibleParameters(format!(
            "this chain needs at least 3 agents, got {n}"
        )));
    }
    let eps = &params.eps2;
    check_epsilon("eps2", eps, &reciprocal(n))?;
    check_epsilon("eps1", &params.eps1, &one())?;
    let s = reciprocal(n) - eps;
    let delta = pick(params, "delta", &Rational::zero(), &s)?;
    let mut rec = Recorder::new(mechanism, params);
    rec.param("delta", &delta);
    let checks = Checks {
        waste: false,
        contiguity: true,
        eps2: eps.clone(),
    };

    let u = Valuation::uniform();
    let mut agents = vec![u.clone(), u.clone()];
    agents.extend(std::iter::repeat_n(narrow(&s)?, n - 2));
    let p1 = Profile::new(agents)?;
    let r1 = rec.inspect("P1", &p1, &checks)?;

    let holds_right_end = |i: usize| {
        r1.allocation
            .piece(i)
            .hull()
            .is_some_and(|(_, hi)| hi == one())
    };
    let Some(b) = (0..2).find(|&i| holds_right_end(i)) else {
        if rec.has_findings() {
            return rec.finish(ChainName::Contiguous);
        }
        return Err(Error::Inconclusive(
            "neither uniform agent holds the right end of the cake".into(),
        ));
    };
    let a = 1 - b;
    let piece_a = r1.allocation.piece(a).clone();
    let Some((c1, c2)) = piece_a.hull().filter(|_| piece_a.is_contiguous()) else {
        return rec.finish(ChainName::Contiguous);
    };
    rec.param("c1", &c1);
    rec.param("c2", &c2);

    let v = Valuation::indicator(&piece_a)?;
    let p2 = p1.with_agent(a, v.clone());
    rec.inspect("P2", &p2, &checks)?;
    rec.deviation("P2->P1", &p2, a, u.clone(), &params.eps1)?;
    rec.deviation("P1->P2", &p1, a, v, &params.eps1)?;

    let start = support_start(&s, &c1, &c2);
    rec.param("b", &start);
    if start >= c2 || c2 >= one() {
        if rec.has_findings() {
            return rec.finish(ChainName::Contiguous);
        }
        return Err(Error::Inconclusive(format!(
            "the final report has no room: its support starts at {} but the first uniform agent's piece ends at {}",
            format_rational(&start),
            format_rational(&c2)
        )));
    }
    let near = one() - &s + &delta;
    let far = &s - &delta;
    let w = Valuation::from_masses(&[start, c2], &[Rational::zero(), near, far])?;
    let p3 = p2.with_agent(b, w.clone());
    rec.inspect("P3", &p3, &checks)?;
    rec.deviation("P2->P3", &p2, b, w, &params.eps1)?;
    rec.finish(ChainName::Contiguous)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::EvenPaz;
    use crate::rational::{rat, zero};
    use crate::scenarios::{Certificate, Violated};

    #[test]
    fn narrow_report_for_three_agents() {
        let r = narrow(&rat(1, 3)).unwrap();
        assert_eq!(r.breakpoints(), &[rat(1, 9), rat(4, 9)]);
        assert_eq!(r.densities()[1], rat(3, 1));
        assert_eq!(r.value_between(&zero(), &one()), one());
    }

    #[test]
    fn support_start_example() {
        assert_eq!(support_start(&rat(1, 3), &rat(1, 2), &rat(2, 3)), rat(11, 18));
    }

    #[test]
    fn even_paz_three_agents() {
        let params = ChainParameters::new(3, zero(), zero()).with_delta("delta", rat(1, 6));
        let w = contiguous_chain(&EvenPaz, &params).unwrap();
        assert_eq!(w.parameters["c1"], rat(2, 9));
        assert_eq!(w.parameters["c2"], rat(11, 18));
        assert_eq!(w.violated, Violated::Strategyproofness { epsilon: zero() });
        let Certificate::Gain(c) = &w.certificate else { panic!("expected a gain") };
        assert_eq!(c.agent, 0);
        assert_eq!(c.truthful_value, rat(1, 2));
        assert_eq!(c.gain, rat(1, 2));
        w.verify(&EvenPaz).unwrap();
    }

    #[test]
    fn rejects_two_agents_and_large_eps() {
        let params = ChainParameters::new(2, zero(), zero());
        assert!(contiguous_chain(&EvenPaz, &params).is_err());
        let params = ChainParameters::new(3, zero(), rat(1, 3));
        assert!(contiguous_chain(&EvenPaz, &params).is_err());
    }
}
