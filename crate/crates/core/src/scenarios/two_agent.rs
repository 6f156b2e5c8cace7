//! Chain against contiguous mechanisms for two hungry agents.

use num_traits::Zero;

use super::{check_epsilon, pick, ChainName, ChainParameters, Checks, Recorder, ViolationWitness};
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::profile::Profile;
use crate::rational::{format_rational, int, min_rat, one, rat, Rational};
use crate::valuation::Valuation;

/// The five slack constants of the construction for a given first cut `c1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoAgentDeltas {
    pub c1: Rational,
    pub delta1: Rational,
    pub delta2: Rational,
    pub delta3: Rational,
    pub delta4: Rational,
    pub delta5: Rational,
}

impl TwoAgentDeltas {
    /// Picks each constant at the midpoint of its admissible interval unless
    /// overridden, then re-checks every inequality.
    pub fn choose(params: &ChainParameters, c1: &Rational) -> Result<Self> {
        let (e1, e2) = (&params.eps1, &params.eps2);
        let half = rat(1, 2);
        if *c1 < half || *c1 >= one() {
            return Err(Error::InfeasibleParameters(format!(
                "first cut {} must lie in [1/2, 1)",
                format_rational(c1)
            )));
        }
        let zero = Rational::zero();
        let delta2 = pick(params, "delta2", &zero, &(&half - e1 - e2))?;
        let delta3 = pick(params, "delta3", &zero, &(c1 - e1))?;
        let room = c1 - e1 - &delta3;
        let cap = min_rat(&room, &(&half - e2));
        let delta1 = pick(params, "delta1", &zero, &cap)?;
        let delta4 = pick(params, "delta4", &delta1, &cap)?;
        let delta5 = pick(params, "delta5", &delta4, &room)?;
        let d = TwoAgentDeltas {
            c1: c1.clone(),
            delta1,
            delta2,
            delta3,
            delta4,
            delta5,
        };
        d.check(params)?;
        Ok(d)
    }

    /// Every inequality the construction relies on, in exact arithmetic.
    pub fn check(&self, params: &ChainParameters) -> Result<()> {
        let (e1, e2) = (&params.eps1, &params.eps2);
        let half = rat(1, 2);
        let room = &self.c1 - e1 - &self.delta3;
        let zero = Rational::zero();
        let conditions = [
            ("eps1 + eps2 < 1/2", e1 + e2 < half),
            ("0 < delta2 < 1/2 - eps1 - eps2", self.delta2 > zero && self.delta2 < &half - e1 - e2),
            ("0 < delta3 < c1 - eps1", self.delta3 > zero && self.delta3 < &self.c1 - e1),
            ("0 < delta1 < c1 - eps1 - delta3", self.delta1 > zero && self.delta1 < room),
            ("delta1 < 1/2 - eps2", self.delta1 < &half - e2),
            ("delta1 < delta4 < delta5", self.delta1 < self.delta4 && self.delta4 < self.delta5),
            ("delta5 < c1 - eps1 - delta3", self.delta5 < room),
            ("delta4 < 1/2 - eps2", self.delta4 < &half - e2),
        ];
        match conditions.iter().find(|(_, ok)| !ok) {
            Some((what, _)) => Err(Error::InfeasibleParameters(format!("violated: {what}"))),
            None => Ok(()),
        }
    }

    /// The report that makes the left piece nearly all of agent 1's value.
    pub fn v(&self, params: &ChainParameters) -> Result<Valuation> {
        let (e1, e2) = (&params.eps1, &params.eps2);
        let half = rat(1, 2);
        Valuation::from_masses(
            &[self.delta1.clone(), &self.c1 - &self.delta3, self.c1.clone()],
            &[&half + e2, &half - e1 - e2 - &self.delta2, e1.clone(), self.delta2.clone()],
        )
    }

    /// The report that makes agent 2 claim most of the left piece.
    pub fn w(&self, params: &ChainParameters) -> Result<Valuation> {
        let e2 = &params.eps2;
        let half = rat(1, 2);
        Valuation::from_masses(
            &[self.delta4.clone(), self.delta5.clone(), &self.c1 - &self.delta3],
            &[&half - e2, int(2) * e2, self.delta4.clone(), &half - e2 - &self.delta4],
        )
    }
}

pub fn two_agent_chain(mechanism: &dyn Mechanism, params: &ChainParameters) -> Result<ViolationWitness> {
    params.check_keys(&["delta1", "delta2", "delta3", "delta4", "delta5"])?;
    if params.n != 2 {
        return Err(Error::InfeasibleParameters(format!(
            "this chain needs exactly 2 agents, got {}",
            params.n
        )));
    }
    let half = rat(1, 2);
    check_epsilon("eps1", &params.eps1, &half)?;
    check_epsilon("eps2", &params.eps2, &half)?;
    if &params.eps1 + &params.eps2 >= half {
        return Err(Error::InfeasibleParameters("eps1 + eps2 must be below 1/2".into()));
    }
    let mut rec = Recorder::new(mechanism, params);
    let checks = Checks {
        waste: false,
        contiguity: true,
        eps2: params.eps2.clone(),
    };

    let u = Valuation::uniform();
    let p1 = Profile::new(vec![u.clone(), u.clone()])?;
    let r1 = rec.inspect("P1", &p1, &checks)?;
    if rec.has_findings() {
        return rec.finish(ChainName::TwoAgent);
    }
    // A valid contiguous proportional split of (u, u): one agent holds
    // [0, c] and the other [c, 1].
    let Some(a) = (0..2).find(|&i| {
        r1.allocation
            .piece(i)
            .hull()
            .is_some_and(|(lo, _)| lo.is_zero())
    }) else {
        return Err(Error::Mechanism {
            mechanism: mechanism.name(),
            reason: "no agent holds the left end of the cake".into(),
        });
    };
    let b = 1 - a;
    let cut = r1.allocation.piece(a).hull().map(|(_, hi)| hi).unwrap_or_default();
    // Work in the frame where the cut is at or right of 1/2 and agent `a`
    // holds the left piece.
    let mirror = cut < half;
    let (a, b, c1) = if mirror { (b, a, one() - &cut) } else { (a, b, cut) };
    let d = TwoAgentDeltas::choose(params, &c1)?;
    rec.param("c1", &d.c1);
    rec.param("delta1", &d.delta1);
    rec.param("delta2", &d.delta2);
    rec.param("delta3", &d.delta3);
    rec.param("delta4", &d.delta4);
    rec.param("delta5", &d.delta5);
    rec.param("mirrored", &if mirror { one() } else { Rational::zero() });

    let place = |v: Valuation| if mirror { v.mirrored() } else { v };
    let v = place(d.v(params)?);
    let w = place(d.w(params)?);
    let p2 = p1.with_agent(a, v);
    rec.inspect("P2", &p2, &checks)?;
    rec.deviation("P2->P1", &p2, a, u, &params.eps1)?;
    let p3 = p2.with_agent(b, w.clone());
    rec.inspect("P3", &p3, &checks)?;
    rec.deviation("P2->P3", &p2, b, w, &params.eps1)?;
    rec.finish(ChainName::TwoAgent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::EvenPaz;
    use crate::scenarios::{Certificate, Violated};

    fn gain_of(w: &ViolationWitness, step: &str) -> Option<(usize, Rational)> {
        w.findings.iter().find(|f| f.step == step).and_then(|f| match &f.certificate {
            Certificate::Gain(c) => Some((c.agent, c.gain.clone())),
            _ => None,
        })
    }

    #[test]
    fn midpoint_defaults() {
        let params = ChainParameters::new(2, rat(2, 5), Rational::zero());
        let d = TwoAgentDeltas::choose(&params, &rat(1, 2)).unwrap();
        assert_eq!(
            [d.delta1, d.delta2, d.delta3, d.delta4, d.delta5],
            [rat(1, 40), rat(1, 20), rat(1, 20), rat(3, 80), rat(7, 160)]
        );
    }

    #[test]
    fn even_paz_two_fifths() {
        let params = ChainParameters::new(2, rat(2, 5), Rational::zero());
        let w = two_agent_chain(&EvenPaz, &params).unwrap();
        assert_eq!(w.parameters["c1"], rat(1, 2));
        assert_eq!(gain_of(&w, "P2->P1"), Some((0, rat(9, 20))));
        // Even-Paz hands agent 1 only [0, delta1] at P2, so the right
        // agent's deviation to w changes nothing.
        assert_eq!(gain_of(&w, "P2->P3"), None);
        w.verify(&EvenPaz).unwrap();
    }

    #[test]
    fn overridden_deltas_are_used() {
        let params = ChainParameters::new(2, rat(2, 5), Rational::zero())
            .with_delta("delta1", rat(1, 80))
            .with_delta("delta3", rat(1, 40))
            .with_delta("delta4", rat(1, 40))
            .with_delta("delta5", rat(1, 20));
        let w = two_agent_chain(&EvenPaz, &params).unwrap();
        assert_eq!(w.parameters["delta3"], rat(1, 40));
        assert_eq!(w.parameters["delta5"], rat(1, 20));
        assert_eq!(gain_of(&w, "P2->P1"), Some((0, rat(9, 20))));
        w.verify(&EvenPaz).unwrap();
    }

    #[test]
    fn bad_override_is_rejected() {
        let params = ChainParameters::new(2, rat(1, 5), Rational::zero()).with_delta("delta4", rat(1, 1000));
        assert!(matches!(
            two_agent_chain(&EvenPaz, &params),
            Err(Error::InfeasibleParameters(_))
        ));
    }

    /// Gives agent 2 the left piece, worth `2/5` to it, and agent 1 the rest.
    struct LeftToSecond;

    impl Mechanism for LeftToSecond {
        fn name(&self) -> String {
            "left-to-second".into()
        }
        fn declared(&self) -> Vec<crate::mechanisms::DeclaredProperty> {
            Vec::new()
        }
        fn allocate(&self, profile: &Profile) -> Result<crate::profile::Allocation> {
            let x = profile.agent(1).cut(&Rational::zero(), &rat(2, 5)).unwrap();
            Ok(crate::profile::Allocation::from_pieces(vec![
                crate::piece::Piece::interval(x.clone(), one())?,
                crate::piece::Piece::interval(Rational::zero(), x)?,
            ]))
        }
    }

    /// Splits at 1/2 whatever the reports.
    struct FixedHalves;

    impl Mechanism for FixedHalves {
        fn name(&self) -> String {
            "fixed-halves".into()
        }
        fn declared(&self) -> Vec<crate::mechanisms::DeclaredProperty> {
            Vec::new()
        }
        fn allocate(&self, _profile: &Profile) -> Result<crate::profile::Allocation> {
            Ok(crate::profile::Allocation::from_pieces(vec![
                crate::piece::Piece::interval(Rational::zero(), rat(1, 2))?,
                crate::piece::Piece::interval(rat(1, 2), one())?,
            ]))
        }
    }

    #[test]
    fn mirrored_frame() {
        let params = ChainParameters::new(2, Rational::zero(), rat(1, 10));
        let w = two_agent_chain(&LeftToSecond, &params).unwrap();
        assert_eq!(w.parameters["mirrored"], one());
        assert_eq!(w.parameters["c1"], rat(3, 5));
        w.verify(&LeftToSecond).unwrap();
    }

    #[test]
    fn report_independent_split_fails_proportionality() {
        let params = ChainParameters::new(2, Rational::zero(), Rational::zero());
        let w = two_agent_chain(&FixedHalves, &params).unwrap();
        assert_eq!(w.findings[0].step, "P3");
        assert_eq!(w.violated, Violated::Proportionality { epsilon: Rational::zero() });
        w.verify(&FixedHalves).unwrap();
    }

    #[test]
    fn w_report_is_normalized_for_zero_eps2() {
        let params = ChainParameters::new(2, rat(1, 5), Rational::zero());
        let d = TwoAgentDeltas::choose(&params, &rat(3, 4)).unwrap();
        let total = d.w(&params).unwrap().value_between(&Rational::zero(), &one());
        assert_eq!(total, one());
    }
}
