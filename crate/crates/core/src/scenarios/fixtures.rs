//! Fixed profiles: the zero-piece exchange manipulation and near-worst-case
//! inputs for Even-Paz.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::{reciprocal, Certificate, ChainName, ChainParameters, Checks, Finding, Recorder, Violated, ViolationWitness};
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::profile::Profile;
use crate::properties::GainCertificate;
use crate::rational::{format_rational, int, one, rat, Rational};
use crate::valuation::Valuation;

/// Two agents where agent 2 profits from hiding that it values `[0, 1/2]`,
/// because the exchange stage hands it that piece back anyway.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscussionExample {
    pub truthful: Profile,
    pub deviated: Profile,
    /// What [`discussion_chain`] must report for `modified-ep-exchange`.
    pub expected: ViolationWitness,
}

pub const DISCUSSION_MECHANISM: &str = "modified-ep-exchange";

pub fn discussion_example() -> DiscussionExample {
    let v1 = Valuation::new(vec![rat(1, 2)], vec![Rational::zero(), int(2)]).expect("normalized");
    let cuts = vec![rat(1, 2), rat(4, 5)];
    let v2 = Valuation::new(cuts.clone(), vec![one(), Rational::zero(), rat(5, 2)]).expect("normalized");
    let lie = Valuation::new(cuts, vec![rat(2, 5), one(), rat(5, 2)]).expect("normalized");
    let truthful = Profile::new(vec![v1.clone(), v2]).expect("two agents");
    let deviated = Profile::new(vec![v1, lie.clone()]).expect("two agents");
    let certificate = Certificate::Gain(GainCertificate {
        mechanism: DISCUSSION_MECHANISM.into(),
        agent: 1,
        profile: truthful.clone(),
        misreport: lie,
        truthful_value: rat(1, 2),
        deviated_value: one(),
        gain: rat(1, 2),
    });
    let violated = Violated::Strategyproofness {
        epsilon: Rational::zero(),
    };
    let parameters = BTreeMap::from([
        ("eps1".to_string(), Rational::zero()),
        ("eps2".to_string(), Rational::zero()),
        ("n".to_string(), int(2)),
    ]);
    let expected = ViolationWitness {
        chain: ChainName::Discussion,
        mechanism: DISCUSSION_MECHANISM.into(),
        parameters,
        profiles: vec![truthful.clone(), deviated.clone()],
        violated: violated.clone(),
        certificate: certificate.clone(),
        findings: vec![Finding {
            step: "P1->P2".into(),
            violated,
            certificate,
        }],
    };
    DiscussionExample {
        truthful,
        deviated,
        expected,
    }
}

/// Runs `mechanism` on the exchange example and records agent 2's
/// misreport along with any fairness failure on either profile.
pub fn discussion_chain(mechanism: &dyn Mechanism, params: &ChainParameters) -> Result<ViolationWitness> {
    params.check_keys(&[])?;
    if params.n != 2 {
        return Err(Error::InfeasibleParameters(format!(
            "the exchange example has 2 agents, got {}",
            params.n
        )));
    }
    let example = discussion_example();
    let mut rec = Recorder::new(mechanism, params);
    let checks = Checks {
        waste: false,
        contiguity: false,
        eps2: params.eps2.clone(),
    };
    rec.inspect("P1", &example.truthful, &checks)?;
    let lie = example.deviated.agent(1).clone();
    rec.deviation("P1->P2", &example.truthful, 1, lie, &params.eps1)?;
    rec.inspect("P2", &example.deviated, &checks)?;
    rec.finish(ChainName::Discussion)
}

/// A profile and misreport on which Even-Paz pays agent `agent` at least
/// `gain_lower_bound` for lying.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorstCaseFixture {
    pub profile: Profile,
    pub agent: usize,
    pub misreport: Valuation,
    pub gain_lower_bound: Rational,
}

/// For `n` in `{2, 3}`: agent 1 puts the mass of its first-round share on a
/// sliver `[0, gap/4]` and almost everything else before the first cut,
/// while the others are uniform. Reporting the first-round share as
/// `[0, s - gap/4]` moves agent 1's cut right so it keeps nearly all its value.
pub fn ep_worstcase_fixture(n: usize, gap: &Rational) -> Result<WorstCaseFixture> {
    if !(2..=3).contains(&n) {
        return Err(Error::InfeasibleParameters(format!(
            "fixture exists for 2 or 3 agents, got {n}"
        )));
    }
    if !gap.is_positive() || *gap >= rat(1, 2 * n as i64) {
        return Err(Error::InfeasibleParameters(format!(
            "gap {} must lie in (0, 1/{})",
            format_rational(gap),
            2 * n
        )));
    }
    let s = Rational::new(BigInt::from(n / 2), BigInt::from(n));
    let quarter = gap / int(4);
    let truth = Valuation::from_masses(
        &[quarter.clone(), s.clone()],
        &[s.clone(), one() - &s - gap / int(2), gap / int(2)],
    )?;
    let misreport = Valuation::from_masses(&[&s - &quarter], &[s.clone(), one() - &s])?;
    let mut agents = vec![truth];
    agents.extend(std::iter::repeat_n(Valuation::uniform(), n - 1));
    Ok(WorstCaseFixture {
        profile: Profile::new(agents)?,
        agent: 0,
        misreport,
        gain_lower_bound: one() - reciprocal(n) - gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{mechanism_by_name, EvenPaz};

    #[test]
    fn discussion_example_is_reproduced() {
        let m = mechanism_by_name(DISCUSSION_MECHANISM).unwrap();
        let example = discussion_example();
        let params = ChainParameters::new(2, Rational::zero(), Rational::zero());
        let w = discussion_chain(m.as_ref(), &params).unwrap();
        assert_eq!(w, example.expected);
        example.expected.verify(m.as_ref()).unwrap();
    }

    #[test]
    fn worst_case_two_agents() {
        let f = ep_worstcase_fixture(2, &rat(1, 50)).unwrap();
        let c = GainCertificate::evaluate(&EvenPaz, &f.profile, f.agent, f.misreport).unwrap();
        assert_eq!(f.gain_lower_bound, rat(12, 25));
        assert!(c.gain >= f.gain_lower_bound);
        assert!(c.gain < rat(1, 2));
    }

    #[test]
    fn worst_case_three_agents() {
        let f = ep_worstcase_fixture(3, &rat(1, 50)).unwrap();
        let c = GainCertificate::evaluate(&EvenPaz, &f.profile, f.agent, f.misreport).unwrap();
        assert_eq!(c.deviated_value, rat(49, 50));
        assert!(c.gain >= f.gain_lower_bound);
        assert!(f.gain_lower_bound >= rat(2, 3) - rat(1, 25));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ep_worstcase_fixture(4, &rat(1, 50)).is_err());
        assert!(ep_worstcase_fixture(2, &rat(1, 4)).is_err());
        assert!(ep_worstcase_fixture(2, &Rational::zero()).is_err());
    }
}
