//! Chain against non-wasteful mechanisms: two agents want only `[0, 2/n]`,
//! the rest want only `[2/n, 1]`.

use num_traits::{One, Zero};

use super::{check_epsilon, pick, reciprocal, uniform_on_prefix, ChainName, ChainParameters, Checks, Recorder, ViolationWitness};
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::profile::Profile;
use crate::rational::{int, one, Rational};
use crate::valuation::Valuation;

/// Exclusive upper bound on the weight `w` puts on the smaller agent's piece:
/// `(1 - n(3 eps1 + eps2)) / (n (1 - 3 eps1))`.
pub fn nonwasteful_delta_bound(params: &ChainParameters) -> Result<Rational> {
    let n = params.n;
    if n < 2 {
        return Err(Error::InfeasibleParameters(format!("need at least 2 agents, got {n}")));
    }
    let share = reciprocal(n);
    check_epsilon("eps1", &params.eps1, &share)?;
    check_epsilon("eps2", &params.eps2, &share)?;
    let load = int(3) * &params.eps1 + &params.eps2;
    if load >= share {
        return Err(Error::InfeasibleParameters(
            "3 eps1 + eps2 must be below 1/n".into(),
        ));
    }
    let n = int(n as i64);
    Ok((one() - &n * load) / (n * (one() - int(3) * &params.eps1)))
}

pub fn nonwasteful_chain(mechanism: &dyn Mechanism, params: &ChainParameters) -> Result<ViolationWitness> {
    params.check_keys(&["delta"])?;
    let bound = nonwasteful_delta_bound(params)?;
    let delta = pick(params, "delta", &Rational::zero(), &bound)?;
    let n = params.n;
    let mut rec = Recorder::new(mechanism, params);
    rec.param("delta", &delta);
    rec.param("delta_bound", &bound);
    let checks = Checks {
        waste: true,
        contiguity: false,
        eps2: params.eps2.clone(),
    };

    let front = int(2) * reciprocal(n);
    let u = uniform_on_prefix(&front)?;
    let mut agents = vec![u.clone(), u.clone()];
    if n > 2 {
        let y = Valuation::from_masses(std::slice::from_ref(&front), &[Rational::zero(), Rational::one()])?;
        agents.extend(std::iter::repeat_n(y, n - 2));
    }
    let p1 = Profile::new(agents)?;
    let r1 = rec.inspect("P1", &p1, &checks)?;

    let (a, b) = if r1.allocation.piece(1).measure() > r1.allocation.piece(0).measure() {
        (1, 0)
    } else {
        (0, 1)
    };
    let piece_a = r1.allocation.piece(a).clone();
    let piece_b = r1.allocation.piece(b).clone();
    rec.param("len_a", &piece_a.measure());
    rec.param("len_b", &piece_b.measure());
    if piece_a.measure().is_zero() {
        return rec.finish(ChainName::Nonwasteful);
    }

    let v = Valuation::indicator(&piece_a)?;
    let p2 = p1.with_agent(a, v);
    rec.inspect("P2", &p2, &checks)?;
    rec.deviation("P2->P1", &p2, a, u, &params.eps1)?;

    if piece_b.measure().is_zero() {
        return rec.finish(ChainName::Nonwasteful);
    }
    let w = Valuation::weighted_pieces(&[(piece_a, one() - &delta), (piece_b, delta)])?;
    let p3 = p2.with_agent(b, w.clone());
    rec.inspect("P3", &p3, &checks)?;
    rec.deviation("P2->P3", &p2, b, w, &params.eps1)?;
    rec.finish(ChainName::Nonwasteful)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{EqualSplitNonwasteful, EvenPaz};
    use crate::rational::{rat, zero};
    use crate::scenarios::{Certificate, Violated};

    #[test]
    fn delta_bound_example() {
        let params = ChainParameters::new(2, rat(1, 12), rat(1, 12));
        assert_eq!(nonwasteful_delta_bound(&params).unwrap(), rat(2, 9));
        let w = nonwasteful_chain(&EqualSplitNonwasteful, &params).unwrap();
        assert_eq!(w.parameters["delta"], rat(1, 9));
    }

    #[test]
    fn rejects_infeasible_parameters() {
        let params = ChainParameters::new(3, rat(1, 9), zero());
        assert!(matches!(
            nonwasteful_chain(&EqualSplitNonwasteful, &params),
            Err(Error::InfeasibleParameters(_))
        ));
        let params = ChainParameters::new(2, zero(), zero()).with_delta("delta", rat(1, 2));
        assert!(nonwasteful_chain(&EqualSplitNonwasteful, &params).is_err());
        let params = ChainParameters::new(2, zero(), zero()).with_delta("delta1", rat(1, 4));
        assert!(nonwasteful_chain(&EqualSplitNonwasteful, &params).is_err());
    }

    #[test]
    fn equal_split_two_agents() {
        let params = ChainParameters::new(2, zero(), zero()).with_delta("delta", rat(1, 4));
        let w = nonwasteful_chain(&EqualSplitNonwasteful, &params).unwrap();
        assert_eq!(w.violated, Violated::Strategyproofness { epsilon: zero() });
        let Certificate::Gain(c) = &w.certificate else { panic!("expected a gain") };
        assert_eq!((c.agent, c.gain.clone()), (0, rat(1, 2)));
        assert_eq!(w.profiles.len(), 3);
        w.verify(&EqualSplitNonwasteful).unwrap();
    }

    #[test]
    fn wasteful_mechanism_is_caught_at_the_start() {
        let params = ChainParameters::new(3, zero(), zero());
        let w = nonwasteful_chain(&EvenPaz, &params).unwrap();
        assert_eq!(w.findings[0].step, "P1");
        assert_eq!(w.violated, Violated::NonWastefulness);
        w.verify(&EvenPaz).unwrap();
    }
}
