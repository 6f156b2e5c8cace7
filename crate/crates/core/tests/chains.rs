use std::sync::Arc;

use cake_core::mechanisms::{EqualSplitNonwasteful, EvenPaz, ModifiedEvenPaz, ZeroPieceExchange};
use cake_core::rational::{one, rat, zero};
use cake_core::scenarios::{
    contiguous_chain, nonwasteful_chain, two_agent_chain, ChainParameters, TwoAgentDeltas,
    ViolationWitness,
};
use cake_core::{Error, Mechanism, Rational};
use proptest::prelude::*;

fn nonwasteful_mechanisms() -> Vec<Arc<dyn Mechanism>> {
    vec![
        Arc::new(EqualSplitNonwasteful),
        Arc::new(ZeroPieceExchange::new(EvenPaz)),
        Arc::new(ZeroPieceExchange::new(ModifiedEvenPaz)),
    ]
}

fn total(v: &cake_core::Valuation) -> Rational {
    v.value_between(&zero(), &one())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Feasible parameters are `3 e1 + e2 < 1/n`; `a` and `b` split that room.
    #[test]
    fn nonwasteful_chain_always_finds_a_violation(n in 2usize..=5, a in 0i64..10, b in 0i64..10, d in 1i64..10) {
        let scale = 3 * 10 * 3 * n as i64;
        let eps1 = rat(a, scale);
        let eps2 = rat(b, 3 * 10 * n as i64);
        let params = ChainParameters::new(n, eps1, eps2);
        let bound = cake_core::scenarios::nonwasteful_delta_bound(&params).unwrap();
        let params = params.with_delta("delta", bound * rat(d, 10));
        for m in nonwasteful_mechanisms() {
            let w = nonwasteful_chain(m.as_ref(), &params).unwrap();
            w.verify(m.as_ref()).unwrap();
            for p in &w.profiles {
                for v in p.valuations() {
                    prop_assert_eq!(total(v), one());
                }
            }
        }
    }

    #[test]
    fn two_agent_defaults_are_feasible(a in 0i64..50, b in 0i64..50, c in 0i64..100) {
        prop_assume!(a + b < 50);
        let params = ChainParameters::new(2, rat(a, 100), rat(b, 100));
        let c1 = rat(1, 2) + rat(c, 201);
        let d = TwoAgentDeltas::choose(&params, &c1).unwrap();
        d.check(&params).unwrap();
        prop_assert_eq!(total(&d.v(&params).unwrap()), one());
        prop_assert_eq!(total(&d.w(&params).unwrap()), one());
        // The right agent's deviation in the construction is worth more than eps1.
        prop_assert!(&c1 - &d.delta3 - &d.delta5 > params.eps1);
    }

    #[test]
    fn two_agent_chain_on_even_paz(a in 0i64..50, b in 0i64..50) {
        prop_assume!(a + b < 50);
        let params = ChainParameters::new(2, rat(a, 100), rat(b, 100));
        let w = two_agent_chain(&EvenPaz, &params).unwrap();
        w.verify(&EvenPaz).unwrap();
    }

    #[test]
    fn contiguous_chain_profiles_are_normalized(n in 3usize..=6, e in 0i64..10, d in 1i64..10) {
        let eps = rat(e, 10 * n as i64);
        let s = rat(1, n as i64) - &eps;
        let params = ChainParameters::new(n, zero(), eps).with_delta("delta", s * rat(d, 10));
        match contiguous_chain(&EvenPaz, &params) {
            Ok(w) => {
                w.verify(&EvenPaz).unwrap();
                for p in &w.profiles {
                    for v in p.valuations() {
                        prop_assert_eq!(total(v), one());
                    }
                }
            }
            Err(Error::Inconclusive(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn witnesses_survive_json() {
    let params = ChainParameters::new(3, zero(), zero());
    let w = contiguous_chain(&EvenPaz, &params).unwrap();
    let text = serde_json::to_string(&w).unwrap();
    let back: ViolationWitness = serde_json::from_str(&text).unwrap();
    assert_eq!(back, w);
    back.verify(&EvenPaz).unwrap();
}

#[test]
fn tampered_witness_is_rejected() {
    let params = ChainParameters::new(2, zero(), zero());
    let mut w = nonwasteful_chain(&EqualSplitNonwasteful, &params).unwrap();
    if let cake_core::scenarios::Certificate::Gain(c) = &mut w.findings[0].certificate {
        c.gain = rat(3, 4);
    }
    assert!(matches!(w.verify(&EqualSplitNonwasteful), Err(Error::VerificationFailed(_))));
    let w = nonwasteful_chain(&EqualSplitNonwasteful, &params).unwrap();
    assert!(w.verify(&EvenPaz).is_err());
}
