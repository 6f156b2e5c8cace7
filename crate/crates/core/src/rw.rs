//! Robertson-Webb query access: eval/cut oracles with query accounting, a
//! learner that approximates a hidden valuation with cut queries, and a
//! wrapper running a direct-revelation mechanism on learned valuations.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{DeclaredProperty, Mechanism, MechanismKind};
use crate::profile::{Allocation, Profile};
use crate::rational::{floor_to_u64, format_rational, one, serde_rational, zero, Rational};
use crate::valuation::Valuation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    Eval,
    Cut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub kind: QueryKind,
    #[serde(with = "serde_rational")]
    pub x: Rational,
    /// `y` for eval, the requested value `r` for cut.
    #[serde(with = "serde_rational")]
    pub arg: Rational,
    #[serde(with = "serde_rational")]
    pub answer: Rational,
}

impl fmt::Display for QueryRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            QueryKind::Eval => "eval",
            QueryKind::Cut => "cut",
        };
        write!(
            f,
            "{name}({}, {}) = {}",
            format_rational(&self.x),
            format_rational(&self.arg),
            format_rational(&self.answer)
        )
    }
}

/// Anything that answers eval and cut queries about one agent.
pub trait QueryOracle {
    fn eval(&mut self, x: &Rational, y: &Rational) -> Result<Rational>;
    fn cut(&mut self, x: &Rational, r: &Rational) -> Result<Rational>;
    fn query_count(&self) -> usize;
}

/// Answers queries from a hidden valuation. Repeating an already-answered
/// query is served from memory and not counted again.
#[derive(Debug, Clone)]
pub struct RWOracle {
    hidden: Valuation,
    log: Vec<QueryRecord>,
    memo: HashMap<(QueryKind, Rational, Rational), Rational>,
}

impl RWOracle {
    pub fn new(hidden: Valuation) -> Self {
        RWOracle {
            hidden,
            log: Vec::new(),
            memo: HashMap::new(),
        }
    }

    pub fn log(&self) -> &[QueryRecord] {
        &self.log
    }

    pub(crate) fn hidden(&self) -> &Valuation {
        &self.hidden
    }

    fn answer(
        &mut self,
        kind: QueryKind,
        x: &Rational,
        arg: &Rational,
        compute: impl FnOnce(&Valuation) -> Result<Rational>,
    ) -> Result<Rational> {
        let key = (kind, x.clone(), arg.clone());
        if let Some(ans) = self.memo.get(&key) {
            return Ok(ans.clone());
        }
        let answer = compute(&self.hidden)?;
        self.memo.insert(key, answer.clone());
        self.log.push(QueryRecord {
            kind,
            x: x.clone(),
            arg: arg.clone(),
            answer: answer.clone(),
        });
        Ok(answer)
    }
}

fn in_unit(x: &Rational) -> bool {
    !x.is_negative() && x <= &one()
}

impl QueryOracle for RWOracle {
    fn eval(&mut self, x: &Rational, y: &Rational) -> Result<Rational> {
        if !in_unit(x) || !in_unit(y) || x > y {
            return Err(Error::QueryOutOfRange(format!(
                "eval({}, {}) needs 0 <= x <= y <= 1",
                format_rational(x),
                format_rational(y)
            )));
        }
        self.answer(QueryKind::Eval, x, y, |v| Ok(v.value_between(x, y)))
    }

    fn cut(&mut self, x: &Rational, r: &Rational) -> Result<Rational> {
        if !in_unit(x) || r.is_negative() {
            return Err(Error::QueryOutOfRange(format!(
                "cut({}, {}) needs 0 <= x <= 1 and r >= 0",
                format_rational(x),
                format_rational(r)
            )));
        }
        self.answer(QueryKind::Cut, x, r, |v| {
            v.cut(x, r).ok_or_else(|| Error::InfeasibleCut {
                from: format_rational(x),
                requested: format_rational(r),
                available: format_rational(&v.value_between(x, &one())),
            })
        })
    }

    fn query_count(&self) -> usize {
        self.log.len()
    }
}

/// An agent answering every query according to a fixed misreport while
/// keeping its true valuation for scoring.
#[derive(Debug, Clone)]
pub struct StrategicOracle {
    inner: RWOracle,
    true_valuation: Valuation,
}

impl StrategicOracle {
    pub fn new(reported: Valuation, true_valuation: Valuation) -> Self {
        StrategicOracle {
            inner: RWOracle::new(reported),
            true_valuation,
        }
    }

    pub fn reported(&self) -> &Valuation {
        self.inner.hidden()
    }

    pub fn true_valuation(&self) -> &Valuation {
        &self.true_valuation
    }

    pub fn log(&self) -> &[QueryRecord] {
        self.inner.log()
    }
}

impl QueryOracle for StrategicOracle {
    fn eval(&mut self, x: &Rational, y: &Rational) -> Result<Rational> {
        self.inner.eval(x, y)
    }

    fn cut(&mut self, x: &Rational, r: &Rational) -> Result<Rational> {
        self.inner.cut(x, r)
    }

    fn query_count(&self) -> usize {
        self.inner.query_count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnedValuation {
    pub w: Valuation,
    pub queries_used: usize,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub k: usize,
}

/// Number of cut queries the learner spends: `floor(2k / eps)`.
pub fn learning_budget(k: usize, epsilon: &Rational) -> Result<usize> {
    if !epsilon.is_positive() {
        return Err(Error::InfeasibleParameters(format!(
            "epsilon must be positive, got {}",
            format_rational(epsilon)
        )));
    }
    let n = Rational::from_integer(BigInt::from(2 * k)) / epsilon;
    floor_to_u64(&n)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::InfeasibleParameters("query budget too large".into()))
}

/// Learns a step function `w` within `eps/2` of the oracle's valuation on
/// every piece, assuming it has at most `k` breakpoints.
///
/// Walks left to right asking for points that each add `eps/(2k)` of value;
/// every resulting cell gets the constant density matching that mass and the
/// leftover mass is spread over the remainder of the cake.
pub fn approximate_valuation(
    oracle: &mut dyn QueryOracle,
    k: usize,
    epsilon: &Rational,
) -> Result<LearnedValuation> {
    if k == 0 {
        return Err(Error::InfeasibleParameters(
            "k must be at least 1".into(),
        ));
    }
    let n = learning_budget(k, epsilon)?;
    let step = epsilon / Rational::from_integer(BigInt::from(2 * k));
    let before = oracle.query_count();
    let mut points = vec![zero()];
    let mut densities = Vec::with_capacity(n + 1);
    for _ in 0..n {
        let prev = points.last().expect("starts at zero").clone();
        let next = oracle.cut(&prev, &step)?;
        assert!(next > prev, "learner produced an empty cell at {prev}");
        densities.push(&step / (&next - &prev));
        points.push(next);
    }
    let last = points.last().expect("starts at zero").clone();
    let remaining = one() - &step * Rational::from_integer(BigInt::from(n));
    if last < one() {
        densities.push(remaining / (one() - &last));
    } else {
        points.pop();
    }
    let breakpoints = points.into_iter().skip(1).collect();
    let w = Valuation::new(breakpoints, densities)?;
    Ok(LearnedValuation {
        w,
        queries_used: oracle.query_count() - before,
        epsilon: epsilon.clone(),
        k,
    })
}

/// A direct-revelation mechanism run on valuations learned through queries.
#[derive(Clone)]
pub struct LiftedMechanism {
    inner: Arc<dyn Mechanism>,
    k: usize,
    epsilon: Rational,
}

/// Allocation produced from queries, with the total number of queries asked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedRun {
    pub allocation: Allocation,
    pub learned: Profile,
    pub queries: usize,
}

impl LiftedMechanism {
    pub fn new(inner: Arc<dyn Mechanism>, k: usize, epsilon: Rational) -> Result<Self> {
        learning_budget(k, &epsilon)?;
        if k == 0 {
            return Err(Error::InfeasibleParameters("k must be at least 1".into()));
        }
        Ok(LiftedMechanism { inner, k, epsilon })
    }

    /// At most `n * floor(2k / eps)` queries.
    pub fn query_bound(&self, n: usize) -> usize {
        n * learning_budget(self.k, &self.epsilon).expect("checked at construction")
    }

    pub fn run_with_oracles(&self, oracles: &mut [&mut dyn QueryOracle]) -> Result<LiftedRun> {
        let mut learned = Vec::with_capacity(oracles.len());
        let mut queries = 0;
        for oracle in oracles.iter_mut() {
            let l = approximate_valuation(&mut **oracle, self.k, &self.epsilon)?;
            queries += l.queries_used;
            learned.push(l.w);
        }
        let learned = Profile::new(learned)?;
        let allocation = self.inner.allocate(&learned)?;
        Ok(LiftedRun {
            allocation,
            learned,
            queries,
        })
    }

    /// Runs against truthful oracles built from `profile`.
    pub fn run(&self, profile: &Profile) -> Result<LiftedRun> {
        let mut oracles: Vec<RWOracle> =
            profile.valuations().iter().cloned().map(RWOracle::new).collect();
        let mut refs: Vec<&mut dyn QueryOracle> =
            oracles.iter_mut().map(|o| o as &mut dyn QueryOracle).collect();
        self.run_with_oracles(&mut refs)
    }
}

impl Mechanism for LiftedMechanism {
    fn name(&self) -> String {
        format!(
            "rw({}, k={}, eps={})",
            self.inner.name(),
            self.k,
            format_rational(&self.epsilon)
        )
    }

    fn kind(&self) -> MechanismKind {
        MechanismKind::QueryDriven
    }

    // Learned valuations are only approximate, so exact guarantees of the
    // inner mechanism do not carry over.
    fn declared(&self) -> Vec<DeclaredProperty> {
        self.inner
            .declared()
            .into_iter()
            .filter(|p| *p == DeclaredProperty::Contiguous)
            .collect()
    }

    fn allocate(&self, profile: &Profile) -> Result<Allocation> {
        Ok(self.run(profile)?.allocation)
    }
}

/// Wraps `inner` so that it runs on valuations learned with `k` and `epsilon`.
pub fn lift_direct_to_rw(
    inner: Arc<dyn Mechanism>,
    k: usize,
    epsilon: Rational,
) -> Result<LiftedMechanism> {
    if inner.kind() != MechanismKind::DirectRevelation {
        return Err(Error::UnsupportedMechanism(format!(
            "{} is already query-driven",
            inner.name()
        )));
    }
    LiftedMechanism::new(inner, k, epsilon)
}

/// `max |W(X) - V(X)|` over all pieces `X`, computed exactly: the worst piece
/// collects every cell of the joint breakpoint grid where the difference has
/// one sign.
pub fn max_piece_error(v: &Valuation, w: &Valuation) -> Rational {
    let mut grid: Vec<Rational> = v
        .breakpoints()
        .iter()
        .chain(w.breakpoints())
        .cloned()
        .collect();
    grid.push(zero());
    grid.push(one());
    grid.sort();
    grid.dedup();
    let (mut over, mut under) = (zero(), zero());
    for c in grid.windows(2) {
        let d = w.value_between(&c[0], &c[1]) - v.value_between(&c[0], &c[1]);
        if d.is_positive() {
            over += d;
        } else if !d.is_zero() {
            under -= d;
        }
    }
    if over > under {
        over
    } else {
        under
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::ModifiedEvenPaz;
    use crate::rational::{int, rat};

    fn front_loaded() -> Valuation {
        Valuation::new(vec![rat(1, 2)], vec![int(2), zero()]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let mut o = RWOracle::new(Valuation::uniform());
        assert_eq!(o.eval(&zero(), &one()).unwrap(), one());
        assert_eq!(o.eval(&rat(1, 4), &rat(3, 4)).unwrap(), rat(1, 2));
        let mut o = RWOracle::new(front_loaded());
        assert_eq!(o.eval(&rat(1, 4), &one()).unwrap(), rat(1, 2));
    }

    #[test]
    fn cut_examples() {
        let mut o = RWOracle::new(Valuation::uniform());
        assert_eq!(o.cut(&zero(), &rat(1, 2)).unwrap(), rat(1, 2));
        let mut o = RWOracle::new(front_loaded());
        assert_eq!(o.cut(&zero(), &rat(1, 2)).unwrap(), rat(1, 4));
        assert_eq!(o.cut(&rat(1, 2), &zero()).unwrap(), rat(1, 2));
    }

    #[test]
    fn out_of_range_and_infeasible_queries() {
        let mut o = RWOracle::new(front_loaded());
        assert!(matches!(
            o.eval(&rat(3, 4), &rat(1, 4)),
            Err(Error::QueryOutOfRange(_))
        ));
        assert!(matches!(
            o.eval(&zero(), &rat(3, 2)),
            Err(Error::QueryOutOfRange(_))
        ));
        assert!(matches!(
            o.cut(&rat(1, 4), &rat(3, 4)),
            Err(Error::InfeasibleCut { .. })
        ));
        assert_eq!(o.query_count(), 0);
    }

    #[test]
    fn repeated_queries_are_not_recounted() {
        let mut o = RWOracle::new(Valuation::uniform());
        o.cut(&zero(), &rat(1, 3)).unwrap();
        o.cut(&zero(), &rat(1, 3)).unwrap();
        o.eval(&zero(), &rat(1, 3)).unwrap();
        assert_eq!(o.query_count(), 2);
        assert_eq!(o.log().len(), 2);
        assert_eq!(o.log()[0].to_string(), "cut(0, 1/3) = 1/3");
    }

    #[test]
    fn learner_recovers_uniform() {
        let mut o = RWOracle::new(Valuation::uniform());
        let l = approximate_valuation(&mut o, 1, &one()).unwrap();
        assert_eq!(l.queries_used, 2);
        assert_eq!(l.w, Valuation::uniform());
    }

    #[test]
    fn learner_recovers_front_loaded() {
        let mut o = RWOracle::new(front_loaded());
        let l = approximate_valuation(&mut o, 1, &one()).unwrap();
        assert_eq!(
            o.log().iter().map(|q| q.answer.clone()).collect::<Vec<_>>(),
            vec![rat(1, 4), rat(1, 2)]
        );
        assert_eq!(l.w, front_loaded());
    }

    #[test]
    fn learner_error_bound_on_a_two_breakpoint_valuation() {
        let v = Valuation::from_masses(&[rat(1, 3), rat(7, 10)], &[rat(1, 5), rat(1, 2), rat(3, 10)])
            .unwrap();
        let mut o = RWOracle::new(v.clone());
        let l = approximate_valuation(&mut o, 2, &rat(1, 5)).unwrap();
        assert_eq!(l.queries_used, 20);
        assert!(max_piece_error(&v, &l.w) <= rat(1, 10));
    }

    #[test]
    fn strategic_oracle_answers_from_the_report() {
        let mut o = StrategicOracle::new(front_loaded(), Valuation::uniform());
        assert_eq!(o.cut(&zero(), &rat(1, 2)).unwrap(), rat(1, 4));
        assert_eq!(o.true_valuation(), &Valuation::uniform());
    }

    #[test]
    fn lifting_counts_queries() {
        let m = lift_direct_to_rw(Arc::new(ModifiedEvenPaz), 4, rat(1, 2)).unwrap();
        let p = Profile::new(vec![Valuation::uniform(); 3]).unwrap();
        let run = m.run(&p).unwrap();
        assert_eq!(run.queries, 48);
        assert_eq!(m.query_bound(3), 48);
        assert_eq!(run.allocation, ModifiedEvenPaz.allocate(&p).unwrap());
        assert_eq!(m.kind(), MechanismKind::QueryDriven);
    }

    #[test]
    fn piece_error_of_identical_valuations_is_zero() {
        assert_eq!(max_piece_error(&front_loaded(), &front_loaded()), zero());
        assert_eq!(
            max_piece_error(&front_loaded(), &Valuation::uniform()),
            rat(1, 2)
        );
    }
}
