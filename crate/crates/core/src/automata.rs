//! The infinite representation automata `T` (alphabet `A_p`) and `T̂`
//! (alphabet `B`). Both share the state set ℕ, the initial state 0 and the
//! partial transition function `tau`; every state is final. Nothing is
//! materialized: transitions are computed on demand.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ser;
use crate::numeration::{digit_of, Digit, DigitRange, DigitWord, RationalBase, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AutomatonKind {
    /// `T`, over `A_p`.
    Tree,
    /// `T̂`, over `B`.
    Hat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LazyAutomaton {
    base: RationalBase,
    kind: AutomatonKind,
    alphabet: DigitRange,
}

/// One transition `source --digit--> target`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub source: State,
    pub digit: Digit,
    pub target: State,
}

/// The integer interval `[lo, hi]` of states reachable in exactly `i` steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateInterval {
    #[serde(serialize_with = "ser::display")]
    pub lo: State,
    #[serde(serialize_with = "ser::display")]
    pub hi: State,
}

impl StateInterval {
    pub fn len(&self) -> BigInt {
        &self.hi - &self.lo + 1
    }

    pub fn contains(&self, n: &State) -> bool {
        &self.lo <= n && n <= &self.hi
    }
}

pub fn tree_t(base: RationalBase) -> LazyAutomaton {
    LazyAutomaton {
        base,
        kind: AutomatonKind::Tree,
        alphabet: base.digits(),
    }
}

pub fn tree_that(base: RationalBase) -> LazyAutomaton {
    LazyAutomaton {
        base,
        kind: AutomatonKind::Hat,
        alphabet: base.alphabet_b(),
    }
}

impl LazyAutomaton {
    pub fn base(&self) -> RationalBase {
        self.base
    }

    pub fn kind(&self) -> AutomatonKind {
        self.kind
    }

    pub fn alphabet(&self) -> DigitRange {
        self.alphabet
    }

    pub fn initial(&self) -> State {
        State::zero()
    }

    pub fn transition(&self, n: &State, a: Digit) -> Option<State> {
        if !self.alphabet.contains(a) {
            return None;
        }
        self.base.tau(n, a)
    }

    /// Outgoing transitions of `n`, by increasing digit.
    pub fn successors(&self, n: &State) -> Vec<(Digit, State)> {
        let r = self.base.outgoing_residue(n);
        self.alphabet
            .congruent(r, self.base.q())
            .filter_map(|a| self.base.tau(n, a).map(|m| (a, m)))
            .collect()
    }

    /// End state of the run of `word` from `start`, if every step is defined.
    pub fn accepts(&self, start: &State, word: &DigitWord) -> Option<State> {
        word.iter()
            .try_fold(start.clone(), |n, &a| self.transition(&n, a))
    }

    /// Whether the states reachable at a fixed depth always form an interval.
    /// Holds for `T`, and for `T̂` exactly when `|B| >= p`, i.e. `p <= 2q-1`.
    pub fn has_interval_reach(&self) -> bool {
        self.alphabet.len() as i64 >= self.base.p()
    }

    fn smallest_successor(&self, n: &State) -> State {
        // successors are the m with q*m - n*p in the alphabet
        let t: BigInt = n * self.base.p() + self.alphabet.lo;
        let m = t.div_ceil(&BigInt::from(self.base.q()));
        m.max(State::zero())
    }

    fn largest_successor(&self, n: &State) -> State {
        let t: BigInt = n * self.base.p() + self.alphabet.hi;
        t.div_floor(&BigInt::from(self.base.q()))
    }

    /// States reachable from `n` in exactly `depth` steps, computed from the
    /// extreme successors of the interval endpoints.
    pub fn reachable_interval(&self, n: &State, depth: usize) -> Result<StateInterval> {
        if !self.has_interval_reach() {
            return Err(Error::NotAnInterval);
        }
        let mut lo = n.clone();
        let mut hi = n.clone();
        for _ in 0..depth {
            lo = self.smallest_successor(&lo);
            hi = self.largest_successor(&hi);
        }
        Ok(StateInterval { lo, hi })
    }

    /// Exact set of states reachable from `n` in exactly `depth` steps.
    pub fn reachable_set(&self, n: &State, depth: usize) -> BTreeSet<State> {
        let mut level = BTreeSet::from([n.clone()]);
        for _ in 0..depth {
            level = level
                .iter()
                .flat_map(|s| self.successors(s).into_iter().map(|(_, m)| m))
                .collect();
        }
        level
    }

    /// Enumerates edges between states `<= max_state`.
    ///
    /// Without a depth bound every state up to `max_state` is a source (so the
    /// forest shape of `T̂` shows). With a depth bound, only states reached from
    /// 0 within that many steps are expanded. The 0-loop is reported unless
    /// `with_root_loop` is false.
    pub fn edges<F>(&self, max_state: &State, max_depth: Option<usize>, with_root_loop: bool, mut f: F)
    where
        F: FnMut(&Edge),
    {
        let mut emit = |source: &State, digit: Digit, target: State| {
            if &target > max_state {
                return;
            }
            if !with_root_loop && source.is_zero() && target.is_zero() {
                return;
            }
            f(&Edge {
                source: source.clone(),
                digit,
                target,
            });
        };
        match max_depth {
            None => {
                let mut n = State::zero();
                while &n <= max_state {
                    for (a, m) in self.successors(&n) {
                        emit(&n, a, m);
                    }
                    n += 1;
                }
            }
            Some(depth) => {
                let mut seen = BTreeSet::from([State::zero()]);
                let mut frontier = vec![State::zero()];
                for _ in 0..depth {
                    let mut next = Vec::new();
                    for n in &frontier {
                        if n > max_state {
                            continue;
                        }
                        for (a, m) in self.successors(n) {
                            if seen.insert(m.clone()) {
                                next.push(m.clone());
                            }
                            emit(n, a, m);
                        }
                    }
                    frontier = next;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WordKind {
    Minimal,
    Maximal,
}

/// One letter of an infinite word together with the state reached after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub digit: Digit,
    pub state: State,
}

/// The minimal or maximal infinite word of a state, generated lazily.
#[derive(Debug, Clone)]
pub struct DigitStream {
    base: RationalBase,
    kind: WordKind,
    state: State,
}

impl DigitStream {
    pub fn state(&self) -> &State {
        &self.state
    }

    /// First `k` letters.
    pub fn prefix(self, k: usize) -> DigitWord {
        self.take(k).map(|s| s.digit).collect()
    }

    /// First `k` letters and the states visited after each of them.
    pub fn prefix_with_states(self, k: usize) -> (DigitWord, Vec<State>) {
        self.take(k).map(|s| (s.digit, s.state)).unzip()
    }
}

impl Iterator for DigitStream {
    type Item = Step;

    fn next(&mut self) -> Option<Step> {
        let (digit, next) = self
            .base
            .extreme_step(&self.state, self.kind == WordKind::Maximal);
        self.state = next.clone();
        Some(Step { digit, state: next })
    }
}

/// `w(n)`: the unique infinite word over `A_q` labelling a path from `n` in `T`.
pub fn minimal_word(base: RationalBase, n: &State) -> DigitStream {
    DigitStream {
        base,
        kind: WordKind::Minimal,
        state: n.clone(),
    }
}

/// `w̄(n)`: the unique infinite word over `[p-q..p-1]` labelling a path from `n`.
pub fn maximal_word(base: RationalBase, n: &State) -> DigitStream {
    DigitStream {
        base,
        kind: WordKind::Maximal,
        state: n.clone(),
    }
}

/// A state reachable from `n` in `T` but not in `T̂`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnreachableWitness {
    #[serde(serialize_with = "ser::display")]
    pub from: State,
    #[serde(serialize_with = "ser::display")]
    pub state: State,
    /// Label of the path from `from` to `state` in `T`.
    pub path: DigitWord,
}

/// For `p > 2q`, finds `m ≡ 0 (mod p)` at depth `p+1` from `n` in `T`. Its
/// only incoming edge is labelled 0, which is not in `B`, so `T̂` never reaches
/// it. The absence is re-checked by exhaustive search of `T̂` to depth `p+1`.
pub fn find_that_unreachable(base: RationalBase, n: &State) -> Result<UnreachableWitness> {
    let (p, q) = (base.p(), base.q());
    if p <= 2 * q {
        return Err(Error::PreconditionViolated(format!(
            "base {base}: unreachable states only exist when p > 2q"
        )));
    }
    let depth = (p + 1) as usize;
    let t = tree_t(base);
    let reach = t.reachable_interval(n, depth)?;

    let pb = BigInt::from(p);
    let mut m = reach.lo.div_ceil(&pb) * &pb;
    if m.is_zero() || &m == n {
        m += &pb;
    }
    if !reach.contains(&m) {
        return Err(Error::InternalInconsistency(format!(
            "no multiple of {p} in reachable interval [{}, {}]",
            reach.lo, reach.hi
        )));
    }

    // walk back up the tree: the parent of s > 0 is floor(qs/p), by digit qs mod p
    let mut path = Vec::with_capacity(depth);
    let mut s = m.clone();
    for _ in 0..depth {
        let (parent, a) = (&s * q).div_mod_floor(&pb);
        path.push(digit_of(&a));
        s = parent;
    }
    path.reverse();
    if &s != n {
        return Err(Error::InternalInconsistency(format!(
            "state {m} is not a depth-{depth} descendant of {n}"
        )));
    }

    let hat = tree_that(base);
    let mut level = BTreeSet::from([n.clone()]);
    for i in 1..=depth {
        level = level
            .iter()
            .flat_map(|s| hat.successors(s).into_iter().map(|(_, x)| x))
            .collect();
        if level.contains(&m) {
            return Err(Error::InternalInconsistency(format!(
                "state {m} reached in T̂ at depth {i}"
            )));
        }
    }

    Ok(UnreachableWitness {
        from: n.clone(),
        state: m,
        path: DigitWord(path),
    })
}

/// Whether `m` is reachable from `n` in `aut` within `max_depth` steps (BFS).
pub fn reachable_within(aut: &LazyAutomaton, n: &State, m: &State, max_depth: usize) -> bool {
    let mut level = BTreeSet::from([n.clone()]);
    for _ in 0..=max_depth {
        if level.contains(m) {
            return true;
        }
        level = level
            .iter()
            .flat_map(|s| aut.successors(s).into_iter().map(|(_, x)| x))
            .collect();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(p: i64, q: i64) -> RationalBase {
        RationalBase::new(p, q).unwrap()
    }

    fn st(n: i64) -> State {
        State::from(n)
    }

    fn word(s: &str) -> DigitWord {
        s.parse().unwrap()
    }

    #[test]
    fn t_successors() {
        let t = tree_t(base(3, 2));
        assert_eq!(t.successors(&st(0)), vec![(0, st(0)), (2, st(1))]);
        assert_eq!(t.accepts(&st(0), &word("2,1,0")), Some(st(3)));
        assert_eq!(t.accepts(&st(0), &word("2,1")), Some(st(2)));
        assert_eq!(t.accepts(&st(0), &word("1")), None);
        assert_eq!(t.accepts(&st(5), &DigitWord::empty()), Some(st(5)));
        assert_eq!(t.transition(&st(0), 0), Some(st(0)));
    }

    #[test]
    fn that_edges() {
        // 7/3: labels below 2 disappear
        let hat = tree_that(base(7, 3));
        for n in 0..200 {
            for (a, _) in hat.successors(&st(n)) {
                assert!(a >= 2);
            }
        }
        assert_eq!(tree_t(base(7, 3)).transition(&st(0), 0), Some(st(0)));
        assert_eq!(hat.transition(&st(0), 0), None);

        let hat = tree_that(base(4, 3));
        assert_eq!(hat.accepts(&st(1), &word("-1")), Some(st(1)));
        assert!(hat.successors(&st(1)).iter().any(|(a, _)| *a == -1));
        assert_eq!(tree_t(base(4, 3)).transition(&st(1), -1), None);
    }

    #[test]
    fn t_equals_that_for_three_halves() {
        let b = base(3, 2);
        let (t, hat) = (tree_t(b), tree_that(b));
        for n in 0..=1000 {
            assert_eq!(t.successors(&st(n)), hat.successors(&st(n)));
        }
    }

    #[test]
    fn successor_counts() {
        for (p, q) in [(3, 2), (4, 3), (5, 2), (5, 3), (7, 3), (7, 4), (10, 3)] {
            let b = base(p, q);
            let (t, hat) = (tree_t(b), tree_that(b));
            for n in 0..2000 {
                let n = st(n);
                let succ = t.successors(&n);
                let minimal = succ.iter().filter(|(a, _)| b.minimal_alphabet().contains(*a));
                let maximal = succ.iter().filter(|(a, _)| b.maximal_alphabet().contains(*a));
                assert_eq!(minimal.count(), 1);
                assert_eq!(maximal.count(), 1);
                let expected = if (&n + 1u32) % q == State::zero() { 1 } else { 2 };
                assert_eq!(hat.successors(&n).len(), expected, "{b} state {n}");
            }
        }
    }

    #[test]
    fn minimal_and_maximal_words() {
        let b = base(3, 2);
        let (w, states) = minimal_word(b, &st(0)).prefix_with_states(5);
        assert_eq!(w, word("0,0,0,0,0"));
        assert!(states.iter().all(|s| s.is_zero()));

        let (w, states) = minimal_word(b, &st(1)).prefix_with_states(8);
        assert_eq!(w, word("1,0,1,1,0,0,0,1"));
        assert_eq!(states, [2, 3, 5, 8, 12, 18, 27, 41].map(st));

        let (w, states) = maximal_word(b, &st(0)).prefix_with_states(5);
        assert_eq!(w, word("2,1,2,2,1"));
        assert_eq!(states, [1, 2, 4, 7, 11].map(st));

        assert_eq!(maximal_word(base(7, 3), &st(0)).next().unwrap().digit, 6);
    }

    #[test]
    fn interval_examples() {
        let t = tree_t(base(3, 2));
        let iv = t.reachable_interval(&st(9), 0).unwrap();
        assert_eq!((iv.lo, iv.hi), (st(9), st(9)));
        let iv = t.reachable_interval(&st(0), 1).unwrap();
        assert_eq!((iv.lo, iv.hi), (st(0), st(1)));

        let t = tree_t(base(7, 3));
        let mut prev = t.reachable_interval(&st(0), 0).unwrap().len();
        for i in 1..=21 {
            let len = t.reachable_interval(&st(0), i).unwrap().len();
            assert!(len > prev, "depth {i}");
            prev = len;
        }
        assert_eq!(
            tree_that(base(7, 3)).reachable_interval(&st(0), 2),
            Err(Error::NotAnInterval)
        );
        assert!(tree_that(base(4, 3)).reachable_interval(&st(0), 2).is_ok());
    }

    #[test]
    fn unreachable_witness() {
        let b = base(7, 3);
        let w = find_that_unreachable(b, &st(0)).unwrap();
        assert!((&w.state % 7u32).is_zero());
        assert_eq!(w.path.len(), 8);
        assert_eq!(tree_t(b).accepts(&st(0), &w.path), Some(w.state.clone()));
        assert!(!reachable_within(&tree_that(b), &st(0), &w.state, 8));
        assert!(reachable_within(&tree_t(b), &st(0), &w.state, 8));

        let b = base(5, 2);
        let w = find_that_unreachable(b, &st(1)).unwrap();
        assert_eq!(tree_t(b).accepts(&st(1), &w.path), Some(w.state.clone()));
        assert!(!reachable_within(&tree_that(b), &st(1), &w.state, 6));

        assert!(matches!(
            find_that_unreachable(base(4, 3), &st(0)),
            Err(Error::PreconditionViolated(_))
        ));
        assert!(matches!(
            find_that_unreachable(base(5, 3), &st(0)),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn edge_enumeration() {
        let t = tree_t(base(3, 2));
        let mut edges = Vec::new();
        t.edges(&st(4), None, true, |e| edges.push((e.source.clone(), e.digit, e.target.clone())));
        assert_eq!(
            edges,
            vec![
                (st(0), 0, st(0)),
                (st(0), 2, st(1)),
                (st(1), 1, st(2)),
                (st(2), 0, st(3)),
                (st(2), 2, st(4)),
            ]
        );
        let mut count = 0;
        t.edges(&st(0), None, false, |_| count += 1);
        assert_eq!(count, 0);
        let mut depth_one = Vec::new();
        t.edges(&st(100), Some(1), false, |e| depth_one.push(e.target.clone()));
        assert_eq!(depth_one, vec![st(1)]);
    }
}
