//! The derived transducer `D`: a letter-to-letter sequential transducer over
//! `A_q × A_q` mapping the minimal word of `n` to the minimal word of `n+1`.
//!
//! `D` is obtained from `T̂` by replacing each label `a ∈ B` with the set
//! `ω(a)` of pairs `(b|c)` such that `c - b = a - (p-q)`. Two
//! implementations of one step are provided: [`DerivedTransducer::step`]
//! uses the closed-form transition and output functions,
//! [`DerivedTransducer::step_substitution`] goes through `ω` and `tau`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::Serialize;

use crate::automata::{minimal_word, tree_t, Step};
use crate::error::{Error, Result};
use crate::ser;
use crate::numeration::{digit_of, Digit, DigitWord, RationalBase, State};

/// An `(input|output)` pair.
pub type Pair = (Digit, Digit);

/// The label replacement `ω : B → P(A_q × A_q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSubstitution {
    base: RationalBase,
}

impl LabelSubstitution {
    pub fn new(base: RationalBase) -> Self {
        LabelSubstitution { base }
    }

    /// Distance of `a` to the centre `p-q` of `B`.
    pub fn omega_bar(&self, a: Digit) -> i64 {
        a - self.base.center_b()
    }

    /// All `(b|c) ∈ A_q × A_q` with `c - b = omega_bar(a)`, by increasing `b`.
    pub fn omega(&self, a: Digit) -> Result<Vec<Pair>> {
        if !self.base.alphabet_b().contains(a) {
            return Err(Error::DigitNotInB(a));
        }
        let shift = self.omega_bar(a);
        let aq = self.base.minimal_alphabet();
        Ok(aq
            .iter()
            .filter(|b| aq.contains(b + shift))
            .map(|b| (b, b + shift))
            .collect())
    }
}

/// Free function form of [`LabelSubstitution::omega`].
pub fn omega(base: RationalBase, a: Digit) -> Result<Vec<Pair>> {
    LabelSubstitution::new(base).omega(a)
}

/// Outgoing transitions of one state of `D`, grouped by target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupedTransition {
    /// The `T̂` letter this transition replaces.
    pub letter: Digit,
    pub target: State,
    pub pairs: Vec<Pair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivedTransducer {
    base: RationalBase,
    omega: LabelSubstitution,
}

impl DerivedTransducer {
    pub fn new(base: RationalBase) -> Self {
        DerivedTransducer {
            base,
            omega: LabelSubstitution::new(base),
        }
    }

    pub fn base(&self) -> RationalBase {
        self.base
    }

    pub fn substitution(&self) -> &LabelSubstitution {
        &self.omega
    }

    fn check_input(&self, b: Digit) -> Result<()> {
        if self.base.minimal_alphabet().contains(b) {
            Ok(())
        } else {
            Err(Error::DigitNotInAq(b))
        }
    }

    /// Closed form: `c = (b - (n+1)p) mod q`, `m = ⌈((n+1)p - b)/q - 1⌉`.
    pub fn step(&self, n: &State, b: Digit) -> Result<(Digit, State)> {
        self.check_input(b)?;
        let q = BigInt::from(self.base.q());
        let t: BigInt = (n + 1) * self.base.p() - b;
        let c = digit_of(&(-&t).mod_floor(&q));
        // ⌈(t - q)/q⌉ computed exactly
        let m = (t - &q).div_ceil(&q);
        Ok((c, m))
    }

    /// The definitional step: the unique `a ∈ B` with `tau(n, a)` defined and
    /// `(b|c) ∈ ω(a)`.
    pub fn step_substitution(&self, n: &State, b: Digit) -> Result<(Digit, State)> {
        self.check_input(b)?;
        let mut found = None;
        let mut candidates = 0usize;
        for a in self.base.alphabet_b().iter() {
            let Some(m) = self.base.tau(n, a) else {
                continue;
            };
            for (input, c) in self.omega.omega(a)? {
                if input == b {
                    candidates += 1;
                    found = Some((c, m.clone()));
                }
            }
        }
        match (candidates, found) {
            (1, Some(hit)) => Ok(hit),
            _ => Err(Error::InternalInconsistency(format!(
                "state {n} input {b}: {candidates} candidate transitions"
            ))),
        }
    }

    /// Transitions of `n` grouped per target, in increasing letter order.
    /// Shares its underlying graph with `T̂`.
    pub fn transitions(&self, n: &State) -> Vec<GroupedTransition> {
        let r = self.base.outgoing_residue(n);
        self.base
            .alphabet_b()
            .congruent(r, self.base.q())
            .filter_map(|a| {
                let target = self.base.tau(n, a)?;
                let pairs = self.omega.omega(a).ok()?;
                (!pairs.is_empty()).then_some(GroupedTransition {
                    letter: a,
                    target,
                    pairs,
                })
            })
            .collect()
    }

    /// Reads `u` from `start`, returning the output word and end state.
    pub fn apply(&self, start: &State, u: &DigitWord) -> Result<(DigitWord, State)> {
        let mut state = start.clone();
        let mut out = Vec::with_capacity(u.len());
        for &b in u {
            let (c, m) = self.step(&state, b)?;
            out.push(c);
            state = m;
        }
        Ok((DigitWord(out), state))
    }

    /// Lazily transduces an infinite (or finite) input from `start`.
    pub fn apply_stream<I>(&self, start: &State, input: I) -> TransducedStream<I::IntoIter>
    where
        I: IntoIterator<Item = Digit>,
    {
        TransducedStream {
            transducer: *self,
            state: start.clone(),
            input: input.into_iter(),
        }
    }

    /// Checks that `n --u--> m` in `T` and `i --(u|v)--> j` in `D` imply
    /// `(n+i+1) --v--> (m+j+1)` in `T`.
    pub fn verify_shift_property(&self, n: &State, i: &State, u: &DigitWord) -> ShiftCheck {
        let Some(m) = tree_t(self.base).accepts(n, u) else {
            return ShiftCheck::NotApplicable(format!("{u} does not label a path from {n} in T"));
        };
        let (v, j) = match self.apply(i, u) {
            Ok(r) => r,
            Err(e) => return ShiftCheck::NotApplicable(e.to_string()),
        };
        let source = n + i + 1;
        let expected = &m + &j + 1;
        match tree_t(self.base).accepts(&source, &v) {
            Some(end) if end == expected => ShiftCheck::Holds,
            reached => ShiftCheck::Violated {
                source,
                output: v,
                expected,
                reached,
            },
        }
    }

    /// Searches `n <= budget` with `u` a prefix of `w(n)` and `v` a prefix of
    /// `w(n+1)`. Requires `(u|v)` to label a run of `D` from 0.
    pub fn find_run_origin(&self, u: &DigitWord, v: &DigitWord, budget: u64) -> Result<u64> {
        let (image, _) = self.apply(&State::from(0), u)?;
        if u.len() != v.len() || &image != v {
            return Err(Error::NotAccepted(format!("({u}|{v})")));
        }
        let k = u.len();
        let mut next = minimal_word(self.base, &State::from(0)).prefix(k);
        for n in 0..=budget {
            let current = next;
            next = minimal_word(self.base, &State::from(n + 1)).prefix(k);
            if &current == u && &next == v {
                return Ok(n);
            }
        }
        Err(Error::NotFoundWithinBudget(budget))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ShiftCheck {
    Holds,
    NotApplicable(String),
    Violated {
        #[serde(serialize_with = "ser::display")]
        source: State,
        output: DigitWord,
        #[serde(serialize_with = "ser::display")]
        expected: State,
        #[serde(serialize_with = "ser::display_opt")]
        reached: Option<State>,
    },
}

/// Output of `D` on a lazily consumed input word.
#[derive(Debug, Clone)]
pub struct TransducedStream<I> {
    transducer: DerivedTransducer,
    state: State,
    input: I,
}

impl<I> TransducedStream<I> {
    pub fn state(&self) -> &State {
        &self.state
    }
}

impl<I: Iterator<Item = Digit>> Iterator for TransducedStream<I> {
    type Item = Result<Step>;

    fn next(&mut self) -> Option<Result<Step>> {
        let b = self.input.next()?;
        Some(self.transducer.step(&self.state, b).map(|(c, m)| {
            self.state = m.clone();
            Step { digit: c, state: m }
        }))
    }
}

/// Edge set `(source, target)` of `D` restricted to sources `<= max_state`.
pub fn underlying_graph(d: &DerivedTransducer, max_state: u64) -> BTreeMap<(u64, u64), Vec<Pair>> {
    let mut edges = BTreeMap::new();
    for n in 0..=max_state {
        for t in d.transitions(&State::from(n)) {
            let target = u64::try_from(&t.target).expect("small state");
            edges.insert((n, target), t.pairs);
        }
    }
    edges
}
