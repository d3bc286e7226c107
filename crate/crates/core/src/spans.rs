//! Real evaluation of infinite words and the span of a node.
//!
//! The real value of `a_1 a_2 ...` is `sum_{j>=1} a_j (q/p)^j`. Only finite
//! prefixes are ever known, so values are carried as exact rational
//! enclosures: the partial sum plus the extreme values the unknown tail can
//! take given the digit bounds of its alphabet.
//!
//! The span of `n` is `rho(w̄(n)) - rho(w(n))`, equivalently the value of the
//! digit-wise difference `w̄(n) ⊖ w(n)` (the span-word, a word over `B`).

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::automata::{
    find_that_unreachable, maximal_word, minimal_word, tree_t, tree_that, DigitStream,
    UnreachableWitness,
};
use crate::error::{Error, Result};
use crate::numeration::{Digit, DigitRange, DigitWord, Rational, RationalBase, State};
use crate::ser;
use crate::transducer::{DerivedTransducer, LabelSubstitution};

/// A closed interval `[lo, hi]` with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatInterval {
    #[serde(serialize_with = "ser::display")]
    pub lo: Rational,
    #[serde(serialize_with = "ser::display")]
    pub hi: Rational,
}

impl RatInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        RatInterval { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        RatInterval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn is_subset_of(&self, other: &RatInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersects(&self, other: &RatInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersection(&self, other: &RatInterval) -> Option<RatInterval> {
        self.intersects(other).then(|| RatInterval {
            lo: (&self.lo).max(&other.lo).clone(),
            hi: (&self.hi).min(&other.hi).clone(),
        })
    }

    pub fn hull(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: (&self.lo).min(&other.lo).clone(),
            hi: (&self.hi).max(&other.hi).clone(),
        }
    }

    /// `{x - y : x ∈ self, y ∈ other}`.
    pub fn sub(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    /// Certain ordering: `Less` only when `self.hi < other.lo`; `None` on overlap.
    pub fn certainly_cmp(&self, other: &RatInterval) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if other.hi < self.lo {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && self == other {
            Some(Ordering::Equal)
        } else {
            None
        }
    }
}

fn pow(base: i64, exp: usize) -> BigInt {
    num_traits::pow(BigInt::from(base), exp)
}

/// `(q/p)^k · q/(p-q)`: the value of an all-ones tail after `k` digits.
pub fn tail_unit(base: RationalBase, k: usize) -> Rational {
    let (p, q) = (base.p(), base.q());
    Rational::new(pow(q, k + 1), pow(p, k) * (p - q))
}

/// Width of the enclosure left by an unknown tail over `alphabet` after `k` digits.
pub fn tail_bound(base: RationalBase, k: usize, alphabet: DigitRange) -> Rational {
    tail_unit(base, k) * BigInt::from(alphabet.hi - alphabet.lo)
}

/// `sum_j a_j q^j p^(k-j)`: the value of a `k`-digit prefix scaled by `p^k`.
fn partial_numerator(base: RationalBase, prefix: &[Digit]) -> BigInt {
    let (p, q) = (base.p(), base.q());
    let mut numer = BigInt::zero();
    let mut qpow = BigInt::one();
    for &a in prefix {
        qpow *= q;
        numer = numer * p + &qpow * a;
    }
    numer
}

/// Encloses the value of an infinite word from its first digits, assuming
/// every later digit lies in `tail`.
pub fn rho_truncate(base: RationalBase, prefix: &[Digit], tail: DigitRange) -> RatInterval {
    let p = base.p();
    let k = prefix.len();
    let partial = Rational::new(partial_numerator(base, prefix), pow(p, k));
    let unit = tail_unit(base, k);
    RatInterval {
        lo: &partial + &unit * BigInt::from(tail.lo),
        hi: partial + unit * BigInt::from(tail.hi),
    }
}

/// The span-word `w̄(n) ⊖ w(n)`, generated lazily.
#[derive(Debug, Clone)]
pub struct SpanWord {
    maximal: DigitStream,
    minimal: DigitStream,
}

impl Iterator for SpanWord {
    type Item = Digit;

    fn next(&mut self) -> Option<Digit> {
        let hi = self.maximal.next()?.digit;
        let lo = self.minimal.next()?.digit;
        Some(hi - lo)
    }
}

impl SpanWord {
    pub fn prefix(self, k: usize) -> DigitWord {
        self.take(k).collect()
    }
}

pub fn span_word(base: RationalBase, n: &State) -> SpanWord {
    SpanWord {
        maximal: maximal_word(base, n),
        minimal: minimal_word(base, n),
    }
}

/// An enclosure of `span(n)` from the first `k` digits of the span-word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanValue {
    #[serde(serialize_with = "ser::display")]
    pub n: State,
    pub k: usize,
    pub enclosure: RatInterval,
    /// `rho(w̄(n)) - rho(w(n))` computed from separate enclosures.
    pub difference_enclosure: RatInterval,
    pub span_word_prefix: DigitWord,
}

impl SpanValue {
    pub fn routes_agree(&self) -> bool {
        self.enclosure.intersects(&self.difference_enclosure)
    }
}

pub fn span(base: RationalBase, n: &State, k: usize) -> SpanValue {
    let max_prefix = maximal_word(base, n).prefix(k);
    let min_prefix = minimal_word(base, n).prefix(k);
    let word: DigitWord = max_prefix
        .iter()
        .zip(min_prefix.iter())
        .map(|(a, b)| a - b)
        .collect();
    let enclosure = rho_truncate(base, word.digits(), base.alphabet_b());
    let difference_enclosure = rho_truncate(base, max_prefix.digits(), base.maximal_alphabet())
        .sub(&rho_truncate(base, min_prefix.digits(), base.minimal_alphabet()));
    SpanValue {
        n: n.clone(),
        k,
        enclosure,
        difference_enclosure,
        span_word_prefix: word,
    }
}

/// Compares two spans, refining by doubling `k` up to `max_k` while their
/// enclosures overlap. `None` means still undecided at `max_k`.
pub fn compare_spans(base: RationalBase, a: &State, b: &State, k: usize, max_k: usize) -> Option<Ordering> {
    let mut k = k.max(1);
    loop {
        let ord = span(base, a, k).enclosure.certainly_cmp(&span(base, b, k).enclosure);
        if ord.is_some() || k >= max_k {
            return ord;
        }
        k = (2 * k).min(max_k);
    }
}

/// Outcome of checking one word-level claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordCheck {
    pub ok: bool,
    pub word: DigitWord,
    /// Index of the first letter with no transition, if rejected.
    pub rejected_at: Option<usize>,
    pub detail: Option<String>,
}

fn first_rejection(base: RationalBase, word: &DigitWord) -> Option<usize> {
    let hat = tree_that(base);
    let mut state = State::zero();
    for (i, &a) in word.iter().enumerate() {
        match hat.transition(&state, a) {
            Some(next) => state = next,
            None => return Some(i),
        }
    }
    None
}

/// `T̂` accepts the first `k` letters of the span-word of `n`, from state 0.
pub fn verify_that_complete(base: RationalBase, n: &State, k: usize) -> WordCheck {
    let word = span_word(base, n).prefix(k);
    let rejected_at = first_rejection(base, &word);
    WordCheck {
        ok: rejected_at.is_none() && word.all_in(base.alphabet_b()),
        word,
        rejected_at,
        detail: None,
    }
}

/// With `w` the first `k` letters of `w(n)` and `w'` its image by `D`,
/// `T̂` accepts `m(w') ⊖ w`, and that word is the span-word prefix of `n`.
pub fn verify_dpq_to_spq(base: RationalBase, n: &State, k: usize) -> Result<WordCheck> {
    let w = minimal_word(base, n).prefix(k);
    let (image, _) = DerivedTransducer::new(base).apply(&State::zero(), &w)?;
    let word = image
        .iter()
        .zip(w.iter())
        .map(|(&c, &b)| base.map_m(c).map(|mc| mc - b))
        .collect::<Result<DigitWord>>()?;
    let rejected_at = first_rejection(base, &word);
    let expected = span_word(base, n).prefix(k);
    let matches = word == expected;
    Ok(WordCheck {
        ok: rejected_at.is_none() && matches,
        detail: (!matches).then(|| format!("span-word prefix is {expected}")),
        word,
        rejected_at,
    })
}

/// Every `(b|c) ∈ ω(a)` satisfies `m(c) - b = a`. Returns the offending triples.
pub fn omega_m_kernel_violations(base: RationalBase) -> Vec<(Digit, Digit, Digit)> {
    let sub = LabelSubstitution::new(base);
    let mut bad = Vec::new();
    for a in base.alphabet_b().iter() {
        for (b, c) in sub.omega(a).expect("a in B") {
            if base.map_m(c).map(|mc| mc - b) != Ok(a) {
                bad.push((a, b, c));
            }
        }
    }
    bad
}

/// Smallest `n <= budget` whose span-word starts with `u`.
pub fn prefix_extension_search(base: RationalBase, u: &DigitWord, budget: u64) -> Result<u64> {
    if tree_that(base).accepts(&State::zero(), u).is_none() {
        return Err(Error::NotAccepted(u.to_string()));
    }
    let k = u.len();
    (0..=budget)
        .find(|&n| span_word(base, &State::from(n)).take(k).eq(u.iter().copied()))
        .ok_or(Error::NotFoundWithinBudget(budget))
}

/// For `p < 2q-1` and `u` accepted by `T̂`, a word `v` accepted by `T` with
/// the same value and length: the representation of `pi(u)` padded with zeros.
pub fn value_witness(base: RationalBase, u: &DigitWord) -> Result<DigitWord> {
    if base.p() >= 2 * base.q() - 1 {
        return Err(Error::PreconditionViolated(format!(
            "value witnesses need p < 2q-1, got {base}"
        )));
    }
    let value = tree_that(base)
        .accepts(&State::zero(), u)
        .ok_or_else(|| Error::NotAccepted(u.to_string()))?;
    let repr = base.represent(&value);
    if repr.len() > u.len() {
        return Err(Error::InternalInconsistency(format!(
            "representation {repr} of {value} is longer than {u}"
        )));
    }
    let mut v = DigitWord(vec![0; u.len() - repr.len()]);
    v.extend(repr.iter().copied());
    debug_assert!(tree_t(base).accepts(&State::zero(), &v).is_some());
    Ok(v)
}

/// An open interval of `[0, rho(w̄(0))]` that no span can fall into.
#[derive(Debug, Clone, Serialize)]
pub struct GapCertificate {
    pub witness: UnreachableWitness,
    /// Representation of the unreachable state; the excluded values are those
    /// of the words that read it and then continue from that state.
    pub representation: DigitWord,
    pub interval: RatInterval,
    pub interval_f64: (f64, f64),
    pub midpoints_inside: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub base: String,
    pub n_max: u64,
    pub k: usize,
    /// Upper end of the ambient interval `[0, rho(w̄(0))]`.
    pub ambient: RatInterval,
    #[serde(serialize_with = "ser::display")]
    pub span_width: Rational,
    /// Largest distance between consecutive sorted span midpoints, including
    /// the gaps to 0 and to the top of the ambient interval.
    #[serde(serialize_with = "ser::display")]
    pub max_gap: Rational,
    pub max_gap_f64: f64,
    pub out_of_range: u64,
    pub certificate: Option<GapCertificate>,
}

fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Smallest `k` such that span enclosures are narrower than `ratio` times the
/// ambient interval.
pub fn density_depth(base: RationalBase, ratio: &Rational) -> usize {
    let mut k = 1;
    loop {
        let ambient = rho_truncate(
            base,
            maximal_word(base, &State::zero()).prefix(k).digits(),
            base.maximal_alphabet(),
        );
        if tail_bound(base, k, base.alphabet_b()) < ratio * &ambient.lo {
            return k;
        }
        k += 1;
    }
}

/// Span midpoints at a common depth, stored as integers over a shared
/// denominator `2 p^k (p-q)` so that sorting avoids rational arithmetic.
struct ScaledMidpoints {
    sorted: Vec<BigInt>,
    scale: BigInt,
}

impl ScaledMidpoints {
    fn compute(base: RationalBase, n_max: u64, k: usize) -> Self {
        let (p, q) = (base.p(), base.q());
        let b = base.alphabet_b();
        let offset = pow(q, k + 1) * (b.lo + b.hi);
        let mut sorted: Vec<BigInt> = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let digits = span_word(base, &State::from(n)).prefix(k);
                partial_numerator(base, digits.digits()) * (2 * (p - q)) + &offset
            })
            .collect();
        sorted.par_sort();
        ScaledMidpoints {
            sorted,
            scale: pow(p, k) * (2 * (p - q)),
        }
    }

    fn value(&self, key: &BigInt) -> Rational {
        Rational::new(key.clone(), self.scale.clone())
    }

    fn scaled(&self, x: &Rational) -> Rational {
        x * &self.scale
    }

    /// Number of midpoints `< x`.
    fn count_below(&self, x: &Rational) -> usize {
        let bound = self.scaled(x).ceil().to_integer();
        self.sorted.partition_point(|m| *m < bound)
    }

    /// Number of midpoints `<= x`.
    fn count_at_most(&self, x: &Rational) -> usize {
        let bound = self.scaled(x).floor().to_integer();
        self.sorted.partition_point(|m| *m <= bound)
    }
}

/// Span distribution over `n <= n_max`. For `p > 2q` also certifies a span-free
/// open interval from a state of `T` that `T̂` cannot reach.
pub fn density_report(base: RationalBase, n_max: u64, k: Option<usize>) -> Result<DensityReport> {
    let k = k.unwrap_or_else(|| density_depth(base, &Rational::new(1.into(), 1_000_000.into())));
    let ambient = rho_truncate(
        base,
        maximal_word(base, &State::zero()).prefix(k).digits(),
        base.maximal_alphabet(),
    );
    let span_width = tail_bound(base, k, base.alphabet_b());
    let midpoints = ScaledMidpoints::compute(base, n_max, k);

    let half = &span_width / Rational::from_integer(2.into());
    let below = midpoints.count_below(&-half.clone());
    let above = midpoints.sorted.len() - midpoints.count_at_most(&(&ambient.hi + &half));
    let out_of_range = (below + above) as u64;

    let top = midpoints.scaled(&ambient.hi);
    let mut max_gap = Rational::zero();
    let mut prev = Rational::zero();
    for m in midpoints
        .sorted
        .iter()
        .map(|m| Rational::from_integer(m.clone()))
        .chain(std::iter::once(top))
    {
        let gap = &m - &prev;
        if gap > max_gap {
            max_gap = gap;
        }
        if m > prev {
            prev = m;
        }
    }
    let max_gap = max_gap / Rational::from_integer(midpoints.scale.clone());

    let certificate = if base.p() > 2 * base.q() {
        Some(gap_certificate(base, k, &half, &midpoints)?)
    } else {
        None
    };

    Ok(DensityReport {
        base: base.to_string(),
        n_max,
        k,
        ambient,
        max_gap_f64: to_f64(&max_gap),
        max_gap,
        span_width,
        out_of_range,
        certificate,
    })
}

/// Sorted midpoints of the span enclosures of `0..=n_max` at depth `k`.
pub fn span_midpoints(base: RationalBase, n_max: u64, k: usize) -> Vec<Rational> {
    let m = ScaledMidpoints::compute(base, n_max, k);
    m.sorted.iter().map(|key| m.value(key)).collect()
}

fn gap_certificate(
    base: RationalBase,
    k: usize,
    half_width: &Rational,
    midpoints: &ScaledMidpoints,
) -> Result<GapCertificate> {
    let witness = find_that_unreachable(base, &State::zero())?;
    let m = &witness.state;
    let repr = base.represent(m);
    let with_tail = |tail: DigitWord| repr.concat(&tail);
    let lower = rho_truncate(
        base,
        with_tail(minimal_word(base, m).prefix(k)).digits(),
        base.minimal_alphabet(),
    );
    let upper = rho_truncate(
        base,
        with_tail(maximal_word(base, m).prefix(k)).digits(),
        base.maximal_alphabet(),
    );
    // a span just below the lower end has its midpoint at most half a width above it
    let lo = &lower.hi + half_width;
    let hi = &upper.lo - half_width;
    if lo >= hi {
        return Err(Error::InternalInconsistency(format!(
            "certificate interval for state {m} is empty at depth {k}"
        )));
    }
    let inside = midpoints.count_below(&hi) - midpoints.count_at_most(&lo).min(midpoints.count_below(&hi));
    Ok(GapCertificate {
        interval_f64: (to_f64(&lo), to_f64(&hi)),
        interval: RatInterval::new(lo, hi),
        representation: repr,
        midpoints_inside: inside as u64,
        witness,
    })
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

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn word(s: &str) -> DigitWord {
        s.parse().unwrap()
    }

    #[test]
    fn empty_prefix_enclosure() {
        for (p, q) in [(3, 2), (7, 3), (4, 3)] {
            let b = base(p, q);
            let iv = rho_truncate(b, &[], b.digits());
            assert_eq!(iv.lo, rat(0, 1));
            assert_eq!(iv.hi, rat((p - 1) * q, p - q));
        }
    }

    #[test]
    fn zero_prefix_width_shrinks() {
        let b = base(3, 2);
        for k in 0..20 {
            let iv = rho_truncate(b, &vec![0; k], b.digits());
            assert_eq!(iv.lo, rat(0, 1));
            // 2 (2/3)^k * 2
            let expected = rat(4, 1) * Rational::new(pow(2, k), pow(3, k));
            assert_eq!(iv.width(), expected);
            if k > 0 {
                let coarser = rho_truncate(b, &vec![0; k - 1], b.digits());
                assert!(iv.is_subset_of(&coarser));
            }
        }
    }

    #[test]
    fn geometric_oracle() {
        // 0.1111... in base 3/2 with weights (2/3)^j: sum = 2
        let b = base(3, 2);
        let iv = rho_truncate(b, &vec![1; 30], DigitRange::new(1, 1));
        assert_eq!(iv.lo, rat(2, 1));
        assert_eq!(iv.hi, rat(2, 1));
    }

    #[test]
    fn max_letter_and_m() {
        let b = base(3, 2);
        assert_eq!(b.map_m(0).unwrap(), 1);
        assert_eq!(b.map_m(1).unwrap(), 2);
        let mapped: Vec<_> = minimal_word(b, &st(1))
            .prefix(5)
            .iter()
            .map(|&a| b.map_m(a).unwrap())
            .collect();
        assert_eq!(DigitWord(mapped), word("2,1,2,2,1"));
        for (p, q) in [(3, 2), (4, 3), (5, 2), (5, 3), (7, 3), (7, 4), (10, 3)] {
            assert!(omega_m_kernel_violations(base(p, q)).is_empty());
        }
    }

    #[test]
    fn span_word_examples() {
        assert_eq!(span_word(base(3, 2), &st(0)).prefix(5), word("2,1,2,2,1"));
        let b = base(4, 3);
        let w = span_word(b, &st(0)).prefix(64);
        assert!(w.all_in(DigitRange::new(-1, 3)));
    }

    #[test]
    fn span_enclosures() {
        let b = base(3, 2);
        for k in [0, 1, 5, 32] {
            let s = span(b, &st(0), k);
            assert_eq!(s.enclosure.width(), tail_bound(b, k, b.alphabet_b()));
            assert!(s.routes_agree());
        }
        let s = span(b, &st(0), 10);
        let bound = rat(4, 1) * Rational::new(pow(2, 10), pow(3, 10));
        assert!(s.enclosure.width() <= bound);
    }

    #[test]
    fn integer_base_calibration() {
        // In an integer base b the node n covers [n, n+1) at every scale:
        // max word (b-1)^ω minus min word 0^ω evaluates to exactly 1.
        for b in [2i64, 3, 10] {
            let mut value = Rational::zero();
            let mut weight = Rational::one();
            for _ in 0..60 {
                weight /= Rational::from_integer(b.into());
                value += &weight * BigInt::from(b - 1);
            }
            let tail = weight * BigInt::from(b - 1) / Rational::from_integer((b - 1).into());
            assert_eq!(value + tail, rat(1, 1));
        }
    }

    #[test]
    fn that_complete_examples() {
        for (p, q) in [(3, 2), (7, 3), (4, 3)] {
            for n in 0..50 {
                assert!(verify_that_complete(base(p, q), &st(n), 64).ok);
            }
        }
    }

    #[test]
    fn dpq_to_spq_examples() {
        let b = base(3, 2);
        let c = verify_dpq_to_spq(b, &st(0), 0).unwrap();
        assert!(c.ok && c.word.is_empty());
        let c = verify_dpq_to_spq(b, &st(0), 1).unwrap();
        assert!(c.ok);
        assert_eq!(c.word, word("2"));
    }

    #[test]
    fn prefix_search() {
        let b = base(3, 2);
        assert_eq!(prefix_extension_search(b, &word("2"), 10), Ok(0));
        assert_eq!(prefix_extension_search(b, &DigitWord::empty(), 10), Ok(0));
        assert!(matches!(
            prefix_extension_search(b, &word("1"), 10),
            Err(Error::NotAccepted(_))
        ));
    }

    #[test]
    fn value_witness_examples() {
        let b = base(4, 3);
        assert_eq!(value_witness(b, &word("3,-1")).unwrap(), word("0,3"));
        assert_eq!(value_witness(b, &word("0,3")).unwrap(), word("0,3"));
        assert_eq!(value_witness(b, &DigitWord::empty()).unwrap(), DigitWord::empty());
        assert!(matches!(
            value_witness(b, &word("1,-1")),
            Err(Error::NotAccepted(_))
        ));
        assert!(matches!(
            value_witness(base(3, 2), &word("2")),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn interval_ops() {
        let a = RatInterval::new(rat(0, 1), rat(1, 1));
        let b = RatInterval::new(rat(1, 2), rat(2, 1));
        assert!(a.intersects(&b));
        assert_eq!(a.intersection(&b), Some(RatInterval::new(rat(1, 2), rat(1, 1))));
        assert_eq!(a.sub(&b), RatInterval::new(rat(-2, 1), rat(1, 2)));
        assert_eq!(a.certainly_cmp(&b), None);
        let c = RatInterval::new(rat(3, 1), rat(4, 1));
        assert_eq!(a.certainly_cmp(&c), Some(Ordering::Less));
        assert_eq!(a.hull(&c), RatInterval::new(rat(0, 1), rat(4, 1)));
    }

    #[test]
    fn refinement_decides_distinct_spans() {
        let b = base(3, 2);
        let ord = compare_spans(b, &st(0), &st(1), 2, 256);
        assert!(ord.is_some());
        assert_eq!(compare_spans(b, &st(3), &st(3), 2, 16), None);
    }
}
