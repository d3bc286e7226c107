//! Rational base numeration systems.
//!
//! A base `p/q` (co-prime, `p > q > 1`) writes a non-negative integer `N` as
//! a word `a_k ... a_0` over `{0, .., p-1}` using the modified Euclidean
//! division `q*N_i = p*N_{i+1} + a_i`. The value of a word over any digit set
//! is `sum (a_i / q) (p/q)^i`.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single digit. Alphabet membership is checked by each operation.
pub type Digit = i64;

/// A state of the representation automata. Always non-negative.
pub type State = BigInt;

pub type Rational = BigRational;

/// A contiguous, ordered digit alphabet `[lo..hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DigitRange {
    pub lo: Digit,
    pub hi: Digit,
}

impl DigitRange {
    pub const fn new(lo: Digit, hi: Digit) -> Self {
        DigitRange { lo, hi }
    }

    pub fn contains(&self, d: Digit) -> bool {
        self.lo <= d && d <= self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn iter(&self) -> RangeInclusive<Digit> {
        self.lo..=self.hi
    }

    /// Letters of the range congruent to `residue` modulo `modulus`, ascending.
    pub fn congruent(&self, residue: Digit, modulus: Digit) -> impl Iterator<Item = Digit> {
        let first = self.lo + (residue - self.lo).rem_euclid(modulus);
        (first..=self.hi).step_by(modulus as usize)
    }
}

impl fmt::Display for DigitRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.lo, self.hi)
    }
}

/// A validated rational base `p/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalBase {
    p: i64,
    q: i64,
}

impl RationalBase {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q <= 1 || p <= q {
            return Err(Error::OrderViolation { p, q });
        }
        if p >= 1 << 31 {
            return Err(Error::BaseTooLarge { p, q });
        }
        if p.gcd(&q) != 1 {
            return Err(Error::NotCoprime { p, q });
        }
        Ok(RationalBase { p, q })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    /// `A_p = [0..p-1]`, the canonical digit alphabet.
    pub fn digits(&self) -> DigitRange {
        DigitRange::new(0, self.p - 1)
    }

    /// The minimal alphabet `A_q = [0..q-1]`.
    pub fn minimal_alphabet(&self) -> DigitRange {
        DigitRange::new(0, self.q - 1)
    }

    /// The maximal alphabet `[p-q..p-1]`.
    pub fn maximal_alphabet(&self) -> DigitRange {
        DigitRange::new(self.p - self.q, self.p - 1)
    }

    /// `B = [p-(2q-1)..p-1]`, of cardinal `2q-1` and centred on `p-q`.
    pub fn alphabet_b(&self) -> DigitRange {
        DigitRange::new(self.p - (2 * self.q - 1), self.p - 1)
    }

    pub fn center_b(&self) -> Digit {
        self.p - self.q
    }

    /// `p/q` as an exact rational.
    pub fn ratio(&self) -> Rational {
        Rational::new(self.p.into(), self.q.into())
    }

    /// Value of a finite word: `pi(a_k..a_0) = sum (a_i/q)(p/q)^i`.
    ///
    /// Evaluated left to right with `pi(u.a) = pi(u) * p/q + a/q`.
    pub fn evaluate(&self, word: &DigitWord) -> Rational {
        // pi(u) = numer / q^len, with numer(u.a) = numer(u) * p + a * q^len(u)
        let mut numer = BigInt::zero();
        let mut qpow = BigInt::one();
        for &a in word {
            numer = numer * self.p + &qpow * a;
            qpow *= self.q;
        }
        Rational::new(numer, qpow)
    }

    /// The `p/q`-representation of `n`, most significant digit first.
    /// `represent(0)` is the empty word.
    pub fn represent(&self, n: &BigInt) -> DigitWord {
        assert!(!n.is_negative(), "cannot represent negative integer {n}");
        let (p, q) = (BigInt::from(self.p), BigInt::from(self.q));
        let mut digits = Vec::new();
        let mut current = n.clone();
        while !current.is_zero() {
            let (next, a) = (&current * &q).div_mod_floor(&p);
            digits.push(digit_of(&a));
            current = next;
        }
        digits.reverse();
        DigitWord(digits)
    }

    /// `tau(n, a) = (np + a)/q` when `q | np + a` and the result is non-negative.
    pub fn tau(&self, n: &State, a: Digit) -> Option<State> {
        let t = n * self.p + a;
        if t.is_negative() {
            return None;
        }
        let (m, r) = t.div_rem(&BigInt::from(self.q));
        r.is_zero().then_some(m)
    }

    /// Residue `r` in `[0, q)` such that `q | np + a` iff `a ≡ r (mod q)`.
    pub fn outgoing_residue(&self, n: &State) -> Digit {
        let r = (n * self.p).mod_floor(&BigInt::from(self.q));
        (-digit_of(&r)).rem_euclid(self.q)
    }

    /// The successor of `n` by its minimal (`maximal == false`) or maximal letter.
    pub(crate) fn extreme_step(&self, n: &State, maximal: bool) -> (Digit, State) {
        let q = BigInt::from(self.q);
        let np = n * self.p;
        let (_, r) = np.div_mod_floor(&q);
        let residue = (-digit_of(&r)).rem_euclid(self.q);
        let a = if maximal { self.max_letter(residue) } else { residue };
        let (m, rest) = (np + a).div_rem(&q);
        debug_assert!(rest.is_zero());
        (a, m)
    }

    /// The unique minimal letter readable from `n`.
    pub fn minimal_letter(&self, n: &State) -> Digit {
        self.outgoing_residue(n)
    }

    /// The unique maximal letter readable from `n`.
    pub fn maximal_letter(&self, n: &State) -> Digit {
        self.max_letter(self.outgoing_residue(n))
    }

    /// Greatest integer congruent to `x` modulo `q` and strictly smaller than `p`.
    pub fn max_letter(&self, x: i64) -> Digit {
        self.p - 1 - (self.p - 1 - x).rem_euclid(self.q)
    }

    /// `m(a) = maxLetter(a + p)`, mapping the minimal alphabet onto the maximal one.
    pub fn map_m(&self, a: Digit) -> Result<Digit> {
        if !self.minimal_alphabet().contains(a) {
            return Err(Error::DigitNotInAq(a));
        }
        Ok(self.max_letter(a + self.p))
    }

    /// Parses a word, accepting the compact `212` form when `p <= 10`.
    pub fn parse_word(&self, s: &str) -> Result<DigitWord> {
        let t = s.trim();
        let compact = t.len() > 1
            && !t.contains(',')
            && t.bytes().all(|b| b.is_ascii_digit())
            && t != "eps";
        if compact {
            if self.p > 10 {
                return Err(Error::parse(
                    s,
                    "compact digit strings need p <= 10; separate digits with commas",
                ));
            }
            return Ok(DigitWord(t.bytes().map(|b| (b - b'0') as Digit).collect()));
        }
        t.parse()
    }
}

impl fmt::Display for RationalBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

pub(crate) fn digit_of(n: &BigInt) -> Digit {
    i64::try_from(n).expect("digit fits in i64")
}

/// A finite word of digits, most significant first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DigitWord(pub Vec<Digit>);

impl DigitWord {
    pub fn empty() -> Self {
        DigitWord(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Digit> {
        self.0.iter()
    }

    pub fn digits(&self) -> &[Digit] {
        &self.0
    }

    pub fn push(&mut self, d: Digit) {
        self.0.push(d);
    }

    pub fn concat(&self, other: &DigitWord) -> DigitWord {
        DigitWord(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn all_in(&self, alphabet: DigitRange) -> bool {
        self.0.iter().all(|&d| alphabet.contains(d))
    }
}

impl From<Vec<Digit>> for DigitWord {
    fn from(v: Vec<Digit>) -> Self {
        DigitWord(v)
    }
}

impl FromIterator<Digit> for DigitWord {
    fn from_iter<I: IntoIterator<Item = Digit>>(iter: I) -> Self {
        DigitWord(iter.into_iter().collect())
    }
}

impl Extend<Digit> for DigitWord {
    fn extend<I: IntoIterator<Item = Digit>>(&mut self, iter: I) {
        self.0.extend(iter);
    }
}

impl<'a> IntoIterator for &'a DigitWord {
    type Item = &'a Digit;
    type IntoIter = std::slice::Iter<'a, Digit>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Comma-separated signed decimals; the empty word prints as `ε`.
impl fmt::Display for DigitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Parses comma-separated signed decimals. `""`, `"eps"` and `"ε"` are the empty word.
impl FromStr for DigitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() || t == "eps" || t == "ε" {
            return Ok(DigitWord::empty());
        }
        t.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<Digit>()
                    .map_err(|e| Error::parse(s, format!("bad digit {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(DigitWord)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(p: i64, q: i64) -> RationalBase {
        RationalBase::new(p, q).unwrap()
    }

    fn word(s: &str) -> DigitWord {
        s.parse().unwrap()
    }

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn validation() {
        assert_eq!(RationalBase::new(6, 4), Err(Error::NotCoprime { p: 6, q: 4 }));
        assert_eq!(RationalBase::new(2, 3), Err(Error::OrderViolation { p: 2, q: 3 }));
        assert_eq!(RationalBase::new(3, 1), Err(Error::OrderViolation { p: 3, q: 1 }));
        assert_eq!(RationalBase::new(3, 3), Err(Error::OrderViolation { p: 3, q: 3 }));
        assert!(matches!(
            RationalBase::new(1 << 31, 3),
            Err(Error::BaseTooLarge { .. })
        ));
    }

    #[test]
    fn alphabets() {
        let b = base(3, 2);
        assert_eq!(b.digits(), DigitRange::new(0, 2));
        assert_eq!(b.minimal_alphabet(), DigitRange::new(0, 1));
        assert_eq!(b.alphabet_b(), b.digits());

        let b = base(4, 3);
        assert_eq!(b.alphabet_b(), DigitRange::new(-1, 3));
        assert_eq!(b.alphabet_b().len(), 5);
        assert_eq!(b.center_b(), 1);

        let b = base(7, 3);
        assert_eq!(b.alphabet_b(), DigitRange::new(2, 6));
        assert_eq!(b.maximal_alphabet(), DigitRange::new(4, 6));
    }

    #[test]
    fn evaluate_examples() {
        let b = base(3, 2);
        assert_eq!(b.evaluate(&DigitWord::empty()), rat(0, 1));
        assert_eq!(b.evaluate(&word("2,1")), rat(2, 1));
        // (1/2)(3/2) + 0
        assert_eq!(b.evaluate(&word("1,0")), rat(3, 4));
        assert_eq!(base(4, 3).evaluate(&word("-1")), rat(-1, 3));
    }

    #[test]
    fn represent_examples() {
        let b = base(3, 2);
        assert_eq!(b.represent(&0.into()), DigitWord::empty());
        assert_eq!(b.represent(&2.into()), word("2,1"));
        assert_eq!(b.represent(&3.into()), word("2,1,0"));
        assert_eq!(b.represent(&4.into()), word("2,1,2"));
        assert_eq!(base(7, 3).represent(&1.into()), word("3"));
    }

    #[test]
    fn tau_examples() {
        let b = base(3, 2);
        assert_eq!(b.tau(&0.into(), 0), Some(0.into()));
        assert_eq!(b.tau(&1.into(), 1), Some(2.into()));
        assert_eq!(b.tau(&0.into(), 1), None);
        assert_eq!(base(4, 3).tau(&1.into(), -1), Some(1.into()));
        // never a negative state
        assert_eq!(base(4, 3).tau(&0.into(), -3), None);
    }

    #[test]
    fn letters() {
        let b = base(3, 2);
        assert_eq!(b.max_letter(3), 1);
        assert_eq!(b.max_letter(4), 2);
        assert_eq!(base(7, 3).max_letter(0), 6);
        assert_eq!(b.map_m(0), Ok(1));
        assert_eq!(b.map_m(1), Ok(2));
        assert_eq!(b.map_m(2), Err(Error::DigitNotInAq(2)));
        assert_eq!(b.maximal_letter(&0.into()), 2);
        assert_eq!(base(7, 3).maximal_letter(&0.into()), 6);
        assert_eq!(b.minimal_letter(&1.into()), 1);
    }

    #[test]
    fn word_syntax() {
        assert_eq!(word("eps"), DigitWord::empty());
        assert_eq!(word(""), DigitWord::empty());
        assert_eq!(word("-1, 0,3"), DigitWord(vec![-1, 0, 3]));
        assert_eq!(DigitWord(vec![-1, 0, 3]).to_string(), "-1,0,3");
        assert_eq!(DigitWord::empty().to_string(), "ε");
        assert!("1,x".parse::<DigitWord>().is_err());

        let b = base(3, 2);
        assert_eq!(b.parse_word("212").unwrap(), word("2,1,2"));
        assert_eq!(b.parse_word("12").unwrap(), word("1,2"));
        assert!(base(11, 3).parse_word("212").is_err());
        assert!(!base(11, 3).parse_word("10").unwrap_err().to_string().is_empty());
        assert_eq!(base(11, 3).parse_word("10,2").unwrap(), word("10,2"));
    }

    #[test]
    fn congruent_letters() {
        let r = DigitRange::new(-1, 3);
        assert_eq!(r.congruent(2, 3).collect::<Vec<_>>(), vec![-1, 2]);
        assert_eq!(r.congruent(0, 3).collect::<Vec<_>>(), vec![0, 3]);
    }
}
