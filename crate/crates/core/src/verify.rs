//! Verification campaigns: each suite checks one claimed property over a
//! bounded range of states and reports counts plus the first counterexample.
//! Ranges are sharded across rayon workers; the report only depends on the
//! base and the bounds.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::automata::{find_that_unreachable, minimal_word, tree_t, tree_that, UnreachableWitness};
use crate::error::{Error, Result};
use crate::numeration::{DigitWord, RationalBase, State};
use crate::spans::{
    density_report, omega_m_kernel_violations, value_witness, verify_dpq_to_spq,
    verify_that_complete, DensityReport,
};
use crate::transducer::{underlying_graph, DerivedTransducer, ShiftCheck};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    MpqCorrect,
    MpqCc,
    ThatComplete,
    DpqToSpq,
    Seqic,
    DpqCaractEquiv,
    Shift,
    Cantor,
    ValEqual,
    Density,
    Graph,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::MpqCorrect,
        Suite::MpqCc,
        Suite::ThatComplete,
        Suite::DpqToSpq,
        Suite::Seqic,
        Suite::DpqCaractEquiv,
        Suite::Shift,
        Suite::Cantor,
        Suite::ValEqual,
        Suite::Density,
        Suite::Graph,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::MpqCorrect => "mpq-correct",
            Suite::MpqCc => "mpq-cc",
            Suite::ThatComplete => "that-complete",
            Suite::DpqToSpq => "dpq-to-spq",
            Suite::Seqic => "seqic",
            Suite::DpqCaractEquiv => "dpq-caract-equiv",
            Suite::Shift => "shift",
            Suite::Cantor => "cantor",
            Suite::ValEqual => "val-equal",
            Suite::Density => "density",
            Suite::Graph => "graph",
        }
    }

    /// Bounds that keep each suite well under a minute.
    pub fn default_bounds(&self) -> Bounds {
        let b = Bounds::default();
        match self {
            Suite::MpqCorrect => Bounds { n_max: 1_000, depth: 128, ..b },
            Suite::MpqCc => Bounds { n_max: 1_000, depth: 32, samples: 200, budget: 100_000, ..b },
            Suite::ThatComplete | Suite::DpqToSpq => Bounds { n_max: 1_000, depth: 64, ..b },
            Suite::Seqic | Suite::DpqCaractEquiv | Suite::Graph => Bounds { n_max: 10_000, ..b },
            Suite::Shift => Bounds { n_max: 500, depth: 12, samples: 1_000, ..b },
            Suite::Cantor => Bounds { n_max: 20, ..b },
            Suite::ValEqual => Bounds { depth: 10, samples: 1_000, ..b },
            Suite::Density => Bounds { n_max: 100_000, depth: 0, ..b },
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::parse(s, "unknown suite"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub n_max: u64,
    /// Prefix length (word depth); 0 selects an automatic depth where relevant.
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
    pub budget: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            n_max: 1_000,
            depth: 64,
            samples: 1_000,
            seed: 0,
            budget: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    /// Sort key (usually the state or sample index); the smallest one is kept.
    pub key: u64,
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Tally {
    checked: u64,
    violations: u64,
    first: Option<Counterexample>,
}

impl Tally {
    fn check(key: u64, ok: bool, describe: impl FnOnce() -> String) -> Self {
        Tally {
            checked: 1,
            violations: u64::from(!ok),
            first: (!ok).then(|| Counterexample {
                key,
                description: describe(),
            }),
        }
    }

    fn merge(self, other: Tally) -> Tally {
        let first = match (self.first, other.first) {
            (Some(a), Some(b)) => Some(if a.key <= b.key { a } else { b }),
            (a, b) => a.or(b),
        };
        Tally {
            checked: self.checked + other.checked,
            violations: self.violations + other.violations,
            first,
        }
    }
}

fn sum<I: ParallelIterator<Item = Tally>>(it: I) -> Tally {
    it.reduce(Tally::default, Tally::merge)
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub suite: Suite,
    pub p: i64,
    pub q: i64,
    pub bounds: Bounds,
    pub checked: u64,
    pub violations: u64,
    pub first_counterexample: Option<Counterexample>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<Vec<UnreachableWitness>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityReport>,
}

impl SuiteReport {
    fn new(suite: Suite, base: RationalBase, bounds: Bounds, tally: Tally) -> Self {
        SuiteReport {
            schema: SCHEMA_VERSION,
            suite,
            p: base.p(),
            q: base.q(),
            bounds,
            checked: tally.checked,
            violations: tally.violations,
            first_counterexample: tally.first,
            notes: Vec::new(),
            witnesses: None,
            density: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn st(n: u64) -> State {
    State::from(n)
}

pub fn run_suite(suite: Suite, base: RationalBase, bounds: Bounds) -> Result<SuiteReport> {
    let d = DerivedTransducer::new(base);
    let q = base.q();
    let n_range = 0..=bounds.n_max;
    let k = bounds.depth;

    let report = match suite {
        Suite::Seqic => {
            let tally = sum(n_range.into_par_iter().flat_map_iter(|n| {
                (0..q).map(move |b| {
                    let r = d.step_substitution(&st(n), b);
                    Tally::check(n, r.is_ok(), || format!("n={n} b={b}: {}", r.unwrap_err()))
                })
            }));
            SuiteReport::new(suite, base, bounds, tally)
        }
        Suite::DpqCaractEquiv => {
            let tally = sum(n_range.into_par_iter().flat_map_iter(|n| {
                (0..q).map(move |b| {
                    let sub = d.step_substitution(&st(n), b);
                    let closed = d.step(&st(n), b);
                    let ok = sub.is_ok() && sub == closed;
                    Tally::check(n, ok, || format!("n={n} b={b}: substitution {sub:?}, closed form {closed:?}"))
                })
            }));
            SuiteReport::new(suite, base, bounds, tally)
        }
        Suite::Graph => {
            let hat = tree_that(base);
            let graph = underlying_graph(&d, bounds.n_max);
            let tally = sum(n_range.into_par_iter().map(|n| {
                let mut from_hat: Vec<u64> = hat
                    .successors(&st(n))
                    .into_iter()
                    .map(|(_, m)| u64::try_from(&m).expect("small state"))
                    .collect();
                from_hat.sort_unstable();
                let from_d: Vec<u64> = graph.range((n, 0)..=(n, u64::MAX)).map(|((_, m), _)| *m).collect();
                Tally::check(n, from_hat == from_d, || {
                    format!("n={n}: T̂ targets {from_hat:?}, D targets {from_d:?}")
                })
            }));
            SuiteReport::new(suite, base, bounds, tally)
        }
        Suite::MpqCorrect => {
            let tally = sum(n_range.into_par_iter().map(|n| {
                let w = minimal_word(base, &st(n)).prefix(k);
                let expected = minimal_word(base, &st(n + 1)).prefix(k);
                let image = d.apply(&st(0), &w).map(|(v, _)| v);
                let ok = image.as_ref() == Ok(&expected);
                Tally::check(n, ok, || format!("n={n}: D(w(n)) = {image:?}, w(n+1) = {expected}"))
            }));
            SuiteReport::new(suite, base, bounds, tally)
        }
        Suite::MpqCc => {
            // forward: every prefix pair of consecutive minimal words labels a run from 0
            let tally = sum(n_range.into_par_iter().flat_map_iter(|n| {
                let w = minimal_word(base, &st(n)).prefix(k);
                let next = minimal_word(base, &st(n + 1)).prefix(k);
                (0..=k).map(move |len| {
                    let u = DigitWord(w.digits()[..len].to_vec());
                    let v = DigitWord(next.digits()[..len].to_vec());
                    let ok = d.apply(&st(0), &u).map(|(out, _)| out) == Ok(v.clone());
                    Tally::check(n, ok, || format!("n={n}: ({u}|{v}) is not a run of D from 0"))
                })
            }));
            let mut report = SuiteReport::new(suite, base, bounds, tally);
            // converse: search an origin for runs of random inputs; informational only
            let mut rng = ChaCha8Rng::seed_from_u64(bounds.seed);
            let (mut found, mut missing) = (0u64, 0u64);
            for _ in 0..bounds.samples {
                let len = rng.gen_range(0..=6usize);
                let u: DigitWord = (0..len).map(|_| rng.gen_range(0..q)).collect();
                let (v, _) = d.apply(&st(0), &u)?;
                match d.find_run_origin(&u, &v, bounds.budget) {
                    Ok(_) => found += 1,
                    Err(Error::NotFoundWithinBudget(_)) => missing += 1,
                    Err(e) => return Err(e),
                }
            }
            report.notes.push(format!(
                "converse search: {found} runs traced to some n <= {}, {missing} not found within budget",
                bounds.budget
            ));
            report
        }
        Suite::Shift => {
            let mut rng = ChaCha8Rng::seed_from_u64(bounds.seed);
            let samples: Vec<(u64, u64, usize)> = (0..bounds.samples)
                .map(|_| {
                    (
                        rng.gen_range(0..=bounds.n_max),
                        rng.gen_range(0..=bounds.n_max),
                        rng.gen_range(0..=k),
                    )
                })
                .collect();
            let tally = sum(samples.par_iter().enumerate().map(|(idx, &(n, i, len))| {
                let u = minimal_word(base, &st(n)).prefix(len);
                let check = d.verify_shift_property(&st(n), &st(i), &u);
                Tally::check(idx as u64, check == ShiftCheck::Holds, || {
                    format!("n={n} i={i} u={u}: {check:?}")
                })
            }));
            SuiteReport::new(suite, base, bounds, tally)
        }
        Suite::ThatComplete => {
            let tally = sum(n_range.into_par_iter().map(|n| {
                let c = verify_that_complete(base, &st(n), k);
                Tally::check(n, c.ok, || format!("n={n}: span-word prefix {} rejected at {:?}", c.word, c.rejected_at))
            }));
            SuiteReport::new(suite, base, bounds, tally)
        }
        Suite::DpqToSpq => {
            let kernel = omega_m_kernel_violations(base);
            let kernel_tally = Tally {
                checked: 1,
                violations: kernel.len() as u64,
                first: kernel.first().map(|(a, b, c)| Counterexample {
                    key: 0,
                    description: format!("m({c}) - {b} != {a}"),
                }),
            };
            let words = sum(n_range.into_par_iter().map(|n| match verify_dpq_to_spq(base, &st(n), k) {
                Ok(c) => Tally::check(n, c.ok, || {
                    format!("n={n}: m(w') ⊖ w = {} rejected at {:?} {}", c.word, c.rejected_at, c.detail.unwrap_or_default())
                }),
                Err(e) => Tally::check(n, false, || format!("n={n}: {e}")),
            }));
            SuiteReport::new(suite, base, bounds, kernel_tally.merge(words))
        }
        Suite::Cantor => {
            let t = tree_t(base);
            let hat = tree_that(base);
            let depth = (base.p() + 1) as usize;
            let mut witnesses = Vec::new();
            let mut tally = Tally::default();
            for n in n_range {
                let w = find_that_unreachable(base, &st(n))?;
                let ok = t.accepts(&st(n), &w.path).as_ref() == Some(&w.state)
                    && !crate::automata::reachable_within(&hat, &st(n), &w.state, depth);
                tally = tally.merge(Tally::check(n, ok, || format!("n={n}: witness {} fails", w.state)));
                witnesses.push(w);
            }
            let mut report = SuiteReport::new(suite, base, bounds, tally);
            report.witnesses = Some(witnesses);
            report
        }
        Suite::ValEqual => {
            if base.p() >= 2 * base.q() - 1 {
                return Err(Error::PreconditionViolated(format!(
                    "val-equal needs p < 2q-1, got {base}"
                )));
            }
            let words = random_that_words(base, bounds.samples, k, bounds.seed);
            let t = tree_t(base);
            let tally = sum(words.par_iter().enumerate().map(|(idx, u)| {
                let result = value_witness(base, u);
                let ok = match &result {
                    Ok(v) => {
                        v.len() == u.len()
                            && t.accepts(&st(0), v).is_some()
                            && base.evaluate(v) == base.evaluate(u)
                    }
                    Err(_) => false,
                };
                Tally::check(idx as u64, ok, || format!("u={u}: witness {result:?}"))
            }));
            SuiteReport::new(suite, base, bounds, tally)
        }
        Suite::Density => {
            let depth = (bounds.depth > 0).then_some(bounds.depth);
            let density = density_report(base, bounds.n_max, depth)?;
            let mut tally = Tally::check(0, density.out_of_range == 0, || {
                format!("{} span midpoints outside [0, rho(w̄(0))]", density.out_of_range)
            });
            if let Some(cert) = &density.certificate {
                tally = tally.merge(Tally::check(1, cert.midpoints_inside == 0, || {
                    format!("{} span midpoints inside the certified gap", cert.midpoints_inside)
                }));
            }
            let mut report = SuiteReport::new(suite, base, bounds, tally);
            report.notes.push(format!("max gap between sorted span midpoints: {:e}", density.max_gap_f64));
            report.density = Some(density);
            report
        }
    };
    Ok(report)
}

/// Random words accepted by `T̂` from 0, of length up to `max_len`, built by
/// random walks choosing uniformly among outgoing letters.
pub fn random_that_words(base: RationalBase, count: usize, max_len: usize, seed: u64) -> Vec<DigitWord> {
    let hat = tree_that(base);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(0..=max_len);
            let mut state = State::from(0);
            let mut word = DigitWord::empty();
            for _ in 0..len {
                let succ = hat.successors(&state);
                let (a, m) = succ[rng.gen_range(0..succ.len())].clone();
                word.push(a);
                state = m;
            }
            word
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn small_suites_pass() {
        let base = RationalBase::new(3, 2).unwrap();
        for suite in [Suite::Seqic, Suite::DpqCaractEquiv, Suite::Graph, Suite::MpqCorrect, Suite::Shift] {
            let bounds = Bounds { n_max: 50, depth: 16, samples: 50, ..Bounds::default() };
            let r = run_suite(suite, base, bounds).unwrap();
            assert!(r.passed(), "{suite}: {:?}", r.first_counterexample);
            assert!(r.checked > 0);
        }
    }

    #[test]
    fn cantor_precondition() {
        let base = RationalBase::new(4, 3).unwrap();
        assert!(matches!(
            run_suite(Suite::Cantor, base, Bounds::default()),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn reports_are_deterministic() {
        let base = RationalBase::new(5, 3).unwrap();
        let bounds = Bounds { n_max: 100, depth: 12, samples: 100, seed: 7, ..Bounds::default() };
        let a = serde_json::to_string(&run_suite(Suite::Shift, base, bounds).unwrap()).unwrap();
        let b = serde_json::to_string(&run_suite(Suite::Shift, base, bounds).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tally_keeps_smallest_counterexample() {
        let a = Tally::check(5, false, || "five".into());
        let b = Tally::check(2, false, || "two".into());
        let merged = a.merge(b).merge(Tally::check(1, true, String::new));
        assert_eq!(merged.checked, 3);
        assert_eq!(merged.violations, 2);
        assert_eq!(merged.first.unwrap().key, 2);
    }
}
