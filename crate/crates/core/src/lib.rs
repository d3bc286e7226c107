//! Exact arithmetic for rational base numeration systems.
//!
//! * [`numeration`]: bases `p/q`, digit words, evaluation, representation and
//!   the partial transition function `tau`.
//! * [`automata`]: the lazy infinite automata `T` and `T̂`, minimal and maximal
//!   words, reachability intervals.
//! * [`transducer`]: the derived transducer `D` mapping `w(n)` to `w(n+1)`.
//! * [`spans`]: real evaluation with rational enclosures, span-words and spans.
//! * [`verify`]: bounded verification campaigns over all of the above.

pub mod automata;
pub mod error;
pub mod numeration;
mod ser;
pub mod spans;
pub mod transducer;
pub mod verify;

pub use automata::{
    find_that_unreachable, maximal_word, minimal_word, tree_t, tree_that, DigitStream, LazyAutomaton,
    StateInterval, Step,
};
pub use error::{Error, Result};
pub use numeration::{Digit, DigitRange, DigitWord, Rational, RationalBase, State};
pub use spans::{rho_truncate, span, span_word, RatInterval, SpanValue};
pub use transducer::{omega, DerivedTransducer, LabelSubstitution};
