//! `ratbase`: representations, words, the derived transducer, verification
//! campaigns and exporters for rational base numeration systems.

mod export;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use ratbase::spans::{prefix_extension_search, value_witness};
use ratbase::verify::{run_suite, Bounds, Suite};
use ratbase::{
    find_that_unreachable, maximal_word, minimal_word, span, span_word, tree_that, DerivedTransducer,
    RationalBase, State,
};

#[derive(Parser)]
#[command(name = "ratbase", version, about = "Rational base numeration systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct BaseArgs {
    /// Numerator of the base
    #[arg(short, long)]
    p: i64,
    /// Denominator of the base
    #[arg(short, long)]
    q: i64,
}

impl BaseArgs {
    fn base(self) -> Result<RationalBase, CliError> {
        Ok(RationalBase::new(self.p, self.q)?)
    }
}

#[derive(Args)]
struct WordArgs {
    #[command(flatten)]
    base: BaseArgs,
    /// Starting state
    #[arg(short, long)]
    n: State,
    /// Number of letters
    #[arg(short = 'k', long = "depth", default_value_t = 64)]
    k: usize,
    /// Also print the visited states
    #[arg(long)]
    states: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Dot,
    Svg,
    Csv,
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportObject {
    Tree,
    That,
    Transducer,
    Fractal,
}

#[derive(Subcommand)]
enum Command {
    /// Representation of a non-negative integer
    Repr {
        #[command(flatten)]
        base: BaseArgs,
        n: State,
        /// Evaluate the representation back
        #[arg(long)]
        roundtrip: bool,
    },
    /// Value of a word (comma-separated digits, "" or "eps" for the empty word)
    Eval {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(allow_hyphen_values = true)]
        word: String,
    },
    /// Prefix of the minimal word w(n)
    Minword(WordArgs),
    /// Prefix of the maximal word w̄(n)
    Maxword(WordArgs),
    /// Prefix of the span-word w̄(n) ⊖ w(n)
    Spanword(WordArgs),
    /// Feeds w(n) to the derived transducer and compares with w(n+1)
    Transduce {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(short, long)]
        n: State,
        #[arg(short = 'k', long = "depth", default_value_t = 64)]
        k: usize,
        /// Flip the last output letter (negative control)
        #[arg(long, hide = true)]
        inject_mismatch: bool,
    },
    /// Runs a bounded verification suite and prints a JSON report
    Verify {
        /// One of: mpq-correct, mpq-cc, that-complete, dpq-to-spq, seqic,
        /// dpq-caract-equiv, shift, cantor, val-equal, density, graph
        suite: String,
        #[command(flatten)]
        base: BaseArgs,
        #[arg(short = 'n', long)]
        n_max: Option<u64>,
        #[arg(short = 'k', long)]
        depth: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Writes a DOT graph or an SVG layout
    Export {
        object: ExportObject,
        #[command(flatten)]
        base: BaseArgs,
        /// Largest state drawn
        #[arg(short = 'n', long, default_value = "40")]
        n_max: State,
        /// Only expand states reached from 0 within this many steps
        #[arg(short = 'k', long)]
        depth: Option<usize>,
        /// Leave out the 0-loop on the root
        #[arg(long)]
        no_root_loop: bool,
        /// dot for graphs, svg for the fractal (default picks by object)
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Span enclosures of one state (-n) or of 0..=N (--n-max)
    Span {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(short, long, conflicts_with = "n_max", required_unless_present = "n_max")]
        n: Option<State>,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(short = 'k', long = "depth", default_value_t = 64)]
        k: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Smallest n whose span-word starts with WORD
    SearchPrefix {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(allow_hyphen_values = true)]
        word: String,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// Word read by T from 0 with the value and length of WORD (read by T̂)
    Witness {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(allow_hyphen_values = true)]
        word: String,
    },
    /// Smallest n from which T reads U to some m and V to m+1
    RunOrigin {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(allow_hyphen_values = true)]
        input: String,
        #[arg(allow_hyphen_values = true)]
        output: String,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// A multiple of p reachable in T from n but never in T̂
    Unreachable {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(short, long, default_value = "0")]
        n: State,
    },
}

#[derive(Debug)]
enum CliError {
    Core(ratbase::Error),
    Usage(String),
    Io(PathBuf, io::Error),
    Failed,
}

impl From<ratbase::Error> for CliError {
    fn from(e: ratbase::Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Failed => f.write_str("verification failed"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use ratbase::Error as E;
        match self {
            CliError::Failed => 1,
            CliError::Core(E::NotFoundWithinBudget(_) | E::InternalInconsistency(_)) => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Io(..) => 3,
        }
    }
}

fn non_negative(n: &State) -> Result<(), CliError> {
    if n.is_negative() {
        return Err(CliError::Usage(format!("state must be non-negative, got {n}")));
    }
    Ok(())
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e)),
    }
}

fn join_states(states: &[State]) -> String {
    states.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_word(kind: &str, args: WordArgs) -> Result<String, CliError> {
    let base = args.base.base()?;
    non_negative(&args.n)?;
    let (word, states) = match kind {
        "min" => minimal_word(base, &args.n).prefix_with_states(args.k),
        "max" => maximal_word(base, &args.n).prefix_with_states(args.k),
        _ => {
            let w = span_word(base, &args.n).prefix(args.k);
            // span-words are read by T̂ from 0
            let mut state = State::zero();
            let mut states = Vec::with_capacity(w.len());
            for &a in &w {
                state = tree_that(base).transition(&state, a).ok_or_else(|| {
                    ratbase::Error::InternalInconsistency(format!("span-word {w} rejected by T̂"))
                })?;
                states.push(state.clone());
            }
            (w, states)
        }
    };
    let mut out = format!("{word}\n");
    if args.states {
        out.push_str(&join_states(&states));
        out.push('\n');
    }
    Ok(out)
}

fn cmd_transduce(base: RationalBase, n: &State, k: usize, inject: bool) -> Result<String, CliError> {
    non_negative(n)?;
    let d = DerivedTransducer::new(base);
    let (mut image, _) = d.apply(&State::zero(), &minimal_word(base, n).prefix(k))?;
    if inject {
        if let Some(last) = image.0.last_mut() {
            *last = (*last + 1) % base.q();
        }
    }
    let expected = minimal_word(base, &(n + 1u32)).prefix(k);
    let verdict = if image == expected { "MATCH" } else { "MISMATCH" };
    let out = format!("D(w({n})):  {image}\nw({}):     {expected}\n{verdict}\n", n + 1u32);
    if image == expected {
        Ok(out)
    } else {
        emit(None, &out)?;
        Err(CliError::Failed)
    }
}

#[derive(Serialize)]
struct VerifyOutput {
    #[serde(flatten)]
    report: ratbase::verify::SuiteReport,
    passed: bool,
    replay: String,
}

fn replay_command(suite: Suite, base: RationalBase, b: &Bounds) -> String {
    format!(
        "ratbase verify {suite} -p {} -q {} --n-max {} --depth {} --samples {} --seed {} --budget {}",
        base.p(),
        base.q(),
        b.n_max,
        b.depth,
        b.samples,
        b.seed,
        b.budget
    )
}

#[derive(Serialize)]
struct SpanRow {
    n: String,
    k: usize,
    span_lo: String,
    span_hi: String,
    spanword_prefix: String,
}

fn cmd_span(base: RationalBase, states: Vec<State>, k: usize, format: Format) -> Result<String, CliError> {
    let values: Vec<_> = states.iter().map(|n| span(base, n, k)).collect();
    match format {
        Format::Text => Ok(values
            .iter()
            .map(|s| {
                format!(
                    "n={} k={} span in [{}, {}] ~ [{:.12}, {:.12}] spanword {}\n",
                    s.n,
                    s.k,
                    s.enclosure.lo,
                    s.enclosure.hi,
                    s.enclosure.lo.to_f64().unwrap_or(f64::NAN),
                    s.enclosure.hi.to_f64().unwrap_or(f64::NAN),
                    s.span_word_prefix
                )
            })
            .collect()),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&values).expect("spans serialize");
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for s in &values {
                w.serialize(SpanRow {
                    n: s.n.to_string(),
                    k: s.k,
                    span_lo: s.enclosure.lo.to_string(),
                    span_hi: s.enclosure.hi.to_string(),
                    spanword_prefix: s.span_word_prefix.to_string(),
                })
                .map_err(|e| CliError::Io(PathBuf::from("<csv>"), e.into()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(PathBuf::from("<csv>"), e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        Format::Dot | Format::Svg => Err(CliError::Usage("span supports text, csv and json".into())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Repr { base, n, roundtrip } => {
            let base = base.base()?;
            non_negative(&n)?;
            let w = base.represent(&n);
            if roundtrip {
                emit(None, &format!("{n} -> {w} -> {}\n", base.evaluate(&w)))
            } else {
                emit(None, &format!("{w}\n"))
            }
        }
        Command::Eval { base, word } => {
            let base = base.base()?;
            let w = base.parse_word(&word)?;
            emit(None, &format!("{}\n", base.evaluate(&w)))
        }
        Command::Minword(args) => emit(None, &cmd_word("min", args)?),
        Command::Maxword(args) => emit(None, &cmd_word("max", args)?),
        Command::Spanword(args) => emit(None, &cmd_word("span", args)?),
        Command::Transduce { base, n, k, inject_mismatch } => {
            emit(None, &cmd_transduce(base.base()?, &n, k, inject_mismatch)?)
        }
        Command::Verify { suite, base, n_max, depth, samples, seed, budget, output } => {
            let suite: Suite = suite.parse()?;
            let base = base.base()?;
            let d = suite.default_bounds();
            let bounds = Bounds {
                n_max: n_max.unwrap_or(d.n_max),
                depth: depth.unwrap_or(d.depth),
                samples: samples.unwrap_or(d.samples),
                seed: seed.unwrap_or(d.seed),
                budget: budget.unwrap_or(d.budget),
            };
            let report = run_suite(suite, base, bounds)?;
            let passed = report.passed();
            let out = VerifyOutput {
                replay: replay_command(suite, base, &bounds),
                passed,
                report,
            };
            let mut json = serde_json::to_string_pretty(&out).expect("report serializes");
            json.push('\n');
            emit(output.as_deref(), &json)?;
            if passed {
                Ok(())
            } else {
                Err(CliError::Failed)
            }
        }
        Command::Export { object, base, n_max, depth, no_root_loop, format, output } => {
            let base = base.base()?;
            non_negative(&n_max)?;
            let format = format.unwrap_or(if object == ExportObject::Fractal { Format::Svg } else { Format::Dot });
            let text = match (object, format) {
                (ExportObject::Tree, Format::Dot) => export::automaton_dot(base, false, &n_max, depth, !no_root_loop),
                (ExportObject::That, Format::Dot) => export::automaton_dot(base, true, &n_max, depth, !no_root_loop),
                (ExportObject::Transducer, Format::Dot) => export::transducer_dot(base, &n_max),
                (ExportObject::Fractal, Format::Svg) => {
                    let bound = export::small_bound(&n_max)
                        .filter(|&b| b <= 1_000_000)
                        .ok_or_else(|| CliError::Usage("fractal export supports n-max <= 1000000".into()))?;
                    export::fractal_svg(base, bound)
                }
                _ => return Err(CliError::Usage("graphs export as dot, the fractal as svg".into())),
            };
            emit(output.as_deref(), &text)
        }
        Command::Span { base, n, n_max, k, format, output } => {
            let base = base.base()?;
            let states = match (n, n_max) {
                (Some(n), _) => {
                    non_negative(&n)?;
                    vec![n]
                }
                (None, Some(m)) => (0..=m).map(State::from).collect(),
                (None, None) => unreachable!("clap requires -n or --n-max"),
            };
            emit(output.as_deref(), &cmd_span(base, states, k, format)?)
        }
        Command::SearchPrefix { base, word, budget } => {
            let base = base.base()?;
            let u = base.parse_word(&word)?;
            let n = prefix_extension_search(base, &u, budget)?;
            emit(None, &format!("{n}\n"))
        }
        Command::Witness { base, word } => {
            let base = base.base()?;
            let u = base.parse_word(&word)?;
            emit(None, &format!("{}\n", value_witness(base, &u)?))
        }
        Command::RunOrigin { base, input, output, budget } => {
            let base = base.base()?;
            let u = base.parse_word(&input)?;
            let v = base.parse_word(&output)?;
            let n = DerivedTransducer::new(base).find_run_origin(&u, &v, budget)?;
            emit(None, &format!("{n}\n"))
        }
        Command::Unreachable { base, n } => {
            let base = base.base()?;
            non_negative(&n)?;
            let w = find_that_unreachable(base, &n)?;
            emit(None, &format!("{}\n{}\n", w.state, w.path))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
