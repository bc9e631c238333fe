//! A small Church interpreter: enough of the language to run the tug-of-war
//! world model, with rejection sampling for `condition` and `query`.
//!
//! All numbers are `f64`. `mem` caches live for one sampled world.

mod env;
mod eval;
mod lexer;
mod query;
mod sexpr;
mod value;

use thiserror::Error;

pub use env::Environment;
pub use eval::{Expr, Interpreter, World, WorldRng, GAUSSIAN_METHOD};
pub use lexer::{tokenize, Pos, Token, TokenKind};
pub use query::{
    rejection_query, rejection_query_with, run_match_query, strip_wrapper, worker_rng, MatchEstimate,
    NumericSummary, PosteriorSamples, PosteriorSummary, RejectionOptions, RejectionSampler, StrengthPrior,
    WorldModel,
};
pub use sexpr::{parse, parse_one, parse_program, SExpr};
pub use value::{Builtin, Closure, Datum, Memoized, Symbol, Value};

#[derive(Debug, Error)]
pub enum ChurchError {
    #[error("lex error at {pos}: {message}")]
    Lex { pos: Pos, message: String },
    #[error("parse error at {pos}: {message}")]
    Parse { pos: Pos, message: String },
    #[error("unbound identifier `{name}`")]
    Unbound { name: String },
    #[error("arity mismatch in {form}: expected {expected} argument(s), got {got}")]
    Arity { form: String, expected: String, got: usize },
    #[error("type error in {form}: {message}")]
    Type { form: String, message: String },
    #[error("evaluation error in {form}: {message}")]
    Eval { form: String, message: String },
    #[error("condition too restrictive: {accepted} accepted after {attempts} attempts")]
    TooRestrictive { attempts: u64, accepted: usize },
    #[error("{0}")]
    Io(String),
}
