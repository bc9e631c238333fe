use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::env::Environment;
use super::eval::Expr;

/// Interned identifier. Names are owned by the [`Interpreter`](super::Interpreter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub(crate) u32);

#[derive(Clone)]
pub enum Value {
    Real(f64),
    Truth(bool),
    Sym(Symbol),
    List(Rc<[Value]>),
    Procedure(Rc<Closure>),
    Builtin(Builtin),
    /// A procedure wrapped by `mem`; owns its cache.
    Memoized(Rc<Memoized>),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Real(_) => "real",
            Value::Truth(_) => "boolean",
            Value::Sym(_) => "symbol",
            Value::List(_) => "list",
            Value::Procedure(_) | Value::Builtin(_) | Value::Memoized(_) => "procedure",
        }
    }

    /// Scheme truthiness: everything except `#f` is true.
    pub fn is_true(&self) -> bool {
        !matches!(self, Value::Truth(false))
    }

    pub fn list(items: Vec<Value>) -> Self {
        Value::List(items.into())
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(x) => write!(f, "Real({x})"),
            Value::Truth(b) => write!(f, "Truth({b})"),
            Value::Sym(s) => write!(f, "Sym(#{})", s.0),
            Value::List(items) => f.debug_list().entries(items.iter()).finish(),
            Value::Procedure(c) => write!(f, "Procedure(arity {})", c.params.len()),
            Value::Builtin(b) => write!(f, "Builtin({})", b.name()),
            Value::Memoized(_) => f.write_str("Memoized"),
        }
    }
}

pub struct Closure {
    pub params: Vec<Symbol>,
    pub body: Rc<[Expr]>,
    pub env: Environment,
}

pub struct Memoized {
    pub inner: Value,
    pub(crate) cache: RefCell<HashMap<Vec<MemoKey>, Value>>,
}

impl Memoized {
    pub fn new(inner: Value) -> Self {
        Memoized {
            inner,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.borrow().len()
    }
}

/// Hashable image of an argument tuple element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum MemoKey {
    Real(u64),
    Truth(bool),
    Sym(Symbol),
    List(Vec<MemoKey>),
    Identity(usize),
}

impl MemoKey {
    pub(crate) fn of(value: &Value) -> MemoKey {
        match value {
            // -0.0 and 0.0 compare equal, so they must share a key
            Value::Real(x) => MemoKey::Real(if *x == 0.0 { 0 } else { x.to_bits() }),
            Value::Truth(b) => MemoKey::Truth(*b),
            Value::Sym(s) => MemoKey::Sym(*s),
            Value::List(items) => MemoKey::List(items.iter().map(MemoKey::of).collect()),
            Value::Procedure(rc) => MemoKey::Identity(Rc::as_ptr(rc) as *const () as usize),
            Value::Memoized(rc) => MemoKey::Identity(Rc::as_ptr(rc) as *const () as usize),
            Value::Builtin(b) => MemoKey::Identity(*b as usize),
        }
    }
}

macro_rules! builtins {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Builtin {
            $($variant),*
        }

        impl Builtin {
            pub const ALL: &'static [Builtin] = &[$(Builtin::$variant),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Builtin::$variant => $name),*
                }
            }
        }
    };
}

builtins! {
    Add => "+",
    Sub => "-",
    Mul => "*",
    Div => "/",
    Gt => ">",
    Lt => "<",
    Ge => ">=",
    Le => "<=",
    NumEq => "=",
    Equal => "equal?",
    Not => "not",
    List => "list",
    Length => "length",
    Sum => "sum",
    Map => "map",
    Member => "member?",
    Flip => "flip",
    Gaussian => "gaussian",
    Uniform => "uniform",
}

/// Plain data extracted from a runtime [`Value`]; what queries return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Datum {
    Real(f64),
    Truth(bool),
    Sym(String),
    List(Vec<Datum>),
}

impl Datum {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Datum::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_truth(&self) -> Option<bool> {
        match self {
            Datum::Truth(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Real(x) => write!(f, "{x}"),
            Datum::Truth(true) => f.write_str("#t"),
            Datum::Truth(false) => f.write_str("#f"),
            Datum::Sym(s) => f.write_str(s),
            Datum::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}
