use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::env::Environment;
use super::sexpr::SExpr;
use super::value::{Builtin, Closure, Datum, MemoKey, Memoized, Symbol, Value};
use super::ChurchError;

/// Random stream driving every stochastic primitive.
pub type WorldRng = ChaCha8Rng;

/// Name of the normal sampler, recorded alongside seeds for reproducibility.
pub const GAUSSIAN_METHOD: &str = "rand_distr::StandardNormal (ziggurat) over ChaCha8";

const DEFAULT_MAX_DEPTH: usize = 2_000;

const RESERVED: &[&str] = &[
    "quote", "define", "lambda", "if", "cond", "else", "mem", "and", "or", "condition", "query",
];

/// Compiled form of an [`SExpr`]. Special forms are resolved and identifiers interned.
pub enum Expr {
    Const(Value),
    Var(Symbol),
    If(Box<[Expr; 3]>),
    /// `None` test marks the `else` clause.
    Cond(Vec<(Option<Expr>, Vec<Expr>)>),
    Lambda(Rc<LambdaSpec>),
    Define(Symbol, Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Mem(Box<Expr>),
    App(Box<Application>),
}

pub struct LambdaSpec {
    params: Vec<Symbol>,
    body: Rc<[Expr]>,
}

pub struct Application {
    func: Expr,
    args: Vec<Expr>,
    form: SExpr,
}

#[derive(Default)]
struct Interner {
    by_name: HashMap<String, Symbol>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> Symbol {
        if let Some(s) = self.by_name.get(name) {
            return *s;
        }
        let s = Symbol(self.names.len() as u32);
        self.names.push(name.to_owned());
        self.by_name.insert(name.to_owned(), s);
        s
    }
}

/// One sampled world: the global frame after running every definition.
///
/// Definitions close over this frame, so dropping a world clears it to break
/// the resulting reference cycles.
pub struct World {
    env: Environment,
}

impl World {
    pub fn env(&self) -> &Environment {
        &self.env
    }
}

impl Drop for World {
    fn drop(&mut self) {
        self.env.clear();
    }
}

/// Tree-walking evaluator for the Church subset.
pub struct Interpreter {
    interner: RefCell<Interner>,
    root: Environment,
    definitions: Vec<Expr>,
    max_depth: usize,
}

impl Interpreter {
    /// Compiles the top-level forms of a program. They are re-run for every sampled world.
    pub fn new(program: &[SExpr]) -> Result<Self, ChurchError> {
        let mut interp = Interpreter {
            interner: RefCell::new(Interner::default()),
            root: Environment::root(),
            definitions: Vec::new(),
            max_depth: DEFAULT_MAX_DEPTH,
        };
        for b in Builtin::ALL {
            let sym = interp.intern(b.name());
            interp.root.define(sym, Value::Builtin(*b));
        }
        interp.definitions = program.iter().map(|f| interp.compile(f)).collect::<Result<_, _>>()?;
        Ok(interp)
    }

    pub fn intern(&self, name: &str) -> Symbol {
        self.interner.borrow_mut().intern(name)
    }

    pub fn symbol_name(&self, sym: Symbol) -> String {
        self.interner.borrow().names[sym.0 as usize].clone()
    }

    /// Runs the definitions in a fresh global frame. `mem` caches start empty.
    pub fn sample_world(&self, rng: &mut WorldRng) -> Result<World, ChurchError> {
        let world = World {
            env: self.root.child(),
        };
        for def in &self.definitions {
            self.eval(def, &world.env, rng)?;
        }
        Ok(world)
    }

    /// Compiles and evaluates a single expression.
    pub fn eval_sexpr(
        &self,
        expr: &SExpr,
        env: &Environment,
        rng: &mut WorldRng,
    ) -> Result<Value, ChurchError> {
        let compiled = self.compile(expr)?;
        self.eval(&compiled, env, rng)
    }

    pub fn eval(&self, expr: &Expr, env: &Environment, rng: &mut WorldRng) -> Result<Value, ChurchError> {
        self.eval_at(expr, env, rng, 0)
    }

    pub fn to_datum(&self, value: &Value) -> Result<Datum, ChurchError> {
        Ok(match value {
            Value::Real(x) => Datum::Real(*x),
            Value::Truth(b) => Datum::Truth(*b),
            Value::Sym(s) => Datum::Sym(self.symbol_name(*s)),
            Value::List(items) => Datum::List(items.iter().map(|v| self.to_datum(v)).collect::<Result<_, _>>()?),
            other => {
                return Err(ChurchError::Type {
                    form: "query".into(),
                    message: format!("query produced a {}, expected data", other.type_name()),
                })
            }
        })
    }

    /// Printable rendering of any runtime value.
    pub fn show(&self, value: &Value) -> String {
        match value {
            Value::Procedure(_) | Value::Memoized(_) => "#<procedure>".into(),
            Value::Builtin(b) => format!("#<builtin {}>", b.name()),
            other => self.to_datum(other).map(|d| d.to_string()).unwrap_or_default(),
        }
    }

    pub fn compile(&self, e: &SExpr) -> Result<Expr, ChurchError> {
        match e {
            SExpr::Number(n) => Ok(Expr::Const(Value::Real(*n))),
            SExpr::Boolean(b) => Ok(Expr::Const(Value::Truth(*b))),
            SExpr::Quote(inner) => Ok(Expr::Const(self.quote(inner))),
            SExpr::Symbol(name) => {
                if RESERVED.contains(&name.as_str()) {
                    return Err(syntax(e, format!("`{name}` is a special form, not a value")));
                }
                Ok(Expr::Var(self.intern(name)))
            }
            SExpr::List(items) => {
                let Some((head, rest)) = items.split_first() else {
                    return Err(syntax(e, "empty application".into()));
                };
                match head.as_symbol() {
                    Some("quote") => match rest {
                        [inner] => Ok(Expr::Const(self.quote(inner))),
                        _ => Err(syntax(e, "quote takes one operand".into())),
                    },
                    Some("define") => self.compile_define(e, rest),
                    Some("lambda") => match rest {
                        [params, body @ ..] if !body.is_empty() => {
                            Ok(Expr::Lambda(Rc::new(self.compile_lambda(e, params, body)?)))
                        }
                        _ => Err(syntax(e, "lambda needs a parameter list and a body".into())),
                    },
                    Some("if") => match rest {
                        [c, t, f] => Ok(Expr::If(Box::new([self.compile(c)?, self.compile(t)?, self.compile(f)?]))),
                        _ => Err(syntax(e, "if takes a test and two branches".into())),
                    },
                    Some("cond") => self.compile_cond(e, rest),
                    Some("mem") => match rest {
                        [f] => Ok(Expr::Mem(Box::new(self.compile(f)?))),
                        _ => Err(syntax(e, "mem takes one procedure".into())),
                    },
                    Some("and") => Ok(Expr::And(self.compile_all(rest)?)),
                    Some("or") => Ok(Expr::Or(self.compile_all(rest)?)),
                    Some(kw @ ("condition" | "query" | "else")) => {
                        Err(syntax(e, format!("`{kw}` is only allowed at the top level of a query")))
                    }
                    _ => Ok(Expr::App(Box::new(Application {
                        func: self.compile(head)?,
                        args: self.compile_all(rest)?,
                        form: e.clone(),
                    }))),
                }
            }
        }
    }

    fn compile_all(&self, items: &[SExpr]) -> Result<Vec<Expr>, ChurchError> {
        items.iter().map(|i| self.compile(i)).collect()
    }

    fn compile_define(&self, form: &SExpr, rest: &[SExpr]) -> Result<Expr, ChurchError> {
        match rest {
            [SExpr::Symbol(name), value] => Ok(Expr::Define(self.binder(form, name)?, Box::new(self.compile(value)?))),
            // (define (f x ...) body ...)
            [SExpr::List(signature), body @ ..] if !body.is_empty() => {
                let Some((SExpr::Symbol(name), params)) = signature.split_first() else {
                    return Err(syntax(form, "malformed procedure signature".into()));
                };
                let spec = self.compile_lambda(form, &SExpr::List(params.to_vec()), body)?;
                Ok(Expr::Define(self.binder(form, name)?, Box::new(Expr::Lambda(Rc::new(spec)))))
            }
            _ => Err(syntax(form, "define takes a name and a value".into())),
        }
    }

    fn compile_lambda(&self, form: &SExpr, params: &SExpr, body: &[SExpr]) -> Result<LambdaSpec, ChurchError> {
        let Some(params) = params.as_list() else {
            return Err(syntax(form, "lambda parameters must be a list".into()));
        };
        let params = params
            .iter()
            .map(|p| match p {
                SExpr::Symbol(name) => self.binder(form, name),
                _ => Err(syntax(form, "lambda parameters must be identifiers".into())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LambdaSpec {
            params,
            body: self.compile_all(body)?.into(),
        })
    }

    fn compile_cond(&self, form: &SExpr, clauses: &[SExpr]) -> Result<Expr, ChurchError> {
        let mut compiled = Vec::with_capacity(clauses.len());
        for (i, clause) in clauses.iter().enumerate() {
            match clause.as_list() {
                Some([SExpr::Symbol(kw), body @ ..]) if kw == "else" && !body.is_empty() => {
                    if i + 1 != clauses.len() {
                        return Err(syntax(form, "else must be the last cond clause".into()));
                    }
                    compiled.push((None, self.compile_all(body)?));
                }
                Some([test, body @ ..]) if !body.is_empty() => {
                    compiled.push((Some(self.compile(test)?), self.compile_all(body)?));
                }
                _ => return Err(syntax(form, "cond clauses take a test and a body".into())),
            }
        }
        Ok(Expr::Cond(compiled))
    }

    fn binder(&self, form: &SExpr, name: &str) -> Result<Symbol, ChurchError> {
        if RESERVED.contains(&name) {
            return Err(syntax(form, format!("cannot bind special form name `{name}`")));
        }
        Ok(self.intern(name))
    }

    fn quote(&self, e: &SExpr) -> Value {
        match e {
            SExpr::Symbol(s) => Value::Sym(self.intern(s)),
            SExpr::Number(n) => Value::Real(*n),
            SExpr::Boolean(b) => Value::Truth(*b),
            SExpr::Quote(inner) => Value::list(vec![Value::Sym(self.intern("quote")), self.quote(inner)]),
            SExpr::List(items) => Value::list(items.iter().map(|i| self.quote(i)).collect()),
        }
    }

    fn eval_at(&self, expr: &Expr, env: &Environment, rng: &mut WorldRng, depth: usize) -> Result<Value, ChurchError> {
        match expr {
            Expr::Const(v) => Ok(v.clone()),
            Expr::Var(s) => env.lookup(*s).ok_or_else(|| ChurchError::Unbound { name: self.symbol_name(*s) }),
            Expr::If(parts) => {
                let [test, then, otherwise] = &**parts;
                if self.eval_at(test, env, rng, depth)?.is_true() {
                    self.eval_at(then, env, rng, depth)
                } else {
                    self.eval_at(otherwise, env, rng, depth)
                }
            }
            Expr::Cond(clauses) => {
                for (test, body) in clauses {
                    let taken = match test {
                        None => true,
                        Some(t) => self.eval_at(t, env, rng, depth)?.is_true(),
                    };
                    if taken {
                        return self.eval_body(body, env, rng, depth);
                    }
                }
                Err(ChurchError::Eval {
                    form: "cond".into(),
                    message: "no clause matched".into(),
                })
            }
            Expr::Lambda(spec) => Ok(Value::Procedure(Rc::new(Closure {
                params: spec.params.clone(),
                body: spec.body.clone(),
                env: env.clone(),
            }))),
            Expr::Define(name, value) => {
                let v = self.eval_at(value, env, rng, depth)?;
                env.define(*name, v);
                Ok(Value::Sym(*name))
            }
            Expr::And(items) => {
                let mut last = Value::Truth(true);
                for item in items {
                    last = self.eval_at(item, env, rng, depth)?;
                    if !last.is_true() {
                        break;
                    }
                }
                Ok(last)
            }
            Expr::Or(items) => {
                for item in items {
                    let v = self.eval_at(item, env, rng, depth)?;
                    if v.is_true() {
                        return Ok(v);
                    }
                }
                Ok(Value::Truth(false))
            }
            Expr::Mem(f) => match self.eval_at(f, env, rng, depth)? {
                f @ (Value::Procedure(_) | Value::Builtin(_) | Value::Memoized(_)) => {
                    Ok(Value::Memoized(Rc::new(Memoized::new(f))))
                }
                other => Err(ChurchError::Type {
                    form: "mem".into(),
                    message: format!("mem expects a procedure, got a {}", other.type_name()),
                }),
            },
            Expr::App(app) => {
                let f = self.eval_at(&app.func, env, rng, depth)?;
                let args = app
                    .args
                    .iter()
                    .map(|a| self.eval_at(a, env, rng, depth))
                    .collect::<Result<Vec<_>, _>>()?;
                self.apply(&f, args, &app.form, rng, depth + 1)
            }
        }
    }

    fn eval_body(&self, body: &[Expr], env: &Environment, rng: &mut WorldRng, depth: usize) -> Result<Value, ChurchError> {
        let (last, init) = body.split_last().expect("bodies are non-empty by construction");
        for e in init {
            self.eval_at(e, env, rng, depth)?;
        }
        self.eval_at(last, env, rng, depth)
    }

    fn apply(&self, f: &Value, args: Vec<Value>, form: &SExpr, rng: &mut WorldRng, depth: usize) -> Result<Value, ChurchError> {
        if depth > self.max_depth {
            return Err(ChurchError::Eval {
                form: form.to_string(),
                message: format!("recursion deeper than {}", self.max_depth),
            });
        }
        match f {
            Value::Builtin(b) => self.call_builtin(*b, args, form, rng, depth),
            Value::Procedure(closure) => {
                if closure.params.len() != args.len() {
                    return Err(ChurchError::Arity {
                        form: form.to_string(),
                        expected: closure.params.len().to_string(),
                        got: args.len(),
                    });
                }
                let frame = closure.env.child_with(closure.params.iter().copied().zip(args).collect());
                self.eval_body(&closure.body, &frame, rng, depth)
            }
            Value::Memoized(m) => {
                let key: Vec<MemoKey> = args.iter().map(MemoKey::of).collect();
                let hit = m.cache.borrow().get(&key).cloned();
                if let Some(v) = hit {
                    return Ok(v);
                }
                let v = self.apply(&m.inner, args, form, rng, depth)?;
                m.cache.borrow_mut().insert(key, v.clone());
                Ok(v)
            }
            other => Err(ChurchError::Type {
                form: form.to_string(),
                message: format!("cannot apply a {}", other.type_name()),
            }),
        }
    }

    fn call_builtin(
        &self,
        b: Builtin,
        args: Vec<Value>,
        form: &SExpr,
        rng: &mut WorldRng,
        depth: usize,
    ) -> Result<Value, ChurchError> {
        let arity = |expected: &str| ChurchError::Arity {
            form: form.to_string(),
            expected: expected.into(),
            got: args.len(),
        };
        let type_err = |message: String| ChurchError::Type {
            form: form.to_string(),
            message,
        };
        let real = |v: &Value| match v {
            Value::Real(x) => Ok(*x),
            other => Err(type_err(format!("`{}` expects numbers, got a {}", b.name(), other.type_name()))),
        };
        let list = |v: &Value| match v {
            Value::List(items) => Ok(items.clone()),
            other => Err(type_err(format!("`{}` expects a list, got a {}", b.name(), other.type_name()))),
        };

        match b {
            Builtin::Add => args.iter().map(real).sum::<Result<f64, _>>().map(Value::Real),
            Builtin::Mul => args.iter().map(real).product::<Result<f64, _>>().map(Value::Real),
            Builtin::Sub => match args.as_slice() {
                [] => Err(arity("at least 1")),
                [x] => Ok(Value::Real(-real(x)?)),
                [first, rest @ ..] => {
                    let mut acc = real(first)?;
                    for x in rest {
                        acc -= real(x)?;
                    }
                    Ok(Value::Real(acc))
                }
            },
            Builtin::Div => {
                let (mut acc, divisors) = match args.as_slice() {
                    [] => return Err(arity("at least 1")),
                    [x] => (1.0, std::slice::from_ref(x)),
                    [first, rest @ ..] => (real(first)?, rest),
                };
                for d in divisors {
                    let d = real(d)?;
                    if d == 0.0 {
                        return Err(ChurchError::Eval {
                            form: form.to_string(),
                            message: "division by zero".into(),
                        });
                    }
                    acc /= d;
                }
                Ok(Value::Real(acc))
            }
            Builtin::Gt | Builtin::Lt | Builtin::Ge | Builtin::Le | Builtin::NumEq => {
                if args.len() < 2 {
                    return Err(arity("at least 2"));
                }
                let xs = args.iter().map(real).collect::<Result<Vec<_>, _>>()?;
                let holds = xs.windows(2).all(|w| match b {
                    Builtin::Gt => w[0] > w[1],
                    Builtin::Lt => w[0] < w[1],
                    Builtin::Ge => w[0] >= w[1],
                    Builtin::Le => w[0] <= w[1],
                    _ => w[0] == w[1],
                });
                Ok(Value::Truth(holds))
            }
            Builtin::Equal => match args.as_slice() {
                [a, c] => Ok(Value::Truth(values_equal(a, c))),
                _ => Err(arity("2")),
            },
            Builtin::Not => match args.as_slice() {
                [x] => Ok(Value::Truth(!x.is_true())),
                _ => Err(arity("1")),
            },
            Builtin::List => Ok(Value::list(args)),
            Builtin::Length => match args.as_slice() {
                [l] => Ok(Value::Real(list(l)?.len() as f64)),
                _ => Err(arity("1")),
            },
            Builtin::Sum => match args.as_slice() {
                [l] => list(l)?.iter().map(real).sum::<Result<f64, _>>().map(Value::Real),
                _ => Err(arity("1")),
            },
            Builtin::Member => match args.as_slice() {
                [x, l] => Ok(Value::Truth(list(l)?.iter().any(|y| values_equal(x, y)))),
                _ => Err(arity("2")),
            },
            Builtin::Map => {
                let Some((f, lists)) = args.split_first().filter(|(_, l)| !l.is_empty()) else {
                    return Err(arity("at least 2"));
                };
                let lists = lists.iter().map(list).collect::<Result<Vec<_>, _>>()?;
                let n = lists[0].len();
                if lists.iter().any(|l| l.len() != n) {
                    return Err(type_err("map over lists of different lengths".into()));
                }
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    let row = lists.iter().map(|l| l[i].clone()).collect();
                    out.push(self.apply(f, row, form, rng, depth + 1)?);
                }
                Ok(Value::list(out))
            }
            Builtin::Flip => {
                let p = match args.as_slice() {
                    [] => 0.5,
                    [p] => real(p)?,
                    _ => return Err(arity("0 or 1")),
                };
                if !(0.0..=1.0).contains(&p) {
                    return Err(type_err(format!("flip probability {p} outside [0, 1]")));
                }
                Ok(Value::Truth(rng.random::<f64>() < p))
            }
            Builtin::Gaussian => match args.as_slice() {
                [mu, sd] => {
                    let (mu, sd) = (real(mu)?, real(sd)?);
                    if !(sd >= 0.0 && sd.is_finite()) {
                        return Err(type_err(format!("gaussian standard deviation {sd} is invalid")));
                    }
                    let z: f64 = rng.sample(StandardNormal);
                    Ok(Value::Real(mu + sd * z))
                }
                _ => Err(arity("2")),
            },
            Builtin::Uniform => match args.as_slice() {
                [lo, hi] => {
                    let (lo, hi) = (real(lo)?, real(hi)?);
                    if lo > hi {
                        return Err(type_err(format!("uniform bounds reversed: {lo} > {hi}")));
                    }
                    Ok(Value::Real(lo + (hi - lo) * rng.random::<f64>()))
                }
                _ => Err(arity("2")),
            },
        }
    }
}

fn syntax(form: &SExpr, message: String) -> ChurchError {
    ChurchError::Eval {
        form: form.to_string(),
        message,
    }
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Real(x), Value::Real(y)) => x == y,
        (Value::Truth(x), Value::Truth(y)) => x == y,
        (Value::Sym(x), Value::Sym(y)) => x == y,
        (Value::List(xs), Value::List(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| values_equal(x, y))
        }
        (Value::Builtin(x), Value::Builtin(y)) => x == y,
        (Value::Procedure(x), Value::Procedure(y)) => Rc::ptr_eq(x, y),
        (Value::Memoized(x), Value::Memoized(y)) => Rc::ptr_eq(x, y),
        _ => false,
    }
}
