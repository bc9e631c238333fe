use std::collections::BTreeMap;

use rand::SeedableRng;
use serde::Serialize;

use super::eval::{Expr, Interpreter, World, WorldRng, GAUSSIAN_METHOD};
use super::sexpr::{parse_program, SExpr};
use super::value::{Datum, Value};
use super::ChurchError;
use crate::assets::Experiment;

/// Parameters of the strength prior a bundled model encodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthPrior {
    pub mean: f64,
    pub sd: f64,
    /// Per-league means; empty when strength does not depend on league.
    pub league_means: BTreeMap<String, f64>,
}

/// A parsed Church program used as the generative model of a world.
///
/// Top-level `(condition ...)` and `(query ...)` forms are hoisted out of the
/// definitions: conditions are checked after the definitions in every sampled world.
#[derive(Debug, Clone)]
pub struct WorldModel {
    pub source: String,
    pub definitions: Vec<SExpr>,
    pub conditions: Vec<SExpr>,
    pub query: Option<SExpr>,
    pub strength_prior: Option<StrengthPrior>,
}

impl WorldModel {
    pub fn from_source(source: impl Into<String>) -> Result<Self, ChurchError> {
        let source = source.into();
        let mut definitions = Vec::new();
        let mut conditions = Vec::new();
        let mut query = None;
        for form in parse_program(&source)? {
            if form.is_form("condition") {
                conditions.push(unwrap_form(&form, "condition")?);
            } else if form.is_form("query") {
                query = Some(unwrap_form(&form, "query")?);
            } else {
                definitions.push(form);
            }
        }
        // compile once so malformed programs fail here rather than in a worker
        Interpreter::new(&definitions)?;
        Ok(WorldModel {
            source,
            definitions,
            conditions,
            query,
            strength_prior: None,
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ChurchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ChurchError::Io(format!("{}: {e}", path.display())))?;
        Self::from_source(text)
    }

    /// The bundled tug-of-war model for an experiment.
    pub fn bundled(experiment: Experiment) -> Self {
        let mut model = Self::from_source(experiment.world_model()).expect("bundled model parses");
        model.strength_prior = Some(match experiment {
            Experiment::E1 => StrengthPrior {
                mean: 50.0,
                sd: 20.0,
                league_means: BTreeMap::new(),
            },
            Experiment::E2 => StrengthPrior {
                mean: 50.0,
                sd: 20.0,
                league_means: [("beginner", 30.0), ("intermediate", 50.0), ("professional", 70.0)]
                    .into_iter()
                    .map(|(k, v)| (k.to_owned(), v))
                    .collect(),
            },
        });
        model
    }

    /// Names bound by top-level `define` forms, in order.
    pub fn defined_names(&self) -> Vec<String> {
        self.definitions
            .iter()
            .filter(|d| d.is_form("define"))
            .filter_map(|d| match d.as_list()?.get(1)? {
                SExpr::Symbol(s) => Some(s.clone()),
                SExpr::List(sig) => sig.first()?.as_symbol().map(str::to_owned),
                _ => None,
            })
            .collect()
    }
}

/// `(condition X)` → `X`, `(query X)` → `X`; anything else is returned as is.
pub fn strip_wrapper(form: &SExpr) -> Result<SExpr, ChurchError> {
    for kw in ["condition", "query"] {
        if form.is_form(kw) {
            return unwrap_form(form, kw);
        }
    }
    Ok(form.clone())
}

fn unwrap_form(form: &SExpr, kw: &str) -> Result<SExpr, ChurchError> {
    match form.as_list() {
        Some([_, inner]) => Ok(inner.clone()),
        _ => Err(ChurchError::Eval {
            form: form.to_string(),
            message: format!("{kw} takes exactly one expression"),
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectionOptions {
    /// Total attempts across all workers before giving up.
    pub max_attempts: u64,
    /// Once `1 / min_acceptance_rate` attempts have run, a lower observed rate aborts.
    pub min_acceptance_rate: f64,
    /// Parallel workers. Worker `k` draws from ChaCha8 seeded with the master seed
    /// on stream `k`; accepted values are merged in worker order.
    pub workers: usize,
}

impl Default for RejectionOptions {
    fn default() -> Self {
        RejectionOptions {
            max_attempts: 10_000_000,
            min_acceptance_rate: 1e-6,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorSamples {
    pub values: Vec<Datum>,
    pub n_attempted: u64,
    pub n_accepted: usize,
    pub seed: u64,
    pub workers: usize,
    pub gaussian_method: &'static str,
}

impl PosteriorSamples {
    pub fn reals(&self) -> Option<Vec<f64>> {
        self.values.iter().map(Datum::as_real).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.n_accepted as f64 / self.n_attempted as f64
    }

    pub fn summary(&self) -> PosteriorSummary {
        let numeric = self.reals().filter(|v| !v.is_empty()).map(|xs| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = if xs.len() > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            let q = |p: f64| sorted[((p * (n - 1.0)).round() as usize).min(sorted.len() - 1)];
            NumericSummary {
                mean,
                sd: var.sqrt(),
                std_error: (var / n).sqrt(),
                min: sorted[0],
                q05: q(0.05),
                median: q(0.5),
                q95: q(0.95),
                max: sorted[sorted.len() - 1],
            }
        });
        let mut frequencies = BTreeMap::new();
        if numeric.is_none() {
            for v in &self.values {
                *frequencies.entry(v.to_string()).or_insert(0usize) += 1;
            }
        }
        PosteriorSummary {
            n_accepted: self.n_accepted,
            n_attempted: self.n_attempted,
            acceptance_rate: self.acceptance_rate(),
            seed: self.seed,
            workers: self.workers,
            gaussian_method: self.gaussian_method,
            numeric,
            frequencies,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericSummary {
    pub mean: f64,
    pub sd: f64,
    pub std_error: f64,
    pub min: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorSummary {
    pub n_accepted: usize,
    pub n_attempted: u64,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub workers: usize,
    pub gaussian_method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericSummary>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub frequencies: BTreeMap<String, usize>,
}

/// Compiled conditions and query over one interpreter. Not `Send`; build one per thread.
pub struct RejectionSampler {
    interp: Interpreter,
    conditions: Vec<(Expr, SExpr)>,
    query: Expr,
}

impl RejectionSampler {
    pub fn new(model: &WorldModel, conditions: &[SExpr], query: &SExpr) -> Result<Self, ChurchError> {
        let interp = Interpreter::new(&model.definitions)?;
        let conditions = model
            .conditions
            .iter()
            .cloned()
            .map(Ok)
            .chain(conditions.iter().map(strip_wrapper))
            .map(|c| {
                let c = c?;
                Ok((interp.compile(&c)?, c))
            })
            .collect::<Result<Vec<_>, ChurchError>>()?;
        let query = interp.compile(&strip_wrapper(query)?)?;
        Ok(RejectionSampler {
            interp,
            conditions,
            query,
        })
    }

    pub fn interpreter(&self) -> &Interpreter {
        &self.interp
    }

    /// Samples one fresh world; returns it with the query value when every condition holds.
    pub fn attempt(&self, rng: &mut WorldRng) -> Result<Option<(World, Value)>, ChurchError> {
        let world = self.interp.sample_world(rng)?;
        if !self.conditions_hold(&world, rng)? {
            return Ok(None);
        }
        let value = self.interp.eval(&self.query, world.env(), rng)?;
        Ok(Some((world, value)))
    }

    /// Evaluates all conditions in `world`. Memoized draws already made in the world are reused.
    pub fn conditions_hold(&self, world: &World, rng: &mut WorldRng) -> Result<bool, ChurchError> {
        for (cond, form) in &self.conditions {
            match self.interp.eval(cond, world.env(), rng)? {
                Value::Truth(true) => {}
                Value::Truth(false) => return Ok(false),
                other => {
                    return Err(ChurchError::Type {
                        form: form.to_string(),
                        message: format!("condition evaluated to a {}, expected a boolean", other.type_name()),
                    })
                }
            }
        }
        Ok(true)
    }
}

/// Seeds worker `stream` of a query run.
pub fn worker_rng(seed: u64, stream: u64) -> WorldRng {
    let mut rng = WorldRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rejection sampling with default attempt cap, acceptance floor and a single worker.
pub fn rejection_query(
    model: &WorldModel,
    conditions: &[SExpr],
    query: &SExpr,
    n_accepted: usize,
    seed: u64,
) -> Result<PosteriorSamples, ChurchError> {
    rejection_query_with(model, conditions, query, n_accepted, seed, &RejectionOptions::default())
}

pub fn rejection_query_with(
    model: &WorldModel,
    conditions: &[SExpr],
    query: &SExpr,
    n_accepted: usize,
    seed: u64,
    options: &RejectionOptions,
) -> Result<PosteriorSamples, ChurchError> {
    if n_accepted == 0 {
        return Err(ChurchError::Eval {
            form: "rejection-query".into(),
            message: "at least one accepted sample is required".into(),
        });
    }
    let workers = options.workers.clamp(1, n_accepted);
    let per_worker_cap = options.max_attempts.div_ceil(workers as u64);

    let run = |k: usize| -> Result<(Vec<Datum>, u64), ChurchError> {
        let target = n_accepted / workers + usize::from(k < n_accepted % workers);
        let sampler = RejectionSampler::new(model, conditions, query)?;
        let mut rng = worker_rng(seed, k as u64);
        sample_until(&sampler, &mut rng, target, per_worker_cap, options.min_acceptance_rate)
    };

    let results: Vec<Result<(Vec<Datum>, u64), ChurchError>> = if workers == 1 {
        vec![run(0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers).map(|k| scope.spawn(move || run(k))).collect();
            handles.into_iter().map(|h| h.join().expect("query worker panicked")).collect()
        })
    };

    let mut values = Vec::with_capacity(n_accepted);
    let mut n_attempted = 0;
    for r in results {
        let (v, attempts) = r?;
        values.extend(v);
        n_attempted += attempts;
    }
    Ok(PosteriorSamples {
        n_accepted: values.len(),
        values,
        n_attempted,
        seed,
        workers,
        gaussian_method: GAUSSIAN_METHOD,
    })
}

fn sample_until(
    sampler: &RejectionSampler,
    rng: &mut WorldRng,
    target: usize,
    cap: u64,
    floor: f64,
) -> Result<(Vec<Datum>, u64), ChurchError> {
    let floor_window = if floor > 0.0 { (1.0 / floor).ceil() as u64 } else { u64::MAX };
    let mut values = Vec::with_capacity(target);
    let mut attempts = 0u64;
    while values.len() < target {
        if attempts >= cap || (attempts >= floor_window && (values.len() as f64) < floor * attempts as f64) {
            return Err(ChurchError::TooRestrictive {
                attempts,
                accepted: values.len(),
            });
        }
        attempts += 1;
        if let Some((_world, v)) = sampler.attempt(rng)? {
            values.push(sampler.interpreter().to_datum(&v)?);
        }
    }
    Ok((values, attempts))
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchEstimate {
    pub win_probability: f64,
    pub n_accepted: usize,
    pub n_attempted: u64,
}

/// Probability that `team_a` beats `team_b` under the model and conditions,
/// via `(won-against '(a ...) '(b ...))`.
pub fn run_match_query(
    model: &WorldModel,
    conditions: &[SExpr],
    team_a: &[&str],
    team_b: &[&str],
    n_accepted: usize,
    seed: u64,
) -> Result<MatchEstimate, ChurchError> {
    let team = |names: &[&str]| -> Result<SExpr, ChurchError> {
        if names.is_empty() {
            return Err(ChurchError::Eval {
                form: "won-against".into(),
                message: "teams must have at least one player".into(),
            });
        }
        let items = names
            .iter()
            .map(|n| match super::sexpr::parse_one(n)? {
                s @ SExpr::Symbol(_) => Ok(s),
                other => Err(ChurchError::Type {
                    form: other.to_string(),
                    message: "player names must be symbols".into(),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SExpr::Quote(Box::new(SExpr::List(items))))
    };
    let query = SExpr::List(vec![SExpr::symbol("won-against"), team(team_a)?, team(team_b)?]);
    let samples = rejection_query(model, conditions, &query, n_accepted, seed)?;
    let wins = samples
        .values
        .iter()
        .map(|v| {
            v.as_truth().ok_or_else(|| ChurchError::Type {
                form: query.to_string(),
                message: format!("won-against returned `{v}`, expected a boolean"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|w| *w)
        .count();
    Ok(MatchEstimate {
        win_probability: wins as f64 / samples.n_accepted as f64,
        n_accepted: samples.n_accepted,
        n_attempted: samples.n_attempted,
    })
}
