use serde::{Deserialize, Serialize};

use super::CalibrateError;

/// Bound on `a = ln α` so that `exp(a)` stays finite and nonzero.
pub const LOG_ALPHA_BOUND: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    /// Starting temperature; the search runs over `ln α`.
    pub init_alpha: f64,
    /// Offset of the second simplex vertex, in `ln α` units.
    pub simplex_offset: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            init_alpha: 1.0,
            simplex_offset: 0.5,
            tolerance: 1e-6,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub alpha: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One-dimensional downhill simplex over `a` with `α = exp(a)`.
///
/// Coefficients: reflection 1, expansion 2, contraction 0.5, shrink 0.5.
/// Stops once both the value spread and the vertex spread of the simplex fall below `tolerance`.
pub fn nelder_mead_minimize<F>(mut objective: F, options: &NelderMeadOptions) -> Result<Minimum, CalibrateError>
where
    F: FnMut(f64) -> f64,
{
    if !(options.init_alpha > 0.0 && options.init_alpha.is_finite()) {
        return Err(CalibrateError::Invalid(format!(
            "initial alpha must be positive, got {}",
            options.init_alpha
        )));
    }
    if !(options.tolerance > 0.0) {
        return Err(CalibrateError::Invalid("tolerance must be positive".into()));
    }
    let mut eval = |a: f64| -> Result<(f64, f64), CalibrateError> {
        let a = a.clamp(-LOG_ALPHA_BOUND, LOG_ALPHA_BOUND);
        let alpha = a.exp();
        let v = objective(alpha);
        if v.is_nan() {
            return Err(CalibrateError::ObjectiveNan { alpha });
        }
        Ok((a, v))
    };

    let a0 = options.init_alpha.ln();
    let mut best = eval(a0)?;
    let mut worst = eval(a0 + options.simplex_offset)?;
    let mut iterations = 0;
    loop {
        if worst.1 < best.1 {
            std::mem::swap(&mut best, &mut worst);
        }
        if (worst.1 - best.1).abs() < options.tolerance && (worst.0 - best.0).abs() < options.tolerance {
            return Ok(finish(best, iterations, true));
        }
        if iterations >= options.max_iter {
            return Ok(finish(best, iterations, false));
        }
        iterations += 1;

        // the centroid of every vertex but the worst is the best vertex itself
        let c = best.0;
        let r = eval(c + (c - worst.0))?;
        if r.1 < best.1 {
            let e = eval(c + 2.0 * (r.0 - c))?;
            worst = if e.1 < r.1 { e } else { r };
            continue;
        }
        let contracted = if r.1 < worst.1 {
            let oc = eval(c + 0.5 * (r.0 - c))?;
            (oc.1 <= r.1).then_some(oc)
        } else {
            let ic = eval(c + 0.5 * (worst.0 - c))?;
            (ic.1 < worst.1).then_some(ic)
        };
        worst = match contracted {
            Some(v) => v,
            None => eval(best.0 + 0.5 * (worst.0 - best.0))?,
        };
    }
}

fn finish(best: (f64, f64), iterations: usize, converged: bool) -> Minimum {
    Minimum {
        alpha: best.0.exp(),
        value: best.1,
        iterations,
        converged,
    }
}
