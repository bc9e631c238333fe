use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{nelder_mead_minimize, NelderMeadOptions};
use super::{softmax_values, CalibrateError, Distribution};
use crate::scorer::ScoreVector;
use crate::stats::jsd_slices;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    pub stimulus_id: String,
    pub alpha: f64,
    /// Summed JSD over the held-in stimuli at `alpha`.
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `Σ_j JSD(human_j, softmax(scores_j, α))` over the given stimuli.
pub fn loocv_objective(members: &[(&ScoreVector, &Distribution)], alpha: f64) -> f64 {
    members
        .iter()
        .map(|(s, h)| match softmax_values(&s.logprobs, alpha) {
            Ok(p) => jsd_slices(h.probs(), &p),
            Err(_) => f64::NAN,
        })
        .sum()
}

/// Fits one temperature per stimulus on the other members of its pool.
///
/// `pools` maps every stimulus id to a pool label (its experiment, or its panel).
/// The held-out stimulus never enters its own objective.
pub fn fit_alpha_loocv(
    scores: &BTreeMap<String, ScoreVector>,
    human: &BTreeMap<String, Distribution>,
    pools: &BTreeMap<String, String>,
    options: &NelderMeadOptions,
) -> Result<BTreeMap<String, TemperatureFit>, CalibrateError> {
    if !scores.keys().eq(human.keys()) {
        return Err(CalibrateError::Mismatch("score and human stimulus sets differ".into()));
    }
    for (id, s) in scores {
        let h = &human[id];
        if s.thetas.as_slice() != h.thetas() {
            return Err(CalibrateError::Mismatch(format!("θ grids differ for stimulus `{id}`")));
        }
        if s.logprobs.len() != s.thetas.len() {
            return Err(CalibrateError::Mismatch(format!("score vector `{id}` is ragged")));
        }
        if let Some((index, &value)) = s.logprobs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(CalibrateError::NonFiniteScore { index, value });
        }
    }
    let pool_of = |id: &str| {
        pools
            .get(id)
            .ok_or_else(|| CalibrateError::Mismatch(format!("stimulus `{id}` has no pool")))
    };

    let jobs: Vec<(&String, Vec<(&ScoreVector, &Distribution)>)> = scores
        .keys()
        .map(|id| {
            let pool = pool_of(id)?;
            let mut members = Vec::new();
            for other in scores.keys().filter(|o| *o != id) {
                if pool_of(other)? == pool {
                    members.push((&scores[other], &human[other]));
                }
            }
            if members.is_empty() {
                return Err(CalibrateError::LoocvUndefined {
                    stimulus: id.clone(),
                    pool: pool.clone(),
                });
            }
            Ok((id, members))
        })
        .collect::<Result<_, _>>()?;

    jobs.par_iter()
        .map(|(id, members)| {
            let m = nelder_mead_minimize(|alpha| loocv_objective(members, alpha), options)?;
            Ok((
                (*id).clone(),
                TemperatureFit {
                    stimulus_id: (*id).clone(),
                    alpha: m.alpha,
                    loss: m.value,
                    iterations: m.iterations,
                    converged: m.converged,
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: [f64; 11] = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];

    fn sv(id: &str, logprobs: Vec<f64>) -> ScoreVector {
        ScoreVector {
            stimulus_id: id.into(),
            thetas: GRID.to_vec(),
            logprobs,
            backend_id: "test".into(),
            prompt_hash: String::new(),
        }
    }

    fn bump(target: f64, width: f64) -> Vec<f64> {
        GRID.iter().map(|t| -(t - target).powi(2) / (2.0 * width * width)).collect()
    }

    fn tempered(target: f64, width: f64, alpha: f64) -> Distribution {
        Distribution::new(GRID.to_vec(), softmax_values(&bump(target, width), alpha).unwrap()).unwrap()
    }

    fn one_pool(ids: &[&str]) -> BTreeMap<String, String> {
        ids.iter().map(|i| (i.to_string(), "E1".to_string())).collect()
    }

    #[test]
    fn degenerate_objective() {
        let ids = ["a", "b", "c"];
        let scores = ids.iter().map(|i| (i.to_string(), sv(i, vec![-1.0; 11]))).collect();
        let human = ids
            .iter()
            .map(|i| (i.to_string(), Distribution::uniform(GRID.to_vec()).unwrap()))
            .collect();
        let fits = fit_alpha_loocv(&scores, &human, &one_pool(&ids), &NelderMeadOptions::default()).unwrap();
        for f in fits.values() {
            assert!(f.alpha.is_finite() && f.alpha > 0.0);
            assert!(f.loss.abs() < 1e-12);
        }
    }

    #[test]
    fn two_stimuli_fit_each_other() {
        // human_j is exactly the model at α_j, so the fit for i recovers α of the other one
        let scores: BTreeMap<_, _> = [("a", 70.0), ("b", 30.0)]
            .iter()
            .map(|(i, t)| (i.to_string(), sv(i, bump(*t, 15.0))))
            .collect();
        let human: BTreeMap<_, _> = [("a", 70.0, 0.5), ("b", 30.0, 3.0)]
            .iter()
            .map(|(i, t, a)| (i.to_string(), tempered(*t, 15.0, *a)))
            .collect();
        let fits = fit_alpha_loocv(&scores, &human, &one_pool(&["a", "b"]), &NelderMeadOptions::default()).unwrap();
        assert!((fits["a"].alpha - 3.0).abs() < 1e-3, "{:?}", fits["a"]);
        assert!((fits["b"].alpha - 0.5).abs() < 1e-3, "{:?}", fits["b"]);
    }

    #[test]
    fn singleton_pool_is_an_error() {
        let scores: BTreeMap<_, _> = [("a".to_string(), sv("a", bump(50.0, 15.0)))].into();
        let human: BTreeMap<_, _> = [("a".to_string(), tempered(50.0, 15.0, 1.0))].into();
        let err = fit_alpha_loocv(&scores, &human, &one_pool(&["a"]), &NelderMeadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("LOOCV undefined"));
    }

    #[test]
    fn panels_are_separate_pools() {
        let ids = ["a", "b", "c", "d"];
        let scores: BTreeMap<_, _> = ids
            .iter()
            .zip([20.0, 40.0, 60.0, 80.0])
            .map(|(i, t)| (i.to_string(), sv(i, bump(t, 15.0))))
            .collect();
        let human: BTreeMap<_, _> = ids
            .iter()
            .zip([(20.0, 0.4), (40.0, 0.4), (60.0, 4.0), (80.0, 4.0)])
            .map(|(i, (t, a))| (i.to_string(), tempered(t, 15.0, a)))
            .collect();
        let pools: BTreeMap<_, _> = [("a", "A"), ("b", "A"), ("c", "B"), ("d", "B")]
            .iter()
            .map(|(i, p)| (i.to_string(), p.to_string()))
            .collect();
        let fits = fit_alpha_loocv(&scores, &human, &pools, &NelderMeadOptions::default()).unwrap();
        assert!((fits["a"].alpha - 0.4).abs() < 1e-3);
        assert!((fits["d"].alpha - 4.0).abs() < 1e-3);
    }

    #[test]
    fn mismatched_inputs() {
        let scores: BTreeMap<_, _> = [("a".to_string(), sv("a", bump(50.0, 15.0)))].into();
        let human: BTreeMap<_, _> = [("b".to_string(), tempered(50.0, 15.0, 1.0))].into();
        assert!(matches!(
            fit_alpha_loocv(&scores, &human, &one_pool(&["a", "b"]), &NelderMeadOptions::default()),
            Err(CalibrateError::Mismatch(_))
        ));
    }
}
