use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{jsd_slices, StatsError};
use crate::calibrate::Distribution;

/// A null JSD counts as "less than observed" only when below it by more than this.
/// Keeps permutations that merely reorder the same bin pairs from counting through summation-order rounding.
pub const TIE_TOLERANCE: f64 = 1e-12;

const CHUNK: usize = 1024;
const MAX_EXACT_BINS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PermutationMode {
    /// Both vectors get independent random relabelings each iteration.
    #[default]
    #[value(name = "both_shuffled")]
    BothShuffled,
    /// Only the model vector is relabeled.
    #[value(name = "model_only")]
    ModelOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PValueEstimator {
    /// `#{null < observed} / N`
    #[default]
    #[value(name = "strict")]
    Strict,
    /// `(#{null < observed} + 1) / (N + 1)`
    #[value(name = "add_one")]
    AddOne,
}

impl PValueEstimator {
    pub fn p(self, below: u64, total: u64) -> f64 {
        match self {
            PValueEstimator::Strict => below as f64 / total as f64,
            PValueEstimator::AddOne => (below + 1) as f64 / (total + 1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationOptions {
    pub n_iter: usize,
    pub seed: u64,
    pub mode: PermutationMode,
    pub estimator: PValueEstimator,
}

impl Default for PermutationOptions {
    fn default() -> Self {
        PermutationOptions {
            n_iter: 10_000,
            seed: 0,
            mode: PermutationMode::default(),
            estimator: PValueEstimator::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationOutcome {
    pub observed: f64,
    pub p_raw: f64,
    /// Null samples strictly below the observed distance.
    pub n_below: u64,
    pub n_iter: u64,
}

fn is_below(null: f64, observed: f64) -> bool {
    null < observed - TIE_TOLERANCE
}

/// Monte Carlo permutation test of `JSD(human, model)` against bin relabelings.
///
/// Iterations are split into fixed-size chunks, each with its own ChaCha stream of `seed`,
/// so the result does not depend on the number of threads.
pub fn permutation_test(
    human: &Distribution,
    model: &Distribution,
    options: &PermutationOptions,
) -> Result<PermutationOutcome, StatsError> {
    if options.n_iter < 1 {
        return Err(StatsError::NoIterations);
    }
    if !human.same_grid(model) {
        return Err(StatsError::GridMismatch);
    }
    let observed = jsd_slices(human.probs(), model.probs());
    let n_chunks = options.n_iter.div_ceil(CHUNK);
    let n_below: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(chunk as u64);
            let mut h = human.probs().to_vec();
            let mut m = model.probs().to_vec();
            let len = CHUNK.min(options.n_iter - chunk * CHUNK);
            let mut below = 0u64;
            for _ in 0..len {
                if options.mode == PermutationMode::BothShuffled {
                    h.shuffle(&mut rng);
                }
                m.shuffle(&mut rng);
                if is_below(jsd_slices(&h, &m), observed) {
                    below += 1;
                }
            }
            below
        })
        .sum();
    let n_iter = options.n_iter as u64;
    Ok(PermutationOutcome {
        observed,
        p_raw: options.estimator.p(n_below, n_iter),
        n_below,
        n_iter,
    })
}

/// Permutation p-value over every relabeling (pair), for grids of at most seven bins.
pub fn exact_permutation_p(
    human: &Distribution,
    model: &Distribution,
    mode: PermutationMode,
    estimator: PValueEstimator,
) -> Result<PermutationOutcome, StatsError> {
    if !human.same_grid(model) {
        return Err(StatsError::GridMismatch);
    }
    let n = human.len();
    if n > MAX_EXACT_BINS {
        return Err(StatsError::TooManyBins {
            max: MAX_EXACT_BINS,
            got: n,
        });
    }
    let observed = jsd_slices(human.probs(), model.probs());
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let apply = |d: &Distribution, p: &[usize]| -> Vec<f64> { p.iter().map(|&j| d.probs()[j]).collect() };
    let model_perms: Vec<Vec<f64>> = perms.iter().map(|p| apply(model, p)).collect();
    let humans: Vec<Vec<f64>> = match mode {
        PermutationMode::BothShuffled => perms.iter().map(|p| apply(human, p)).collect(),
        PermutationMode::ModelOnly => vec![human.probs().to_vec()],
    };
    let mut below = 0u64;
    for h in &humans {
        for m in &model_perms {
            if is_below(jsd_slices(h, m), observed) {
                below += 1;
            }
        }
    }
    let total = (humans.len() * model_perms.len()) as u64;
    Ok(PermutationOutcome {
        observed,
        p_raw: estimator.p(below, total),
        n_below: below,
        n_iter: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(probs: &[f64]) -> Distribution {
        Distribution::new((0..probs.len()).map(|i| 10.0 * i as f64).collect(), probs.to_vec()).unwrap()
    }

    #[test]
    fn identical_inputs_give_zero_under_strict() {
        let p = d(&[0.1, 0.2, 0.3, 0.4]);
        let out = permutation_test(&p, &p, &PermutationOptions::default()).unwrap();
        assert_eq!(out.observed, 0.0);
        assert_eq!(out.p_raw, 0.0);
        let add_one = PermutationOptions {
            estimator: PValueEstimator::AddOne,
            ..Default::default()
        };
        assert_eq!(permutation_test(&p, &p, &add_one).unwrap().p_raw, 1.0 / 10_001.0);
    }

    #[test]
    fn three_bin_disjoint_enumeration() {
        let out = exact_permutation_p(
            &d(&[1.0, 0.0, 0.0]),
            &d(&[0.0, 0.0, 1.0]),
            PermutationMode::BothShuffled,
            PValueEstimator::Strict,
        )
        .unwrap();
        assert_eq!(out.n_iter, 36);
        assert_eq!(out.n_below, 12);
        let only = exact_permutation_p(
            &d(&[1.0, 0.0, 0.0]),
            &d(&[0.0, 0.0, 1.0]),
            PermutationMode::ModelOnly,
            PValueEstimator::Strict,
        )
        .unwrap();
        assert_eq!((only.n_below, only.n_iter), (2, 6));
    }

    #[test]
    fn seeded_runs_repeat() {
        let (h, m) = (d(&[0.5, 0.3, 0.1, 0.1, 0.0]), d(&[0.0, 0.1, 0.2, 0.3, 0.4]));
        let opts = PermutationOptions {
            seed: 99,
            ..Default::default()
        };
        let a = permutation_test(&h, &m, &opts).unwrap();
        let b = permutation_test(&h, &m, &opts).unwrap();
        assert_eq!(a.p_raw.to_bits(), b.p_raw.to_bits());
        let c = permutation_test(&h, &m, &PermutationOptions { seed: 100, ..opts }).unwrap();
        assert_ne!(a.n_below, c.n_below);
    }

    #[test]
    fn errors() {
        let p = d(&[0.5, 0.5]);
        let zero = PermutationOptions {
            n_iter: 0,
            ..Default::default()
        };
        assert!(matches!(permutation_test(&p, &p, &zero), Err(StatsError::NoIterations)));
        let q = Distribution::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            permutation_test(&p, &q, &PermutationOptions::default()),
            Err(StatsError::GridMismatch)
        ));
        let big = Distribution::uniform((0..8).map(f64::from).collect()).unwrap();
        assert!(exact_permutation_p(&big, &big, PermutationMode::ModelOnly, PValueEstimator::Strict).is_err());
    }
}
