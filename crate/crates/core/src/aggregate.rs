//! Aggregation over a batch of reasoning paths (ensemble average, Best-of-N,
//! majority vote) and the trial-level experiment loop.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::decode::{roll_batch, PathBatch, SamplerKind};
use crate::error::{Error, Result};
use crate::rng::derive;
use crate::task::{build_covariance, excess_risk, recovered, sample_task, CoefficientPrior, TaskConfig};

/// Reward used by Best-of-N.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardKind {
    /// R(w) = -||w - w*||_2^2 (oracle access to the truth).
    OracleL2 { w_star: DVector<f64> },
    /// R(w) = -||w||_1.
    SparsityL1,
}

impl RewardKind {
    fn reward(&self, w: &DVector<f64>) -> f64 {
        match self {
            RewardKind::OracleL2 { w_star } => -(w - w_star).norm_squared(),
            RewardKind::SparsityL1 => -w.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateMethod {
    Avg,
    Bon,
    Mv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub w_hat: DVector<f64>,
    pub method: AggregateMethod,
    /// Vote counts keyed by support (sorted index list); majority vote only.
    pub vote_counts: Option<BTreeMap<Vec<usize>, usize>>,
}

/// Elementwise mean of the final weights.
pub fn aggregate_avg(batch: &PathBatch) -> Result<DVector<f64>> {
    if batch.paths.is_empty() {
        return Err(Error::Usage("aggregate_avg on an empty batch".into()));
    }
    let d = batch.paths[0].final_weight().len();
    let mut acc = DVector::zeros(d);
    for p in &batch.paths {
        acc += p.final_weight();
    }
    Ok(acc / batch.paths.len() as f64)
}

/// Final weight with the highest reward; ties keep the lowest path index.
pub fn aggregate_bon(batch: &PathBatch, reward: &RewardKind) -> Result<DVector<f64>> {
    if batch.paths.is_empty() {
        return Err(Error::Usage("aggregate_bon on an empty batch".into()));
    }
    let mut best = 0usize;
    let mut best_reward = reward.reward(batch.paths[0].final_weight());
    for (i, p) in batch.paths.iter().enumerate().skip(1) {
        let r = reward.reward(p.final_weight());
        if r > best_reward {
            best = i;
            best_reward = r;
        }
    }
    Ok(batch.paths[best].final_weight().clone())
}

fn binary_support(w: &DVector<f64>) -> Result<Vec<usize>> {
    let mut support = Vec::new();
    for (i, &v) in w.iter().enumerate() {
        if v == 1.0 {
            support.push(i);
        } else if v != 0.0 {
            return Err(Error::Usage(format!(
                "majority vote needs exact 0/1 final weights, found {v} at coordinate {i}"
            )));
        }
    }
    Ok(support)
}

/// Most frequent final weight. Only defined for binary finals; ties go to
/// the earliest support in lexicographic order.
pub fn aggregate_mv(batch: &PathBatch) -> Result<AggregateResult> {
    if batch.paths.is_empty() {
        return Err(Error::Usage("aggregate_mv on an empty batch".into()));
    }
    let d = batch.paths[0].final_weight().len();
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for p in &batch.paths {
        *counts.entry(binary_support(p.final_weight())?).or_insert(0) += 1;
    }
    // BTreeMap iterates supports in lexicographic order; strict > keeps the
    // first (lex-smallest) among tied counts.
    let mut winner: Option<(&Vec<usize>, usize)> = None;
    for (support, &c) in &counts {
        if winner.map_or(true, |(_, best)| c > best) {
            winner = Some((support, c));
        }
    }
    let (support, _) = winner.expect("non-empty counts");
    let mut w_hat = DVector::zeros(d);
    for &i in support {
        w_hat[i] = 1.0;
    }
    Ok(AggregateResult {
        w_hat,
        method: AggregateMethod::Mv,
        vote_counts: Some(counts),
    })
}

/// Method selector for the trial loop. Best-of-N resolves its oracle reward
/// against each trial's own truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialMethod {
    Avg,
    BonOracle,
    BonSparsity,
    Mv,
}

impl TrialMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrialMethod::Avg => "avg",
            TrialMethod::BonOracle => "bon-oracle",
            TrialMethod::BonSparsity => "bon-sparsity",
            TrialMethod::Mv => "mv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub metric_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTable {
    pub rows: Vec<TrialRow>,
    pub metric_name: &'static str,
    pub mean: f64,
    pub stderr: f64,
}

/// Runs `trials` independent tasks: sample a dataset, roll a batch of
/// `n_paths` for `t` steps, aggregate with `method`, and score against the
/// truth (excess risk for Gaussian priors, exact-recovery accuracy for
/// binary priors). Deterministic in `master_seed`; trials execute in
/// parallel with per-trial derived seeds.
pub fn run_trials(
    config: &TaskConfig,
    sampler: &SamplerKind,
    t: usize,
    n_paths: usize,
    method: TrialMethod,
    trials: usize,
    master_seed: u64,
) -> Result<TrialTable> {
    config.validate()?;
    sampler.validate(config.d)?;
    if trials == 0 {
        return Err(Error::Usage("run_trials needs trials >= 1".into()));
    }
    if method == TrialMethod::Mv && !sampler.is_binary() {
        return Err(Error::Usage(
            "majority vote is only defined for binary samplers (discrete finals)".into(),
        ));
    }
    let lambda = build_covariance(&config.covariance)?;
    let metric_name = match config.coefficient_prior {
        CoefficientPrior::Gaussian { .. } => "excess_risk",
        CoefficientPrior::BinarySparse { .. } => "accuracy",
    };
    let rows: Result<Vec<TrialRow>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let trial_key = derive(master_seed, i as u64);
            let ds = sample_task(config, derive(trial_key, 1))?;
            let batch = roll_batch(&ds, sampler, t, n_paths, derive(trial_key, 2))?;
            let w_hat = match method {
                TrialMethod::Avg => aggregate_avg(&batch)?,
                TrialMethod::BonOracle => aggregate_bon(
                    &batch,
                    &RewardKind::OracleL2 {
                        w_star: ds.w_star.clone(),
                    },
                )?,
                TrialMethod::BonSparsity => aggregate_bon(&batch, &RewardKind::SparsityL1)?,
                TrialMethod::Mv => aggregate_mv(&batch)?.w_hat,
            };
            let metric_value = match config.coefficient_prior {
                CoefficientPrior::Gaussian { .. } => excess_risk(&w_hat, &ds.w_star, &lambda)?,
                CoefficientPrior::BinarySparse { .. } => {
                    if recovered(&w_hat, &ds.w_star) {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            Ok(TrialRow {
                trial: i,
                seed: trial_key,
                metric_value,
            })
        })
        .collect();
    let rows = rows?;
    let mean = rows.iter().map(|r| r.metric_value).sum::<f64>() / trials as f64;
    let stderr = if trials > 1 {
        let var = rows
            .iter()
            .map(|r| (r.metric_value - mean).powi(2))
            .sum::<f64>()
            / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(TrialTable {
        rows,
        metric_name,
        mean,
        stderr,
    })
}
