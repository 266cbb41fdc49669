//! Stochastic next-token samplers and the auto-regressive path roller.
//!
//! A reasoning path is w_0 = 0 followed by t sampled steps: each step feeds
//! the current weight through one transformer GD step and perturbs the
//! result with the sampler's noise law (or discretizes it, for the binary
//! task). Per-step noise streams are keyed by (path seed, step index) so a
//! path of length t is a bit-exact prefix of the same path rolled longer.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive, rng_from};
use crate::task::InContextDataset;
use crate::transformer::{
    build_gd_params, extract_coefficient, forward, gd_step, PromptEmbedding,
};

/// Which decoder governs the next weight given the GD proposal w~.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerKind {
    /// delta distribution: w = w~.
    Deterministic,
    /// w = w~ + xi, xi ~ N(0, sigma^2 I).
    ConstantNoise { sigma: f64 },
    /// w = (I - xi xi^T) w~, xi ~ N(0, sigma^2 I); E[w] = (1 - sigma^2) w~.
    LinearNoise { sigma: f64 },
    /// Indicator of k indices sampled without replacement from ClipNorm(w~).
    BinarySample { k: usize },
    /// Indicator of the k highest ClipNorm probabilities (ties -> lowest index).
    BinaryGreedy { k: usize },
}

impl SamplerKind {
    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            SamplerKind::Deterministic => Ok(()),
            SamplerKind::ConstantNoise { sigma } | SamplerKind::LinearNoise { sigma } => {
                if sigma < 0.0 || !sigma.is_finite() {
                    Err(Error::Config(format!(
                        "sampler noise sd must be >= 0, got {sigma}"
                    )))
                } else {
                    Ok(())
                }
            }
            SamplerKind::BinarySample { k } | SamplerKind::BinaryGreedy { k } => {
                if k == 0 || k >= d {
                    Err(Error::Config(format!(
                        "binary sampler needs 1 <= k < d, got k={k}, d={d}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(
            self,
            SamplerKind::BinarySample { .. } | SamplerKind::BinaryGreedy { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReasoningPath {
    /// w_0..w_t (length t+1, w_0 = 0).
    pub weights: Vec<DVector<f64>>,
    pub sampler: SamplerKind,
    pub seed: u64,
}

impl ReasoningPath {
    pub fn final_weight(&self) -> &DVector<f64> {
        self.weights.last().expect("path always holds w_0")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub paths: Vec<ReasoningPath>,
    pub master_seed: u64,
}

/// Clip to nonnegative, normalize to sum 1. All-nonpositive input falls back
/// to the uniform distribution (the normalization is undefined there and
/// uniform keeps the sampling law total).
pub fn clip_norm(w_tilde: &DVector<f64>) -> DVector<f64> {
    let d = w_tilde.len();
    let mut p = DVector::from_fn(d, |i, _| w_tilde[i].max(0.0));
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p /= s;
    } else {
        p.fill(1.0 / d as f64);
    }
    p
}

/// Sequential without-replacement draws: e_1 ~ p, e_2 ~ p renormalized over
/// the remainder, and so on. When the remaining positive mass is exhausted,
/// later picks are uniform over the remaining (zero-mass) indices. Returns
/// the chosen indices sorted ascending.
pub fn sample_k_without_replacement(
    p: &DVector<f64>,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let d = p.len();
    if k == 0 || k > d {
        return Err(Error::Config(format!(
            "sample_k_without_replacement needs 1 <= k <= d, got k={k}, d={d}"
        )));
    }
    let mut rng = rng_from(seed);
    let mut remaining: Vec<usize> = (0..d).collect();
    let mass: Vec<f64> = p.iter().copied().collect();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = remaining.iter().map(|&i| mass[i]).sum();
        let pos = if total > 0.0 {
            let u = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = remaining.len() - 1;
            for (j, &i) in remaining.iter().enumerate() {
                acc += mass[i];
                if u < acc {
                    pick = j;
                    break;
                }
            }
            pick
        } else {
            rng.gen_range(0..remaining.len())
        };
        chosen.push(remaining.remove(pos));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Indices of the k largest ClipNorm probabilities, ties to the smallest
/// index. Returned sorted ascending.
pub fn greedy_top_k(w_tilde: &DVector<f64>, k: usize) -> Result<Vec<usize>> {
    let d = w_tilde.len();
    if k == 0 || k > d {
        return Err(Error::Config(format!(
            "greedy_top_k needs 1 <= k <= d, got k={k}, d={d}"
        )));
    }
    let p = clip_norm(w_tilde);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        p[b].partial_cmp(&p[a])
            .expect("probabilities are finite")
            .then(a.cmp(&b))
    });
    let mut chosen: Vec<usize> = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

fn indicator(d: usize, support: &[usize]) -> DVector<f64> {
    let mut w = DVector::zeros(d);
    for &i in support {
        w[i] = 1.0;
    }
    w
}

/// One decoding step: perturb (or discretize) the GD proposal w~ using the
/// stream `key`.
pub fn sample_step(sampler: &SamplerKind, w_tilde: &DVector<f64>, key: u64) -> Result<DVector<f64>> {
    let d = w_tilde.len();
    sampler.validate(d)?;
    Ok(match *sampler {
        SamplerKind::Deterministic => w_tilde.clone(),
        SamplerKind::ConstantNoise { sigma } => {
            let mut rng = rng_from(key);
            let xi = DVector::from_fn(d, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
            w_tilde + xi
        }
        SamplerKind::LinearNoise { sigma } => {
            let mut rng = rng_from(key);
            let xi = DVector::from_fn(d, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
            let proj = xi.dot(w_tilde);
            w_tilde - xi * proj
        }
        SamplerKind::BinarySample { k } => {
            let p = clip_norm(w_tilde);
            indicator(d, &sample_k_without_replacement(&p, k, key)?)
        }
        SamplerKind::BinaryGreedy { k } => indicator(d, &greedy_top_k(w_tilde, k)?),
    })
}

/// How roll_path computes the GD proposal each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RollMode {
    /// Direct w - (eta/n) X^T (X w - y).
    Fast,
    /// Literal prompt loop: append the sampled weight token, run the full
    /// attention forward, read the last column. Validation only.
    FullMatrix,
}

/// Rolls one reasoning path of t steps. Step ell draws from stream
/// derive(seed, ell), so the two modes (and any prefix) replay identically.
pub fn roll_path(
    ds: &InContextDataset,
    sampler: &SamplerKind,
    t: usize,
    seed: u64,
    mode: RollMode,
) -> Result<ReasoningPath> {
    let d = ds.config.d;
    let eta = ds.config.step_size;
    sampler.validate(d)?;
    let mut weights = Vec::with_capacity(t + 1);
    let mut w = DVector::zeros(d);
    weights.push(w.clone());
    match mode {
        RollMode::Fast => {
            for ell in 0..t {
                let proposal = gd_step(&ds.x, &ds.y, &w, eta)?;
                w = sample_step(sampler, &proposal, derive(seed, ell as u64))?;
                weights.push(w.clone());
            }
        }
        RollMode::FullMatrix => {
            let params = build_gd_params(d, eta, ds.config.n)?;
            let mut prompt = PromptEmbedding::from_dataset(ds, &w)?;
            for ell in 0..t {
                let out = forward(&params, &prompt)?;
                let col = DVector::from_column_slice(out.column(out.ncols() - 1).as_slice());
                let proposal = extract_coefficient(&col)?;
                w = sample_step(sampler, &proposal, derive(seed, ell as u64))?;
                prompt.push_weight(&w)?;
                weights.push(w.clone());
            }
        }
    }
    Ok(ReasoningPath {
        weights,
        sampler: *sampler,
        seed,
    })
}

/// N independent paths; path i uses derive(master_seed, i). Paths run in
/// parallel but the output is identical to the serial order.
pub fn roll_batch(
    ds: &InContextDataset,
    sampler: &SamplerKind,
    t: usize,
    n_paths: usize,
    master_seed: u64,
) -> Result<PathBatch> {
    if n_paths == 0 {
        return Err(Error::Usage("roll_batch needs at least one path".into()));
    }
    let seeds: Vec<u64> = (0..n_paths as u64).map(|i| derive(master_seed, i)).collect();
    let paths: Result<Vec<ReasoningPath>> = seeds
        .par_iter()
        .map(|&s| roll_path(ds, sampler, t, s, RollMode::Fast))
        .collect();
    Ok(PathBatch {
        paths: paths?,
        master_seed,
    })
}

/// Deterministic expectation of the linear-noise path:
/// w_t = sum_{k=0}^{t-1} (1-sigma^2)^{k+1} (I - eta Sigma_hat)^k (eta/n) X^T y.
/// sigma = 0 reduces to the plain GD iterate.
pub fn expected_path_linear_nft(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eta: f64,
    sigma: f64,
    t: usize,
) -> Result<DVector<f64>> {
    let (n, d) = x.shape();
    if y.len() != n {
        return Err(Error::Dimension {
            what: "expected_path labels",
            expected: n,
            got: y.len(),
        });
    }
    let shrink = 1.0 - sigma * sigma;
    let b = x.transpose() * y * (eta / n as f64);
    let mut acc = DVector::zeros(d);
    let mut cur = b;
    let mut pow = shrink;
    for _ in 0..t {
        acc += &cur * pow;
        // cur <- (I - eta Sigma_hat) cur, applied via X to avoid forming Sigma_hat.
        let xc = x * &cur;
        cur -= x.transpose() * xc * (eta / n as f64);
        pow *= shrink;
    }
    Ok(acc)
}
