//! Exact Markov-chain analysis of the binary sampler: state enumeration,
//! closed-form transition rows, marginal evolution, stationary distributions,
//! and the greedy decoder's trajectory.

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix, DVector};

use crate::decode::{clip_norm, greedy_top_k};
use crate::error::{Error, Result};
use crate::task::{CoefficientPrior, InContextDataset};
use crate::transformer::gd_step;

const MAX_STATES: usize = 100_000;
const MAX_SPARSITY_EXACT: usize = 3;

/// All k-sparse binary weights in d coordinates, ordered lexicographically
/// by support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    pub d: usize,
    pub k: usize,
    pub supports: Vec<Vec<usize>>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    /// Index of a support set, if present. Supports are stored sorted, so a
    /// binary search over the lexicographic order suffices.
    pub fn index_of(&self, support: &[usize]) -> Option<usize> {
        self.supports
            .binary_search_by(|s| s.as_slice().cmp(support))
            .ok()
    }

    pub fn state_vector(&self, index: usize) -> DVector<f64> {
        let mut w = DVector::zeros(self.d);
        for &i in &self.supports[index] {
            w[i] = 1.0;
        }
        w
    }

    /// Index of an exact 0/1 vector with k ones; None otherwise.
    pub fn index_of_vector(&self, w: &DVector<f64>) -> Option<usize> {
        if w.len() != self.d {
            return None;
        }
        let mut support = Vec::with_capacity(self.k);
        for (i, &v) in w.iter().enumerate() {
            if v == 1.0 {
                support.push(i);
            } else if v != 0.0 {
                return None;
            }
        }
        if support.len() != self.k {
            return None;
        }
        self.index_of(&support)
    }
}

fn binomial(d: usize, k: usize) -> u128 {
    let k = k.min(d - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (d - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn enumerate_states(d: usize, k: usize) -> Result<StateSpace> {
    if d < 2 || d > 20 {
        return Err(Error::Config(format!("state space needs 2 <= d <= 20, got d = {d}")));
    }
    if k == 0 || k >= d {
        return Err(Error::Config(format!("state space needs 1 <= k < d, got k = {k}")));
    }
    let count = binomial(d, k);
    if count > MAX_STATES as u128 {
        return Err(Error::Capacity(format!(
            "state space has C({d},{k}) = {count} states, cap is {MAX_STATES}"
        )));
    }
    let mut supports = Vec::with_capacity(count as usize);
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        supports.push(cur.clone());
        // Advance to the next combination in lexicographic order.
        let mut i = k;
        while i > 0 {
            i -= 1;
            if cur[i] < d - (k - i) {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return Ok(StateSpace { d, k, supports });
            }
        }
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    match items.len() {
        0 => vec![vec![]],
        1 => vec![items.to_vec()],
        _ => {
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.to_vec();
                let head = rest.remove(i);
                for mut tail in permutations(&rest) {
                    tail.insert(0, head);
                    out.push(tail);
                }
            }
            out
        }
    }
}

/// Probability of drawing `order` sequentially without replacement from the
/// distribution `p`, including the uniform fallback once positive mass runs
/// out. Mirrors the sampler exactly.
fn ordered_draw_probability(p: &DVector<f64>, order: &[usize]) -> f64 {
    let mut drawn = vec![false; p.len()];
    let mut prob = 1.0;
    for &e in order {
        let mut mass = 0.0;
        let mut remaining = 0usize;
        for (a, &pa) in p.iter().enumerate() {
            if !drawn[a] {
                mass += pa;
                remaining += 1;
            }
        }
        if mass > 0.0 {
            prob *= p[e] / mass;
        } else {
            prob *= 1.0 / remaining as f64;
        }
        drawn[e] = true;
    }
    prob
}

fn row_from_probabilities(p: &DVector<f64>, space: &StateSpace) -> DVector<f64> {
    DVector::from_fn(space.len(), |j, _| {
        permutations(&space.supports[j])
            .iter()
            .map(|perm| ordered_draw_probability(p, perm))
            .sum()
    })
}

/// Exact one-step transition probabilities out of `w_from` under the binary
/// sampler: a sum over all draw orders of each target support.
pub fn transition_row(
    ds: &InContextDataset,
    eta: f64,
    w_from: &DVector<f64>,
    space: &StateSpace,
) -> Result<DVector<f64>> {
    if space.k > MAX_SPARSITY_EXACT {
        return Err(Error::Capacity(format!(
            "exact transition rows need k <= {MAX_SPARSITY_EXACT}, got k = {}",
            space.k
        )));
    }
    if w_from.len() != space.d {
        return Err(Error::Dimension {
            what: "transition source state",
            expected: space.d,
            got: w_from.len(),
        });
    }
    let w_tilde = gd_step(&ds.x, &ds.y, w_from, eta)?;
    let p = clip_norm(&w_tilde);
    Ok(row_from_probabilities(&p, space))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    pub space: StateSpace,
    /// Row-stochastic transition matrix over the state space.
    pub p: DMatrix<f64>,
    /// Distribution of the first decoded weight (one step from w = 0).
    pub pi1: DVector<f64>,
}

pub fn build_chain(ds: &InContextDataset, eta: f64) -> Result<MarkovChain> {
    let k = match ds.config.coefficient_prior {
        CoefficientPrior::BinarySparse { k } => k,
        _ => {
            return Err(Error::Usage(
                "chain analysis needs a binary sparse coefficient prior".into(),
            ))
        }
    };
    let space = enumerate_states(ds.config.d, k)?;
    let m = space.len();
    let mut p = DMatrix::zeros(m, m);
    for i in 0..m {
        let row = transition_row(ds, eta, &space.state_vector(i), &space)?;
        p.row_mut(i).copy_from(&row.transpose());
    }
    let w1_tilde = gd_step(&ds.x, &ds.y, &DVector::zeros(space.d), eta)?;
    let pi1 = row_from_probabilities(&clip_norm(&w1_tilde), &space);
    Ok(MarkovChain { space, p, pi1 })
}

/// Marginal distribution of the t-th decoded weight: pi_t = pi_1 P^(t-1).
pub fn evolve(chain: &MarkovChain, t: usize) -> Result<DVector<f64>> {
    if t == 0 {
        return Err(Error::Usage("marginals start at t = 1".into()));
    }
    let mut pi = chain.pi1.clone();
    for _ in 1..t {
        pi = chain.p.tr_mul(&pi);
    }
    Ok(pi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub t: usize,
    pub pi_t: DVector<f64>,
    /// pi_t(w*) minus the largest competing mass.
    pub delta_t: f64,
    pub star_index: usize,
}

pub fn delta_gap(chain: &MarkovChain, t: usize, w_star: &DVector<f64>) -> Result<GapReport> {
    let star_index = chain.space.index_of_vector(w_star).ok_or_else(|| {
        Error::Domain("gap target must be a k-sparse binary state".into())
    })?;
    let pi_t = evolve(chain, t)?;
    let best_other = pi_t
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != star_index)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GapReport {
        t,
        delta_t: pi_t[star_index] - best_other,
        pi_t,
        star_index,
    })
}

fn l1_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).iter().map(|v| v.abs()).sum()
}

fn complex_modulus(z: &Complex<f64>) -> f64 {
    (z.re * z.re + z.im * z.im).sqrt()
}

fn power_iteration_stationary(chain: &MarkovChain) -> Result<DVector<f64>> {
    let mut old = chain.pi1.clone();
    let mut cur = chain.p.tr_mul(&old);
    for _ in 0..200_000 {
        let next = chain.p.tr_mul(&cur);
        if l1_distance(&next, &cur) < 1e-13 {
            return Ok(next);
        }
        if l1_distance(&next, &old) < 1e-13 {
            return Err(Error::NonConvergence(
                "marginals oscillate with period 2; no limiting distribution from this start".into(),
            ));
        }
        old = cur;
        cur = next;
    }
    Err(Error::NonConvergence(
        "power iteration did not converge within 200000 steps".into(),
    ))
}

/// Stationary distribution. Unique fixed point via the null space of
/// P^T - I; when the fixed-point space is degenerate (reducible chain) the
/// limit of the marginal sequence from pi_1 is returned instead, and a
/// period-2 oscillation is reported as non-convergence.
pub fn stationary(chain: &MarkovChain) -> Result<DVector<f64>> {
    let m = chain.space.len();
    let a = chain.p.transpose() - DMatrix::<f64>::identity(m, m);
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let tol = 1e-10 * sv[0].max(1.0);
    let null_dim = sv.iter().filter(|&&s| s < tol).count();
    if null_dim == 1 {
        let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
        let mut pi: DVector<f64> = v_t.row(m - 1).transpose();
        if pi.sum() < 0.0 {
            pi = -pi;
        }
        if pi.iter().all(|&v| v > -1e-9) {
            pi.iter_mut().for_each(|v| *v = v.max(0.0));
            let s = pi.sum();
            return Ok(pi / s);
        }
    }
    power_iteration_stationary(chain)
}

/// Geometric convergence factor of pi_t toward the stationary distribution.
/// Two states admit the closed form P(1|1) + P(2|2) - 1 (signed, so an
/// oscillating approach shows up as a negative rate); larger chains use the
/// second-largest eigenvalue modulus of P.
pub fn decay_rate(chain: &MarkovChain) -> Result<f64> {
    let m = chain.space.len();
    if m == 2 {
        return Ok(chain.p[(0, 0)] + chain.p[(1, 1)] - 1.0);
    }
    let eig: Vec<Complex<f64>> = chain.p.complex_eigenvalues().iter().copied().collect();
    let mut moduli: Vec<f64> = eig.iter().map(complex_modulus).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if (moduli[0] - 1.0).abs() > 1e-8 {
        return Err(Error::NonConvergence(format!(
            "leading eigenvalue modulus {} is not 1; eigensolve residual too large",
            moduli[0]
        )));
    }
    Ok(moduli[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReport {
    /// Supports of the decoded weights w_1, w_2, ... up to (excluding) the
    /// first repeat.
    pub states: Vec<Vec<usize>>,
    /// Position in `states` where the trajectory re-entered.
    pub cycle_start: Option<usize>,
    pub cycle_len: Option<usize>,
    pub visited_star: bool,
    /// Support of w*, when it is an exact k-sparse indicator.
    pub star_support: Option<Vec<usize>>,
}

fn sparse_support(w: &DVector<f64>, k: usize) -> Option<Vec<usize>> {
    let mut support = Vec::with_capacity(k);
    for (i, &v) in w.iter().enumerate() {
        if v == 1.0 {
            support.push(i);
        } else if v != 0.0 {
            return None;
        }
    }
    (support.len() == k).then_some(support)
}

/// Deterministic greedy decoding from w = 0. The trajectory is recorded up
/// to its first repeated state; by pigeonhole a cycle always appears within
/// C(d, k) + 1 steps. Tracks supports directly, so it is not limited by the
/// exact-chain state-space caps.
pub fn greedy_trajectory(ds: &InContextDataset, eta: f64, t_max: usize) -> Result<TrajectoryReport> {
    let k = match ds.config.coefficient_prior {
        CoefficientPrior::BinarySparse { k } => k,
        _ => {
            return Err(Error::Usage(
                "greedy trajectories need a binary sparse coefficient prior".into(),
            ))
        }
    };
    let d = ds.config.d;
    let star_support = sparse_support(&ds.w_star, k);
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut states: Vec<Vec<usize>> = Vec::new();
    let mut cycle_start = None;
    let mut cycle_len = None;
    let mut visited_star = false;
    let mut w = DVector::zeros(d);
    for _ in 0..t_max {
        let w_tilde = gd_step(&ds.x, &ds.y, &w, eta)?;
        let support = greedy_top_k(&w_tilde, k)?;
        if let Some(&first) = seen.get(&support) {
            cycle_start = Some(first);
            cycle_len = Some(states.len() - first);
            break;
        }
        seen.insert(support.clone(), states.len());
        if star_support.as_ref() == Some(&support) {
            visited_star = true;
        }
        w = DVector::zeros(d);
        for &i in &support {
            w[i] = 1.0;
        }
        states.push(support);
    }
    Ok(TrajectoryReport {
        states,
        cycle_start,
        cycle_len,
        visited_star,
        star_support,
    })
}
