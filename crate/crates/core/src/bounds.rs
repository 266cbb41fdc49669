//! Closed-form risk and accuracy guarantees: truncation-based GD risk
//! bounds, effective regularization of noisy ensembles, recovery
//! probabilities under limited context, and the majority-vote
//! concentration bound.

use crate::error::{Error, Result};

fn validate_spectrum(eigenvalues: &[f64]) -> Result<()> {
    if eigenvalues.is_empty() {
        return Err(Error::Config("empty eigenvalue list".into()));
    }
    for pair in eigenvalues.windows(2) {
        if pair[1] > pair[0] {
            return Err(Error::Config(
                "eigenvalues must be non-increasing".into(),
            ));
        }
    }
    if *eigenvalues.last().unwrap() <= 0.0 {
        return Err(Error::Config("eigenvalues must be positive".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdBoundReport {
    /// Truncation index (1-based count of head eigenvalues).
    pub k_star: usize,
    pub lambda_tilde: f64,
    pub bias_term: f64,
    pub variance_term: f64,
    pub total: f64,
}

/// Excess-risk bound for t steps of gradient descent on n examples:
/// the spectrum splits at the smallest k where
/// n lambda_(k+1) <= n/(eta t) + tail(k), and the bound is
/// omega^2 (lambda~^2/n^2 sum_head 1/lambda + tail)
/// + sigma_eps^2 (k*/n + n/lambda~^2 sum_tail lambda^2).
pub fn gd_risk_bound(
    eigenvalues: &[f64],
    n: usize,
    eta: f64,
    t: usize,
    omega: f64,
    sigma_eps: f64,
) -> Result<GdBoundReport> {
    validate_spectrum(eigenvalues)?;
    if n == 0 || t == 0 {
        return Err(Error::Config("bound needs n >= 1 and t >= 1".into()));
    }
    if omega <= 0.0 || sigma_eps < 0.0 {
        return Err(Error::Config("bound needs omega > 0 and sigma_eps >= 0".into()));
    }
    if eta <= 0.0 || eta > 1.0 / eigenvalues[0] {
        return Err(Error::Domain(format!(
            "step size must satisfy 0 < eta <= 1/lambda_1 = {}",
            1.0 / eigenvalues[0]
        )));
    }
    let d = eigenvalues.len();
    let nf = n as f64;
    let horizon = nf / (eta * t as f64);
    // k* scans 1..=d; the k = d candidate compares against lambda_(d+1) = 0,
    // so the scan always terminates.
    let mut k_star = d;
    for k in 1..=d {
        let next = if k < d { eigenvalues[k] } else { 0.0 };
        let tail: f64 = eigenvalues[k..].iter().sum();
        if nf * next <= horizon + tail {
            k_star = k;
            break;
        }
    }
    let tail: f64 = eigenvalues[k_star..].iter().sum();
    let lambda_tilde = horizon + tail;
    let head_inv: f64 = eigenvalues[..k_star].iter().map(|l| 1.0 / l).sum();
    let tail_sq: f64 = eigenvalues[k_star..].iter().map(|l| l * l).sum();
    let bias_term = omega * omega * ((lambda_tilde / nf).powi(2) * head_inv + tail);
    let variance_term =
        sigma_eps * sigma_eps * (k_star as f64 / nf + nf / (lambda_tilde * lambda_tilde) * tail_sq);
    Ok(GdBoundReport {
        k_star,
        lambda_tilde,
        bias_term,
        variance_term,
        total: bias_term + variance_term,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleBoundReport {
    /// Effective ridge level governing the averaged estimator's bias.
    pub lambda_eff_bias: f64,
    /// Effective ridge level at the infinite-ensemble variance limit.
    pub lambda_eff_var: f64,
    /// Finite-ensemble deviation scale.
    pub vartheta: f64,
    /// Residual-energy scale multiplying the deviation.
    pub varsigma: f64,
    pub effective_rank: f64,
}

/// Effective-regularization quantities for averaged noisy decoding with
/// per-step noise level sigma (standard deviation, 0 < sigma < 1).
#[allow(clippy::too_many_arguments)]
pub fn ensemble_bound_terms(
    eigenvalues: &[f64],
    n: usize,
    eta: f64,
    t: usize,
    sigma: f64,
    sigma_eps: f64,
    omega: f64,
) -> Result<EnsembleBoundReport> {
    validate_spectrum(eigenvalues)?;
    if n == 0 || t == 0 {
        return Err(Error::Config("bound needs n >= 1 and t >= 1".into()));
    }
    if eta <= 0.0 {
        return Err(Error::Config("bound needs eta > 0".into()));
    }
    if sigma <= 0.0 || sigma >= 1.0 {
        return Err(Error::Domain(
            "ensemble terms need noise level 0 < sigma < 1".into(),
        ));
    }
    if omega <= 0.0 || sigma_eps < 0.0 {
        return Err(Error::Config("bound needs omega > 0 and sigma_eps >= 0".into()));
    }
    let d = eigenvalues.len() as f64;
    let nf = n as f64;
    let tf = t as f64;
    let s2 = sigma * sigma;
    let shrink = s2 / (1.0 - s2);
    let trace: f64 = eigenvalues.iter().sum();
    let effective_rank = trace / eigenvalues[0];
    let lambda_eff_bias = nf / eta * (2.0 / tf + shrink * (1.0 + 2.0 / tf));
    let lambda_eff_var = shrink * nf / eta;
    let vartheta =
        s2 * d * (tf * (effective_rank.max(nf.ln()) / nf).sqrt() + 1.0 / eta);
    let varsigma = (eta * sigma_eps * sigma_eps * d / (nf * s2) * trace + omega * omega)
        * eigenvalues[0];
    Ok(EnsembleBoundReport {
        lambda_eff_bias,
        lambda_eff_var,
        vartheta,
        varsigma,
        effective_rank,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SufficientNReport {
    /// Per-step probability of jumping to the truth from elsewhere.
    pub p_trans: f64,
    /// Per-step probability of staying at the truth.
    pub p_recurr: f64,
    /// Lower bound on the selection gap pi_t(w*) - max others.
    pub delta_lower: f64,
    /// Whether n clears the (6k + 3 sigma_eps)^4 threshold the guarantee
    /// assumes; outside it the numbers are reported but carry no guarantee.
    pub in_regime: bool,
}

/// Closed-form lower bound on the gap of the binary sampler's marginal at
/// step t, for isotropic inputs with context length n.
pub fn sufficient_n_gap_bound(
    n: usize,
    d: usize,
    k: usize,
    sigma_eps: f64,
    t: usize,
) -> Result<SufficientNReport> {
    if n == 0 || t == 0 {
        return Err(Error::Config("bound needs n >= 1 and t >= 1".into()));
    }
    if d < 2 || k == 0 || k >= d {
        return Err(Error::Config("bound needs 1 <= k < d and d >= 2".into()));
    }
    if sigma_eps < 0.0 {
        return Err(Error::Config("bound needs sigma_eps >= 0".into()));
    }
    let q = (n as f64).powf(0.25);
    let kf = k as f64;
    let df = d as f64;
    let in_regime = n as f64 >= (6.0 * kf + 3.0 * sigma_eps).powi(4);
    let gap_t = q - (2.0 * kf + sigma_eps);
    let p_trans = if gap_t > 0.0 {
        ((1.0 - (2.0 * kf + sigma_eps) / gap_t) * df.powi(-(k as i32))).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let gap_r = q - sigma_eps;
    let p_recurr = if gap_r > 0.0 {
        ((1.0 - sigma_eps / gap_r) * (gap_r / (gap_r + df * sigma_eps)).powi(k as i32))
            .clamp(0.0, 1.0)
    } else {
        0.0
    };
    let denom = p_trans + 1.0 - p_recurr;
    let delta_lower = if denom > 0.0 {
        (p_trans / denom) * (1.0 - (p_recurr - p_trans).powi((t - 1) as i32))
    } else {
        0.0
    };
    Ok(SufficientNReport {
        p_trans,
        p_recurr,
        delta_lower,
        in_regime,
    })
}

/// Probability that majority vote over n_paths independent paths selects
/// the gap leader: 1 - |W| exp(-n_paths delta^2 / 2), clamped to [0, 1].
/// A non-positive gap yields the degenerate bound 0.
pub fn hoeffding_mv_bound(delta_t: f64, n_paths: usize, w_count: usize) -> Result<f64> {
    if n_paths == 0 {
        return Err(Error::Usage("majority vote bound needs n_paths >= 1".into()));
    }
    if w_count < 2 {
        return Err(Error::Usage("majority vote bound needs at least 2 states".into()));
    }
    if delta_t <= 0.0 {
        return Ok(0.0);
    }
    let raw = 1.0 - w_count as f64 * (-(n_paths as f64) * delta_t * delta_t / 2.0).exp();
    Ok(raw.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{build_chain, delta_gap};
    use crate::rng::rng_from;
    use crate::task::{build_covariance, CoefficientPrior, CovarianceSpec, TaskConfig};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn poly_spectrum(d: usize, r: f64) -> Vec<f64> {
        build_covariance(&CovarianceSpec::polynomial(d, r))
            .unwrap()
            .iter()
            .copied()
            .collect()
    }

    // ---- GD risk bound ----

    #[test]
    fn gd_bound_matches_brute_force_scan() {
        let mut rng = rng_from(11);
        for _ in 0..200 {
            let d = rng.gen_range(1..12);
            let mut eig: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..3.0)).collect();
            eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let n = rng.gen_range(1..200);
            let eta = rng.gen_range(0.05..1.0) / eig[0];
            let t = rng.gen_range(1..10_000);
            let omega = rng.gen_range(0.1..3.0);
            let sigma_eps = rng.gen_range(0.0..2.0);
            let got = gd_risk_bound(&eig, n, eta, t, omega, sigma_eps).unwrap();

            // Oracle: literal scan over every k with independently summed tails.
            let nf = n as f64;
            let mut k_star = None;
            for k in 1..=d {
                let next = eig.get(k).copied().unwrap_or(0.0);
                let tail: f64 = (k..d).map(|i| eig[i]).sum();
                if nf * next <= nf / (eta * t as f64) + tail {
                    k_star = Some(k);
                    break;
                }
            }
            let k_star = k_star.unwrap();
            assert_eq!(got.k_star, k_star);
            let tail: f64 = (k_star..d).map(|i| eig[i]).sum();
            let lam = nf / (eta * t as f64) + tail;
            assert_relative_eq!(got.lambda_tilde, lam, max_relative = 1e-12);
            let bias = omega.powi(2)
                * (lam.powi(2) / nf.powi(2) * (0..k_star).map(|i| 1.0 / eig[i]).sum::<f64>()
                    + tail);
            let var = sigma_eps.powi(2)
                * (k_star as f64 / nf
                    + nf / lam.powi(2) * (k_star..d).map(|i| eig[i] * eig[i]).sum::<f64>());
            assert_relative_eq!(got.bias_term, bias, max_relative = 1e-12);
            assert_relative_eq!(got.variance_term, var, max_relative = 1e-12);
            assert_relative_eq!(got.total, bias + var, max_relative = 1e-12);
        }
    }

    #[test]
    fn gd_bound_truncation_tracks_sqrt_of_horizon_on_quadratic_decay() {
        let eig = poly_spectrum(30, 1.0);
        for (t, expect) in [(4usize, 1i64), (16, 3), (100, 9)] {
            let got = gd_risk_bound(&eig, 1_000_000, 1.0, t, 1.0, 0.5).unwrap();
            assert!(
                (got.k_star as i64 - expect).abs() <= 1,
                "t = {t}: k* = {} expected about {expect}",
                got.k_star
            );
        }
    }

    #[test]
    fn gd_bound_long_horizon_limits() {
        let eig = poly_spectrum(30, 1.0);
        let got = gd_risk_bound(&eig, 1_000_000, 1.0, 1_000_000_000_000, 1.0, 0.5).unwrap();
        // Horizon term vanishes; the whole spectrum fits in the head.
        assert_eq!(got.k_star, 30);
        assert!(got.bias_term < 1e-15);
        assert_relative_eq!(got.variance_term, 0.25 * 30.0 / 1e6, max_relative = 1e-9);
    }

    #[test]
    fn gd_bound_bias_falls_and_variance_grows_with_t() {
        let eig = poly_spectrum(10, 1.0);
        let mut prev: Option<GdBoundReport> = None;
        for p in 0..13 {
            let t = 1usize << p;
            let got = gd_risk_bound(&eig, 50, 1.0, t, 1.0, 0.7).unwrap();
            if let Some(prev) = prev {
                assert!(got.bias_term <= prev.bias_term + 1e-12);
                assert!(got.variance_term >= prev.variance_term - 1e-12);
            }
            prev = Some(got);
        }
    }

    #[test]
    fn gd_bound_rejects_bad_inputs() {
        assert!(matches!(
            gd_risk_bound(&[1.0, 2.0], 10, 0.1, 5, 1.0, 0.1),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            gd_risk_bound(&[2.0, 1.0], 10, 0.6, 5, 1.0, 0.1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            gd_risk_bound(&[2.0, 0.0], 10, 0.1, 5, 1.0, 0.1),
            Err(Error::Config(_))
        ));
    }

    // ---- ensemble effective regularization ----

    #[test]
    fn ensemble_terms_frozen_values() {
        let eig = vec![1.0; 72];
        let got = ensemble_bound_terms(&eig, 36, 1e-3, 950, (4.0f64 / 72.0).sqrt(), 1.0, 1.0)
            .unwrap();
        assert_relative_eq!(got.lambda_eff_var, 2117.6470588, max_relative = 1e-6);
        assert_relative_eq!(got.lambda_eff_bias, 2197.8947368, max_relative = 1e-6);
        assert_relative_eq!(got.effective_rank, 72.0, epsilon = 1e-12);
        assert_relative_eq!(got.vartheta, 9374.0115, max_relative = 1e-6);
        assert_relative_eq!(got.varsigma, 3.592, max_relative = 1e-12);
    }

    #[test]
    fn ensemble_terms_noise_free_limit_is_pure_horizon() {
        let eig = vec![1.0; 8];
        let got = ensemble_bound_terms(&eig, 40, 0.1, 20, 1e-9, 0.5, 1.0).unwrap();
        assert_relative_eq!(
            got.lambda_eff_bias,
            2.0 * 40.0 / (0.1 * 20.0),
            max_relative = 1e-12
        );
        assert!(got.lambda_eff_var < 1e-12);
    }

    #[test]
    fn ensemble_terms_reject_degenerate_noise() {
        let eig = vec![1.0; 4];
        for sigma in [0.0, 1.0, 1.5, -0.2] {
            assert!(matches!(
                ensemble_bound_terms(&eig, 10, 0.1, 5, sigma, 0.1, 1.0),
                Err(Error::Domain(_))
            ));
        }
    }

    // ---- limited-context recovery bound ----

    #[test]
    fn sufficient_n_noise_free_regime() {
        let got = sufficient_n_gap_bound(2000, 10, 1, 0.0, 50).unwrap();
        assert!(got.in_regime);
        assert_eq!(got.p_recurr, 1.0);
        assert!(got.p_trans > 1.0 / (2.0 * 10.0));
        assert!(got.delta_lower > 0.0 && got.delta_lower <= 1.0);

        // t = 1 carries no information yet.
        let first = sufficient_n_gap_bound(2000, 10, 1, 0.0, 1).unwrap();
        assert_eq!(first.delta_lower, 0.0);

        // Long horizons drive the noise-free gap to 1.
        let late = sufficient_n_gap_bound(2000, 10, 1, 0.0, 1_000_000).unwrap();
        assert_relative_eq!(late.delta_lower, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sufficient_n_flags_small_context() {
        let got = sufficient_n_gap_bound(40, 30, 2, 0.1, 10).unwrap();
        assert!(!got.in_regime);
        let boundary = (6.0f64 * 2.0 + 3.0 * 0.1).powi(4).ceil() as usize;
        assert!(sufficient_n_gap_bound(boundary, 30, 2, 0.1, 10).unwrap().in_regime);
    }

    #[test]
    fn sufficient_n_gap_grows_with_t() {
        let mut prev = -1.0;
        for t in [1usize, 2, 3, 5, 10, 30, 100, 1000] {
            let got = sufficient_n_gap_bound(5000, 8, 2, 0.2, t).unwrap();
            assert!(got.delta_lower >= prev - 1e-12);
            prev = got.delta_lower;
        }
    }

    #[test]
    fn sufficient_n_is_below_exact_gap_in_regime() {
        // Observational check against the exact chain on an in-regime
        // isotropic instance.
        let n = 1400usize;
        let cfg = TaskConfig {
            d: 3,
            n,
            coefficient_prior: CoefficientPrior::BinarySparse { k: 1 },
            label_noise_sd: 0.0,
            covariance: CovarianceSpec::identity(3),
            step_size: 1.0,
        };
        let ds = crate::task::sample_task(&cfg, 404).unwrap();
        let chain = build_chain(&ds, 1.0).unwrap();
        for t in [2usize, 5, 10, 40] {
            let exact = delta_gap(&chain, t, &ds.w_star).unwrap().delta_t;
            let bound = sufficient_n_gap_bound(n, 3, 1, 0.0, t).unwrap().delta_lower;
            println!("t = {t}: exact gap {exact:.4}, lower bound {bound:.4}");
            assert!(
                bound <= exact + 0.05,
                "bound {bound} above exact gap {exact} at t = {t}"
            );
        }
    }

    // ---- majority-vote concentration ----

    #[test]
    fn hoeffding_frozen_value() {
        let b = hoeffding_mv_bound(1.0 / 3.0, 100, 2).unwrap();
        assert_relative_eq!(b, 0.9922681548, epsilon = 1e-8);
    }

    #[test]
    fn hoeffding_edges() {
        let near_one = hoeffding_mv_bound(1.0, 100, 2).unwrap();
        assert!(near_one >= 1.0 - 1e-12 && near_one <= 1.0);
        // Far too few paths: the raw bound is negative and clamps to 0.
        assert_eq!(hoeffding_mv_bound(0.01, 1, 2).unwrap(), 0.0);
        // Degenerate gap.
        assert_eq!(hoeffding_mv_bound(-0.3, 100, 2).unwrap(), 0.0);
        assert_eq!(hoeffding_mv_bound(0.0, 100, 2).unwrap(), 0.0);
        assert!(matches!(hoeffding_mv_bound(0.5, 0, 2), Err(Error::Usage(_))));
        assert!(matches!(hoeffding_mv_bound(0.5, 10, 1), Err(Error::Usage(_))));
    }

    #[test]
    fn hoeffding_monotone_in_paths_and_gap() {
        let mut prev = -1.0;
        for n in [1usize, 2, 5, 10, 50, 100, 1000] {
            let b = hoeffding_mv_bound(0.2, n, 6).unwrap();
            assert!(b >= prev);
            prev = b;
        }
        let mut prev = -1.0;
        for delta in [0.01, 0.05, 0.1, 0.3, 0.6, 1.0] {
            let b = hoeffding_mv_bound(delta, 200, 6).unwrap();
            assert!(b >= prev);
            prev = b;
        }
    }
}
