//! One-layer linear attention with a residual connection, the explicit
//! parameter choice that makes it perform gradient descent on the in-context
//! regression loss, and the matching closed-form multi-step predictor.
//!
//! Embedding layout (d_e = 2d + 2 rows): demonstration columns carry
//! (x_i; y_i; 0_d; 0), weight columns carry (0_d; 0; w_j; 1).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::task::InContextDataset;

#[derive(Debug, Clone, PartialEq)]
pub struct TransformerParams {
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub n_divisor: usize,
    pub d_e: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptEmbedding {
    pub h: DMatrix<f64>,
    /// Demonstration count (first `n` columns).
    pub n: usize,
    /// Weight columns appended so far (w_0..w_ell).
    pub ell: usize,
    pub d: usize,
}

impl PromptEmbedding {
    /// Demo columns from the dataset plus one initial weight column w_0.
    pub fn from_dataset(ds: &InContextDataset, w0: &DVector<f64>) -> Result<Self> {
        let d = ds.config.d;
        let n = ds.config.n;
        if w0.len() != d {
            return Err(Error::Dimension {
                what: "prompt initial weight",
                expected: d,
                got: w0.len(),
            });
        }
        let d_e = 2 * d + 2;
        let mut h = DMatrix::zeros(d_e, n + 1);
        for i in 0..n {
            for j in 0..d {
                h[(j, i)] = ds.x[(i, j)];
            }
            h[(d, i)] = ds.y[i];
        }
        for j in 0..d {
            h[(d + 1 + j, n)] = w0[j];
        }
        h[(2 * d + 1, n)] = 1.0;
        Ok(PromptEmbedding { h, n, ell: 0, d })
    }

    /// Appends a generated weight token (0_d; 0; w; 1).
    pub fn push_weight(&mut self, w: &DVector<f64>) -> Result<()> {
        if w.len() != self.d {
            return Err(Error::Dimension {
                what: "prompt appended weight",
                expected: self.d,
                got: w.len(),
            });
        }
        let cols = self.h.ncols();
        let mut h = self.h.clone().resize(2 * self.d + 2, cols + 1, 0.0);
        for j in 0..self.d {
            h[(self.d + 1 + j, cols)] = w[j];
        }
        h[(2 * self.d + 1, cols)] = 1.0;
        self.h = h;
        self.ell += 1;
        Ok(())
    }

    pub fn last_column(&self) -> DVector<f64> {
        DVector::from_column_slice(self.h.column(self.h.ncols() - 1).as_slice())
    }
}

/// The exact sparse V, W blocks that turn one forward pass into one GD step
/// of size eta on the demos' squared loss. V carries -eta*I_d in rows
/// d+1..=2d against columns 0..d; W routes weights to covariates (I_d in
/// rows 0..d against columns d+1..=2d) and flips the label via -1 at
/// (d, 2d+1). Zero-based indices.
pub fn build_gd_params(d: usize, eta: f64, n: usize) -> Result<TransformerParams> {
    if d == 0 {
        return Err(Error::Config("transformer d must be >= 1".into()));
    }
    if n == 0 {
        return Err(Error::Config("transformer n_divisor must be >= 1".into()));
    }
    if eta < 0.0 || !eta.is_finite() {
        return Err(Error::Config(format!("step size must be >= 0, got {eta}")));
    }
    let d_e = 2 * d + 2;
    let mut v = DMatrix::zeros(d_e, d_e);
    let mut w = DMatrix::zeros(d_e, d_e);
    for i in 0..d {
        v[(d + 1 + i, i)] = -eta;
        w[(i, d + 1 + i)] = 1.0;
    }
    w[(d, 2 * d + 1)] = -1.0;
    Ok(TransformerParams {
        v,
        w,
        n_divisor: n,
        d_e,
    })
}

/// TF(H) = H + V H (H^T W H) / n_divisor.
pub fn forward(params: &TransformerParams, prompt: &PromptEmbedding) -> Result<DMatrix<f64>> {
    if prompt.h.nrows() != params.d_e {
        return Err(Error::Dimension {
            what: "forward embedding rows",
            expected: params.d_e,
            got: prompt.h.nrows(),
        });
    }
    if prompt.n != params.n_divisor {
        return Err(Error::Dimension {
            what: "forward demonstration count",
            expected: params.n_divisor,
            got: prompt.n,
        });
    }
    let h = &prompt.h;
    let attn = h.transpose() * (&params.w * h);
    Ok(h + (&params.v * h) * attn / params.n_divisor as f64)
}

/// Rows d+1..=2d of an embedding column: the coefficient block.
pub fn extract_coefficient(column: &DVector<f64>) -> Result<DVector<f64>> {
    let len = column.len();
    if len < 4 || len % 2 != 0 {
        return Err(Error::Dimension {
            what: "coefficient column length (must be 2d+2)",
            expected: 4,
            got: len,
        });
    }
    let d = (len - 2) / 2;
    Ok(DVector::from_fn(d, |i, _| column[d + 1 + i]))
}

/// w - (eta/n) X^T (X w - y): the fast path equivalent to forward+extract.
pub fn gd_step(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    w: &DVector<f64>,
    eta: f64,
) -> Result<DVector<f64>> {
    let (n, d) = x.shape();
    if y.len() != n {
        return Err(Error::Dimension {
            what: "gd_step labels",
            expected: n,
            got: y.len(),
        });
    }
    if w.len() != d {
        return Err(Error::Dimension {
            what: "gd_step coefficient",
            expected: d,
            got: w.len(),
        });
    }
    let resid = x * w - y;
    Ok(w - x.transpose() * resid * (eta / n as f64))
}

/// t-fold gd_step iterate from w_0 = 0. Iterative on purpose: stays defined
/// when X X^T is singular (n = 1 tasks and the like).
pub fn closed_form_gd(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eta: f64,
    t: usize,
) -> Result<DVector<f64>> {
    let mut w = DVector::zeros(x.ncols());
    for _ in 0..t {
        w = gd_step(x, y, &w, eta)?;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use crate::task::{sample_task, CoefficientPrior, CovarianceSpec, TaskConfig};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn random_instance(seed: u64, d: usize, n: usize, noise: f64) -> InContextDataset {
        let cfg = TaskConfig {
            d,
            n,
            coefficient_prior: CoefficientPrior::Gaussian { omega: 1.0 },
            label_noise_sd: noise,
            covariance: CovarianceSpec::identity(d),
            step_size: 0.1,
        };
        sample_task(&cfg, seed).unwrap()
    }

    #[test]
    fn gd_params_block_layout_d1() {
        let p = build_gd_params(1, 1.0, 1).unwrap();
        assert_eq!(p.d_e, 4);
        let mut v_expect = DMatrix::zeros(4, 4);
        v_expect[(2, 0)] = -1.0;
        let mut w_expect = DMatrix::zeros(4, 4);
        w_expect[(0, 2)] = 1.0;
        w_expect[(1, 3)] = -1.0;
        assert_eq!(p.v, v_expect);
        assert_eq!(p.w, w_expect);
    }

    #[test]
    fn gd_params_nonzero_counts() {
        for d in 1..12 {
            let p = build_gd_params(d, 0.7, 5).unwrap();
            let nv = p.v.iter().filter(|&&e| e != 0.0).count();
            let nw = p.w.iter().filter(|&&e| e != 0.0).count();
            assert_eq!(nv, d);
            assert_eq!(nw, d + 1);
        }
    }

    #[test]
    fn zero_step_size_is_identity_on_coefficient() {
        let ds = random_instance(5, 3, 4, 0.3);
        let p = build_gd_params(3, 0.0, 4).unwrap();
        assert!(p.v.iter().all(|&e| e == 0.0));
        let w0 = DVector::from_vec(vec![0.4, -1.0, 2.0]);
        let prompt = PromptEmbedding::from_dataset(&ds, &w0).unwrap();
        let out = forward(&p, &prompt).unwrap();
        let col = DVector::from_column_slice(out.column(out.ncols() - 1).as_slice());
        assert_eq!(extract_coefficient(&col).unwrap(), w0);
    }

    #[test]
    fn forward_residual_identity_when_v_zero() {
        let ds = random_instance(9, 2, 3, 0.0);
        let mut p = build_gd_params(2, 1.0, 3).unwrap();
        p.v.fill(0.0);
        let prompt = PromptEmbedding::from_dataset(&ds, &DVector::zeros(2)).unwrap();
        let out = forward(&p, &prompt).unwrap();
        assert_eq!(out, prompt.h);
    }

    #[test]
    fn forward_single_demo_hand_value() {
        // n=1, d=1, x=2, y=2, w=0, eta=1: new coefficient = (eta/n) x y = 4.
        let cfg = TaskConfig {
            d: 1,
            n: 1,
            coefficient_prior: CoefficientPrior::Gaussian { omega: 1.0 },
            label_noise_sd: 0.0,
            covariance: CovarianceSpec::identity(1),
            step_size: 1.0,
        };
        let mut ds = sample_task(&cfg, 0).unwrap();
        ds.x[(0, 0)] = 2.0;
        ds.y[0] = 2.0;
        let p = build_gd_params(1, 1.0, 1).unwrap();
        let prompt = PromptEmbedding::from_dataset(&ds, &DVector::zeros(1)).unwrap();
        let out = forward(&p, &prompt).unwrap();
        let col = DVector::from_column_slice(out.column(out.ncols() - 1).as_slice());
        let w = extract_coefficient(&col).unwrap();
        assert_relative_eq!(w[0], 4.0, max_relative = 1e-14);
        // Full last-column contract: (0; 0; w; 1).
        assert_relative_eq!(col[0], 0.0);
        assert_relative_eq!(col[1], 0.0);
        assert_relative_eq!(col[3], 1.0);
    }

    #[test]
    fn extract_coefficient_round_trip() {
        let ds = random_instance(11, 4, 6, 0.2);
        let w0 = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let w1 = DVector::from_vec(vec![0.0, 1.0, -1.0, 2.0]);
        let mut prompt = PromptEmbedding::from_dataset(&ds, &w0).unwrap();
        prompt.push_weight(&w1).unwrap();
        // Column n holds w_0, column n+1 holds w_1.
        let col0 = DVector::from_column_slice(prompt.h.column(6).as_slice());
        let col1 = DVector::from_column_slice(prompt.h.column(7).as_slice());
        assert_eq!(extract_coefficient(&col0).unwrap(), w0);
        assert_eq!(extract_coefficient(&col1).unwrap(), w1);
    }

    #[test]
    fn extract_coefficient_index_arithmetic() {
        let col = DVector::from_vec(vec![10.0, 20.0, 30.0, 40.0]);
        let w = extract_coefficient(&col).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0], 30.0);
        assert!(matches!(
            extract_coefficient(&DVector::from_vec(vec![1.0, 2.0, 3.0])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn gd_step_hand_values() {
        let x = DMatrix::identity(2, 2);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let w = gd_step(&x, &y, &DVector::zeros(2), 1.0).unwrap();
        assert_relative_eq!(w[0], 0.5);
        assert_relative_eq!(w[1], 1.0);
    }

    #[test]
    fn gd_step_fixed_point_at_truth() {
        let mut ds = random_instance(21, 5, 8, 0.0);
        ds.y = &ds.x * &ds.w_star;
        let w = gd_step(&ds.x, &ds.y, &ds.w_star, 0.7).unwrap();
        assert_relative_eq!((w - &ds.w_star).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn gd_step_matches_forward_extract() {
        let mut r = rng_from(33);
        for case in 0..60 {
            let d = r.gen_range(1..8);
            let n = r.gen_range(1..10);
            let ds = random_instance(1000 + case, d, n, 0.4);
            let eta = r.gen_range(0.01..1.5);
            let w = DVector::from_fn(d, |_, _| r.gen_range(-2.0..2.0f64));
            let p = build_gd_params(d, eta, n).unwrap();
            let prompt = PromptEmbedding::from_dataset(&ds, &w).unwrap();
            let out = forward(&p, &prompt).unwrap();
            let col = DVector::from_column_slice(out.column(out.ncols() - 1).as_slice());
            let via_forward = extract_coefficient(&col).unwrap();
            let direct = gd_step(&ds.x, &ds.y, &w, eta).unwrap();
            let rel = (&via_forward - &direct).norm() / direct.norm().max(1e-12);
            assert!(rel <= 1e-12, "case {case}: rel {rel}");
        }
    }

    #[test]
    fn closed_form_gd_zero_steps_and_diagonal_case() {
        let x = DMatrix::identity(2, 2);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(closed_form_gd(&x, &y, 1.0, 0).unwrap(), DVector::zeros(2));
        let w1 = closed_form_gd(&x, &y, 1.0, 1).unwrap();
        assert_relative_eq!(w1[0], 0.5);
        assert_relative_eq!(w1[1], 1.0);
        // Geometric factor (1 - 2^-t) per coordinate; converged by t=200.
        let w_inf = closed_form_gd(&x, &y, 1.0, 200).unwrap();
        assert_relative_eq!(w_inf[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(w_inf[1], 2.0, max_relative = 1e-12);
        let w5 = closed_form_gd(&x, &y, 1.0, 5).unwrap();
        assert_relative_eq!(w5[0], 1.0 - 0.5f64.powi(5), max_relative = 1e-14);
    }

    #[test]
    fn closed_form_gd_matches_explicit_inverse() {
        // Full-rank square X: w_t = (I - (I - (eta/n) X^T X)^t) X^T (X X^T)^{-1} y.
        let mut r = rng_from(55);
        for case in 0..25 {
            let d = r.gen_range(2..6);
            let n = d;
            let mut ds = random_instance(2000 + case, d, n, 0.5);
            // Re-roll near-singular designs; the oracle needs a safe inverse.
            while ds.x.determinant().abs() < 1e-3 {
                ds = random_instance(9000 + case * 7, d, n, 0.5);
            }
            let sigma_hat = ds.x.transpose() * &ds.x / n as f64;
            let lambda_max = sigma_hat.clone().symmetric_eigen().eigenvalues.max();
            let eta = 0.5 / lambda_max;
            let t = r.gen_range(1..=50usize);

            let m = DMatrix::identity(d, d) - &sigma_hat * eta;
            let mut m_pow = DMatrix::identity(d, d);
            for _ in 0..t {
                m_pow = &m_pow * &m;
            }
            let gram_inv = (&ds.x * ds.x.transpose()).try_inverse().unwrap();
            let oracle = (DMatrix::identity(d, d) - m_pow) * ds.x.transpose() * gram_inv * &ds.y;

            let iterative = closed_form_gd(&ds.x, &ds.y, eta, t).unwrap();
            let rel = (&iterative - &oracle).norm() / oracle.norm().max(1e-12);
            assert!(rel <= 1e-9, "case {case}: rel err {rel}");
        }
    }

    #[test]
    fn risk_nonincreasing_under_stable_step() {
        // Noiseless full-rank case with eta <= 1/lambda_max: excess risk of
        // the GD iterate never increases with t.
        for seed in 0..10 {
            let d = 4;
            let n = 12;
            let mut ds = random_instance(3000 + seed, d, n, 0.0);
            ds.y = &ds.x * &ds.w_star;
            let sigma_hat = ds.x.transpose() * &ds.x / n as f64;
            let lambda_max = sigma_hat.symmetric_eigen().eigenvalues.max();
            let eta = 1.0 / lambda_max;
            let lambda = DVector::from_element(d, 1.0);
            let mut prev = f64::INFINITY;
            let mut w = DVector::zeros(d);
            for _ in 0..80 {
                let risk = crate::task::excess_risk(&w, &ds.w_star, &lambda).unwrap();
                assert!(risk <= prev + 1e-12);
                prev = risk;
                w = gd_step(&ds.x, &ds.y, &w, eta).unwrap();
            }
        }
    }

    #[test]
    fn forward_rejects_mismatched_divisor() {
        let ds = random_instance(71, 2, 3, 0.1);
        let p = build_gd_params(2, 0.5, 4).unwrap();
        let prompt = PromptEmbedding::from_dataset(&ds, &DVector::zeros(2)).unwrap();
        assert!(matches!(
            forward(&p, &prompt),
            Err(Error::Dimension { .. })
        ));
    }
}
