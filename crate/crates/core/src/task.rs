//! Task generation and evaluation metrics.
//!
//! A task is a linear-regression instance: covariates drawn row-wise from
//! N(0, H) with diagonal H, labels y = Xw* + eps, and a ground-truth
//! coefficient w* drawn from either a Gaussian prior or a uniform k-sparse
//! binary prior. Excess risk is measured in the H-norm.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{derive, rng_from};

/// Spectrum family of the covariate covariance H (kept diagonal).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    Identity,
    /// lambda_i = i^{-(r+1)}, i = 1..=d.
    PolynomialDecay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpec {
    pub kind: CovarianceKind,
    pub d: usize,
    /// Decay exponent; only read for `PolynomialDecay`.
    pub r: f64,
}

impl CovarianceSpec {
    pub fn identity(d: usize) -> Self {
        CovarianceSpec {
            kind: CovarianceKind::Identity,
            d,
            r: 0.0,
        }
    }

    pub fn polynomial(d: usize, r: f64) -> Self {
        CovarianceSpec {
            kind: CovarianceKind::PolynomialDecay,
            d,
            r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("covariance dimension d must be >= 1".into()));
        }
        if self.r < 0.0 || !self.r.is_finite() {
            return Err(Error::Config(format!(
                "covariance decay exponent r must be finite and >= 0, got {}",
                self.r
            )));
        }
        Ok(())
    }
}

/// Prior over the ground-truth coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientPrior {
    /// w* ~ N(0, omega^2 I_d).
    Gaussian { omega: f64 },
    /// w* uniform over {0,1}^d vectors with exactly k ones.
    BinarySparse { k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskConfig {
    pub d: usize,
    pub n: usize,
    pub coefficient_prior: CoefficientPrior,
    pub label_noise_sd: f64,
    pub covariance: CovarianceSpec,
    pub step_size: f64,
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("d must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        match self.coefficient_prior {
            CoefficientPrior::Gaussian { omega } => {
                if !(omega > 0.0) || !omega.is_finite() {
                    return Err(Error::Config(format!(
                        "gaussian prior needs omega > 0, got {omega}"
                    )));
                }
            }
            CoefficientPrior::BinarySparse { k } => {
                if k == 0 || k >= self.d {
                    return Err(Error::Config(format!(
                        "binary prior needs 1 <= k < d, got k={k}, d={}",
                        self.d
                    )));
                }
            }
        }
        if self.label_noise_sd < 0.0 || !self.label_noise_sd.is_finite() {
            return Err(Error::Config(format!(
                "label noise sd must be >= 0, got {}",
                self.label_noise_sd
            )));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::Config(format!(
                "step size eta must be > 0, got {}",
                self.step_size
            )));
        }
        self.covariance.validate()?;
        if self.covariance.d != self.d {
            return Err(Error::Config(format!(
                "covariance dimension {} does not match task d {}",
                self.covariance.d, self.d
            )));
        }
        Ok(())
    }
}

/// One sampled regression instance. Rows of `x` are the covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct InContextDataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub w_star: DVector<f64>,
    pub config: TaskConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskReport {
    pub excess_risk: f64,
    pub recovered: bool,
}

/// Eigenvalues (lambda_1..lambda_d) of H, non-increasing and positive.
pub fn build_covariance(spec: &CovarianceSpec) -> Result<DVector<f64>> {
    spec.validate()?;
    let v = match spec.kind {
        CovarianceKind::Identity => DVector::from_element(spec.d, 1.0),
        CovarianceKind::PolynomialDecay => DVector::from_fn(spec.d, |i, _| {
            ((i + 1) as f64).powf(-(spec.r + 1.0))
        }),
    };
    Ok(v)
}

// RNG lanes inside one task seed: keep them fixed so that regenerating any
// single component (e.g. fresh noise on the same X) stays possible.
const LANE_W_STAR: u64 = 1;
const LANE_X: u64 = 2;
const LANE_NOISE: u64 = 3;

/// Draws w* from the prior, X row-wise from N(0, H), and y = Xw* + eps.
/// Fully determined by `seed`.
pub fn sample_task(config: &TaskConfig, seed: u64) -> Result<InContextDataset> {
    config.validate()?;
    let d = config.d;
    let n = config.n;
    let lambda = build_covariance(&config.covariance)?;
    let sqrt_lambda: Vec<f64> = lambda.iter().map(|l| l.sqrt()).collect();

    let w_star = match config.coefficient_prior {
        CoefficientPrior::Gaussian { omega } => {
            let mut r = rng_from(derive(seed, LANE_W_STAR));
            DVector::from_fn(d, |_, _| omega * r.sample::<f64, _>(StandardNormal))
        }
        CoefficientPrior::BinarySparse { k } => {
            let mut r = rng_from(derive(seed, LANE_W_STAR));
            // Partial Fisher-Yates: the first k slots end up a uniform
            // k-subset of 0..d.
            let mut idx: Vec<usize> = (0..d).collect();
            for i in 0..k {
                let j = r.gen_range(i..d);
                idx.swap(i, j);
            }
            let mut w = DVector::zeros(d);
            for &i in &idx[..k] {
                w[i] = 1.0;
            }
            w
        }
    };

    let mut rx = rng_from(derive(seed, LANE_X));
    // Row-major fill: x_ij = sqrt(lambda_j) * z.
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            x[(i, j)] = sqrt_lambda[j] * rx.sample::<f64, _>(StandardNormal);
        }
    }

    let mut re = rng_from(derive(seed, LANE_NOISE));
    let eps = DVector::from_fn(n, |_, _| {
        config.label_noise_sd * re.sample::<f64, _>(StandardNormal)
    });
    let y = &x * &w_star + eps;

    Ok(InContextDataset {
        x,
        y,
        w_star,
        config: config.clone(),
    })
}

/// 1/2 * sum_i lambda_i (w_i - w*_i)^2.
pub fn excess_risk(w: &DVector<f64>, w_star: &DVector<f64>, eigenvalues: &DVector<f64>) -> Result<f64> {
    if w.len() != w_star.len() {
        return Err(Error::Dimension {
            what: "excess_risk coefficient vectors",
            expected: w_star.len(),
            got: w.len(),
        });
    }
    if w.len() != eigenvalues.len() {
        return Err(Error::Dimension {
            what: "excess_risk eigenvalue vector",
            expected: w.len(),
            got: eigenvalues.len(),
        });
    }
    let mut acc = 0.0;
    for i in 0..w.len() {
        let diff = w[i] - w_star[i];
        acc += eigenvalues[i] * diff * diff;
    }
    Ok(0.5 * acc)
}

/// Exact elementwise equality; the recovery criterion for binary tasks.
pub fn recovered(w: &DVector<f64>, w_star: &DVector<f64>) -> bool {
    w.len() == w_star.len() && w.iter().zip(w_star.iter()).all(|(a, b)| a == b)
}

/// Convenience: both metrics at once against a dataset's truth.
pub fn risk_report(w: &DVector<f64>, ds: &InContextDataset) -> Result<RiskReport> {
    let lambda = build_covariance(&ds.config.covariance)?;
    Ok(RiskReport {
        excess_risk: excess_risk(w, &ds.w_star, &lambda)?,
        recovered: recovered(w, &ds.w_star),
    })
}
