//! Closed-form risks of spectral-shrinkage estimators, with a Monte Carlo
//! oracle for cross-checking them.
//!
//! Every estimator here rescales spectral coordinate `i` of the least-squares
//! fit by `phi_i`. With `h_i = 1 - phi_i` and `b_i = (v_i^T beta0)^2`:
//!
//! | kind             | bias                       | variance                      |
//! |------------------|----------------------------|-------------------------------|
//! | estimation       | `sum b_i h_i^2`            | `sigma^2/n sum phi_i^2 / s_i` |
//! | bayes            | `sigma^2/n sum alpha h_i^2`| same                          |
//! | in-sample        | `sum b_i s_i h_i^2`        | `sigma^2/n sum phi_i^2`       |
//! | bayes in-sample  | `sigma^2/n sum alpha s_i h_i^2` | same                     |
//!
//! Out-of-sample risks replace the identity weights by `W = V^T Sigma V`.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, require_positive, Error, Result};
use crate::estimators::{estimate, Family, Tuning};
use crate::shrinkage::MomentumSpec;
use crate::spectral::{seeded_rng, standard_normal_vector, CovarianceSpec, PriorSpec, SpectralDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RiskKind {
    Estimation,
    Bayes,
    InSample,
    BayesInSample,
    OutSample,
    BayesOutSample,
}

impl RiskKind {
    pub const ALL: [RiskKind; 6] = [
        RiskKind::Estimation,
        RiskKind::Bayes,
        RiskKind::InSample,
        RiskKind::BayesInSample,
        RiskKind::OutSample,
        RiskKind::BayesOutSample,
    ];

    pub fn is_bayes(&self) -> bool {
        matches!(self, RiskKind::Bayes | RiskKind::BayesInSample | RiskKind::BayesOutSample)
    }

    pub fn name(&self) -> &'static str {
        match self {
            RiskKind::Estimation => "estimation",
            RiskKind::Bayes => "bayes",
            RiskKind::InSample => "insample",
            RiskKind::BayesInSample => "bayes_insample",
            RiskKind::OutSample => "outsample",
            RiskKind::BayesOutSample => "bayes_outsample",
        }
    }
}

/// Bias and variance parts of a risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSplit {
    pub bias: f64,
    pub variance: f64,
}

impl RiskSplit {
    pub fn total(&self) -> f64 {
        self.bias + self.variance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskPoint {
    pub tuning: f64,
    pub value: f64,
}

/// Risks of one estimator family along its tuning parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    family: Family,
    kind: RiskKind,
    points: Vec<RiskPoint>,
}

impl RiskCurve {
    pub fn new(family: Family, kind: RiskKind, points: Vec<RiskPoint>) -> Result<Self> {
        if points.iter().any(|p| !p.value.is_finite() || p.value < 0.0) {
            return Err(invalid("points", "risk values must be finite and nonnegative"));
        }
        if points.windows(2).any(|w| !(w[1].tuning > w[0].tuning)) {
            return Err(invalid("points", "tunings must be strictly increasing"));
        }
        Ok(Self { family, kind, points })
    }

    /// Evaluates `risk` at every grid value.
    pub fn from_fn(
        family: Family,
        kind: RiskKind,
        grid: &[f64],
        mut risk: impl FnMut(f64) -> Result<f64>,
    ) -> Result<Self> {
        let points = grid
            .iter()
            .map(|&tuning| Ok(RiskPoint { tuning, value: risk(tuning)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(family, kind, points)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn kind(&self) -> RiskKind {
        self.kind
    }

    pub fn points(&self) -> &[RiskPoint] {
        &self.points
    }

    pub fn tunings(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.tuning)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    /// Grid point with the smallest risk.
    pub fn minimum(&self) -> Option<RiskPoint> {
        self.points.iter().copied().min_by(|a, b| a.value.total_cmp(&b.value))
    }
}

fn rotated_beta(dec: &SpectralDecomposition, beta0: &DVector<f64>) -> Result<DVector<f64>> {
    if beta0.len() != dec.p() {
        return Err(Error::Dimension(format!(
            "beta0 has length {}, expected {}",
            beta0.len(),
            dec.p()
        )));
    }
    Ok(dec.v().tr_mul(beta0))
}

fn noise_level(sigma2: f64, n: usize) -> Result<f64> {
    require_positive("sigma2", sigma2)?;
    Ok(sigma2 / n as f64)
}

/// Fixed-`beta0` estimation risk `E[||beta_hat - beta0||^2 | beta0]`.
pub fn estimation_risk(
    dec: &SpectralDecomposition,
    beta0: &DVector<f64>,
    sigma2: f64,
    tuning: Tuning<'_>,
) -> Result<RiskSplit> {
    let w = rotated_beta(dec, beta0)?;
    let noise = noise_level(sigma2, dec.n())?;
    let f = tuning.factors(dec.s().as_slice())?;
    let s = dec.s();
    Ok(RiskSplit {
        bias: (0..dec.p()).map(|i| w[i].powi(2) * f[i].residual.powi(2)).sum(),
        variance: noise * (0..dec.p()).map(|i| f[i].fit.powi(2) / s[i]).sum::<f64>(),
    })
}

/// Bayes estimation risk under the spherical prior; depends on the data only
/// through the spectrum.
pub fn bayes_risk(s: &[f64], alpha: f64, sigma2: f64, n: usize, tuning: Tuning<'_>) -> Result<RiskSplit> {
    require_positive("alpha", alpha)?;
    let noise = noise_level(sigma2, n)?;
    let f = tuning.factors(s)?;
    Ok(RiskSplit {
        bias: noise * alpha * f.iter().map(|fi| fi.residual.powi(2)).sum::<f64>(),
        variance: noise * f.iter().zip(s).map(|(fi, &si)| fi.fit.powi(2) / si).sum::<f64>(),
    })
}

/// `E[||X beta_hat - X beta0||^2 / n | beta0]`.
pub fn insample_risk(
    dec: &SpectralDecomposition,
    beta0: &DVector<f64>,
    sigma2: f64,
    tuning: Tuning<'_>,
) -> Result<RiskSplit> {
    let w = rotated_beta(dec, beta0)?;
    let noise = noise_level(sigma2, dec.n())?;
    let f = tuning.factors(dec.s().as_slice())?;
    let s = dec.s();
    Ok(RiskSplit {
        bias: (0..dec.p()).map(|i| w[i].powi(2) * s[i] * f[i].residual.powi(2)).sum(),
        variance: noise * f.iter().map(|fi| fi.fit.powi(2)).sum::<f64>(),
    })
}

pub fn bayes_insample_risk(s: &[f64], alpha: f64, sigma2: f64, n: usize, tuning: Tuning<'_>) -> Result<RiskSplit> {
    require_positive("alpha", alpha)?;
    let noise = noise_level(sigma2, n)?;
    let f = tuning.factors(s)?;
    Ok(RiskSplit {
        bias: noise * alpha * f.iter().zip(s).map(|(fi, &si)| si * fi.residual.powi(2)).sum::<f64>(),
        variance: noise * f.iter().map(|fi| fi.fit.powi(2)).sum::<f64>(),
    })
}

/// `V^T Sigma V`, or `None` for the identity.
fn rotated_covariance(dec: &SpectralDecomposition, cov: &CovarianceSpec) -> Result<Option<DMatrix<f64>>> {
    cov.check_dim(dec.p())?;
    Ok(match cov {
        CovarianceSpec::Identity => None,
        CovarianceSpec::Explicit(sigma) => Some(dec.v().tr_mul(&(sigma * dec.v()))),
    })
}

/// `E[(x0^T beta_hat - x0^T beta0)^2 | beta0]` for `x0 ~ (0, Sigma)`.
pub fn outsample_risk(
    dec: &SpectralDecomposition,
    beta0: &DVector<f64>,
    sigma2: f64,
    cov: &CovarianceSpec,
    tuning: Tuning<'_>,
) -> Result<RiskSplit> {
    let Some(w) = rotated_covariance(dec, cov)? else {
        return estimation_risk(dec, beta0, sigma2, tuning);
    };
    let proj = rotated_beta(dec, beta0)?;
    let noise = noise_level(sigma2, dec.n())?;
    let f = tuning.factors(dec.s().as_slice())?;
    let s = dec.s();
    let biased = DVector::from_iterator(dec.p(), (0..dec.p()).map(|i| f[i].residual * proj[i]));
    Ok(RiskSplit {
        bias: biased.dot(&(&w * &biased)),
        variance: noise * (0..dec.p()).map(|i| f[i].fit.powi(2) / s[i] * w[(i, i)]).sum::<f64>(),
    })
}

pub fn bayes_outsample_risk(
    dec: &SpectralDecomposition,
    alpha: f64,
    sigma2: f64,
    cov: &CovarianceSpec,
    tuning: Tuning<'_>,
) -> Result<RiskSplit> {
    let Some(w) = rotated_covariance(dec, cov)? else {
        return bayes_risk(dec.s().as_slice(), alpha, sigma2, dec.n(), tuning);
    };
    require_positive("alpha", alpha)?;
    let noise = noise_level(sigma2, dec.n())?;
    let f = tuning.factors(dec.s().as_slice())?;
    let s = dec.s();
    Ok(RiskSplit {
        bias: noise * alpha * (0..dec.p()).map(|i| f[i].residual.powi(2) * w[(i, i)]).sum::<f64>(),
        variance: noise * (0..dec.p()).map(|i| f[i].fit.powi(2) / s[i] * w[(i, i)]).sum::<f64>(),
    })
}

pub fn risk_mgf(
    dec: &SpectralDecomposition,
    beta0: &DVector<f64>,
    sigma2: f64,
    momentum: &MomentumSpec,
    t: f64,
) -> Result<f64> {
    estimation_risk(dec, beta0, sigma2, Tuning::Mgf { momentum, t }).map(|r| r.total())
}

pub fn risk_ridge(dec: &SpectralDecomposition, beta0: &DVector<f64>, sigma2: f64, lambda: f64) -> Result<f64> {
    estimation_risk(dec, beta0, sigma2, Tuning::Ridge { lambda }).map(|r| r.total())
}

pub fn risk_gf(dec: &SpectralDecomposition, beta0: &DVector<f64>, sigma2: f64, t: f64) -> Result<f64> {
    estimation_risk(dec, beta0, sigma2, Tuning::Gf { t }).map(|r| r.total())
}

/// `sigma^2/n sum_i [alpha H^2 + (1 - H)^2 / s_i]`.
pub fn bayes_risk_mgf(s: &[f64], alpha: f64, sigma2: f64, n: usize, momentum: &MomentumSpec, t: f64) -> Result<f64> {
    bayes_risk(s, alpha, sigma2, n, Tuning::Mgf { momentum, t }).map(|r| r.total())
}

/// `sigma^2/n sum_i (alpha lambda^2 + s_i) / (s_i + lambda)^2`.
pub fn bayes_risk_ridge(s: &[f64], alpha: f64, sigma2: f64, n: usize, lambda: f64) -> Result<f64> {
    bayes_risk(s, alpha, sigma2, n, Tuning::Ridge { lambda }).map(|r| r.total())
}

pub fn bayes_risk_gf(s: &[f64], alpha: f64, sigma2: f64, n: usize, t: f64) -> Result<f64> {
    bayes_risk(s, alpha, sigma2, n, Tuning::Gf { t }).map(|r| r.total())
}

/// Optimal ridge penalty and its calibrated MGF stopping time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalTuning {
    pub lambda_star: f64,
    pub t_star: f64,
}

/// `lambda* = 1 / alpha`, `t* = sqrt(2 alpha)`.
pub fn optimal_tuning(alpha: f64) -> Result<OptimalTuning> {
    require_positive("alpha", alpha)?;
    Ok(OptimalTuning {
        lambda_star: 1.0 / alpha,
        t_star: (2.0 * alpha).sqrt(),
    })
}

/// Everything needed to evaluate any risk kind on one design.
#[derive(Debug, Clone, Copy)]
pub struct RiskProblem<'a> {
    pub x: &'a DMatrix<f64>,
    pub dec: &'a SpectralDecomposition,
    /// True coefficients for the fixed-`beta0` kinds; ignored by Bayes kinds.
    pub beta0: &'a DVector<f64>,
    pub prior: PriorSpec,
    pub cov: &'a CovarianceSpec,
}

impl RiskProblem<'_> {
    pub fn closed_form(&self, kind: RiskKind, tuning: Tuning<'_>) -> Result<RiskSplit> {
        let (s, alpha, sigma2, n) = (self.dec.s().as_slice(), self.prior.alpha(), self.prior.sigma2(), self.dec.n());
        match kind {
            RiskKind::Estimation => estimation_risk(self.dec, self.beta0, sigma2, tuning),
            RiskKind::Bayes => bayes_risk(s, alpha, sigma2, n, tuning),
            RiskKind::InSample => insample_risk(self.dec, self.beta0, sigma2, tuning),
            RiskKind::BayesInSample => bayes_insample_risk(s, alpha, sigma2, n, tuning),
            RiskKind::OutSample => outsample_risk(self.dec, self.beta0, sigma2, self.cov, tuning),
            RiskKind::BayesOutSample => bayes_outsample_risk(self.dec, alpha, sigma2, self.cov, tuning),
        }
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
}

impl MonteCarloEstimate {
    /// `|value - mean|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (value - self.mean).abs() / self.std_error
    }
}

/// Empirical risk from `trials` independent draws of the noise (and of
/// `beta0` for Bayes kinds, `x0` for out-of-sample kinds). The estimator is
/// refitted on every simulated response. Trial `k` draws from stream `k` of
/// `seed`, so results do not depend on evaluation order.
pub fn monte_carlo_risk(
    problem: &RiskProblem<'_>,
    kind: RiskKind,
    tuning: Tuning<'_>,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if trials < 100 {
        return Err(invalid("trials", format!("need at least 100, got {trials}")));
    }
    let (n, p) = problem.x.shape();
    if problem.dec.n() != n || problem.dec.p() != p {
        return Err(Error::Dimension("decomposition does not match the design".into()));
    }
    let sigma = problem.prior.sigma2().sqrt();
    let prior_scale = (problem.prior.r2() / p as f64).sqrt();
    let out_of_sample = matches!(kind, RiskKind::OutSample | RiskKind::BayesOutSample);
    let cov_root = out_of_sample.then(|| problem.cov.sqrt(p));
    problem.cov.check_dim(p)?;

    let mut losses = Vec::with_capacity(trials);
    for k in 0..trials {
        let mut rng = seeded_rng(seed, k as u64);
        let beta0 = if kind.is_bayes() {
            standard_normal_vector(&mut rng, p) * prior_scale
        } else {
            problem.beta0.clone()
        };
        let y = problem.x * &beta0 + standard_normal_vector(&mut rng, n) * sigma;
        let err = estimate(problem.dec, &y, tuning)? - &beta0;
        let loss = match kind {
            RiskKind::Estimation | RiskKind::Bayes => err.norm_squared(),
            RiskKind::InSample | RiskKind::BayesInSample => (problem.x * &err).norm_squared() / n as f64,
            RiskKind::OutSample | RiskKind::BayesOutSample => {
                let root = cov_root.as_ref().expect("computed for out-of-sample kinds");
                let x0 = root * standard_normal_vector(&mut rng, p);
                x0.dot(&err).powi(2)
            }
        };
        losses.push(loss);
    }
    let mean = losses.iter().sum::<f64>() / trials as f64;
    let var = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / trials as f64).sqrt(),
    })
}
