//! Estimator paths: exact MGF, ridge, gradient flow, and the discrete
//! momentum gradient descent (MGD) iteration that MGF approximates.
//!
//! All three continuous families are linear smoothers that rescale the
//! least-squares solution coordinatewise in the right singular basis.

use nalgebra::DVector;

use crate::error::{invalid, require_nonnegative, require_positive, Error, Result};
use crate::shrinkage::{transfer_unchecked, MomentumSpec};
use crate::spectral::{Dataset, PriorSpec, SpectralDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Mgf,
    Ridge,
    Gf,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Mgf => "mgf",
            Family::Ridge => "ridge",
            Family::Gf => "gf",
        }
    }
}

/// One point on an estimator path.
#[derive(Debug, Clone, Copy)]
pub enum Tuning<'a> {
    Mgf { momentum: &'a MomentumSpec, t: f64 },
    Ridge { lambda: f64 },
    Gf { t: f64 },
}

impl Tuning<'_> {
    pub fn family(&self) -> Family {
        match self {
            Tuning::Mgf { .. } => Family::Mgf,
            Tuning::Ridge { .. } => Family::Ridge,
            Tuning::Gf { .. } => Family::Gf,
        }
    }

    /// `t` or `lambda`.
    pub fn value(&self) -> f64 {
        match *self {
            Tuning::Mgf { t, .. } | Tuning::Gf { t } => t,
            Tuning::Ridge { lambda } => lambda,
        }
    }

    fn validate(&self, s: &[f64]) -> Result<()> {
        match *self {
            Tuning::Mgf { momentum, t } => {
                require_nonnegative("t", t)?;
                momentum.check_admissible(s)
            }
            Tuning::Ridge { lambda } => require_positive("lambda", lambda),
            Tuning::Gf { t } => require_nonnegative("t", t),
        }
    }

    /// Per-eigendirection `(phi, 1 - phi)`, each evaluated without
    /// subtracting from one where a direct form exists.
    pub fn factors(&self, s: &[f64]) -> Result<Vec<Shrink>> {
        self.validate(s)?;
        Ok(match *self {
            Tuning::Mgf { momentum, t } => s
                .iter()
                .zip(momentum.mu())
                .map(|(&si, &mu)| Shrink::from_residual(transfer_unchecked(si, mu, t)))
                .collect(),
            Tuning::Ridge { lambda } => s
                .iter()
                .map(|&si| Shrink {
                    fit: si / (si + lambda),
                    residual: lambda / (si + lambda),
                })
                .collect(),
            Tuning::Gf { t } => s
                .iter()
                .map(|&si| Shrink {
                    fit: -(-si * t).exp_m1(),
                    residual: (-si * t).exp(),
                })
                .collect(),
        })
    }
}

/// Shrinkage `fit = phi` applied to a spectral coordinate and its
/// complement `residual = 1 - phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shrink {
    pub fit: f64,
    pub residual: f64,
}

impl Shrink {
    pub fn from_residual(residual: f64) -> Self {
        Self {
            fit: 1.0 - residual,
            residual,
        }
    }
}

/// `V diag(phi_i / sqrt(s_i)) U^T y / sqrt(n)`.
pub fn estimate(dec: &SpectralDecomposition, y: &DVector<f64>, tuning: Tuning<'_>) -> Result<DVector<f64>> {
    let c = dec.project_response(y)?;
    let factors = tuning.factors(dec.s().as_slice())?;
    let w = DVector::from_iterator(
        dec.p(),
        factors
            .iter()
            .zip(c.iter().zip(dec.s().iter()))
            .map(|(f, (&ci, &si))| f.fit * ci / si.sqrt()),
    );
    Ok(dec.v() * w)
}

pub fn mgf_estimate(
    dec: &SpectralDecomposition,
    y: &DVector<f64>,
    momentum: &MomentumSpec,
    t: f64,
) -> Result<DVector<f64>> {
    estimate(dec, y, Tuning::Mgf { momentum, t })
}

/// Ridge solution `(X^T X + n lambda I)^{-1} X^T y`, computed spectrally.
pub fn ridge_estimate(dec: &SpectralDecomposition, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    estimate(dec, y, Tuning::Ridge { lambda })
}

/// Ridge solution by Cholesky factorization of the regularized normal equations.
pub fn ridge_estimate_direct(data: &Dataset, lambda: f64) -> Result<DVector<f64>> {
    require_positive("lambda", lambda)?;
    let x = data.x();
    let n = data.n() as f64;
    let mut gram = x.tr_mul(x);
    for i in 0..data.p() {
        gram[(i, i)] += n * lambda;
    }
    let rhs = x.tr_mul(data.y());
    gram.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| invalid("lambda", "regularized Gram matrix is not positive definite"))
}

pub fn gf_estimate(dec: &SpectralDecomposition, y: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    estimate(dec, y, Tuning::Gf { t })
}

/// Ordinary least squares `V S^{-1/2} U^T y / sqrt(n)`.
pub fn ols_estimate(dec: &SpectralDecomposition, y: &DVector<f64>) -> Result<DVector<f64>> {
    let c = dec.project_response(y)?;
    let w = c.zip_map(dec.s(), |ci, si| ci / si.sqrt());
    Ok(dec.v() * w)
}

/// `X beta_hat = U diag(phi) U^T y`.
pub fn fitted_values(dec: &SpectralDecomposition, y: &DVector<f64>, tuning: Tuning<'_>) -> Result<DVector<f64>> {
    let factors = tuning.factors(dec.s().as_slice())?;
    let mut proj = dec.u().tr_mul(y);
    for (pi, f) in proj.iter_mut().zip(&factors) {
        *pi *= f.fit;
    }
    Ok(dec.u() * proj)
}

/// `E ||beta_hat||^2 = sum_i phi_i^2 (r^2/p + sigma^2 / (n s_i))` under the
/// spherical prior and homoscedastic noise.
pub fn expected_sq_norm(s: &[f64], prior: &PriorSpec, n: usize, tuning: Tuning<'_>) -> Result<f64> {
    let factors = tuning.factors(s)?;
    let per_coord_signal = prior.r2() / s.len() as f64;
    let noise = prior.sigma2() / n as f64;
    Ok(factors
        .iter()
        .zip(s)
        .map(|(f, &si)| f.fit * f.fit * (per_coord_signal + noise / si))
        .sum())
}

/// Step size, iteration count and friction of the rescaled heavy-ball method
/// `v_{k+1} = (1 - mu eps) v_k - eps g(beta_k)`, `beta_{k+1} = beta_k + eps v_{k+1}`.
#[derive(Debug, Clone)]
pub struct MgdConfig {
    epsilon: f64,
    k_max: usize,
    momentum: MomentumSpec,
}

impl MgdConfig {
    pub fn new(epsilon: f64, k_max: usize, momentum: MomentumSpec) -> Result<Self> {
        require_positive("epsilon", epsilon)?;
        if epsilon >= 1.0 {
            return Err(invalid("epsilon", format!("must be < 1, got {epsilon}")));
        }
        if k_max == 0 {
            return Err(invalid("k_max", "must be positive"));
        }
        let mu_limit = epsilon.powf(-0.5);
        if let Some((i, mu)) = momentum.mu().iter().enumerate().find(|(_, &mu)| mu >= mu_limit) {
            return Err(invalid(
                "momentum",
                format!("mu[{i}] = {mu} must be < epsilon^(-1/2) = {mu_limit}"),
            ));
        }
        Ok(Self {
            epsilon,
            k_max,
            momentum,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn momentum(&self) -> &MomentumSpec {
        &self.momentum
    }

    fn check(&self, dec: &SpectralDecomposition) -> Result<()> {
        self.momentum.check_admissible(dec.s().as_slice())?;
        let stability = self.epsilon * self.epsilon * dec.s_max();
        if stability >= 4.0 {
            return Err(invalid(
                "epsilon",
                format!("eps^2 s_max = {stability} violates the stability limit 4"),
            ));
        }
        Ok(())
    }
}

/// MGD iterates `beta_0 .. beta_{k_max}` at times `t_k = k eps`.
#[derive(Debug, Clone)]
pub struct MgdTrajectory {
    betas: Vec<DVector<f64>>,
    epsilon: f64,
}

impl MgdTrajectory {
    pub fn betas(&self) -> &[DVector<f64>] {
        &self.betas
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.betas.len()).map(move |k| k as f64 * self.epsilon)
    }
}

/// Runs MGD on the least-squares loss from `beta_0 = 0` and
/// `v_0 = -eps X^T y / (2 n (1 - mu eps))`, so that `beta_1 = eps^2 X^T y / (2n)`.
///
/// The recursion runs per eigendirection in the `V` basis, where the
/// gradient decouples into `s_i w_i - sqrt(s_i) c_i` with `c = U^T y / sqrt(n)`.
pub fn mgd_run(dec: &SpectralDecomposition, y: &DVector<f64>, config: &MgdConfig) -> Result<MgdTrajectory> {
    config.check(dec)?;
    let eps = config.epsilon;
    let c = dec.project_response(y)?;
    let s = dec.s();
    let mu = config.momentum.mu();
    let p = dec.p();

    // X^T y / n in the V basis
    let grad0 = c.zip_map(s, |ci, si| si.sqrt() * ci);
    let limit = 1e6 * ols_estimate(dec, y)?.norm();

    let mut v = DVector::from_iterator(p, (0..p).map(|i| -eps * grad0[i] / (2.0 * (1.0 - mu[i] * eps))));
    let mut w: DVector<f64> = DVector::zeros(p);
    let mut betas = Vec::with_capacity(config.k_max + 1);
    betas.push(DVector::zeros(p));
    for k in 1..=config.k_max {
        for i in 0..p {
            let g = s[i] * w[i] - grad0[i];
            v[i] = (1.0 - mu[i] * eps) * v[i] - eps * g;
            w[i] += eps * v[i];
        }
        let norm = w.norm();
        if !norm.is_finite() || norm > limit {
            return Err(Error::Diverged {
                iteration: k,
                norm,
                limit,
            });
        }
        betas.push(dec.v() * &w);
    }
    Ok(MgdTrajectory { betas, epsilon: eps })
}

/// `max_{1 <= k <= floor(T / eps)} ||beta_mgf(k eps) - beta_k||`.
pub fn discretization_gap(
    dec: &SpectralDecomposition,
    y: &DVector<f64>,
    momentum: &MomentumSpec,
    horizon: f64,
    epsilon: f64,
) -> Result<f64> {
    require_positive("T", horizon)?;
    // guard against T/eps landing just below an integer
    let k_max = (horizon / epsilon * (1.0 + 1e-12)).floor() as usize;
    let config = MgdConfig::new(epsilon, k_max.max(1), momentum.clone())?;
    let traj = mgd_run(dec, y, &config)?;
    let mut gap = 0.0f64;
    for (k, beta) in traj.betas.iter().enumerate().skip(1) {
        let exact = mgf_estimate(dec, y, momentum, k as f64 * epsilon)?;
        gap = gap.max((exact - beta).norm());
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use crate::shrinkage::{phi_mgf, transfer};
    use crate::spectral::{decompose, generate_gaussian_data, sample_prior, sample_response, CovarianceSpec};

    fn instance(n: usize, p: usize, seed: u64) -> (Dataset, SpectralDecomposition) {
        let x = generate_gaussian_data(n, p, &CovarianceSpec::Identity, seed).unwrap();
        let beta0 = sample_prior(p, 1.0, seed + 100).unwrap();
        let y = sample_response(&x, &beta0, 1.0, seed + 200).unwrap();
        let data = Dataset::new(x, y).unwrap();
        let dec = data.decompose().unwrap();
        (data, dec)
    }

    fn normal_equations(data: &Dataset) -> DVector<f64> {
        let x = data.x();
        x.tr_mul(x).lu().solve(&x.tr_mul(data.y())).unwrap()
    }

    fn default_momentum(dec: &SpectralDecomposition) -> MomentumSpec {
        MomentumSpec::offset(dec.s().as_slice(), 1e-3).unwrap()
    }

    #[test]
    fn mgf_at_zero_and_infinity() {
        let (data, dec) = instance(5, 3, 1);
        let m = default_momentum(&dec);
        assert_eq!(mgf_estimate(&dec, data.y(), &m, 0.0).unwrap(), DVector::zeros(3));
        let far = mgf_estimate(&dec, data.y(), &m, 1e6).unwrap();
        let ols = normal_equations(&data);
        assert!((far - &ols).norm() <= 1e-6 * ols.norm().max(1.0));
    }

    #[test]
    fn single_feature_scalar_formula() {
        let x = DMatrix::from_column_slice(2, 1, &[2.0, 0.0]);
        let y = DVector::from_vec(vec![2.0, 0.0]);
        let data = Dataset::new(x, y).unwrap();
        let dec = data.decompose().unwrap();
        let m = MomentumSpec::offset(&[2.0], 1e-3).unwrap();
        for &t in &[0.1, 0.5, 1.0, 3.0] {
            let beta = mgf_estimate(&dec, data.y(), &m, t).unwrap();
            let expected = 1.0 - transfer(2.0, 2.0 * 2f64.sqrt() + 1e-3, t).unwrap();
            assert!((beta[0] - expected).abs() < 1e-14);
        }
        let config = MgdConfig::new(1e-3, 1000, m.clone()).unwrap();
        let traj = mgd_run(&dec, data.y(), &config).unwrap();
        let last = traj.betas().last().unwrap()[0];
        let exact = 1.0 - transfer(2.0, m.mu()[0], 1.0).unwrap();
        assert!((last - exact).abs() < 1e-2);
    }

    #[test]
    fn path_consistency_in_v_basis() {
        let (data, dec) = instance(40, 10, 2);
        let m = default_momentum(&dec);
        let ols_coords = dec.v().tr_mul(&ols_estimate(&dec, data.y()).unwrap());
        for &t in &[0.2, 1.0, 5.0] {
            let coords = dec.v().tr_mul(&mgf_estimate(&dec, data.y(), &m, t).unwrap());
            for i in 0..10 {
                let phi = phi_mgf(dec.s()[i], m.mu()[i], t).unwrap();
                assert!((coords[i] - phi * ols_coords[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ridge_limits_and_direct_solve() {
        let (data, dec) = instance(50, 20, 3);
        let ols = normal_equations(&data);
        let tiny = ridge_estimate(&dec, data.y(), 1e12).unwrap();
        assert!(tiny.norm() <= 1e-9 * ols.norm());
        for &lambda in &[1e-3, 0.1, 1.0, 10.0] {
            let spectral = ridge_estimate(&dec, data.y(), lambda).unwrap();
            let direct = ridge_estimate_direct(&data, lambda).unwrap();
            assert!((spectral - direct).abs().max() <= 1e-9);
        }
        let near_ols = ridge_estimate(&dec, data.y(), 1e-12).unwrap();
        assert!((near_ols - &ols).norm() < 1e-8 * ols.norm());
        assert!(ridge_estimate(&dec, data.y(), 0.0).is_err());
    }

    #[test]
    fn ridge_scalar_problem() {
        // n = 1, x = 1 gives s = 1 and c = y
        let data = Dataset::new(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 3.0)).unwrap();
        let dec = data.decompose().unwrap();
        let beta = ridge_estimate(&dec, data.y(), 2.0).unwrap();
        assert!((beta[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gf_matches_exponential_formula() {
        let (data, dec) = instance(5, 3, 4);
        assert_eq!(gf_estimate(&dec, data.y(), 0.0).unwrap(), DVector::zeros(3));
        let ols = ols_estimate(&dec, data.y()).unwrap();
        assert!((gf_estimate(&dec, data.y(), 1e6).unwrap() - &ols).norm() < 1e-10);
        let c = dec.u().tr_mul(data.y()) / 5f64.sqrt();
        let t = 0.7;
        let w = DVector::from_iterator(
            3,
            (0..3).map(|i| {
                let s = dec.s()[i];
                (1.0 - (-s * t).exp()) * c[i] / s.sqrt()
            }),
        );
        assert!((gf_estimate(&dec, data.y(), t).unwrap() - dec.v() * w).abs().max() < 1e-10);
    }

    #[test]
    fn extreme_ends_coincide() {
        let (data, dec) = instance(30, 8, 5);
        let m = default_momentum(&dec);
        let ols = ols_estimate(&dec, data.y()).unwrap();
        let tol = 1e-8 * ols.norm();
        assert!((mgf_estimate(&dec, data.y(), &m, 1e7).unwrap() - &ols).norm() < tol);
        assert!((gf_estimate(&dec, data.y(), 1e7).unwrap() - &ols).norm() < tol);
        assert!((ridge_estimate(&dec, data.y(), 1e-14).unwrap() - &ols).norm() < tol);
        assert!(ridge_estimate(&dec, data.y(), 1e14).unwrap().norm() < tol);
    }

    #[test]
    fn fitted_values_match_direct_product() {
        let (data, dec) = instance(50, 20, 6);
        let m = default_momentum(&dec);
        let tunings = [
            Tuning::Mgf { momentum: &m, t: 1.3 },
            Tuning::Ridge { lambda: 0.4 },
            Tuning::Gf { t: 2.0 },
        ];
        for tuning in tunings {
            let fitted = fitted_values(&dec, data.y(), tuning).unwrap();
            let direct = data.x() * estimate(&dec, data.y(), tuning).unwrap();
            assert!((fitted - direct).abs().max() <= 1e-10);
        }
        let zero = fitted_values(&dec, data.y(), Tuning::Mgf { momentum: &m, t: 0.0 }).unwrap();
        assert_eq!(zero, DVector::zeros(50));
        // lambda -> 0: projection of y onto col(X)
        let proj = dec.u() * dec.u().tr_mul(data.y());
        let nearly = fitted_values(&dec, data.y(), Tuning::Ridge { lambda: 1e-13 }).unwrap();
        assert!((nearly - proj).abs().max() < 1e-10);
    }

    #[test]
    fn mgd_initialization() {
        let (data, dec) = instance(50, 20, 7);
        let m = default_momentum(&dec);
        let eps = 1e-2;
        let traj = mgd_run(&dec, data.y(), &MgdConfig::new(eps, 5, m).unwrap()).unwrap();
        assert_eq!(traj.betas()[0], DVector::zeros(20));
        let expected = data.x().tr_mul(data.y()) * (eps * eps / (2.0 * 50.0));
        assert!((&traj.betas()[1] - expected).abs().max() < 1e-15);
        assert_eq!(traj.times().nth(3), Some(3.0 * eps));
    }

    #[test]
    fn mgd_zero_response_stays_zero() {
        let (_, dec) = instance(20, 5, 8);
        let m = default_momentum(&dec);
        let y = DVector::zeros(20);
        let traj = mgd_run(&dec, &y, &MgdConfig::new(1e-2, 50, m.clone()).unwrap()).unwrap();
        assert!(traj.betas().iter().all(|b| b.norm() == 0.0));
        assert_eq!(discretization_gap(&dec, &y, &m, 1.0, 1e-2).unwrap(), 0.0);
    }

    #[test]
    fn mgd_tracks_flow_to_first_order() {
        let (data, dec) = instance(50, 20, 9);
        let m = default_momentum(&dec);
        let g1 = discretization_gap(&dec, data.y(), &m, 1.0, 1e-3).unwrap();
        let g2 = discretization_gap(&dec, data.y(), &m, 1.0, 5e-4).unwrap();
        assert!(g1 <= 1e-2, "gap {g1}");
        assert!((0.4..0.6).contains(&(g2 / g1)), "ratio {}", g2 / g1);
        let coarse: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&e| discretization_gap(&dec, data.y(), &m, 1.0, e).unwrap())
            .collect();
        assert!(coarse.windows(2).all(|w| w[1] < w[0]));
        let r = coarse[0] / coarse[1];
        assert!((1.7..2.3).contains(&r), "ratio {r}");
    }

    #[test]
    fn mgd_config_validation() {
        let m = MomentumSpec::offset(&[1.0], 1e-3).unwrap();
        assert!(MgdConfig::new(1.5, 10, m.clone()).is_err());
        assert!(MgdConfig::new(0.0, 10, m.clone()).is_err());
        assert!(MgdConfig::new(0.1, 0, m.clone()).is_err());
        // mu = 2.001 requires eps < 1 / mu^2
        assert!(MgdConfig::new(0.3, 10, m.clone()).is_err());
        assert!(MgdConfig::new(0.2, 10, m).is_ok());
    }

    #[test]
    fn mgd_rejects_mismatched_momentum() {
        let (data, dec) = instance(20, 5, 10);
        let m = MomentumSpec::offset(&[1.0, 1.0], 1e-3).unwrap();
        let cfg = MgdConfig::new(1e-2, 10, m).unwrap();
        assert!(matches!(mgd_run(&dec, data.y(), &cfg), Err(Error::Dimension(_))));
    }

    #[test]
    fn expected_norm_properties_and_monte_carlo() {
        let (n, p) = (100, 50);
        let x = generate_gaussian_data(n, p, &CovarianceSpec::Identity, 21).unwrap();
        let dec = decompose(&x).unwrap();
        let s = dec.s().as_slice();
        let prior = PriorSpec::new(1.0, 1.0, n, p).unwrap();
        let m = default_momentum(&dec);

        assert_eq!(expected_sq_norm(s, &prior, n, Tuning::Mgf { momentum: &m, t: 0.0 }).unwrap(), 0.0);
        let norms: Vec<f64> = (0..60)
            .map(|k| expected_sq_norm(s, &prior, n, Tuning::Mgf { momentum: &m, t: 0.1 * k as f64 }).unwrap())
            .collect();
        assert!(norms.windows(2).all(|w| w[1] >= w[0]));
        let ridge: Vec<f64> = (0..60)
            .map(|k| expected_sq_norm(s, &prior, n, Tuning::Ridge { lambda: 0.01 * (k + 1) as f64 }).unwrap())
            .collect();
        assert!(ridge.windows(2).all(|w| w[1] <= w[0]));
        let far = expected_sq_norm(s, &prior, n, Tuning::Mgf { momentum: &m, t: 1e7 }).unwrap();
        let ridge0 = expected_sq_norm(s, &prior, n, Tuning::Ridge { lambda: 1e-14 }).unwrap();
        assert!((far - ridge0).abs() < 1e-9 * far);

        let t = 1.5;
        let closed = expected_sq_norm(s, &prior, n, Tuning::Mgf { momentum: &m, t }).unwrap();
        let trials = 2000;
        let mut draws = DMatrix::zeros(p, trials);
        for k in 0..trials as u64 {
            let beta0 = sample_prior(p, 1.0, 10_000 + k).unwrap();
            let y = sample_response(&x, &beta0, 1.0, 20_000 + k).unwrap();
            draws.set_column(k as usize, &mgf_estimate(&dec, &y, &m, t).unwrap());
        }
        let sq: Vec<f64> = draws.column_iter().map(|c| c.norm_squared()).collect();
        let mean = sq.iter().sum::<f64>() / trials as f64;
        let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!((mean - closed).abs() < 3.0 * se, "mc {mean} closed {closed} se {se}");
    }
}
