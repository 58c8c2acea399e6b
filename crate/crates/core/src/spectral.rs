//! Data matrices, their spectral decomposition, and seeded Gaussian sampling.
//!
//! The decomposition follows the convention `X = sqrt(n) U S^{1/2} V^T`, so the
//! entries of `s` are the eigenvalues of the sample covariance `X^T X / n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, require_positive, Error, Result};

/// Relative rank tolerance: `s_p < RANK_TOLERANCE * s_1` is rejected.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Deterministic RNG for `(seed, stream)`. Distinct streams never overlap.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn standard_normal_vector<R: Rng>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// A design matrix with its response.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if p == 0 || n == 0 {
            return Err(Error::Dimension("empty data matrix".into()));
        }
        if p > n {
            return Err(Error::Dimension(format!("need p <= n, got n = {n}, p = {p}")));
        }
        if y.len() != n {
            return Err(Error::Dimension(format!(
                "response has length {}, expected {n}",
                y.len()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn decompose(&self) -> Result<SpectralDecomposition> {
        decompose(&self.x)
    }
}

/// Thin SVD of a full-column-rank `n x p` matrix, scaled so that
/// `X = sqrt(n) * U * diag(sqrt(s)) * V^T`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    s: DVector<f64>,
    n: usize,
}

impl SpectralDecomposition {
    /// `n x p`, orthonormal columns.
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// `p x p` orthogonal.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Eigenvalues of `X^T X / n`, non-increasing and strictly positive.
    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn s_max(&self) -> f64 {
        self.s[0]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.s.len()
    }

    /// `U^T y / sqrt(n)`: the response in the left singular basis.
    pub fn project_response(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.n {
            return Err(Error::Dimension(format!(
                "response has length {}, expected {}",
                y.len(),
                self.n
            )));
        }
        Ok(self.u.tr_mul(y) / (self.n as f64).sqrt())
    }

    /// `sqrt(n) U diag(sqrt(s)) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= self.s[j].sqrt();
        }
        (us * self.v.transpose()) * (self.n as f64).sqrt()
    }
}

/// Thin SVD of `x` in the `sqrt(n) U S^{1/2} V^T` convention.
pub fn decompose(x: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let (n, p) = x.shape();
    if p == 0 || p > n {
        return Err(Error::Dimension(format!("need 1 <= p <= n, got n = {n}, p = {p}")));
    }
    let svd = x.clone().svd(true, true);
    let u_raw = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = svd.singular_values;

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));

    let nf = n as f64;
    let s = DVector::from_iterator(p, order.iter().map(|&i| sigma[i] * sigma[i] / nf));
    let u = DMatrix::from_columns(&order.iter().map(|&i| u_raw.column(i)).collect::<Vec<_>>());
    let v = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| v_t.row(i).transpose())
            .collect::<Vec<_>>(),
    );

    let (s_max, s_min) = (s[0], s[p - 1]);
    if !(s_min > RANK_TOLERANCE * s_max) || !s_min.is_finite() {
        return Err(Error::RankDeficient { s_min, s_max });
    }
    Ok(SpectralDecomposition { u, v, s, n })
}

/// Eigenvalues of `X^T X / n` in descending order, without singular vectors.
/// Enough for the Bayes risks, which see the design only through `s`.
pub fn sample_spectrum(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    if p == 0 || p > n {
        return Err(Error::Dimension(format!("need 1 <= p <= n, got n = {n}, p = {p}")));
    }
    let gram = x.tr_mul(x) / n as f64;
    let mut s = gram.symmetric_eigenvalues().as_slice().to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let (s_max, s_min) = (s[0], s[p - 1]);
    if !(s_min > RANK_TOLERANCE * s_max) || !s_min.is_finite() {
        return Err(Error::RankDeficient { s_min, s_max });
    }
    Ok(s)
}

/// Signal strength, noise level and the derived SNR `alpha = r2 n / (sigma2 p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    r2: f64,
    sigma2: f64,
    alpha: f64,
}

impl PriorSpec {
    pub fn new(r2: f64, sigma2: f64, n: usize, p: usize) -> Result<Self> {
        require_positive("r2", r2)?;
        require_positive("sigma2", sigma2)?;
        if n == 0 || p == 0 {
            return Err(invalid("n, p", "must be positive"));
        }
        let alpha = r2 * n as f64 / (sigma2 * p as f64);
        Ok(Self { r2, sigma2, alpha })
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Covariance of the feature law `x0 ~ (0, Sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    Identity,
    Explicit(DMatrix<f64>),
}

impl CovarianceSpec {
    /// Validates symmetry (1e-12) and positive semidefiniteness (-1e-10).
    pub fn explicit(sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::Dimension("covariance must be square".into()));
        }
        let asym = (&sigma - sigma.transpose()).abs().max();
        if asym > 1e-12 {
            return Err(Error::NotPsd(format!("asymmetry {asym:e}")));
        }
        let min_eig = SymmetricEigen::new(sigma.clone()).eigenvalues.min();
        if min_eig < -1e-10 {
            return Err(Error::NotPsd(format!("eigenvalue {min_eig:e}")));
        }
        Ok(Self::Explicit(sigma))
    }

    pub fn check_dim(&self, p: usize) -> Result<()> {
        match self {
            Self::Identity => Ok(()),
            Self::Explicit(m) if m.nrows() == p => Ok(()),
            Self::Explicit(m) => Err(Error::Dimension(format!(
                "covariance is {}x{}, features have p = {p}",
                m.nrows(),
                m.ncols()
            ))),
        }
    }

    pub fn matrix(&self, p: usize) -> DMatrix<f64> {
        match self {
            Self::Identity => DMatrix::identity(p, p),
            Self::Explicit(m) => m.clone(),
        }
    }

    /// Symmetric PSD square root. Diagonal matrices take the exact elementwise root.
    pub fn sqrt(&self, p: usize) -> DMatrix<f64> {
        match self {
            Self::Identity => DMatrix::identity(p, p),
            Self::Explicit(m) => {
                let off_diag = m
                    .iter()
                    .enumerate()
                    .any(|(k, &v)| k % (p + 1) != 0 && v != 0.0);
                if !off_diag {
                    return DMatrix::from_diagonal(&m.diagonal().map(|d| d.max(0.0).sqrt()));
                }
                let eig = SymmetricEigen::new(m.clone());
                let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
                &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
            }
        }
    }
}

/// `X = Z Sigma^{1/2}` with `Z` i.i.d. standard normal, filled row by row.
pub fn generate_gaussian_data(
    n: usize,
    p: usize,
    cov: &CovarianceSpec,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if p == 0 || p > n {
        return Err(Error::Dimension(format!("need 1 <= p <= n, got n = {n}, p = {p}")));
    }
    cov.check_dim(p)?;
    let mut rng = seeded_rng(seed, 0);
    let z = DMatrix::from_row_iterator(n, p, (0..n * p).map(|_| rng.sample::<f64, _>(StandardNormal)));
    Ok(match cov {
        CovarianceSpec::Identity => z,
        _ => z * cov.sqrt(p),
    })
}

/// `y = X beta0 + sigma * z`, `z` i.i.d. standard normal.
pub fn sample_response(
    x: &DMatrix<f64>,
    beta0: &DVector<f64>,
    sigma2: f64,
    seed: u64,
) -> Result<DVector<f64>> {
    require_positive("sigma2", sigma2)?;
    let mean = noiseless_response(x, beta0)?;
    let mut rng = seeded_rng(seed, 1);
    Ok(mean + standard_normal_vector(&mut rng, x.nrows()) * sigma2.sqrt())
}

/// `y = X beta0`, the zero-noise response.
pub fn noiseless_response(x: &DMatrix<f64>, beta0: &DVector<f64>) -> Result<DVector<f64>> {
    if beta0.len() != x.ncols() {
        return Err(Error::Dimension(format!(
            "beta0 has length {}, expected {}",
            beta0.len(),
            x.ncols()
        )));
    }
    Ok(x * beta0)
}

/// `beta0 ~ N(0, r2/p I)`.
pub fn sample_prior(p: usize, r2: f64, seed: u64) -> Result<DVector<f64>> {
    require_positive("r2", r2)?;
    if p == 0 {
        return Err(invalid("p", "must be positive"));
    }
    let mut rng = seeded_rng(seed, 2);
    Ok(standard_normal_vector(&mut rng, p) * (r2 / p as f64).sqrt())
}
