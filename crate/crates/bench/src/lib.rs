//! Shared fixtures for the benchmarks.

use mgf_core::spectral::{decompose, generate_gaussian_data, sample_prior, sample_response};
use mgf_core::{CovarianceSpec, MomentumSpec, SpectralDecomposition};

pub struct Fixture {
    pub dec: SpectralDecomposition,
    pub y: mgf_core::DVector<f64>,
    pub momentum: MomentumSpec,
}

/// Isotropic design with a prior draw of `beta0` and unit noise.
pub fn fixture(n: usize, p: usize, seed: u64) -> Fixture {
    let x = generate_gaussian_data(n, p, &CovarianceSpec::Identity, seed).expect("valid shape");
    let beta0 = sample_prior(p, 1.0, seed + 1).expect("valid prior");
    let y = sample_response(&x, &beta0, 1.0, seed + 2).expect("valid noise");
    let dec = decompose(&x).expect("full rank");
    let momentum = MomentumSpec::offset(dec.s().as_slice(), 1e-3).expect("admissible");
    Fixture { dec, y, momentum }
}
