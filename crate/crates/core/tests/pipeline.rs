use mgf_core::estimators::{estimate, mgd_run, mgf_estimate, ridge_estimate, ridge_estimate_direct, MgdConfig};
use mgf_core::risk::{estimation_risk, RiskKind};
use mgf_core::shrinkage::{lambda_to_t, t_to_lambda};
use mgf_core::spectral::{generate_gaussian_data, sample_prior, sample_response, CovarianceSpec};
use mgf_core::{Dataset, MomentumSpec, PriorSpec, RiskProblem, Tuning};

fn instance(seed: u64) -> (Dataset, nalgebra::DVector<f64>) {
    let x = generate_gaussian_data(80, 30, &CovarianceSpec::Identity, seed).unwrap();
    let beta0 = sample_prior(30, 1.0, seed + 1).unwrap();
    let y = sample_response(&x, &beta0, 0.5, seed + 2).unwrap();
    (Dataset::new(x, y).unwrap(), beta0)
}

#[test]
fn spectral_ridge_matches_normal_equations() {
    let (data, _) = instance(3);
    let dec = data.decompose().unwrap();
    for &lambda in &[1e-3, 0.1, 2.0] {
        let a = ridge_estimate(&dec, data.y(), lambda).unwrap();
        let b = ridge_estimate_direct(&data, lambda).unwrap();
        assert!((&a - &b).norm() < 1e-9 * (1.0 + b.norm()));
    }
}

#[test]
fn calibrated_mgf_and_ridge_paths_stay_close() {
    let (data, _) = instance(4);
    let dec = data.decompose().unwrap();
    let momentum = MomentumSpec::offset(dec.s().as_slice(), 1e-3).unwrap();
    for &t in &[0.3, 1.0, 3.0, 10.0] {
        let lambda = t_to_lambda(t).unwrap();
        assert!((lambda_to_t(lambda).unwrap() - t).abs() < 1e-12 * t);
        let a = mgf_estimate(&dec, data.y(), &momentum, t).unwrap();
        let b = ridge_estimate(&dec, data.y(), lambda).unwrap();
        // coordinatewise shrinkage differs by at most the envelope slack
        assert!((&a - &b).norm() <= 0.25 * b.norm(), "t = {t}");
    }
}

#[test]
fn heavy_ball_iterates_track_the_flow() {
    let (data, _) = instance(5);
    let dec = data.decompose().unwrap();
    let momentum = MomentumSpec::offset(dec.s().as_slice(), 1e-3).unwrap();
    let config = MgdConfig::new(1e-3, 2000, momentum.clone()).unwrap();
    let traj = mgd_run(&dec, data.y(), &config).unwrap();
    let last = traj.betas().last().unwrap();
    let exact = mgf_estimate(&dec, data.y(), &momentum, 2.0).unwrap();
    assert!((last - &exact).norm() < 1e-2 * (1.0 + exact.norm()));
    let times: Vec<f64> = traj.times().collect();
    assert_eq!(times.len(), traj.betas().len());
    assert!((times.last().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn closed_form_risk_is_the_expected_loss_identity() {
    // risk at beta0 with zero noise collapses to the squared bias
    let (data, beta0) = instance(6);
    let dec = data.decompose().unwrap();
    let y = data.x() * &beta0;
    for tuning in [Tuning::Ridge { lambda: 0.3 }, Tuning::Gf { t: 2.0 }] {
        let est = estimate(&dec, &y, tuning).unwrap();
        let bias = (est - &beta0).norm_squared();
        let split = estimation_risk(&dec, &beta0, 1.0, tuning).unwrap();
        assert!((split.bias - bias).abs() < 1e-10 * (1.0 + bias));
    }
}

#[test]
fn every_kind_evaluates_for_every_family() {
    let (data, beta0) = instance(8);
    let dec = data.decompose().unwrap();
    let cov = CovarianceSpec::Identity;
    let problem = RiskProblem {
        x: data.x(),
        dec: &dec,
        beta0: &beta0,
        prior: PriorSpec::new(1.0, 0.5, 80, 30).unwrap(),
        cov: &cov,
    };
    let momentum = MomentumSpec::offset(dec.s().as_slice(), 1e-3).unwrap();
    let tunings = [
        Tuning::Mgf { momentum: &momentum, t: 1.0 },
        Tuning::Ridge { lambda: 1.0 },
        Tuning::Gf { t: 1.0 },
    ];
    for kind in RiskKind::ALL {
        for tuning in tunings {
            let split = problem.closed_form(kind, tuning).unwrap();
            assert!(split.bias >= 0.0 && split.variance >= 0.0, "{} {:?}", kind.name(), tuning.family());
        }
    }
    // identity covariance: out-of-sample equals estimation risk
    for tuning in tunings {
        let a = problem.closed_form(RiskKind::OutSample, tuning).unwrap().total();
        let b = problem.closed_form(RiskKind::Estimation, tuning).unwrap().total();
        assert!((a - b).abs() < 1e-12);
    }
}
