use mgf_core::asymptotics::{
    limiting_bayes_insample_mgf, limiting_bayes_insample_ridge, limiting_bayes_risk_mgf, limiting_bayes_risk_ridge,
    mp_integrate, AsymptoticPrior, DEFAULT_NODES,
};
use mgf_core::estimators::Tuning;
use mgf_core::risk::{bayes_insample_risk, bayes_risk};
use mgf_core::spectral::{generate_gaussian_data, sample_spectrum, CovarianceSpec};
use mgf_core::{MomentumSpec, MuRule, PriorSpec};

fn wishart_spectrum(n: usize, p: usize, seed: u64) -> Vec<f64> {
    let x = generate_gaussian_data(n, p, &CovarianceSpec::Identity, seed).unwrap();
    sample_spectrum(&x).unwrap()
}

#[test]
fn moments_agree_with_simulated_wishart() {
    for &(n, p) in &[(2000, 500), (2000, 1000)] {
        let gamma = p as f64 / n as f64;
        let s = wishart_spectrum(n, p, 31);
        let m1 = s.iter().sum::<f64>() / p as f64;
        let m2 = s.iter().map(|v| v * v).sum::<f64>() / p as f64;
        let q1 = mp_integrate(|v| v, gamma, DEFAULT_NODES).unwrap();
        let q2 = mp_integrate(|v| v * v, gamma, DEFAULT_NODES).unwrap();
        // fluctuations of linear spectral statistics are O(1/p)
        assert!((m1 - q1).abs() < 0.01, "gamma {gamma}: {m1} vs {q1}");
        assert!((m2 - q2).abs() < 0.03, "gamma {gamma}: {m2} vs {q2}");
    }
}

fn gap_at(n: usize, t: f64, seed: u64) -> f64 {
    let gamma = 0.5;
    let p = n / 2;
    let s = wishart_spectrum(n, p, seed);
    let alpha = PriorSpec::new(1.0, 1.0, n, p).unwrap().alpha();
    let momentum = MomentumSpec::offset(&s, 1e-3).unwrap();
    let finite = bayes_risk(&s, alpha, 1.0, n, Tuning::Mgf { momentum: &momentum, t }).unwrap().total();
    let prior = AsymptoticPrior::new(1.0, 1.0, gamma).unwrap();
    let limit = limiting_bayes_risk_mgf(gamma, &prior, MuRule::default(), t, DEFAULT_NODES).unwrap();
    (finite - limit).abs()
}

#[test]
fn finite_sample_gap_shrinks_with_n() {
    let ns = [250, 500, 1000, 2000];
    for &t in &[1.0, 5.0] {
        // average a few seeds per size to tame the spectral noise
        let gaps: Vec<f64> = ns
            .iter()
            .map(|&n| (0..3).map(|k| gap_at(n, t, 40 + k)).sum::<f64>() / 3.0)
            .collect();
        let violations = gaps.windows(2).filter(|w| w[1] >= w[0]).count();
        assert!(violations <= 1, "t = {t}: {gaps:?}");
        assert!(gaps[3] < gaps[0], "t = {t}: {gaps:?}");
    }
}

#[test]
fn insample_limits_match_finite_sample() {
    let (n, p, gamma) = (1000, 500, 0.5);
    let s = wishart_spectrum(n, p, 2024);
    let alpha = PriorSpec::new(1.0, 1.0, n, p).unwrap().alpha();
    let momentum = MomentumSpec::offset(&s, 1e-3).unwrap();
    let prior = AsymptoticPrior::new(1.0, 1.0, gamma).unwrap();
    for &t in &[0.1, 0.5, 1.0, 3.0, 10.0, 50.0] {
        let finite = bayes_insample_risk(&s, alpha, 1.0, n, Tuning::Mgf { momentum: &momentum, t }).unwrap().total();
        let limit = limiting_bayes_insample_mgf(gamma, &prior, MuRule::default(), t, DEFAULT_NODES).unwrap();
        assert!((finite - limit).abs() < 0.02 * limit, "mgf t = {t}: {finite} vs {limit}");
        let lambda = 2.0 / (t * t);
        let finite = bayes_insample_risk(&s, alpha, 1.0, n, Tuning::Ridge { lambda }).unwrap().total();
        let limit = limiting_bayes_insample_ridge(gamma, &prior, lambda, DEFAULT_NODES).unwrap();
        assert!((finite - limit).abs() < 0.02 * limit, "ridge t = {t}: {finite} vs {limit}");
    }
}

#[test]
fn ridge_limit_at_the_optimum() {
    let (n, p, gamma) = (1000, 500, 0.5);
    let s = wishart_spectrum(n, p, 7);
    let prior = AsymptoticPrior::new(1.0, 1.0, gamma).unwrap();
    let lambda = 1.0 / prior.alpha0();
    let finite = bayes_risk(&s, prior.alpha0(), 1.0, n, Tuning::Ridge { lambda }).unwrap().total();
    let limit = limiting_bayes_risk_ridge(gamma, &prior, lambda, DEFAULT_NODES).unwrap();
    assert!((finite - limit).abs() < 0.02 * limit);
}

#[test]
fn insample_limit_at_time_zero_is_signal_strength() {
    for &gamma in &[0.3, 1.0, 2.5] {
        let prior = AsymptoticPrior::new(1.7, 0.4, gamma).unwrap();
        let v = limiting_bayes_insample_mgf(gamma, &prior, MuRule::Critical, 0.0, DEFAULT_NODES).unwrap();
        assert!((v - 1.7).abs() < 1e-8, "gamma {gamma}: {v}");
    }
}
