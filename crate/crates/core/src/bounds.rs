//! Grid verification of the inequalities that tie MGF to ridge: pointwise
//! envelopes of the transfer function, the calibrated-optimum inequality, the
//! uniform risk-ratio factor and the optima-ratio interval.

use crate::error::{invalid, require_positive, Error, Result};
use crate::estimators::{Family, Tuning};
use crate::grid::log_grid;
use crate::risk::{bayes_risk, RiskCurve, RiskKind, RiskPoint, RiskProblem};
use crate::shrinkage::{transfer_unchecked, Calibration, MomentumSpec, MuRule};

/// `H(s,t) (1 + s t^2/2)` stays below this.
pub const FIT_ENVELOPE: f64 = 1.24;
/// `(1 - H) (1 + s t^2/2) / (s t^2/2)` stays below this.
pub const SHRINK_ENVELOPE: f64 = 1.04;
/// Uniform factor between MGF at `t` and ridge at `2/t^2`.
pub const RISK_RATIO_BOUND: f64 = 1.5376;
/// Ceiling of the ratio of optimal risks.
pub const OPTIMA_RATIO_BOUND: f64 = 1.035;
/// GF counterparts of the two ratios above, under `lambda = 1/t`.
pub const GF_RISK_RATIO_CEILING: f64 = 1.6862;
pub const GF_OPTIMA_RATIO_CEILING: f64 = 1.2147;
/// Slack below 1 allowed for the optima ratio.
pub const OPTIMA_LOWER_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub sup_ratio: f64,
    /// Grid point attaining the sup, e.g. `(s, t)` or `(s, alpha)`.
    pub argmax: (f64, f64),
    pub bound: f64,
    pub satisfied: bool,
}

impl BoundReport {
    fn new(sup_ratio: f64, argmax: (f64, f64), bound: f64) -> Self {
        Self {
            sup_ratio,
            argmax,
            bound,
            satisfied: sup_ratio < bound,
        }
    }
}

/// Running maximum over a grid; NaN ratios are kept so they surface.
struct SupTracker {
    best: f64,
    at: (f64, f64),
}

impl SupTracker {
    fn new() -> Self {
        Self {
            best: f64::NEG_INFINITY,
            at: (f64::NAN, f64::NAN),
        }
    }

    fn offer(&mut self, value: f64, at: (f64, f64)) {
        if value > self.best || value.is_nan() && !self.best.is_nan() {
            self.best = value;
            self.at = at;
        }
    }

    fn report(self, bound: f64) -> BoundReport {
        BoundReport::new(self.best, self.at, bound)
    }
}

fn check_grid(name: &'static str, grid: &[f64], positive: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(name, "grid is empty"));
    }
    for &v in grid {
        if !v.is_finite() || v < 0.0 || (positive && v == 0.0) {
            return Err(invalid(name, format!("bad grid value {v}")));
        }
    }
    Ok(())
}

fn check_rule(rule: MuRule, s: &[f64]) -> Result<()> {
    MomentumSpec::from_rule(s, rule).map(|_| ())
}

/// Envelopes (fit, shrink) of `H` over the `(s, t)` grid.
pub fn transfer_envelope_check(s_grid: &[f64], t_grid: &[f64], rule: MuRule) -> Result<(BoundReport, BoundReport)> {
    check_grid("s_grid", s_grid, true)?;
    check_grid("t_grid", t_grid, false)?;
    check_rule(rule, s_grid)?;
    let (mut fit, mut shrink) = (SupTracker::new(), SupTracker::new());
    for &s in s_grid {
        let mu = rule.mu(s);
        for &t in t_grid {
            let h = transfer_unchecked(s, mu, t);
            let q = s * t * t / 2.0;
            fit.offer(h * (1.0 + q), (s, t));
            let ratio = if q == 0.0 { 1.0 } else { (1.0 - h) * (1.0 + q) / q };
            shrink.offer(ratio, (s, t));
        }
    }
    Ok((fit.report(FIT_ENVELOPE), shrink.report(SHRINK_ENVELOPE)))
}

/// The calibrated-optimum inequality measured against two right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedOptimumReport {
    /// Against `1 / (s + 1/alpha)`, the ridge Bayes term at `lambda = 1/alpha`.
    pub operational: BoundReport,
    /// Against `1 / (alpha (1 + s))`; agrees with the above only at `alpha = 1`.
    pub printed: BoundReport,
}

/// `alpha H^2 + (1 - H)^2 / s` at `t = sqrt(2 alpha)`, over the `(s, alpha)` grid.
pub fn calibrated_optimum_check(
    s_grid: &[f64],
    alpha_grid: &[f64],
    rule: MuRule,
) -> Result<CalibratedOptimumReport> {
    check_grid("s_grid", s_grid, true)?;
    check_grid("alpha_grid", alpha_grid, true)?;
    check_rule(rule, s_grid)?;
    let (mut operational, mut printed) = (SupTracker::new(), SupTracker::new());
    for &s in s_grid {
        let mu = rule.mu(s);
        for &alpha in alpha_grid {
            let h = transfer_unchecked(s, mu, (2.0 * alpha).sqrt());
            let lhs = alpha * h * h + (1.0 - h).powi(2) / s;
            operational.offer(lhs * (s + 1.0 / alpha), (s, alpha));
            printed.offer(lhs * alpha * (1.0 + s), (s, alpha));
        }
    }
    Ok(CalibratedOptimumReport {
        operational: operational.report(OPTIMA_RATIO_BOUND),
        printed: printed.report(OPTIMA_RATIO_BOUND),
    })
}

/// Family curve over `t_grid` and the ridge curve at the calibrated penalties,
/// ascending in `lambda`.
pub fn calibrated_curves(
    problem: &RiskProblem<'_>,
    kind: RiskKind,
    momentum: Option<&MomentumSpec>,
    calibration: Calibration,
    t_grid: &[f64],
) -> Result<(RiskCurve, RiskCurve)> {
    let family = match calibration {
        Calibration::Mgf => Family::Mgf,
        Calibration::Gf => Family::Gf,
    };
    let curve = RiskCurve::from_fn(family, kind, t_grid, |t| {
        let tuning = match calibration {
            Calibration::Mgf => Tuning::Mgf {
                momentum: momentum.ok_or_else(|| invalid("momentum", "required for MGF curves"))?,
                t,
            },
            Calibration::Gf => Tuning::Gf { t },
        };
        problem.closed_form(kind, tuning).map(|r| r.total())
    })?;
    let mut lambdas = t_grid.iter().map(|&t| calibration.lambda(t)).collect::<Result<Vec<_>>>()?;
    lambdas.reverse();
    let ridge = RiskCurve::from_fn(Family::Ridge, kind, &lambdas, |lambda| {
        problem.closed_form(kind, Tuning::Ridge { lambda }).map(|r| r.total())
    })?;
    Ok((curve, ridge))
}

/// `(t, lambda, family risk, ridge risk)` rows of a calibrated pair of curves.
pub fn paired_points(curve: &RiskCurve, ridge: &RiskCurve, calibration: Calibration) -> Result<Vec<(f64, f64, f64, f64)>> {
    if ridge.family() != Family::Ridge || curve.family() == Family::Ridge {
        return Err(Error::GridMismatch("expected a family curve and a ridge curve".into()));
    }
    if curve.kind() != ridge.kind() {
        return Err(Error::GridMismatch(format!(
            "risk kinds differ: {} vs {}",
            curve.kind().name(),
            ridge.kind().name()
        )));
    }
    let (a, b) = (curve.points(), ridge.points());
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} times but {} penalties", a.len(), b.len())));
    }
    a.iter()
        .zip(b.iter().rev())
        .map(|(&RiskPoint { tuning: t, value: v }, &RiskPoint { tuning: lambda, value: w })| {
            let expected = calibration.lambda(t)?;
            if (lambda - expected).abs() > 1e-9 * expected {
                return Err(Error::GridMismatch(format!(
                    "t = {t} pairs with lambda = {lambda}, expected {expected}"
                )));
            }
            Ok((t, lambda, v, w))
        })
        .collect()
}

/// Sup over the grid of family risk / calibrated ridge risk; `argmax` is `(t, lambda)`.
pub fn calibrated_risk_ratio(curve: &RiskCurve, ridge: &RiskCurve, calibration: Calibration) -> Result<BoundReport> {
    let bound = match calibration {
        Calibration::Mgf => RISK_RATIO_BOUND,
        Calibration::Gf => GF_RISK_RATIO_CEILING,
    };
    let mut sup = SupTracker::new();
    for (t, lambda, v, w) in paired_points(curve, ridge, calibration)? {
        sup.offer(v / w, (t, lambda));
    }
    Ok(sup.report(bound))
}

/// `[1 - slack, bound)` check of a ratio of optimal risks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimaReport {
    /// Family risk at the tuning calibrated to `lambda* = 1/alpha`, over the
    /// ridge optimum. `argmax` is `(alpha, t)`.
    pub calibrated: BoundReport,
    /// Minimum of the family risk over a fine grid around that tuning, over
    /// the ridge optimum. `argmax` is `(alpha, argmin t)`.
    pub infimum: BoundReport,
}

impl OptimaReport {
    pub fn within_interval(&self) -> bool {
        [self.calibrated, self.infimum]
            .iter()
            .all(|r| r.satisfied && r.sup_ratio >= 1.0 - OPTIMA_LOWER_SLACK)
    }
}

/// Log grid `[t*/span, t* span]` searched for the infimum.
const OPTIMUM_SEARCH_POINTS: usize = 2001;
const OPTIMUM_SEARCH_SPAN: f64 = 20.0;

fn optima_report(
    ridge_optimum: f64,
    t_star: f64,
    bound: f64,
    alpha: f64,
    risk: impl Fn(f64) -> Result<f64>,
) -> Result<OptimaReport> {
    let calibrated = risk(t_star)? / ridge_optimum;
    let grid = log_grid(t_star / OPTIMUM_SEARCH_SPAN, t_star * OPTIMUM_SEARCH_SPAN, OPTIMUM_SEARCH_POINTS)?;
    let mut best = (f64::INFINITY, t_star);
    for &t in &grid {
        let v = risk(t)?;
        if v < best.0 {
            best = (v, t);
        }
    }
    Ok(OptimaReport {
        calibrated: BoundReport::new(calibrated, (alpha, t_star), bound),
        infimum: BoundReport::new(best.0 / ridge_optimum, (alpha, best.1), bound),
    })
}

fn ridge_optimum(s: &[f64], alpha: f64, sigma2: f64, n: usize) -> Result<f64> {
    bayes_risk(s, alpha, sigma2, n, Tuning::Ridge { lambda: 1.0 / alpha }).map(|r| r.total())
}

/// Bayes MGF risk at `t* = sqrt(2 alpha)` (and its grid infimum) over the
/// ridge Bayes risk at `lambda* = 1/alpha`.
pub fn optima_ratio(s: &[f64], alpha: f64, sigma2: f64, n: usize, rule: MuRule) -> Result<OptimaReport> {
    require_positive("alpha", alpha)?;
    let momentum = MomentumSpec::from_rule(s, rule)?;
    optima_report(ridge_optimum(s, alpha, sigma2, n)?, (2.0 * alpha).sqrt(), OPTIMA_RATIO_BOUND, alpha, |t| {
        bayes_risk(s, alpha, sigma2, n, Tuning::Mgf { momentum: &momentum, t }).map(|r| r.total())
    })
}

/// GF against ridge under `lambda = 1/t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfReference {
    /// Bayes risk ratio over the grid, against its ceiling.
    pub sup: BoundReport,
    pub optima: OptimaReport,
}

pub fn gf_reference_ratios(s: &[f64], alpha: f64, sigma2: f64, n: usize, t_grid: &[f64]) -> Result<GfReference> {
    require_positive("alpha", alpha)?;
    check_grid("t_grid", t_grid, true)?;
    let mut sup = SupTracker::new();
    for &t in t_grid {
        let lambda = Calibration::Gf.lambda(t)?;
        let v = bayes_risk(s, alpha, sigma2, n, Tuning::Gf { t })?.total();
        let w = bayes_risk(s, alpha, sigma2, n, Tuning::Ridge { lambda })?.total();
        sup.offer(v / w, (t, lambda));
    }
    let optima = optima_report(ridge_optimum(s, alpha, sigma2, n)?, alpha, GF_OPTIMA_RATIO_CEILING, alpha, |t| {
        bayes_risk(s, alpha, sigma2, n, Tuning::Gf { t }).map(|r| r.total())
    })?;
    Ok(GfReference {
        sup: sup.report(GF_RISK_RATIO_CEILING),
        optima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linear_grid;
    use crate::risk::RiskKind;
    use crate::spectral::{decompose, generate_gaussian_data, sample_prior, CovarianceSpec, PriorSpec};

    fn envelope_grids() -> (Vec<f64>, Vec<f64>) {
        (log_grid(1e-3, 10.0, 100).unwrap(), linear_grid(0.0, 40.0, 400).unwrap())
    }

    #[test]
    fn envelopes_at_critical_damping() {
        let (s, t) = envelope_grids();
        let (fit, shrink) = transfer_envelope_check(&s, &t, MuRule::Critical).unwrap();
        let peak = 9.0 * (-2.0f64).exp();
        assert!(fit.satisfied && shrink.satisfied);
        assert!((fit.sup_ratio - peak).abs() < 1e-3, "{}", fit.sup_ratio);
        let (s_at, t_at) = fit.argmax;
        assert!((s_at.sqrt() * t_at - 2.0).abs() < 0.1);
        assert!(shrink.sup_ratio < SHRINK_ENVELOPE);
        assert!(fit.sup_ratio.is_finite() && shrink.sup_ratio.is_finite());
    }

    #[test]
    fn envelopes_at_single_origin_point() {
        let (fit, shrink) = transfer_envelope_check(&[1.0], &[0.0], MuRule::default()).unwrap();
        assert_eq!(fit.sup_ratio, 1.0);
        assert_eq!(shrink.sup_ratio, 1.0);
    }

    #[test]
    fn heavy_friction_breaks_the_fit_envelope() {
        let (s, t) = envelope_grids();
        let (fit, _) = transfer_envelope_check(&s, &t, MuRule::Offset(50.0)).unwrap();
        assert!(!fit.satisfied, "{}", fit.sup_ratio);
    }

    #[test]
    fn envelope_rejects_bad_grids() {
        assert!(transfer_envelope_check(&[], &[1.0], MuRule::Critical).is_err());
        assert!(transfer_envelope_check(&[0.0], &[1.0], MuRule::Critical).is_err());
        assert!(transfer_envelope_check(&[1.0], &[-1.0], MuRule::Critical).is_err());
    }

    #[test]
    fn calibrated_optimum_inequality() {
        let s = log_grid(1e-3, 10.0, 200).unwrap();
        let alpha = log_grid(0.1, 10.0, 200).unwrap();
        for rule in [MuRule::Critical, MuRule::default()] {
            let report = calibrated_optimum_check(&s, &alpha, rule).unwrap();
            assert!(report.operational.satisfied, "{rule:?}: {}", report.operational.sup_ratio);
            assert!(report.operational.sup_ratio.is_finite());
        }
        let at_one = calibrated_optimum_check(&s, &[1.0], MuRule::Critical).unwrap();
        assert_eq!(at_one.operational.sup_ratio, at_one.printed.sup_ratio);
        assert!(at_one.printed.satisfied);
        let large_s = calibrated_optimum_check(&[1e6], &[0.5, 2.0], MuRule::Critical).unwrap();
        assert!(large_s.operational.sup_ratio.is_finite());
    }

    #[test]
    fn risk_ratio_on_a_random_instance() {
        let (n, p) = (100, 50);
        let x = generate_gaussian_data(n, p, &CovarianceSpec::Identity, 5).unwrap();
        let dec = decompose(&x).unwrap();
        let beta0 = sample_prior(p, 1.0, 6).unwrap();
        let cov = CovarianceSpec::Identity;
        let problem = RiskProblem {
            x: &x,
            dec: &dec,
            beta0: &beta0,
            prior: PriorSpec::new(1.0, 1.0, n, p).unwrap(),
            cov: &cov,
        };
        let momentum = MomentumSpec::offset(dec.s().as_slice(), 1e-3).unwrap();
        let t = log_grid(1e-3, 1e2, 120).unwrap();
        for kind in [RiskKind::Estimation, RiskKind::Bayes, RiskKind::InSample] {
            let (mgf, ridge) = calibrated_curves(&problem, kind, Some(&momentum), Calibration::Mgf, &t).unwrap();
            let report = calibrated_risk_ratio(&mgf, &ridge, Calibration::Mgf).unwrap();
            assert!(report.satisfied, "{}: {}", kind.name(), report.sup_ratio);
            // small t: both risks sit at the bias mass
            let rows = paired_points(&mgf, &ridge, Calibration::Mgf).unwrap();
            assert!((rows[0].2 / rows[0].3 - 1.0).abs() < 1e-3);
        }
        let (gf, ridge) = calibrated_curves(&problem, RiskKind::Bayes, None, Calibration::Gf, &t).unwrap();
        assert!(calibrated_risk_ratio(&gf, &ridge, Calibration::Gf).unwrap().satisfied);
        assert!(calibrated_curves(&problem, RiskKind::Bayes, None, Calibration::Mgf, &t).is_err());
    }

    #[test]
    fn mismatched_curves_are_rejected() {
        let t = [0.5, 1.0, 2.0];
        let mgf = RiskCurve::from_fn(Family::Mgf, RiskKind::Bayes, &t, |_| Ok(1.0)).unwrap();
        let wrong = RiskCurve::from_fn(Family::Ridge, RiskKind::Bayes, &[0.5, 1.0, 2.0], |_| Ok(1.0)).unwrap();
        assert!(matches!(
            calibrated_risk_ratio(&mgf, &wrong, Calibration::Mgf),
            Err(Error::GridMismatch(_))
        ));
        let short = RiskCurve::from_fn(Family::Ridge, RiskKind::Bayes, &[0.5, 2.0], |_| Ok(1.0)).unwrap();
        assert!(calibrated_risk_ratio(&mgf, &short, Calibration::Mgf).is_err());
        let lambdas: Vec<f64> = t.iter().rev().map(|t| 2.0 / (t * t)).collect();
        let other_kind = RiskCurve::from_fn(Family::Ridge, RiskKind::InSample, &lambdas, |_| Ok(1.0)).unwrap();
        assert!(calibrated_risk_ratio(&mgf, &other_kind, Calibration::Mgf).is_err());
        let good = RiskCurve::from_fn(Family::Ridge, RiskKind::Bayes, &lambdas, |_| Ok(2.0)).unwrap();
        let report = calibrated_risk_ratio(&mgf, &good, Calibration::Mgf).unwrap();
        assert_eq!(report.sup_ratio, 0.5);
    }

    #[test]
    fn optima_ratio_scalar_spectrum() {
        let report = optima_ratio(&[1.0], 1.0, 1.0, 1, MuRule::default()).unwrap();
        assert!(report.within_interval(), "{report:?}");
        assert!(report.infimum.sup_ratio <= report.calibrated.sup_ratio);
    }

    #[test]
    fn optima_ratio_across_alpha() {
        let x = generate_gaussian_data(200, 100, &CovarianceSpec::Identity, 9).unwrap();
        let s = decompose(&x).unwrap().s().as_slice().to_vec();
        for &alpha in &[0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let report = optima_ratio(&s, alpha, 1.0, 200, MuRule::default()).unwrap();
            assert!(report.within_interval(), "alpha {alpha}: {report:?}");
        }
        assert!(optima_ratio(&s, 0.0, 1.0, 200, MuRule::default()).is_err());
    }

    #[test]
    fn gf_ratios_exceed_mgf_ratios() {
        let x = generate_gaussian_data(200, 100, &CovarianceSpec::Identity, 10).unwrap();
        let s = decompose(&x).unwrap().s().as_slice().to_vec();
        let t = log_grid(1e-2, 1e3, 300).unwrap();
        let gf = gf_reference_ratios(&s, 2.0, 1.0, 200, &t).unwrap();
        assert!(gf.sup.satisfied && gf.optima.within_interval());
        let mgf = optima_ratio(&s, 2.0, 1.0, 200, MuRule::default()).unwrap();
        assert!(mgf.calibrated.sup_ratio < gf.optima.calibrated.sup_ratio);
    }
}
