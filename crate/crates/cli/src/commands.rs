use std::path::PathBuf;

use clap::Args;
use mgf_core::asymptotics::{limiting_bayes_risk_mgf, limiting_bayes_risk_ridge, AsymptoticPrior};
use mgf_core::bounds::{
    calibrated_curves, calibrated_optimum_check, calibrated_risk_ratio, gf_reference_ratios, optima_ratio,
    transfer_envelope_check, BoundReport, OptimaReport, OPTIMA_LOWER_SLACK,
};
use mgf_core::estimators::{discretization_gap, expected_sq_norm};
use mgf_core::grid::log_grid;
use mgf_core::risk::{bayes_risk, RiskKind};
use mgf_core::shrinkage::{phi_gf, phi_mgf, phi_ridge};
use mgf_core::spectral::{decompose, generate_gaussian_data, sample_prior, sample_response};
use mgf_core::{Calibration, CovarianceSpec, MomentumSpec, MuRule, PriorSpec, RiskProblem, Tuning};

use crate::config::{CommonArgs, Defaults, ExperimentConfig, GridSpec, Scale};
use crate::output::{log_x_plot, num, write_file, Series, Table};
use crate::CliError;

/// Files written, informational lines, and failed assertions.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

fn defaults(n: usize, p: usize, t: (f64, f64, usize, Scale)) -> Defaults {
    Defaults {
        n,
        p,
        t: GridSpec::new(t.0, t.1, t.2, t.3).expect("built-in grid is valid"),
    }
}

#[derive(Debug, Clone, Args)]
pub struct ShrinkageArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub s_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = 50)]
    pub s_count: usize,
}

/// MGF, ridge (`lambda = 2/t^2`) and GF shrinkage over an `(s, t)` grid.
pub fn shrinkage_map(args: &ShrinkageArgs) -> Result<Outcome, CliError> {
    let cfg = ExperimentConfig::resolve(&args.common, defaults(1000, 500, (0.1, 100.0, 50, Scale::Log)))?;
    cfg.require_positive_times()?;
    let s_grid = GridSpec::new(args.s_min, args.s_max, args.s_count, Scale::Log)?.points()?;
    let t_grid = cfg.t_grid.points()?;
    let rule = cfg.mu_rule();

    let mut table = Table::new(&["s", "t", "lambda", "phi_mgf", "phi_ridge", "phi_gf"]);
    // max |phi_mgf - s / (s + c / t^2)| for c = 1, 2, 4
    let mut miscalibrated = [0.0f64; 3];
    let (mut first_t, mut last_t) = (0.0f64, 0.0f64);
    for &s in &s_grid {
        let mu = rule.mu(s);
        for (j, &t) in t_grid.iter().enumerate() {
            let lambda = Calibration::Mgf.lambda(t)?;
            let (m, r, g) = (phi_mgf(s, mu, t)?, phi_ridge(s, lambda)?, phi_gf(s, t)?);
            for (slot, c) in miscalibrated.iter_mut().zip([1.0, 2.0, 4.0]) {
                *slot = slot.max((m - phi_ridge(s, c / (t * t))?).abs());
            }
            if j == 0 {
                first_t = first_t.max((m - r).abs());
            }
            if j + 1 == t_grid.len() {
                last_t = last_t.max((m - r).abs());
            }
            table.push(vec![num(s), num(t), num(lambda), num(m), num(r), num(g)]);
        }
    }
    let [c1, c2, c4] = miscalibrated;
    table.summary("max_abs_diff_lambda_2_over_t2", num(c2));
    table.summary("max_abs_diff_lambda_1_over_t2", num(c1));
    table.summary("max_abs_diff_lambda_4_over_t2", num(c4));
    table.summary("max_abs_diff_at_t_min", num(first_t));
    table.summary("max_abs_diff_at_t_max", num(last_t));
    let calibrated_best = c2 < c1 && c2 < c4;
    table.summary("calibration_2_over_t2_best", calibrated_best.to_string());

    let mut out = Outcome::default();
    out.check(calibrated_best, "lambda = 2/t^2 is not the closest calibration");
    out.summary.push(format!(
        "max |phi_mgf - phi_ridge|: {c2:.4} at 2/t^2, {c1:.4} at 1/t^2, {c4:.4} at 4/t^2"
    ));
    out.files.push(table.write(&cfg.out, "shrinkage_map.csv")?);
    if cfg.svg {
        let picks = [0, t_grid.len() / 2, t_grid.len() - 1];
        let mut series = Vec::new();
        for &j in &picks {
            let t = t_grid[j];
            let lambda = Calibration::Mgf.lambda(t)?;
            series.push(Series::new(
                format!("MGF t={t:.3}"),
                s_grid.iter().map(|&s| Ok((s, phi_mgf(s, rule.mu(s), t)?))).collect::<Result<_, CliError>>()?,
            ));
            series.push(Series::new(
                format!("ridge lambda={lambda:.3e}"),
                s_grid.iter().map(|&s| Ok((s, phi_ridge(s, lambda)?))).collect::<Result<_, CliError>>()?,
            ));
        }
        let svg = log_x_plot("Spectral shrinkage maps", "s", "phi(s)", &series);
        out.files.push(write_file(&cfg.out, "shrinkage_map.svg", &svg)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct RiskCurveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Bayes risk curves of MGF, GF and calibrated ridge on one isotropic design.
pub fn risk_curves(args: &RiskCurveArgs) -> Result<Outcome, CliError> {
    let cfg = ExperimentConfig::resolve(&args.common, defaults(1000, 500, (0.1, 100.0, 200, Scale::Log)))?;
    cfg.require_positive_times()?;
    let s = cfg.spectrum()?;
    let prior = cfg.prior()?;
    let (alpha, sigma2, n) = (prior.alpha(), cfg.sigma2, cfg.n);
    let gamma = cfg.gamma();
    let limit_prior = AsymptoticPrior::new(cfg.r2, cfg.sigma2, gamma)?;
    let rule = cfg.mu_rule();
    let momentum = MomentumSpec::from_rule(&s, rule)?;
    let t_grid = cfg.t_grid.points()?;

    let mut table = Table::new(&[
        "t",
        "lambda_mgf",
        "lambda_gf",
        "bayes_mgf",
        "bayes_ridge_at_2_over_t2",
        "bayes_gf",
        "bayes_ridge_at_1_over_t",
        "ratio_mgf",
        "ratio_gf",
        "asymptotic_mgf",
        "asymptotic_ridge",
        "expected_norm_mgf",
        "expected_norm_ridge",
    ]);
    let bayes = |tuning: Tuning<'_>| bayes_risk(&s, alpha, sigma2, n, tuning).map(|r| r.total());
    let (mut max_mgf, mut max_gf, mut max_limit_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut curves: [Vec<(f64, f64)>; 4] = Default::default();
    for &t in &t_grid {
        let lm = Calibration::Mgf.lambda(t)?;
        let lg = Calibration::Gf.lambda(t)?;
        let mgf_tuning = Tuning::Mgf { momentum: &momentum, t };
        let mgf = bayes(mgf_tuning)?;
        let ridge_m = bayes(Tuning::Ridge { lambda: lm })?;
        let gf = bayes(Tuning::Gf { t })?;
        let ridge_g = bayes(Tuning::Ridge { lambda: lg })?;
        let lim_mgf = limiting_bayes_risk_mgf(gamma, &limit_prior, rule, t, cfg.nodes)?;
        let lim_ridge = limiting_bayes_risk_ridge(gamma, &limit_prior, lm, cfg.nodes)?;
        let norm_mgf = expected_sq_norm(&s, &prior, n, mgf_tuning)?;
        let norm_ridge = expected_sq_norm(&s, &prior, n, Tuning::Ridge { lambda: lm })?;
        let (rm, rg) = (mgf / ridge_m, gf / ridge_g);
        max_mgf = max_mgf.max(rm);
        max_gf = max_gf.max(rg);
        max_limit_err = max_limit_err
            .max((mgf - lim_mgf).abs() / lim_mgf)
            .max((ridge_m - lim_ridge).abs() / lim_ridge);
        for (curve, v) in curves.iter_mut().zip([mgf, ridge_m, gf, ridge_g]) {
            curve.push((t, v));
        }
        table.push(
            [t, lm, lg, mgf, ridge_m, gf, ridge_g, rm, rg, lim_mgf, lim_ridge, norm_mgf, norm_ridge]
                .iter()
                .map(|&v| num(v))
                .collect(),
        );
    }
    let optima = optima_ratio(&s, alpha, sigma2, n, rule)?;
    let gf_ref = gf_reference_ratios(&s, alpha, sigma2, n, &t_grid)?;
    table.summary("max_ratio_mgf", num(max_mgf));
    table.summary("optima_ratio_mgf", num(optima.calibrated.sup_ratio));
    table.summary("max_ratio_gf", num(max_gf));
    table.summary("optima_ratio_gf", num(gf_ref.optima.calibrated.sup_ratio));
    table.summary("inf_optima_ratio_mgf", num(optima.infimum.sup_ratio));
    table.summary("inf_optima_ratio_gf", num(gf_ref.optima.infimum.sup_ratio));
    table.summary("alpha", num(alpha));
    table.summary("max_asymptotic_rel_error", num(max_limit_err));

    let mut out = Outcome::default();
    out.check(
        max_mgf < mgf_core::bounds::RISK_RATIO_BOUND,
        format!("max_ratio_mgf {max_mgf} >= {}", mgf_core::bounds::RISK_RATIO_BOUND),
    );
    out.check(optima.within_interval(), format!("optima_ratio_mgf outside interval: {optima:?}"));
    out.check(
        max_gf < mgf_core::bounds::GF_RISK_RATIO_CEILING,
        format!("max_ratio_gf {max_gf} >= {}", mgf_core::bounds::GF_RISK_RATIO_CEILING),
    );
    out.check(gf_ref.optima.within_interval(), format!("optima_ratio_gf exceeds ceiling: {:?}", gf_ref.optima));
    out.summary.push(format!(
        "max_ratio_mgf {max_mgf:.4}, optima_ratio_mgf {:.4}, max_ratio_gf {max_gf:.4}, optima_ratio_gf {:.4}",
        optima.calibrated.sup_ratio, gf_ref.optima.calibrated.sup_ratio
    ));
    out.files.push(table.write(&cfg.out, "risk_curves.csv")?);
    if cfg.svg {
        let names = ["MGF", "ridge (2/t^2)", "GF", "ridge (1/t)"];
        let series: Vec<Series> = names.iter().zip(curves).map(|(n, c)| Series::new(*n, c)).collect();
        let svg = log_x_plot("Bayes risk", "t", "risk", &series);
        out.files.push(write_file(&cfg.out, "risk_curves.svg", &svg)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    /// The t flags set the envelope grid; the risk-ratio grid is log [1e-2, 1e3].
    #[command(flatten)]
    pub common: CommonArgs,
    /// Random designs for the uniform risk-ratio check.
    #[arg(long, default_value_t = 20)]
    pub instances: u64,
}

struct BoundRow<'a> {
    check: &'a str,
    rule: String,
    report: BoundReport,
    satisfied: bool,
    asserted: bool,
}

fn rule_name(rule: MuRule) -> String {
    match rule {
        MuRule::Critical => "critical".into(),
        MuRule::Offset(d) => format!("offset:{d}"),
    }
}

fn optima_satisfied(r: &BoundReport) -> bool {
    r.satisfied && r.sup_ratio >= 1.0 - OPTIMA_LOWER_SLACK
}

/// Grid checks of every bound, one row per report.
pub fn bounds_check(args: &BoundsArgs) -> Result<Outcome, CliError> {
    let cfg = ExperimentConfig::resolve(&args.common, defaults(100, 50, (0.0, 40.0, 400, Scale::Linear)))?;
    if args.instances == 0 {
        return Err(CliError::Config("--instances must be positive".into()));
    }
    let rules = [MuRule::Critical, cfg.mu_rule()];
    let mut rows: Vec<BoundRow<'_>> = Vec::new();
    let push = |rows: &mut Vec<BoundRow<'_>>, check, rule: MuRule, report: BoundReport, asserted| {
        rows.push(BoundRow {
            check,
            rule: rule_name(rule),
            satisfied: report.satisfied,
            report,
            asserted,
        })
    };

    let s_env = log_grid(1e-3, 10.0, 100)?;
    let t_env = cfg.t_grid.points()?;
    for rule in rules {
        let (fit, shrink) = transfer_envelope_check(&s_env, &t_env, rule)?;
        push(&mut rows, "fit_envelope", rule, fit, true);
        push(&mut rows, "shrink_envelope", rule, shrink, true);
    }
    let (s_opt, alpha_opt) = (log_grid(1e-3, 10.0, 200)?, log_grid(0.1, 10.0, 200)?);
    for rule in rules {
        let report = calibrated_optimum_check(&s_opt, &alpha_opt, rule)?;
        push(&mut rows, "calibrated_optimum", rule, report.operational, true);
        // reported for comparison only
        push(&mut rows, "calibrated_optimum_printed_rhs", rule, report.printed, false);
    }

    let kinds = [
        RiskKind::Estimation,
        RiskKind::Bayes,
        RiskKind::InSample,
        RiskKind::BayesInSample,
        RiskKind::BayesOutSample,
    ];
    let mut worst: Vec<Option<BoundReport>> = vec![None; kinds.len()];
    let t_ratio = log_grid(1e-2, 1e3, 200)?;
    let cov = CovarianceSpec::Identity;
    for k in 0..args.instances {
        let x = generate_gaussian_data(cfg.n, cfg.p, &cov, cfg.seed + k)?;
        let dec = decompose(&x)?;
        let beta0 = sample_prior(cfg.p, cfg.r2, cfg.seed + 1000 + k)?;
        let problem = RiskProblem {
            x: &x,
            dec: &dec,
            beta0: &beta0,
            prior: cfg.prior()?,
            cov: &cov,
        };
        let momentum = MomentumSpec::from_rule(dec.s().as_slice(), cfg.mu_rule())?;
        for (slot, kind) in worst.iter_mut().zip(kinds) {
            let (mgf, ridge) = calibrated_curves(&problem, kind, Some(&momentum), Calibration::Mgf, &t_ratio)?;
            let report = calibrated_risk_ratio(&mgf, &ridge, Calibration::Mgf)?;
            if slot.is_none_or(|w| report.sup_ratio > w.sup_ratio) {
                *slot = Some(report);
            }
        }
    }
    let ratio_names = ["risk_ratio_estimation", "risk_ratio_bayes", "risk_ratio_insample", "risk_ratio_bayes_insample", "risk_ratio_bayes_outsample"];
    for (name, report) in ratio_names.iter().zip(worst) {
        push(&mut rows, name, cfg.mu_rule(), report.expect("at least one instance"), true);
    }

    let s = cfg.spectrum()?;
    let add_optima = |rows: &mut Vec<BoundRow<'_>>, name_cal, name_inf, report: OptimaReport, rule| {
        for (check, r) in [(name_cal, report.calibrated), (name_inf, report.infimum)] {
            rows.push(BoundRow {
                check,
                rule: rule_name(rule),
                satisfied: optima_satisfied(&r),
                report: r,
                asserted: true,
            });
        }
    };
    for alpha in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let report = optima_ratio(&s, alpha, cfg.sigma2, cfg.n, cfg.mu_rule())?;
        add_optima(&mut rows, "optima_ratio", "optima_ratio_infimum", report, cfg.mu_rule());
    }
    let alpha = cfg.prior()?.alpha();
    let gf = gf_reference_ratios(&s, alpha, cfg.sigma2, cfg.n, &t_ratio)?;
    push(&mut rows, "gf_risk_ratio", cfg.mu_rule(), gf.sup, true);
    add_optima(&mut rows, "gf_optima_ratio", "gf_optima_ratio_infimum", gf.optima, cfg.mu_rule());

    let mut table = Table::new(&["check", "rule", "sup_ratio", "argmax_1", "argmax_2", "bound", "satisfied", "asserted"]);
    let mut out = Outcome::default();
    for row in &rows {
        let r = row.report;
        table.push(vec![
            row.check.to_string(),
            row.rule.clone(),
            num(r.sup_ratio),
            num(r.argmax.0),
            num(r.argmax.1),
            num(r.bound),
            row.satisfied.to_string(),
            row.asserted.to_string(),
        ]);
        if row.asserted {
            out.check(
                row.satisfied,
                format!("{} ({}) sup {} vs bound {}", row.check, row.rule, r.sup_ratio, r.bound),
            );
        }
    }
    let asserted = rows.iter().filter(|r| r.asserted).count();
    table.summary("asserted_checks", asserted.to_string());
    table.summary("failed_checks", out.failures.len().to_string());
    table.summary("all_asserted_satisfied", out.failures.is_empty().to_string());
    out.summary.push(format!("{asserted} asserted checks, {} failed", out.failures.len()));
    out.files.push(table.write(&cfg.out, "bounds_check.csv")?);
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct DiscretizationArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Horizon T of the comparison.
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Step sizes; each is also run at half its value.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 5e-3])]
    pub epsilons: Vec<f64>,
}

/// Gap between heavy-ball iterates and the exact flow, and its halving ratio.
pub fn discretization(args: &DiscretizationArgs) -> Result<Outcome, CliError> {
    let cfg = ExperimentConfig::resolve(&args.common, defaults(50, 20, (0.1, 100.0, 2, Scale::Log)))?;
    if !(args.horizon > 0.0 && args.horizon.is_finite()) {
        return Err(CliError::Config(format!("--horizon must be positive, got {}", args.horizon)));
    }
    if args.epsilons.is_empty() || args.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(CliError::Config("--epsilons must lie in (0, 1)".into()));
    }
    let x = generate_gaussian_data(cfg.n, cfg.p, &CovarianceSpec::Identity, cfg.seed)?;
    let beta0 = sample_prior(cfg.p, cfg.r2, cfg.seed + 1)?;
    let y = sample_response(&x, &beta0, cfg.sigma2, cfg.seed + 2)?;
    let dec = decompose(&x)?;
    let momentum = MomentumSpec::from_rule(dec.s().as_slice(), cfg.mu_rule())?;

    let mut table = Table::new(&["epsilon", "k_max", "gap", "gap_half", "halving_ratio"]);
    let mut out = Outcome::default();
    let mut points = Vec::new();
    for &eps in &args.epsilons {
        let gap = discretization_gap(&dec, &y, &momentum, args.horizon, eps)?;
        let half = discretization_gap(&dec, &y, &momentum, args.horizon, eps / 2.0)?;
        let ratio = gap / half;
        let k_max = (args.horizon / eps * (1.0 + 1e-12)).floor() as usize;
        table.push(vec![num(eps), k_max.to_string(), num(gap), num(half), num(ratio)]);
        out.check((1.7..=2.3).contains(&ratio), format!("halving ratio {ratio} at epsilon {eps} outside [1.7, 2.3]"));
        out.summary.push(format!("epsilon {eps}: gap {gap:.3e}, halving ratio {ratio:.4}"));
        points.push((eps, gap));
        points.push((eps / 2.0, half));
    }
    table.summary("first_order", out.failures.is_empty().to_string());
    out.files.push(table.write(&cfg.out, "discretization.csv")?);
    if cfg.svg {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        points.dedup_by(|a, b| a.0 == b.0);
        let svg = log_x_plot("Discretization gap", "epsilon", "max gap", &[Series::new("gap", points)]);
        out.files.push(write_file(&cfg.out, "discretization.svg", &svg)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct MpCompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Aspect ratios to compare; defaults to p/n.
    #[arg(long, value_delimiter = ',')]
    pub gammas: Vec<f64>,
    /// Largest allowed sup relative error.
    #[arg(long, default_value_t = 0.02)]
    pub tolerance: f64,
}

/// Finite-sample Bayes risks against their Marchenko-Pastur limits.
pub fn mp_compare(args: &MpCompareArgs) -> Result<Outcome, CliError> {
    let base = ExperimentConfig::resolve(&args.common, defaults(1000, 500, (0.1, 50.0, 100, Scale::Log)))?;
    base.require_positive_times()?;
    let gammas = if args.gammas.is_empty() { vec![base.gamma()] } else { args.gammas.clone() };
    let t_grid = base.t_grid.points()?;
    let mut table = Table::new(&[
        "gamma",
        "n",
        "p",
        "t",
        "lambda",
        "finite_mgf",
        "limit_mgf",
        "rel_err_mgf",
        "finite_ridge",
        "limit_ridge",
        "rel_err_ridge",
    ]);
    let mut out = Outcome::default();
    let mut series = Vec::new();
    for &g in &gammas {
        if !(g > 0.0 && g <= 1.0) {
            return Err(CliError::Config(format!("gamma {g} must lie in (0, 1] for a full-rank design")));
        }
        let mut cfg = base.clone();
        cfg.p = ((g * cfg.n as f64).round() as usize).max(1);
        let gamma = cfg.gamma();
        let s = cfg.spectrum()?;
        let prior = PriorSpec::new(cfg.r2, cfg.sigma2, cfg.n, cfg.p)?;
        let limit_prior = AsymptoticPrior::new(cfg.r2, cfg.sigma2, gamma)?;
        let rule = cfg.mu_rule();
        let momentum = MomentumSpec::from_rule(&s, rule)?;
        let mut worst = 0.0f64;
        let (mut finite_curve, mut limit_curve) = (Vec::new(), Vec::new());
        for &t in &t_grid {
            let lambda = Calibration::Mgf.lambda(t)?;
            let fm = bayes_risk(&s, prior.alpha(), cfg.sigma2, cfg.n, Tuning::Mgf { momentum: &momentum, t })?.total();
            let lm = limiting_bayes_risk_mgf(gamma, &limit_prior, rule, t, cfg.nodes)?;
            let fr = bayes_risk(&s, prior.alpha(), cfg.sigma2, cfg.n, Tuning::Ridge { lambda })?.total();
            let lr = limiting_bayes_risk_ridge(gamma, &limit_prior, lambda, cfg.nodes)?;
            let (em, er) = ((fm - lm).abs() / lm, (fr - lr).abs() / lr);
            worst = worst.max(em).max(er);
            finite_curve.push((t, fm));
            limit_curve.push((t, lm));
            table.push(vec![
                num(gamma),
                cfg.n.to_string(),
                cfg.p.to_string(),
                num(t),
                num(lambda),
                num(fm),
                num(lm),
                num(em),
                num(fr),
                num(lr),
                num(er),
            ]);
        }
        table.summary(&format!("max_rel_err_gamma_{gamma}"), num(worst));
        out.check(worst <= args.tolerance, format!("gamma {gamma}: sup relative error {worst} > {}", args.tolerance));
        out.summary.push(format!("gamma {gamma}: sup relative error {worst:.4}"));
        series.push(Series::new(format!("finite MGF gamma={gamma}"), finite_curve));
        series.push(Series::new(format!("limit MGF gamma={gamma}"), limit_curve));
    }
    table.summary("within_tolerance", out.failures.is_empty().to_string());
    out.files.push(table.write(&base.out, "mp_compare.csv")?);
    if base.svg {
        let svg = log_x_plot("Finite-sample vs limiting Bayes risk", "t", "risk", &series);
        out.files.push(write_file(&base.out, "mp_compare.svg", &svg)?);
    }
    Ok(out)
}
