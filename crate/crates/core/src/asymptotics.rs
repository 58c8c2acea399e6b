//! Marchenko-Pastur limits of the Bayes risks when `p / n -> gamma` and the
//! features are isotropic.
//!
//! Integrals against the standard M-P law are computed by Gauss-Legendre
//! quadrature after the substitution `s = a + (b - a) sin^2(theta)`, which
//! cancels the square-root vanishing of the density at both edges.

use std::f64::consts::PI;

use crate::error::{require_nonnegative, require_positive, Error, Result};
use crate::estimators::Shrink;
use crate::shrinkage::{transfer_unchecked, MuRule};

pub const DEFAULT_NODES: usize = 256;

/// Standard Marchenko-Pastur law with aspect ratio `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpLaw {
    gamma: f64,
    a: f64,
    b: f64,
    point_mass: f64,
}

impl MpLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        require_positive("gamma", gamma)?;
        let r = gamma.sqrt();
        Ok(Self {
            gamma,
            a: (1.0 - r).powi(2),
            b: (1.0 + r).powi(2),
            point_mass: (1.0 - 1.0 / gamma).max(0.0),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Lower support edge `(1 - sqrt(gamma))^2`.
    pub fn lower(&self) -> f64 {
        self.a
    }

    /// Upper support edge `(1 + sqrt(gamma))^2`.
    pub fn upper(&self) -> f64 {
        self.b
    }

    /// Atom at the origin, `max(0, 1 - 1/gamma)`.
    pub fn point_mass(&self) -> f64 {
        self.point_mass
    }

    /// Density of the continuous part; zero outside `[a, b]`.
    pub fn density(&self, s: f64) -> f64 {
        if s <= self.a || s >= self.b || s <= 0.0 {
            return 0.0;
        }
        ((self.b - s) * (s - self.a)).sqrt() / (2.0 * PI * self.gamma * s)
    }

    /// `int f dF_gamma` with `nodes` Gauss-Legendre points on the continuous
    /// part, plus `point_mass * f(0)` when `gamma > 1`. `f(0.0)` must return
    /// the right limit of `f` at the origin.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, nodes: usize) -> Result<f64> {
        let rule = GaussLegendre::new(nodes)?;
        let width = self.b - self.a;
        let half_range = PI / 4.0;
        let mut total = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let theta = half_range * (x + 1.0);
            let (sin, cos) = theta.sin_cos();
            let s = self.a + width * sin * sin;
            let value = f(s);
            if !value.is_finite() {
                return Err(Error::NonFinite { s, value });
            }
            // density(s) ds = width^2 sin^2 cos^2 / (pi gamma s) dtheta
            let jacobian = width * width * sin * sin * cos * cos / (PI * self.gamma * s);
            total += w * half_range * jacobian * value;
        }
        if self.point_mass > 0.0 {
            let value = f(0.0);
            if !value.is_finite() {
                return Err(Error::NonFinite { s: 0.0, value });
            }
            total += self.point_mass * value;
        }
        Ok(total)
    }

    /// Mass of the continuous part on `[a, s]`.
    pub fn cdf_continuous(&self, s: f64, rule: &GaussLegendre) -> f64 {
        if s <= self.a {
            return 0.0;
        }
        let width = self.b - self.a;
        let theta = ((s.min(self.b) - self.a) / width).sqrt().asin();
        rule.integrate(0.0, theta, |theta| {
            let (sin, cos) = theta.sin_cos();
            let s = self.a + width * sin * sin;
            width * width * sin * sin * cos * cos / (PI * self.gamma * s)
        })
    }

    /// `count` midpoint quantiles of the law, in descending order: a
    /// deterministic spectrum shaped like a large Wishart sample. Requires
    /// `gamma <= 1` so that every quantile is positive.
    pub fn quantile_spectrum(&self, count: usize) -> Result<Vec<f64>> {
        if self.gamma > 1.0 {
            return Err(crate::error::invalid("gamma", "quantile spectra need gamma <= 1"));
        }
        if count == 0 {
            return Err(crate::error::invalid("count", "must be positive"));
        }
        let rule = GaussLegendre::new(64)?;
        let mut out: Vec<f64> = (0..count)
            .map(|k| {
                let target = (k as f64 + 0.5) / count as f64;
                let (mut lo, mut hi) = (self.a, self.b);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf_continuous(mid, &rule) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        out.reverse();
        Ok(out)
    }
}

pub fn mp_density(s: f64, gamma: f64) -> Result<f64> {
    Ok(MpLaw::new(gamma)?.density(s))
}

pub fn mp_integrate(f: impl Fn(f64) -> f64, gamma: f64, nodes: usize) -> Result<f64> {
    MpLaw::new(gamma)?.integrate(f, nodes)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Roots of `P_count` by Newton iteration on the three-term recurrence.
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(crate::error::invalid("nodes", "must be positive"));
        }
        let m = count as f64;
        let mut nodes = vec![0.0; count];
        let mut weights = vec![0.0; count];
        for i in 0..count.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (m + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre(count, x);
                deriv = dp;
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, dp) = legendre(count, x);
                    deriv = dp;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            nodes[i] = -x;
            nodes[count - 1 - i] = x;
            weights[i] = w;
            weights[count - 1 - i] = w;
        }
        Ok(Self { nodes, weights })
    }

    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Prior in the proportional limit: `alpha0 = r^2 / (sigma^2 gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticPrior {
    alpha0: f64,
    sigma2: f64,
}

impl AsymptoticPrior {
    pub fn new(r2: f64, sigma2: f64, gamma: f64) -> Result<Self> {
        require_positive("r2", r2)?;
        require_positive("sigma2", sigma2)?;
        require_positive("gamma", gamma)?;
        Ok(Self {
            alpha0: r2 / (sigma2 * gamma),
            sigma2,
        })
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn r2(&self, gamma: f64) -> f64 {
        self.alpha0 * self.sigma2 * gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weighting {
    Estimation,
    InSample,
}

/// `sigma^2 gamma int [alpha0 h^2 + phi^2 / s] dF` (estimation) or
/// `sigma^2 gamma int [alpha0 s h^2 + phi^2] dF` (in-sample).
fn limiting_risk(
    gamma: f64,
    prior: &AsymptoticPrior,
    nodes: usize,
    weighting: Weighting,
    shrink: impl Fn(f64) -> Shrink,
) -> Result<f64> {
    let law = MpLaw::new(gamma)?;
    let alpha0 = prior.alpha0();
    let integral = law.integrate(
        |s| {
            let f = shrink(s);
            match weighting {
                Weighting::Estimation if s == 0.0 => alpha0,
                Weighting::Estimation => alpha0 * f.residual.powi(2) + f.fit.powi(2) / s,
                Weighting::InSample => alpha0 * s * f.residual.powi(2) + f.fit.powi(2),
            }
        },
        nodes,
    )?;
    Ok(prior.sigma2() * gamma * integral)
}

fn mgf_shrink(rule: MuRule, t: f64) -> impl Fn(f64) -> Shrink {
    move |s| Shrink::from_residual(transfer_unchecked(s, rule.mu(s), t))
}

fn ridge_shrink(lambda: f64) -> impl Fn(f64) -> Shrink {
    move |s| Shrink {
        fit: s / (s + lambda),
        residual: lambda / (s + lambda),
    }
}

fn gf_shrink(t: f64) -> impl Fn(f64) -> Shrink {
    move |s| Shrink {
        fit: -(-s * t).exp_m1(),
        residual: (-s * t).exp(),
    }
}

fn check_rule(rule: MuRule) -> Result<()> {
    if let MuRule::Offset(delta) = rule {
        require_nonnegative("delta", delta)?;
    }
    Ok(())
}

/// Limit of the MGF Bayes risk, friction `mu(s)` given pointwise by `rule`.
pub fn limiting_bayes_risk_mgf(gamma: f64, prior: &AsymptoticPrior, rule: MuRule, t: f64, nodes: usize) -> Result<f64> {
    require_nonnegative("t", t)?;
    check_rule(rule)?;
    limiting_risk(gamma, prior, nodes, Weighting::Estimation, mgf_shrink(rule, t))
}

/// `sigma^2 gamma int (alpha0 lambda^2 + s) / (s + lambda)^2 dF`.
pub fn limiting_bayes_risk_ridge(gamma: f64, prior: &AsymptoticPrior, lambda: f64, nodes: usize) -> Result<f64> {
    require_positive("lambda", lambda)?;
    limiting_risk(gamma, prior, nodes, Weighting::Estimation, ridge_shrink(lambda))
}

pub fn limiting_bayes_risk_gf(gamma: f64, prior: &AsymptoticPrior, t: f64, nodes: usize) -> Result<f64> {
    require_nonnegative("t", t)?;
    limiting_risk(gamma, prior, nodes, Weighting::Estimation, gf_shrink(t))
}

/// s-weighted analogue of [`limiting_bayes_risk_mgf`] for in-sample prediction.
pub fn limiting_bayes_insample_mgf(
    gamma: f64,
    prior: &AsymptoticPrior,
    rule: MuRule,
    t: f64,
    nodes: usize,
) -> Result<f64> {
    require_nonnegative("t", t)?;
    check_rule(rule)?;
    limiting_risk(gamma, prior, nodes, Weighting::InSample, mgf_shrink(rule, t))
}

pub fn limiting_bayes_insample_ridge(gamma: f64, prior: &AsymptoticPrior, lambda: f64, nodes: usize) -> Result<f64> {
    require_positive("lambda", lambda)?;
    limiting_risk(gamma, prior, nodes, Weighting::InSample, ridge_shrink(lambda))
}
