//! Scalar transfer function of momentum gradient flow and the spectral
//! shrinkage maps of MGF, ridge and plain gradient flow.
//!
//! Along eigendirection `i` the flow reduces to the damped oscillator
//! `h'' + mu_i h' + s_i h = 0` with `h(0) = 1`, `h'(0) = 0`; its solution
//! `H(s, t)` is the fraction of the least-squares coordinate not yet fitted.

use crate::error::{invalid, require_nonnegative, require_positive, Error, Result};

/// Default friction offset above critical damping, `mu_i = 2 sqrt(s_i) + delta`.
pub const DEFAULT_DELTA: f64 = 1e-3;

/// Below this value of `d t / 2` the hyperbolic terms are evaluated by series.
const SERIES_THRESHOLD: f64 = 1e-4;

/// How the friction of each eigendirection is chosen from its eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuRule {
    /// `mu = 2 sqrt(s)`.
    Critical,
    /// `mu = 2 sqrt(s) + delta`.
    Offset(f64),
}

impl MuRule {
    pub fn mu(&self, s: f64) -> f64 {
        match *self {
            MuRule::Critical => 2.0 * s.sqrt(),
            MuRule::Offset(delta) => 2.0 * s.sqrt() + delta,
        }
    }
}

impl Default for MuRule {
    fn default() -> Self {
        MuRule::Offset(DEFAULT_DELTA)
    }
}

/// Per-eigendirection friction coefficients, the diagonal of `D(mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSpec {
    mu: Vec<f64>,
    delta: f64,
}

impl MomentumSpec {
    /// `mu_i = 2 sqrt(s_i) + delta` for a spectrum `s`.
    pub fn offset(s: &[f64], delta: f64) -> Result<Self> {
        require_nonnegative("delta", delta)?;
        Self::from_rule(s, MuRule::Offset(delta))
    }

    pub fn from_rule(s: &[f64], rule: MuRule) -> Result<Self> {
        let delta = match rule {
            MuRule::Critical => 0.0,
            MuRule::Offset(d) => d,
        };
        for (i, &si) in s.iter().enumerate() {
            if !(si >= 0.0) {
                return Err(invalid("s", format!("eigenvalue {i} is {si}")));
            }
        }
        let spec = Self {
            mu: s.iter().map(|&si| rule.mu(si)).collect(),
            delta,
        };
        spec.check_admissible(s)?;
        Ok(spec)
    }

    /// Explicit friction values, checked against the spectrum.
    pub fn from_values(mu: Vec<f64>, s: &[f64]) -> Result<Self> {
        let spec = Self { mu, delta: 0.0 };
        spec.check_admissible(s)?;
        Ok(spec)
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn check_admissible(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.mu.len() {
            return Err(Error::Dimension(format!(
                "momentum has {} entries, spectrum has {}",
                self.mu.len(),
                s.len()
            )));
        }
        for (index, (&mu, &si)) in self.mu.iter().zip(s).enumerate() {
            check_damping(index, si, mu)?;
        }
        Ok(())
    }
}

fn check_damping(index: usize, s: f64, mu: f64) -> Result<()> {
    let critical = 2.0 * s.sqrt();
    if !(mu > 0.0 && mu.is_finite()) || mu < critical {
        return Err(Error::Underdamped { index, mu, critical });
    }
    Ok(())
}

/// Residual factor `H(s, t)` of the overdamped or critically damped flow.
pub fn transfer(s: f64, mu: f64, t: f64) -> Result<f64> {
    require_nonnegative("s", s)?;
    require_nonnegative("t", t)?;
    check_damping(0, s, mu)?;
    Ok(transfer_unchecked(s, mu, t))
}

/// Evaluates `H(s, t)` assuming `mu >= 2 sqrt(s)`, `s >= 0`, `t >= 0`.
///
/// With `d = sqrt(mu^2 - 4 s)` and `x = d t / 2`,
/// `H = e^{-mu t/2} [cosh x + (mu t / 2) sinh(x) / x]`. Small `x` uses the
/// Taylor series; otherwise the expression is rewritten around the slow rate
/// `r_+ = -2 s / (mu + d)` to avoid both overflow and cancellation.
pub(crate) fn transfer_unchecked(s: f64, mu: f64, t: f64) -> f64 {
    let root_s = s.sqrt();
    let d = ((mu - 2.0 * root_s) * (mu + 2.0 * root_s)).max(0.0).sqrt();
    if 0.5 * d * t < SERIES_THRESHOLD {
        transfer_series(mu, d, t)
    } else {
        transfer_exponential(s, mu, d, t)
    }
}

fn transfer_series(mu: f64, d: f64, t: f64) -> f64 {
    let x = 0.5 * d * t;
    let m = 0.5 * mu * t;
    let x2 = x * x;
    let cosh = 1.0 + x2 / 2.0 * (1.0 + x2 / 12.0 * (1.0 + x2 / 30.0));
    let sinhc = 1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0 * (1.0 + x2 / 72.0)));
    (-m).exp() * (cosh + m * sinhc)
}

fn transfer_exponential(s: f64, mu: f64, d: f64, t: f64) -> f64 {
    let x = 0.5 * d * t;
    let slow = (-2.0 * s * t / (mu + d)).exp();
    slow * (0.5 * (1.0 + (-2.0 * x).exp()) + mu / (2.0 * d) * -(-2.0 * x).exp_m1())
}

/// Right-hand side of the first-order system for `(h, h')`.
fn oscillator(s: f64, mu: f64, state: [f64; 2]) -> [f64; 2] {
    [state[1], -mu * state[1] - s * state[0]]
}

fn rk4_step(s: f64, mu: f64, state: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], c: f64| [a[0] + c * b[0], a[1] + c * b[1]];
    let k1 = oscillator(s, mu, state);
    let k2 = oscillator(s, mu, add(state, k1, h / 2.0));
    let k3 = oscillator(s, mu, add(state, k2, h / 2.0));
    let k4 = oscillator(s, mu, add(state, k3, h));
    [
        state[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        state[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Classical RK4 from `h(0) = 1, h'(0) = 0` through each of the sorted
/// `times`, using equal sub-steps no longer than `step` between them.
fn rk4_path(s: f64, mu: f64, times: &[f64], step: f64) -> Vec<f64> {
    let mut state = [1.0, 0.0];
    let mut now = 0.0;
    times
        .iter()
        .map(|&target| {
            let span = target - now;
            if span > 0.0 {
                let count = (span / step).ceil().max(1.0) as usize;
                let h = span / count as f64;
                for _ in 0..count {
                    state = rk4_step(s, mu, state, h);
                }
                now = target;
            }
            state[0]
        })
        .collect()
}

fn check_oracle_step(mu: f64, step: f64) -> Result<()> {
    require_positive("step", step)?;
    let limit = 1e-3 * (1.0f64).min(1.0 / mu);
    if step > limit {
        return Err(invalid("step", format!("must be <= {limit:e}, got {step:e}")));
    }
    Ok(())
}

/// Independent RK4 solution of the scalar oscillator at time `t`.
pub fn transfer_ode_oracle(s: f64, mu: f64, t: f64, step: f64) -> Result<f64> {
    require_nonnegative("s", s)?;
    require_nonnegative("t", t)?;
    check_oracle_step(mu, step)?;
    Ok(rk4_path(s, mu, &[t], step)[0])
}

/// Oracle values at several times from a single integration. `times` must be
/// non-decreasing.
pub fn transfer_ode_oracle_path(s: f64, mu: f64, times: &[f64], step: f64) -> Result<Vec<f64>> {
    require_nonnegative("s", s)?;
    check_oracle_step(mu, step)?;
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "must be nonnegative and non-decreasing"));
    }
    Ok(rk4_path(s, mu, times, step))
}

/// MGF shrinkage `1 - H(s, t)`.
pub fn phi_mgf(s: f64, mu: f64, t: f64) -> Result<f64> {
    Ok(1.0 - transfer(s, mu, t)?)
}

/// Ridge shrinkage `s / (s + lambda)`.
pub fn phi_ridge(s: f64, lambda: f64) -> Result<f64> {
    require_nonnegative("s", s)?;
    require_positive("lambda", lambda)?;
    Ok(s / (s + lambda))
}

/// Gradient-flow shrinkage `1 - e^{-s t}`.
pub fn phi_gf(s: f64, t: f64) -> Result<f64> {
    require_nonnegative("s", s)?;
    require_nonnegative("t", t)?;
    Ok(-(-s * t).exp_m1())
}

/// Eigenvalue `s H / (1 - H)` of the penalty matrix whose ridge-type
/// minimizer coincides with the flow at time `t`.
pub fn effective_regularizer(s: f64, mu: f64, t: f64) -> Result<f64> {
    require_positive("s", s)?;
    require_nonnegative("t", t)?;
    if t == 0.0 {
        return Err(Error::InfiniteRegularization);
    }
    let h = transfer(s, mu, t)?;
    Ok(s * h / (1.0 - h))
}

/// MGF calibration `lambda = 2 / t^2`.
pub fn t_to_lambda(t: f64) -> Result<f64> {
    require_positive("t", t)?;
    Ok(2.0 / (t * t))
}

/// Inverse MGF calibration `t = sqrt(2 / lambda)`.
pub fn lambda_to_t(lambda: f64) -> Result<f64> {
    require_positive("lambda", lambda)?;
    Ok((2.0 / lambda).sqrt())
}

/// Gradient-flow calibration `lambda = 1 / t`.
pub fn gf_t_to_lambda(t: f64) -> Result<f64> {
    require_positive("t", t)?;
    Ok(1.0 / t)
}

/// Pairing between a stopping time and a ridge penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Calibration {
    /// `lambda = 2 / t^2`
    Mgf,
    /// `lambda = 1 / t`
    Gf,
}

impl Calibration {
    pub fn lambda(&self, t: f64) -> Result<f64> {
        match self {
            Calibration::Mgf => t_to_lambda(t),
            Calibration::Gf => gf_t_to_lambda(t),
        }
    }

    pub fn time(&self, lambda: f64) -> Result<f64> {
        match self {
            Calibration::Mgf => lambda_to_t(lambda),
            Calibration::Gf => {
                require_positive("lambda", lambda)?;
                Ok(1.0 / lambda)
            }
        }
    }
}
