//! Power control when the transmitter knows both channel gains.
//!
//! The Lagrangian separates per state: the power at `(z_m, z_e)` minimizes
//! `f(mu) + lambda * mu` with `f(mu) = ((1 + mu z_m) / (1 + gamma mu z_e))^(-beta)`.
//! The stationarity condition `-f'(mu) = lambda` has a unique positive root
//! exactly when `z_m - gamma z_e > lambda / beta`.

use std::cell::Cell;

use crate::calibration::{calibrate_multiplier, Calibration};
use crate::error::{Error, Result};
use crate::model::{CsiMode, FadingLaw, LinkBudget, PolicySurface, PowerPolicy, QosSpec, SurfaceGrid, ThroughputResult};
use crate::numerics::{expect_between, newton_bisect_root, Quadrature, Tolerances};

pub(crate) fn check_beta_lambda(beta: f64, lambda: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", format!("must be finite and > 0, got {beta}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    Ok(())
}

/// `-f'(mu) - lambda` and its derivative in `mu`.
///
/// `-f'(mu) = beta r^(-beta) (z_m - c) / ((1 + mu z_m)(1 + mu c))` with
/// `c = gamma z_e` and `r = (1 + mu z_m) / (1 + mu c)`.
pub fn kkt_residual_full(mu: f64, z_m: f64, z_e: f64, gamma: f64, beta: f64, lambda: f64) -> (f64, f64) {
    let c = gamma * z_e;
    let u = 1.0 + mu * z_m;
    let v = 1.0 + mu * c;
    let log_r = (mu * z_m).ln_1p() - (mu * c).ln_1p();
    let g = beta * (-beta * log_r).exp() * (z_m - c) / (u * v);
    let slope = g * (-(beta + 1.0) * z_m / u + (beta - 1.0) * c / v);
    (g - lambda, slope)
}

/// `f(mu) = ((1 + mu z_m) / (1 + gamma mu z_e))^(-beta)`.
pub fn state_objective(mu: f64, z_m: f64, z_e: f64, gamma: f64, beta: f64) -> f64 {
    (-beta * ((mu * z_m).ln_1p() - (gamma * mu * z_e).ln_1p())).exp()
}

/// Optimal power at one channel state for multiplier `lambda`.
///
/// Zero on the closed set `z_m - gamma z_e <= lambda / beta`; otherwise the
/// root of [`kkt_residual_full`].
pub fn pointwise_power(z_m: f64, z_e: f64, link: &LinkBudget, beta: f64, lambda: f64, tol: &Tolerances) -> Result<f64> {
    check_beta_lambda(beta, lambda)?;
    let gamma = link.gamma();
    if z_m - gamma * z_e <= lambda / beta {
        return Ok(0.0);
    }
    // On the active set r >= 1, so -f'(mu) < beta (z_m - c) / (mu z_m).
    let hi = beta * (z_m - gamma * z_e) / (lambda * z_m);
    if !hi.is_finite() {
        return Err(Error::NonFinite("power bracket"));
    }
    let lo = 0.0;
    newton_bisect_root(|mu| Ok(log_marginal_gap(mu, z_m, z_e, gamma, beta, lambda)), lo, hi, tol)
}

/// `ln(-f'(mu)) - ln(lambda)` and its derivative; same root as
/// [`kkt_residual_full`] but close to linear in `ln mu` when `beta` is large.
fn log_marginal_gap(mu: f64, z_m: f64, z_e: f64, gamma: f64, beta: f64, lambda: f64) -> (f64, f64) {
    let c = gamma * z_e;
    let u = 1.0 + mu * z_m;
    let v = 1.0 + mu * c;
    let log_r = (mu * z_m).ln_1p() - (mu * c).ln_1p();
    let value = (beta * (z_m - c) / lambda).ln() - beta * log_r - u.ln() - v.ln();
    (value, -(beta + 1.0) * z_m / u + (beta - 1.0) * c / v)
}

/// `E[g(z_m, z_e); z_m - gamma z_e > threshold]`, integrating the main gain
/// from the threshold upward so the integrand has no kink.
///
/// The outer range stops where the inner range starts beyond the truncated
/// support of `law_m`; for large `gamma` the active set is a thin sliver near
/// `z_e = 0` that a fixed outer range would miss.
pub(crate) fn expect_over_active<F>(
    mut g: F,
    threshold: f64,
    gamma: f64,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<Quadrature>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let z_e_end = (law_m.support_end(tol.quad_trunc_mass) - threshold) / gamma;
    if !(z_e_end >= 0.0) {
        return Ok(Quadrature::default());
    }
    let inner_err = Cell::new(0.0_f64);
    let outer = expect_between(
        |ze| {
            let lower = gamma * ze + threshold;
            let inner = expect_between(|zm| if zm > lower { g(zm, ze) } else { Ok(0.0) }, law_m, lower, f64::INFINITY, tol)?;
            inner_err.set(inner_err.get().max(inner.error));
            Ok(inner.value)
        },
        law_e,
        0.0,
        z_e_end,
        tol,
    )?;
    Ok(Quadrature {
        value: outer.value,
        error: outer.error + inner_err.get(),
        evaluations: outer.evaluations,
    })
}

/// Expected power `E{mu(z_m, z_e)}` under multiplier `lambda`.
pub fn mean_power_full(
    lambda: f64,
    beta: f64,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<Quadrature> {
    check_beta_lambda(beta, lambda)?;
    expect_over_active(
        |zm, ze| pointwise_power(zm, ze, link, beta, lambda, tol),
        lambda / beta,
        link.gamma(),
        law_m,
        law_e,
        tol,
    )
}

/// Multiplier meeting the average-power constraint with equality.
///
/// A zero power budget returns an infinite multiplier (the silent policy).
pub fn calibrate_lambda_full(
    link: &LinkBudget,
    beta: f64,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<Calibration> {
    check_beta_lambda(beta, 1.0)?;
    tol.validate()?;
    if link.avg_snr() == 0.0 {
        return Ok(Calibration {
            lambda: f64::INFINITY,
            mean_power: Quadrature::default(),
        });
    }
    calibrate_multiplier(
        |lambda| mean_power_full(lambda, beta, link, law_m, law_e, tol),
        link.avg_snr(),
        beta,
        tol,
    )
}

/// Calibrated full-CSI policy for a positive QoS exponent.
pub fn policy_full(
    qos: &QosSpec,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<(PowerPolicy, Calibration)> {
    if qos.is_ergodic() {
        return Err(Error::invalid("theta", "theta = 0 is served by the ergodic baseline"));
    }
    let beta = qos.beta();
    let cal = calibrate_lambda_full(link, beta, law_m, law_e, tol)?;
    let policy = PowerPolicy {
        csi: CsiMode::Full,
        lambda: cal.lambda,
        beta,
        threshold: cal.lambda / beta,
        link: *link,
        law_e: *law_e,
        tol: *tol,
    };
    Ok((policy, cal))
}

/// Effective secure throughput (bits/s/Hz) of a calibrated full-CSI policy.
///
/// Computes `E{1 - r^(-beta)}` over the transmitting region, which avoids the
/// cancellation in `1 - E{r^(-beta)}` for small `beta`, then returns
/// `-ln(1 - E{1 - r^(-beta)}) / (theta T B)`.
pub fn throughput_of_policy_full(
    policy: &PowerPolicy,
    qos: &QosSpec,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
) -> Result<Quadrature> {
    if policy.lambda.is_infinite() {
        return Ok(Quadrature::default());
    }
    let gamma = policy.link.gamma();
    let beta = policy.beta;
    let deficit = expect_over_active(
        |zm, ze| {
            let mu = policy.power(zm, ze)?;
            let log_r = (mu * zm).ln_1p() - (gamma * mu * ze).ln_1p();
            Ok(-(-beta * log_r).exp_m1())
        },
        policy.threshold,
        gamma,
        law_m,
        law_e,
        &policy.tol,
    )?;
    Ok(effective_from_deficit(deficit, qos))
}

/// Maps `E{1 - exp(-theta T B R)}` to the normalized effective capacity.
pub(crate) fn effective_from_deficit(deficit: Quadrature, qos: &QosSpec) -> Quadrature {
    let scale = qos.theta_tb();
    let d = deficit.value.clamp(0.0, 1.0);
    Quadrature {
        value: -(-d).ln_1p() / scale,
        error: deficit.error / ((1.0 - d) * scale),
        evaluations: deficit.evaluations,
    }
}

/// Calibrates the full-CSI policy and returns its effective secure throughput.
pub fn throughput_full(
    qos: &QosSpec,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<ThroughputResult> {
    solve_full(qos, link, law_m, law_e, tol).map(|(_, r)| r)
}

/// [`throughput_full`] that also returns the calibrated policy.
pub fn solve_full(
    qos: &QosSpec,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<(PowerPolicy, ThroughputResult)> {
    let (policy, cal) = policy_full(qos, link, law_m, law_e, tol)?;
    let c = throughput_of_policy_full(&policy, qos, law_m, law_e)?;
    let result = ThroughputResult::new(qos, c.value, cal.lambda, cal.residual(link.avg_snr()), c.error);
    Ok((policy, result))
}

/// Calibrated full-CSI policy evaluated on a grid.
pub fn policy_surface_full(
    qos: &QosSpec,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    grid: &SurfaceGrid,
    tol: &Tolerances,
) -> Result<PolicySurface> {
    let (policy, _) = policy_full(qos, link, law_m, law_e, tol)?;
    policy.surface(grid)
}
