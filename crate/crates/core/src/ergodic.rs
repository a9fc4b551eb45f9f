//! The unconstrained (`theta = 0`) baseline: policies maximizing the expected
//! secrecy rate under the average-power constraint.
//!
//! Multipliers here are in nats per unit power; rates are converted to bits
//! only when reported.

use std::cell::Cell;
use std::f64::consts::LN_2;

use crate::calibration::{calibrate_multiplier, Calibration};
use crate::error::{Error, Result};
use crate::model::{CsiMode, FadingLaw, LinkBudget, PowerPolicy, QosSpec, ThroughputResult};
use crate::full_csi::expect_over_active;
use crate::numerics::{expand_bracket, expect_between, newton_bisect_root, Quadrature, Tolerances};

const POWER_CAP: f64 = 1e6;

/// Unconstrained full-CSI power: the positive root of
/// `z_m / (1 + mu z_m) - c / (1 + mu c) = lambda_nats` with `c = gamma z_e`,
/// or zero when `z_m - c <= lambda_nats`.
///
/// The root solves `lambda z_m c mu^2 + lambda (z_m + c) mu + lambda - (z_m - c) = 0`
/// and is evaluated in the cancellation-free form
/// `2 (d/lambda - 1) / ((z_m + c) + sqrt((z_m - c)^2 + 4 z_m c d / lambda))`.
pub fn ergodic_power_full(z_m: f64, z_e: f64, link: &LinkBudget, lambda_nats: f64) -> f64 {
    let c = link.gamma() * z_e;
    let d = z_m - c;
    if !(d > lambda_nats) || lambda_nats.is_infinite() {
        return 0.0;
    }
    let ratio = d / lambda_nats;
    let disc = (z_m - c).powi(2) + 4.0 * z_m * c * ratio;
    2.0 * (ratio - 1.0) / ((z_m + c) + disc.sqrt())
}

/// Result of an unconstrained throughput computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicThroughput {
    /// Expected secrecy rate in bits/s/Hz.
    pub throughput_bits_s_hz: f64,
    pub lambda_nats: f64,
    pub power_residual: f64,
    pub quad_error: f64,
}

impl ErgodicThroughput {
    pub fn into_result(self, qos: &QosSpec) -> ThroughputResult {
        ThroughputResult::new(
            qos,
            self.throughput_bits_s_hz,
            self.lambda_nats,
            self.power_residual,
            self.quad_error,
        )
    }
}

fn expect_full_active<F>(
    mut g: F,
    lambda_nats: f64,
    gamma: f64,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<Quadrature>
where
    F: FnMut(f64, f64) -> f64,
{
    expect_over_active(|zm, ze| Ok(g(zm, ze)), lambda_nats, gamma, law_m, law_e, tol)
}

pub fn ergodic_mean_power_full(
    lambda_nats: f64,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<Quadrature> {
    expect_full_active(
        |zm, ze| ergodic_power_full(zm, ze, link, lambda_nats),
        lambda_nats,
        link.gamma(),
        law_m,
        law_e,
        tol,
    )
}

/// Calibrated unconstrained full-CSI policy.
pub fn ergodic_policy_full(
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<(PowerPolicy, Calibration)> {
    tol.validate()?;
    if link.avg_snr() == 0.0 {
        let cal = Calibration {
            lambda: f64::INFINITY,
            mean_power: Quadrature::default(),
        };
        return Ok((PowerPolicy::silent(CsiMode::Full, 0.0, *link, *law_e, *tol), cal));
    }
    let cal = calibrate_multiplier(
        |l| ergodic_mean_power_full(l, link, law_m, law_e, tol),
        link.avg_snr(),
        1.0,
        tol,
    )?;
    let policy = PowerPolicy {
        csi: CsiMode::Full,
        lambda: cal.lambda,
        beta: 0.0,
        threshold: cal.lambda,
        link: *link,
        law_e: *law_e,
        tol: *tol,
    };
    Ok((policy, cal))
}

/// Maximum expected secrecy rate with full CSI (bits/s/Hz).
pub fn ergodic_throughput_full(
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<ErgodicThroughput> {
    let (policy, cal) = ergodic_policy_full(link, law_m, law_e, tol)?;
    if cal.lambda.is_infinite() {
        return Ok(ErgodicThroughput {
            throughput_bits_s_hz: 0.0,
            lambda_nats: cal.lambda,
            power_residual: 0.0,
            quad_error: 0.0,
        });
    }
    let gamma = link.gamma();
    let rate = expect_full_active(
        |zm, ze| {
            let mu = ergodic_power_full(zm, ze, link, policy.lambda);
            (mu * zm).ln_1p() - (gamma * mu * ze).ln_1p()
        },
        policy.lambda,
        gamma,
        law_m,
        law_e,
        tol,
    )?;
    Ok(ErgodicThroughput {
        throughput_bits_s_hz: rate.value / LN_2,
        lambda_nats: cal.lambda,
        power_residual: cal.residual(link.avg_snr()),
        quad_error: rate.error / LN_2,
    })
}

/// First-order condition for the unconstrained main-CSI power at `z_m`:
/// `E_e[z_m/(1 + mu z_m) - c/(1 + mu c); z_e < z_m/gamma]` with `c = gamma z_e`,
/// and its `mu`-slope.
pub fn ergodic_foc_main(z_m: f64, mu: f64, link: &LinkBudget, law_e: &FadingLaw, tol: &Tolerances) -> Result<(f64, f64)> {
    if z_m <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let gamma = link.gamma();
    let value = expect_between(
        |ze| {
            let c = gamma * ze;
            Ok(z_m / (1.0 + mu * z_m) - c / (1.0 + mu * c))
        },
        law_e,
        0.0,
        z_m / gamma,
        tol,
    )?;
    let slope = expect_between(
        |ze| {
            let c = gamma * ze;
            Ok(-(z_m / (1.0 + mu * z_m)).powi(2) + (c / (1.0 + mu * c)).powi(2))
        },
        law_e,
        0.0,
        z_m / gamma,
        tol,
    )?;
    Ok((value.value, slope.value))
}

/// Unconstrained main-CSI power at gain `z_m`.
pub fn ergodic_power_main(z_m: f64, link: &LinkBudget, lambda_nats: f64, law_e: &FadingLaw, tol: &Tolerances) -> Result<f64> {
    if !(lambda_nats > 0.0) {
        return Err(Error::invalid("lambda", format!("must be > 0, got {lambda_nats}")));
    }
    if lambda_nats.is_infinite() || ergodic_foc_main(z_m, 0.0, link, law_e, tol)?.0 <= lambda_nats {
        return Ok(0.0);
    }
    let cap = POWER_CAP * link.avg_snr().max(1.0);
    let (lo, hi) = expand_bracket(
        |mu| Ok(ergodic_foc_main(z_m, mu, link, law_e, tol)?.0 - lambda_nats),
        0.0,
        1.0,
        2.0,
        cap,
    )?;
    newton_bisect_root(
        |mu| {
            let (v, s) = ergodic_foc_main(z_m, mu, link, law_e, tol)?;
            Ok((v - lambda_nats, s))
        },
        lo,
        hi,
        tol,
    )
}

/// Main-gain cutoff of the unconstrained policy. The first-order condition at
/// zero power equals the QoS condition with `beta = 1`.
pub fn ergodic_alpha_main(link: &LinkBudget, lambda_nats: f64, law_e: &FadingLaw, tol: &Tolerances) -> Result<f64> {
    crate::main_csi::alpha_threshold(1.0, lambda_nats, link, law_e, tol)
}

pub fn ergodic_mean_power_main(
    lambda_nats: f64,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<Quadrature> {
    let alpha = ergodic_alpha_main(link, lambda_nats, law_e, tol)?;
    if alpha.is_infinite() {
        return Ok(Quadrature::default());
    }
    expect_between(
        |zm| {
            if zm <= alpha {
                Ok(0.0)
            } else {
                ergodic_power_main(zm, link, lambda_nats, law_e, tol)
            }
        },
        law_m,
        alpha,
        f64::INFINITY,
        tol,
    )
}

/// Calibrated unconstrained main-CSI policy.
pub fn ergodic_policy_main(
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<(PowerPolicy, Calibration)> {
    tol.validate()?;
    if link.avg_snr() == 0.0 {
        let cal = Calibration {
            lambda: f64::INFINITY,
            mean_power: Quadrature::default(),
        };
        return Ok((PowerPolicy::silent(CsiMode::Main, 0.0, *link, *law_e, *tol), cal));
    }
    let cal = calibrate_multiplier(
        |l| ergodic_mean_power_main(l, link, law_m, law_e, tol),
        link.avg_snr(),
        1.0,
        tol,
    )?;
    let alpha = ergodic_alpha_main(link, cal.lambda, law_e, tol)?;
    let policy = PowerPolicy {
        csi: CsiMode::Main,
        lambda: cal.lambda,
        beta: 0.0,
        threshold: alpha,
        link: *link,
        law_e: *law_e,
        tol: *tol,
    };
    Ok((policy, cal))
}

/// Maximum expected secrecy rate with main CSI only (bits/s/Hz):
/// `E{[log2(1 + mu z_m) - log2(1 + gamma mu z_e)]^+}`.
pub fn ergodic_throughput_main(
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<ErgodicThroughput> {
    let (policy, cal) = ergodic_policy_main(link, law_m, law_e, tol)?;
    if cal.lambda.is_infinite() {
        return Ok(ErgodicThroughput {
            throughput_bits_s_hz: 0.0,
            lambda_nats: cal.lambda,
            power_residual: 0.0,
            quad_error: 0.0,
        });
    }
    let gamma = link.gamma();
    let inner_err = Cell::new(0.0_f64);
    let rate = expect_between(
        |zm| {
            let mu = policy.power(zm, 0.0)?;
            if mu == 0.0 {
                return Ok(0.0);
            }
            let inner = expect_between(
                |ze| Ok((mu * zm).ln_1p() - (gamma * mu * ze).ln_1p()),
                law_e,
                0.0,
                zm / gamma,
                tol,
            )?;
            inner_err.set(inner_err.get().max(inner.error));
            Ok(inner.value)
        },
        law_m,
        policy.threshold,
        f64::INFINITY,
        tol,
    )?;
    Ok(ErgodicThroughput {
        throughput_bits_s_hz: rate.value / LN_2,
        lambda_nats: cal.lambda,
        power_residual: cal.residual(link.avg_snr()),
        quad_error: (rate.error + inner_err.get()) / LN_2,
    })
}
