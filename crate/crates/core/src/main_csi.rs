//! Power control when the transmitter knows only the main-channel gain.
//!
//! The power at `z_m` minimizes the reduced Lagrangian
//! `E_e[f(mu; z_e); z_e < z_m / gamma] + lambda * mu`, averaging over the
//! eavesdropper gain on the states where the secrecy rate is positive. Power is
//! zero up to the cutoff `alpha` where the stationarity condition at `mu = 0`
//! first holds with equality.

use std::cell::Cell;

use crate::calibration::{calibrate_multiplier, Calibration};
use crate::error::{Error, Result};
use crate::full_csi::{check_beta_lambda, effective_from_deficit};
use crate::model::{CsiMode, FadingLaw, LinkBudget, PowerPolicy, QosSpec, ThroughputResult};
use crate::numerics::{bisect_root, expand_bracket, expect_between, newton_bisect_root, Quadrature, Tolerances};

const POWER_CAP: f64 = 1e6;
const ALPHA_CAP: f64 = 1e12;

/// Integrand of the main-CSI stationarity condition at one eavesdropper gain,
/// `beta r^(-beta) (z_m - c) / ((1 + mu z_m)(1 + mu c))`, and its `mu`-slope.
fn lhs_integrand(mu: f64, z_m: f64, c: f64, beta: f64) -> (f64, f64) {
    let u = 1.0 + mu * z_m;
    let v = 1.0 + mu * c;
    let log_r = (mu * z_m).ln_1p() - (mu * c).ln_1p();
    let g = beta * (-beta * log_r).exp() * (z_m - c) / (u * v);
    (g, g * (-(beta + 1.0) * z_m / u + (beta - 1.0) * c / v))
}

/// Left side of the main-CSI stationarity condition:
/// `beta * E_e[r^(-beta-1) (z_m - gamma z_e) / (1 + gamma mu z_e)^2; z_e < z_m / gamma]`.
pub fn kkt_lhs_main(z_m: f64, mu: f64, beta: f64, link: &LinkBudget, law_e: &FadingLaw, tol: &Tolerances) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::invalid("mu", format!("must be >= 0, got {mu}")));
    }
    if z_m <= 0.0 {
        return Ok(0.0);
    }
    let gamma = link.gamma();
    let q = expect_between(|ze| Ok(lhs_integrand(mu, z_m, gamma * ze, beta).0), law_e, 0.0, z_m / gamma, tol)?;
    Ok(q.value)
}

/// `mu`-derivative of [`kkt_lhs_main`].
pub fn kkt_lhs_main_slope(z_m: f64, mu: f64, beta: f64, link: &LinkBudget, law_e: &FadingLaw, tol: &Tolerances) -> Result<f64> {
    if z_m <= 0.0 {
        return Ok(0.0);
    }
    let gamma = link.gamma();
    let q = expect_between(|ze| Ok(lhs_integrand(mu, z_m, gamma * ze, beta).1), law_e, 0.0, z_m / gamma, tol)?;
    Ok(q.value)
}

/// Reduced Lagrangian objective `E_e[f(mu; z_e); z_e < z_m / gamma]` (without the `lambda mu` term).
pub fn reduced_objective_main(z_m: f64, mu: f64, beta: f64, link: &LinkBudget, law_e: &FadingLaw, tol: &Tolerances) -> Result<f64> {
    let gamma = link.gamma();
    let q = expect_between(
        |ze| Ok(crate::full_csi::state_objective(mu, z_m, ze, gamma, beta)),
        law_e,
        0.0,
        z_m / gamma,
        tol,
    )?;
    Ok(q.value)
}

/// Optimal main-CSI power at gain `z_m` for multiplier `lambda`.
pub fn power_main(z_m: f64, beta: f64, lambda: f64, link: &LinkBudget, law_e: &FadingLaw, tol: &Tolerances) -> Result<f64> {
    check_beta_lambda(beta, lambda)?;
    if kkt_lhs_main(z_m, 0.0, beta, link, law_e, tol)? <= lambda {
        return Ok(0.0);
    }
    let cap = POWER_CAP * link.avg_snr().max(1.0);
    let (lo, hi) = expand_bracket(|mu| Ok(kkt_lhs_main(z_m, mu, beta, link, law_e, tol)? - lambda), 0.0, 1.0, 2.0, cap)?;
    newton_bisect_root(
        |mu| {
            let v = kkt_lhs_main(z_m, mu, beta, link, law_e, tol)?;
            let s = kkt_lhs_main_slope(z_m, mu, beta, link, law_e, tol)?;
            Ok((v - lambda, s))
        },
        lo,
        hi,
        tol,
    )
}

/// Main-gain cutoff `alpha`: power is zero for `z_m <= alpha`.
///
/// With `gamma = 1` this solves `\int_0^alpha P(z_e <= t) dt = lambda / beta`;
/// otherwise it is the root in `z_m` of `kkt_lhs_main(z_m, 0) = lambda`. The two
/// coincide at `gamma = 1`. Returns `f64::INFINITY` when the cutoff lies beyond
/// any representable gain, which makes the policy identically zero.
pub fn alpha_threshold(beta: f64, lambda: f64, link: &LinkBudget, law_e: &FadingLaw, tol: &Tolerances) -> Result<f64> {
    check_beta_lambda(beta, 1.0)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid("lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let target = lambda / beta;
    let excess = |z: f64| -> Result<f64> {
        if link.gamma() == 1.0 {
            Ok(law_e.cdf_integral(z) - target)
        } else {
            Ok(kkt_lhs_main(z, 0.0, beta, link, law_e, tol)? / beta - target)
        }
    };

    // Geometric bracket with a sampled monotonicity check along the way.
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut prev = excess(lo)?;
    loop {
        let cur = excess(hi)?;
        if cur < prev - 1e-12 * prev.abs().max(target) {
            return Err(Error::NotMonotone("stationarity condition at zero power"));
        }
        if cur >= 0.0 {
            break;
        }
        if hi >= ALPHA_CAP {
            return Ok(f64::INFINITY);
        }
        prev = cur;
        lo = hi;
        hi *= 2.0;
    }
    bisect_root(excess, lo, hi, tol)
}

/// Expected power `E{mu(z_m)}` under multiplier `lambda`.
pub fn mean_power_main(
    lambda: f64,
    beta: f64,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<Quadrature> {
    check_beta_lambda(beta, lambda)?;
    let alpha = alpha_threshold(beta, lambda, link, law_e, tol)?;
    if alpha.is_infinite() {
        return Ok(Quadrature::default());
    }
    expect_between(
        |zm| {
            if zm <= alpha {
                Ok(0.0)
            } else {
                power_main(zm, beta, lambda, link, law_e, tol)
            }
        },
        law_m,
        alpha,
        f64::INFINITY,
        tol,
    )
}

/// Multiplier meeting the average-power constraint with equality.
pub fn calibrate_lambda_main(
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
        |lambda| mean_power_main(lambda, beta, link, law_m, law_e, tol),
        link.avg_snr(),
        beta,
        tol,
    )
}

/// Calibrated main-CSI policy for a positive QoS exponent.
pub fn policy_main(
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
    let cal = calibrate_lambda_main(link, beta, law_m, law_e, tol)?;
    if cal.lambda.is_infinite() {
        return Ok((PowerPolicy::silent(CsiMode::Main, beta, *link, *law_e, *tol), cal));
    }
    let alpha = alpha_threshold(beta, cal.lambda, link, law_e, tol)?;
    let policy = PowerPolicy {
        csi: CsiMode::Main,
        lambda: cal.lambda,
        beta,
        threshold: alpha,
        link: *link,
        law_e: *law_e,
        tol: *tol,
    };
    Ok((policy, cal))
}

/// Effective secure throughput (bits/s/Hz) of a calibrated main-CSI policy.
///
/// States with `z_m <= alpha` or `z_e >= z_m / gamma` contribute a factor of
/// one to `E{r^(-beta)}`, so only the complementary region enters the deficit
/// `E{1 - r^(-beta)}`.
pub fn throughput_of_policy_main(
    policy: &PowerPolicy,
    qos: &QosSpec,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
) -> Result<Quadrature> {
    if policy.threshold.is_infinite() {
        return Ok(Quadrature::default());
    }
    let gamma = policy.link.gamma();
    let beta = policy.beta;
    let inner_err = Cell::new(0.0_f64);
    let deficit = expect_between(
        |zm| {
            let mu = policy.power(zm, 0.0)?;
            if mu == 0.0 {
                return Ok(0.0);
            }
            let inner = expect_between(
                |ze| {
                    let log_r = (mu * zm).ln_1p() - (gamma * mu * ze).ln_1p();
                    Ok(-(-beta * log_r).exp_m1())
                },
                law_e,
                0.0,
                zm / gamma,
                &policy.tol,
            )?;
            inner_err.set(inner_err.get().max(inner.error));
            Ok(inner.value)
        },
        law_m,
        policy.threshold,
        f64::INFINITY,
        &policy.tol,
    )?;
    let deficit = Quadrature {
        error: deficit.error + inner_err.get(),
        ..deficit
    };
    Ok(effective_from_deficit(deficit, qos))
}

/// Calibrates the main-CSI policy and returns its effective secure throughput.
pub fn throughput_main(
    qos: &QosSpec,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<ThroughputResult> {
    solve_main(qos, link, law_m, law_e, tol).map(|(_, r)| r)
}

/// [`throughput_main`] that also returns the calibrated policy.
pub fn solve_main(
    qos: &QosSpec,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<(PowerPolicy, ThroughputResult)> {
    let (policy, cal) = policy_main(qos, link, law_m, law_e, tol)?;
    let c = throughput_of_policy_main(&policy, qos, law_m, law_e)?;
    let result = ThroughputResult::new(qos, c.value, cal.lambda, cal.residual(link.avg_snr()), c.error);
    Ok((policy, result))
}
