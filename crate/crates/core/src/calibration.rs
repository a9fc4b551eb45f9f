//! Multiplier calibration against the average-power constraint.

use crate::error::{Error, Result};
use crate::numerics::{regula_falsi_root, Quadrature, Tolerances};

/// A multiplier together with the mean power it produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub lambda: f64,
    pub mean_power: Quadrature,
}

impl Calibration {
    pub fn residual(&self, avg_snr: f64) -> f64 {
        (self.mean_power.value - avg_snr).abs()
    }
}

const STEP: f64 = 4.0;
const MAX_STEPS: usize = 80;

/// Finds `lambda` with `mean_power(lambda) = target` for a mean power that is
/// strictly decreasing in `lambda`.
///
/// A geometric search from `start` brackets the solution, then regula falsi
/// runs on `ln lambda` until the relative power error is below
/// `tol.power_rel_tol`.
pub(crate) fn calibrate_multiplier<P>(mut mean_power: P, target: f64, start: f64, tol: &Tolerances) -> Result<Calibration>
where
    P: FnMut(f64) -> Result<Quadrature>,
{
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::invalid("avg_snr", "calibration needs a positive power budget"));
    }
    if !(start.is_finite() && start > 0.0) {
        return Err(Error::invalid("lambda", format!("starting multiplier must be > 0, got {start}")));
    }
    let mut seen: Vec<(f64, Quadrature)> = Vec::new();
    let mut eval = |u: f64| -> Result<f64> {
        if let Some((_, q)) = seen.iter().find(|(v, _)| *v == u) {
            return Ok(q.value / target - 1.0);
        }
        let q = mean_power(u.exp())?;
        seen.push((u, q));
        Ok(q.value / target - 1.0)
    };

    // u_lo: power above target, u_hi: power at or below target.
    let u0 = start.ln();
    let step = STEP.ln();
    let f0 = eval(u0)?;
    let (mut u_lo, mut u_hi) = (u0, u0);
    if f0 > 0.0 {
        let mut n = 0;
        loop {
            u_hi += step;
            if eval(u_hi)? <= 0.0 {
                break;
            }
            u_lo = u_hi;
            n += 1;
            if n >= MAX_STEPS {
                return Err(bracket_error(u_lo, u_hi));
            }
        }
    } else {
        let mut n = 0;
        loop {
            u_lo -= step;
            if eval(u_lo)? > 0.0 {
                break;
            }
            u_hi = u_lo;
            n += 1;
            if n >= MAX_STEPS {
                return Err(bracket_error(u_lo, u_hi));
            }
        }
    }

    let u = regula_falsi_root(&mut eval, u_lo, u_hi, tol.power_rel_tol, tol.root_tol, tol.max_iter)?;
    eval(u)?;
    let (_, q) = seen
        .iter()
        .find(|(v, _)| *v == u)
        .copied()
        .expect("evaluated above");
    Ok(Calibration {
        lambda: u.exp(),
        mean_power: q,
    })
}

fn bracket_error(u_lo: f64, u_hi: f64) -> Error {
    Error::Bracket {
        lo: u_lo.exp(),
        hi: u_hi.exp(),
        f_lo: f64::NAN,
        f_hi: f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(value: f64) -> Quadrature {
        Quadrature {
            value,
            error: 0.0,
            evaluations: 1,
        }
    }

    #[test]
    fn solves_smooth_decreasing_power() {
        let tol = Tolerances::default();
        for target in [0.01, 1.0, 250.0] {
            let c = calibrate_multiplier(|l| Ok(q((1.0 / l - 0.5).max(0.0))), target, 1.0, &tol).unwrap();
            assert!(c.residual(target) <= tol.power_rel_tol * target, "{target}: {c:?}");
            assert!((c.lambda - 1.0 / (target + 0.5)).abs() < 1e-6 * c.lambda);
        }
    }

    #[test]
    fn handles_power_that_vanishes_beyond_a_cutoff() {
        let tol = Tolerances::default();
        let power = |l: f64| Ok(q(if l < 3.0 { (3.0 - l).powi(2) } else { 0.0 }));
        let c = calibrate_multiplier(power, 0.25, 1.0, &tol).unwrap();
        assert!((c.lambda - 2.5).abs() < 1e-7);
    }

    #[test]
    fn rejects_zero_target() {
        assert!(calibrate_multiplier(|_| Ok(q(1.0)), 0.0, 1.0, &Tolerances::default()).is_err());
    }

    #[test]
    fn unreachable_target_is_a_bracket_error() {
        let err = calibrate_multiplier(|_| Ok(q(1.0)), 2.0, 1.0, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }
}
