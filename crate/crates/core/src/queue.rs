//! Buffer simulation under a calibrated policy.
//!
//! Constant arrivals enter a queue served by the realized secrecy rate each
//! frame (Lindley recursion). With arrivals at the effective secure throughput
//! for exponent `theta`, `ln P(Q >= q)` should fall off with slope `-theta`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{FadingLaw, PowerPolicy, QosSpec};

/// Minimum simulated frames.
pub const MIN_FRAMES: usize = 100_000;
/// Number of tail thresholds reported.
pub const THRESHOLDS: usize = 20;
/// Minimum points inside a fit window.
pub const MIN_FIT_POINTS: usize = 5;

/// Empirical queue-length exceedance probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TailHistogram {
    /// Queue thresholds in bits, strictly ascending.
    pub thresholds: Vec<f64>,
    /// `P(Q >= q)` for each threshold.
    pub exceedance_prob: Vec<f64>,
    /// Frames recorded after burn-in.
    pub frames: usize,
    pub seed: u64,
    pub arrival_per_frame: f64,
    /// Average service per frame over the whole run, in bits.
    pub mean_service: f64,
    /// Set when arrivals exceed the mean service; the tail is then meaningless.
    pub unstable: bool,
}

impl TailHistogram {
    /// Thresholds whose exceedance is large enough to be trusted
    /// (more than 100 observations above them).
    pub fn reliable_floor(&self) -> f64 {
        100.0 / self.frames as f64
    }

    /// Fit window used when none is given: the upper three quarters of the
    /// threshold range.
    pub fn default_fit_range(&self) -> (f64, f64) {
        let top = self.thresholds.last().copied().unwrap_or(0.0);
        (0.25 * top, top)
    }
}

/// Simulates `frames` frames of the buffer fed with `arrival_bits_per_frame`
/// bits and served by `T B R_s` bits, where `R_s` is the secrecy rate of the
/// policy at i.i.d. fading draws.
///
/// The first 10% of frames are burn-in. Thresholds are 20 evenly spaced
/// levels up to the empirical queue quantile with exceedance
/// `max(1e-4, 1000 / recorded frames)`.
pub fn simulate_queue(
    policy: &PowerPolicy,
    qos: &QosSpec,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    arrival_bits_per_frame: f64,
    frames: usize,
    seed: u64,
) -> Result<TailHistogram> {
    if frames < MIN_FRAMES {
        return Err(Error::invalid("frames", format!("must be >= {MIN_FRAMES}, got {frames}")));
    }
    if !(arrival_bits_per_frame.is_finite() && arrival_bits_per_frame >= 0.0) {
        return Err(Error::invalid("arrival", format!("must be finite and >= 0, got {arrival_bits_per_frame}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn_in = frames / 10;
    let mut queue = 0.0_f64;
    let mut service_total = 0.0;
    let mut recorded = Vec::with_capacity(frames - burn_in);
    for i in 0..frames {
        let zm = law_m.sample(&mut rng);
        let ze = law_e.sample(&mut rng);
        let service = qos.bits_per_frame(policy.secrecy_rate(zm, ze)?);
        service_total += service;
        queue = (queue + arrival_bits_per_frame - service).max(0.0);
        if i >= burn_in {
            recorded.push(queue);
        }
    }
    let mean_service = service_total / frames as f64;
    recorded.sort_unstable_by(f64::total_cmp);
    let n = recorded.len();

    let top_mass = (1e-4_f64).max(1000.0 / n as f64).min(1.0);
    let top_index = n - ((top_mass * n as f64).ceil() as usize).clamp(1, n);
    let q_top = recorded[top_index];
    let step = if q_top > 0.0 {
        q_top / THRESHOLDS as f64
    } else {
        arrival_bits_per_frame.max(1.0)
    };
    let thresholds: Vec<f64> = (1..=THRESHOLDS).map(|k| k as f64 * step).collect();
    let exceedance_prob = thresholds
        .iter()
        .map(|&q| (n - recorded.partition_point(|&x| x < q)) as f64 / n as f64)
        .collect();

    Ok(TailHistogram {
        thresholds,
        exceedance_prob,
        frames: n,
        seed,
        arrival_per_frame: arrival_bits_per_frame,
        mean_service,
        unstable: arrival_bits_per_frame > mean_service,
    })
}

/// Fitted tail decay rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEstimate {
    /// Negated least-squares slope of `ln P(Q >= q)` against `q`.
    pub theta_hat: f64,
    /// Standard error of the slope from the regression residuals.
    pub std_error: f64,
    /// Number of thresholds used.
    pub points: usize,
}

/// Least-squares decay rate over thresholds in `fit_range` whose exceedance
/// is above [`TailHistogram::reliable_floor`].
pub fn estimate_decay(hist: &TailHistogram, fit_range: (f64, f64)) -> Result<DecayEstimate> {
    let floor = hist.reliable_floor();
    let (xs, ys): (Vec<f64>, Vec<f64>) = hist
        .thresholds
        .iter()
        .zip(&hist.exceedance_prob)
        .filter(|(&q, &p)| q >= fit_range.0 && q <= fit_range.1 && p > floor)
        .map(|(&q, &p)| (q, p.ln()))
        .unzip();
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientTail {
            usable: n,
            needed: MIN_FIT_POINTS,
        });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let std_error = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(DecayEstimate {
        theta_hat: -slope,
        std_error,
        points: n,
    })
}

/// Mean decay estimate across independent runs and its standard error.
pub fn aggregate_decay(estimates: &[DecayEstimate]) -> Option<(f64, f64)> {
    if estimates.is_empty() {
        return None;
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().map(|e| e.theta_hat).sum::<f64>() / n;
    if estimates.len() == 1 {
        return Some((mean, estimates[0].std_error));
    }
    let var = estimates.iter().map(|e| (e.theta_hat - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CsiMode, LinkBudget};
    use crate::numerics::Tolerances;

    fn synthetic(f: impl Fn(f64) -> f64) -> TailHistogram {
        let thresholds: Vec<f64> = (1..=20).map(|k| k as f64 * 0.25).collect();
        TailHistogram {
            exceedance_prob: thresholds.iter().map(|&q| f(q)).collect(),
            thresholds,
            frames: 1_000_000_000,
            seed: 0,
            arrival_per_frame: 1.0,
            mean_service: 2.0,
            unstable: false,
        }
    }

    fn fixed_policy(lambda: f64, beta: f64) -> PowerPolicy {
        PowerPolicy {
            csi: CsiMode::Full,
            lambda,
            beta,
            threshold: lambda / beta,
            link: LinkBudget::new(1.0, 1.0).unwrap(),
            law_e: FadingLaw::exponential(1.0).unwrap(),
            tol: Tolerances::default(),
        }
    }

    #[test]
    fn pure_exponential_tail() {
        let h = synthetic(|q| (-2.0 * q).exp());
        let e = estimate_decay(&h, (0.0, 10.0)).unwrap();
        assert!((e.theta_hat - 2.0).abs() < 1e-12);
        assert!(e.std_error < 1e-10);
        assert_eq!(e.points, 20);
    }

    #[test]
    fn prefactor_does_not_change_slope() {
        let h = synthetic(|q| 0.5 * (-0.5 * q).exp());
        let e = estimate_decay(&h, (0.0, 10.0)).unwrap();
        assert!((e.theta_hat - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let h = synthetic(|q| (-2.0 * q).exp());
        assert!(matches!(estimate_decay(&h, (0.0, 1.0)), Err(Error::InsufficientTail { usable: 4, .. })));
    }

    #[test]
    fn zero_arrivals_keep_the_queue_empty() {
        let law = FadingLaw::exponential(1.0).unwrap();
        let qos = QosSpec::with_theta(0.01).unwrap();
        let h = simulate_queue(&fixed_policy(1.0, 2.0), &qos, &law, &law, 0.0, MIN_FRAMES, 3).unwrap();
        assert!(h.exceedance_prob.iter().all(|&p| p == 0.0));
        assert!(h.thresholds.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn matched_deterministic_service_keeps_the_queue_empty() {
        let zm = FadingLaw::point_mass(2.0).unwrap();
        let ze = FadingLaw::point_mass(0.5).unwrap();
        let qos = QosSpec::with_theta(0.01).unwrap();
        let policy = PowerPolicy {
            law_e: ze,
            ..fixed_policy(0.5, 1.0)
        };
        let service = qos.bits_per_frame(policy.secrecy_rate(2.0, 0.5).unwrap());
        assert!(service > 0.0);
        let h = simulate_queue(&policy, &qos, &zm, &ze, service, MIN_FRAMES, 1).unwrap();
        assert!(h.exceedance_prob.iter().all(|&p| p == 0.0));
        assert!(!h.unstable);
    }

    #[test]
    fn rejects_short_runs_and_negative_arrivals() {
        let law = FadingLaw::exponential(1.0).unwrap();
        let qos = QosSpec::with_theta(0.01).unwrap();
        let p = fixed_policy(1.0, 2.0);
        assert!(simulate_queue(&p, &qos, &law, &law, 1.0, 10, 0).is_err());
        assert!(simulate_queue(&p, &qos, &law, &law, -1.0, MIN_FRAMES, 0).is_err());
    }

    #[test]
    fn overload_is_flagged() {
        let law = FadingLaw::exponential(1.0).unwrap();
        let qos = QosSpec::with_theta(0.01).unwrap();
        let h = simulate_queue(&fixed_policy(1.0, 2.0), &qos, &law, &law, 1e4, MIN_FRAMES, 0).unwrap();
        assert!(h.unstable);
    }

    #[test]
    fn aggregate_of_identical_runs() {
        let e = DecayEstimate {
            theta_hat: 0.01,
            std_error: 1e-4,
            points: 10,
        };
        let (m, s) = aggregate_decay(&[e, e, e]).unwrap();
        assert!((m - 0.01).abs() < 1e-15 && s == 0.0);
        assert!(aggregate_decay(&[]).is_none());
    }
}
