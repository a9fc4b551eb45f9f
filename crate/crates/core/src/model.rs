//! Domain types shared by the solvers: fading laws, QoS parameters, the link
//! budget, calibrated power policies and throughput results.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::numerics::Tolerances;
use crate::{ergodic, full_csi, main_csi};

/// Default frame duration in seconds.
pub const DEFAULT_FRAME_T: f64 = 2e-3;
/// Default bandwidth in Hz.
pub const DEFAULT_BANDWIDTH: f64 = 1e5;

/// Marginal law of a channel power gain `z = |h|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingLaw {
    /// Exponentially distributed power gain (Rayleigh amplitude).
    Exponential { mean: f64 },
    /// Deterministic gain. Has no density; expectations evaluate the atom.
    PointMass { at: f64 },
}

impl FadingLaw {
    pub fn exponential(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::invalid("mean_gain", format!("must be finite and > 0, got {mean}")));
        }
        Ok(FadingLaw::Exponential { mean })
    }

    /// Rayleigh fading: exponential power gain with the given mean.
    pub fn rayleigh(mean: f64) -> Result<Self> {
        Self::exponential(mean)
    }

    pub fn point_mass(at: f64) -> Result<Self> {
        if !(at.is_finite() && at >= 0.0) {
            return Err(Error::invalid("gain", format!("must be finite and >= 0, got {at}")));
        }
        Ok(FadingLaw::PointMass { at })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            FadingLaw::Exponential { mean } => mean,
            FadingLaw::PointMass { at } => at,
        }
    }

    /// Probability density; identically zero for a point mass.
    pub fn density(&self, z: f64) -> f64 {
        match *self {
            FadingLaw::Exponential { mean } if z >= 0.0 => (-z / mean).exp() / mean,
            _ => 0.0,
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match *self {
            FadingLaw::Exponential { mean } if z > 0.0 => -(-z / mean).exp_m1(),
            FadingLaw::Exponential { .. } => 0.0,
            FadingLaw::PointMass { at } => f64::from(u8::from(z >= at)),
        }
    }

    /// `P(Z > z)`.
    pub fn survival(&self, z: f64) -> f64 {
        match *self {
            FadingLaw::Exponential { mean } if z > 0.0 => (-z / mean).exp(),
            FadingLaw::Exponential { .. } => 1.0,
            FadingLaw::PointMass { at } => f64::from(u8::from(z < at)),
        }
    }

    /// `\int_0^x P(Z <= t) dt`.
    pub fn cdf_integral(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            FadingLaw::Exponential { mean } => x + mean * (-x / mean).exp_m1(),
            FadingLaw::PointMass { at } => (x - at).max(0.0),
        }
    }

    /// Point beyond which at most `tail_mass` probability remains.
    pub fn support_end(&self, tail_mass: f64) -> f64 {
        match *self {
            FadingLaw::Exponential { mean } => -mean * tail_mass.ln(),
            FadingLaw::PointMass { at } => at,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FadingLaw::Exponential { mean } => {
                let e: f64 = rng.sample(Exp1);
                mean * e
            }
            FadingLaw::PointMass { at } => at,
        }
    }
}

/// Draws `n` gains from `law` with a ChaCha8 stream seeded by `seed`.
pub fn sample_gain(law: &FadingLaw, seed: u64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| law.sample(&mut rng)).collect())
}

/// Statistical QoS parameters: exponent `theta` (1/bit), frame duration `T`
/// (s) and bandwidth `B` (Hz).
///
/// The per-frame service of a secrecy rate `R` (bits/s/Hz) is `T*B*R` bits, so
/// `exp(-theta*T*B*R) = r^(-beta)` for the SNR ratio `r` with
/// `beta = theta*T*B / ln 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosSpec {
    theta: f64,
    frame_t: f64,
    bandwidth: f64,
    beta: f64,
}

impl QosSpec {
    pub fn new(theta: f64, frame_t: f64, bandwidth: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::invalid("theta", format!("must be finite and >= 0, got {theta}")));
        }
        if !(frame_t.is_finite() && frame_t > 0.0) {
            return Err(Error::invalid("frame_t", format!("must be finite and > 0, got {frame_t}")));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth", format!("must be finite and > 0, got {bandwidth}")));
        }
        Ok(Self {
            theta,
            frame_t,
            bandwidth,
            beta: theta * frame_t * bandwidth / std::f64::consts::LN_2,
        })
    }

    /// QoS parameters with the default frame duration and bandwidth.
    pub fn with_theta(theta: f64) -> Result<Self> {
        Self::new(theta, DEFAULT_FRAME_T, DEFAULT_BANDWIDTH)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn frame_t(&self) -> f64 {
        self.frame_t
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `theta * T * B`: the exponent per unit of normalized rate.
    pub fn theta_tb(&self) -> f64 {
        self.theta * self.frame_t * self.bandwidth
    }

    /// Bits served in one frame at a normalized rate (bits/s/Hz).
    pub fn bits_per_frame(&self, rate_bits_s_hz: f64) -> f64 {
        self.frame_t * self.bandwidth * rate_bits_s_hz
    }

    pub fn is_ergodic(&self) -> bool {
        self.theta == 0.0
    }
}

/// Same as [`QosSpec::new`].
pub fn make_qos(theta: f64, frame_t: f64, bandwidth: f64) -> Result<QosSpec> {
    QosSpec::new(theta, frame_t, bandwidth)
}

/// Average SNR constraint and the noise ratio `gamma = N1/N2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    avg_snr: f64,
    gamma: f64,
}

impl LinkBudget {
    pub fn new(avg_snr: f64, gamma: f64) -> Result<Self> {
        if !(avg_snr.is_finite() && avg_snr >= 0.0) {
            return Err(Error::invalid("avg_snr", format!("must be finite and >= 0, got {avg_snr}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid("gamma", format!("must be finite and > 0, got {gamma}")));
        }
        Ok(Self { avg_snr, gamma })
    }

    /// `snr_db = 10 log10(avg_snr)`; `-inf` gives a zero power budget.
    pub fn from_db(snr_db: f64, gamma: f64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::INFINITY {
            return Err(Error::invalid("snr_db", format!("must be finite or -inf, got {snr_db}")));
        }
        Self::new(10f64.powf(snr_db / 10.0), gamma)
    }

    pub fn avg_snr(&self) -> f64 {
        self.avg_snr
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Which channel state the transmitter observes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CsiMode {
    /// Both the main and the eavesdropper gain.
    Full,
    /// The main-channel gain only.
    Main,
}

impl fmt::Display for CsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CsiMode::Full => "full",
            CsiMode::Main => "main",
        })
    }
}

impl FromStr for CsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(CsiMode::Full),
            "main" => Ok(CsiMode::Main),
            other => Err(Error::invalid("csi", format!("expected `full` or `main`, got `{other}`"))),
        }
    }
}

/// A calibrated power-control policy.
///
/// `beta > 0` selects the QoS-constrained policy with multiplier `lambda`.
/// `beta == 0` is the unconstrained (ergodic) policy whose `lambda` is in nats
/// per unit power. `threshold` is the boundary of the zero-power region:
/// `z_m - gamma*z_e <= threshold` for full CSI and `z_m <= threshold` for main
/// CSI. A zero power budget is represented by infinite `lambda` and `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPolicy {
    pub csi: CsiMode,
    pub lambda: f64,
    pub beta: f64,
    pub threshold: f64,
    pub link: LinkBudget,
    pub law_e: FadingLaw,
    pub tol: Tolerances,
}

impl PowerPolicy {
    /// The all-zero policy used when the power budget is zero.
    pub fn silent(csi: CsiMode, beta: f64, link: LinkBudget, law_e: FadingLaw, tol: Tolerances) -> Self {
        Self {
            csi,
            lambda: f64::INFINITY,
            beta,
            threshold: f64::INFINITY,
            link,
            law_e,
            tol,
        }
    }

    pub fn is_ergodic(&self) -> bool {
        self.beta == 0.0
    }

    /// Whether the state lies in the (closed) zero-power region.
    pub fn is_silent_at(&self, z_m: f64, z_e: f64) -> bool {
        match self.csi {
            CsiMode::Full => z_m - self.link.gamma() * z_e <= self.threshold,
            CsiMode::Main => z_m <= self.threshold,
        }
    }

    /// Transmit power `mu` (in units of the noise power at the main receiver)
    /// for the channel state. Main-CSI policies ignore `z_e`.
    pub fn power(&self, z_m: f64, z_e: f64) -> Result<f64> {
        if self.is_silent_at(z_m, z_e) {
            return Ok(0.0);
        }
        match (self.csi, self.is_ergodic()) {
            (CsiMode::Full, false) => {
                full_csi::pointwise_power(z_m, z_e, &self.link, self.beta, self.lambda, &self.tol)
            }
            (CsiMode::Full, true) => Ok(ergodic::ergodic_power_full(z_m, z_e, &self.link, self.lambda)),
            (CsiMode::Main, false) => {
                main_csi::power_main(z_m, self.beta, self.lambda, &self.link, &self.law_e, &self.tol)
            }
            (CsiMode::Main, true) => {
                ergodic::ergodic_power_main(z_m, &self.link, self.lambda, &self.law_e, &self.tol)
            }
        }
    }

    /// Realized secrecy rate `[log2(1 + mu z_m) - log2(1 + gamma mu z_e)]^+`
    /// in bits/s/Hz.
    pub fn secrecy_rate(&self, z_m: f64, z_e: f64) -> Result<f64> {
        let mu = self.power(z_m, z_e)?;
        Ok(secrecy_rate(mu, z_m, z_e, self.link.gamma()))
    }

    /// Evaluates the policy on a rectangular grid.
    pub fn surface(&self, grid: &SurfaceGrid) -> Result<PolicySurface> {
        let z_e = grid.z_e_points();
        let z_m = grid.z_m_points();
        let mut mu = Vec::with_capacity(z_e.len() * z_m.len());
        for &ze in &z_e {
            for &zm in &z_m {
                mu.push(self.power(zm, ze)?);
            }
        }
        Ok(PolicySurface { z_e, z_m, mu })
    }
}

/// `[log2(1 + mu z_m) - log2(1 + gamma mu z_e)]^+`.
pub fn secrecy_rate(mu: f64, z_m: f64, z_e: f64, gamma: f64) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    let nats = (mu * z_m).ln_1p() - (gamma * mu * z_e).ln_1p();
    (nats / std::f64::consts::LN_2).max(0.0)
}

/// Rectangular `(z_e, z_m)` grid: `steps` evenly spaced points on `[0, max]`
/// along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGrid {
    pub z_e_max: f64,
    pub z_m_max: f64,
    pub steps: usize,
}

impl SurfaceGrid {
    pub fn new(z_e_max: f64, z_m_max: f64, steps: usize) -> Result<Self> {
        for (name, v) in [("z_e_max", z_e_max), ("z_m_max", z_m_max)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self { z_e_max, z_m_max, steps })
    }

    fn axis(max: f64, steps: usize) -> Vec<f64> {
        match steps {
            0 => Vec::new(),
            1 => vec![0.0],
            n => (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect(),
        }
    }

    pub fn z_e_points(&self) -> Vec<f64> {
        Self::axis(self.z_e_max, self.steps)
    }

    pub fn z_m_points(&self) -> Vec<f64> {
        Self::axis(self.z_m_max, self.steps)
    }
}

/// Policy values on a [`SurfaceGrid`], stored `z_e`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySurface {
    pub z_e: Vec<f64>,
    pub z_m: Vec<f64>,
    pub mu: Vec<f64>,
}

impl PolicySurface {
    pub fn get(&self, i_e: usize, i_m: usize) -> f64 {
        self.mu[i_e * self.z_m.len() + i_m]
    }

    /// `(z_e, z_m, mu)` triples in storage order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.z_e
            .iter()
            .flat_map(move |&ze| self.z_m.iter().map(move |&zm| (ze, zm)))
            .zip(&self.mu)
            .map(|((ze, zm), &mu)| (ze, zm, mu))
    }
}

/// Effective secure throughput with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputResult {
    /// Normalized effective secure throughput in bits/s/Hz.
    pub throughput_bits_s_hz: f64,
    /// Unnormalized throughput in bits/s.
    pub throughput_bits_s: f64,
    /// Calibrated multiplier (nats per unit power when `theta == 0`).
    pub lambda: f64,
    /// `|E{mu} - avg_snr|` at the calibrated multiplier.
    pub power_residual: f64,
    /// Propagated quadrature error estimate on the normalized throughput.
    pub quad_error: f64,
    pub theta: f64,
}

impl ThroughputResult {
    pub fn new(qos: &QosSpec, throughput_bits_s_hz: f64, lambda: f64, power_residual: f64, quad_error: f64) -> Self {
        Self {
            throughput_bits_s_hz,
            throughput_bits_s: qos.bandwidth() * throughput_bits_s_hz,
            lambda,
            power_residual,
            quad_error,
            theta: qos.theta(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_density;
    use std::f64::consts::LN_2;

    #[test]
    fn make_qos_examples() {
        assert_eq!(make_qos(0.0, 2e-3, 1e5).unwrap().beta(), 0.0);
        let q = make_qos(LN_2 / 200.0, 2e-3, 1e5).unwrap();
        assert!((q.beta() - 1.0).abs() < 1e-15);
        let q = make_qos(0.01, 2e-3, 1e5).unwrap();
        assert!((q.beta() - 2.0 / LN_2).abs() < 1e-12);
        assert!((q.beta() - 2.8854).abs() < 1e-4);
    }

    #[test]
    fn make_qos_rejects_bad_input() {
        assert!(make_qos(-1e-3, 2e-3, 1e5).unwrap_err().is_validation());
        assert!(make_qos(0.01, 0.0, 1e5).is_err());
        assert!(make_qos(0.01, 2e-3, -1.0).is_err());
        assert!(make_qos(f64::NAN, 2e-3, 1e5).is_err());
    }

    #[test]
    fn link_budget_validation_and_db() {
        assert!(LinkBudget::new(-1.0, 1.0).is_err());
        assert!(LinkBudget::new(1.0, 0.0).is_err());
        assert_eq!(LinkBudget::from_db(f64::NEG_INFINITY, 1.0).unwrap().avg_snr(), 0.0);
        assert!((LinkBudget::from_db(10.0, 1.0).unwrap().avg_snr() - 10.0).abs() < 1e-12);
        assert!((LinkBudget::from_db(0.0, 1.0).unwrap().avg_snr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_law_shape() {
        let law = FadingLaw::exponential(2.0).unwrap();
        assert_eq!(law.density(-1.0), 0.0);
        assert_eq!(law.cdf(0.0), 0.0);
        assert!((law.density(0.0) - 0.5).abs() < 1e-15);
        assert!((law.cdf(2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!(law.cdf(200.0) > 1.0 - 1e-15);
        let mut prev = 0.0;
        for i in 0..200 {
            let c = law.cdf(i as f64 * 0.1);
            assert!(c >= prev);
            prev = c;
        }
        assert!((law.survival(1.0) + law.cdf(1.0) - 1.0).abs() < 1e-15);
        assert!(FadingLaw::exponential(0.0).is_err());
    }

    #[test]
    fn cdf_integral_matches_quadrature() {
        let law = FadingLaw::exponential(1.5).unwrap();
        let tol = Tolerances::default();
        let x = 2.3;
        let q = crate::numerics::integrate(|t| law.cdf(t), 0.0, x, &tol).unwrap();
        assert!((q.value - law.cdf_integral(x)).abs() < 1e-12);
    }

    #[test]
    fn density_normalizes() {
        let law = FadingLaw::exponential(1.0).unwrap();
        let q = integrate_density(|_| 1.0, &law, &Tolerances::default()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10);
        let trunc = law.support_end(1e-12);
        assert!((trunc - 27.631021115928547).abs() < 1e-9);
    }

    #[test]
    fn sampler_is_deterministic_and_matches_law() {
        let law = FadingLaw::exponential(1.0).unwrap();
        let a = sample_gain(&law, 7, 1_000_000).unwrap();
        let b = sample_gain(&law, 7, 1_000_000).unwrap();
        assert_eq!(a, b);
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        let tail = a.iter().filter(|&&z| z > 1.0).count() as f64 / n;
        assert!((tail - (-1.0f64).exp()).abs() < 0.005, "tail {tail}");
        assert!(sample_gain(&law, 7, 0).is_err());
    }

    #[test]
    fn csi_mode_round_trips_text() {
        for mode in [CsiMode::Full, CsiMode::Main] {
            assert_eq!(mode.to_string().parse::<CsiMode>().unwrap(), mode);
        }
        assert!("both".parse::<CsiMode>().is_err());
    }

    #[test]
    fn grid_axes() {
        let g = SurfaceGrid::new(2.0, 4.0, 3).unwrap();
        assert_eq!(g.z_e_points(), vec![0.0, 1.0, 2.0]);
        assert_eq!(g.z_m_points(), vec![0.0, 2.0, 4.0]);
        assert!(SurfaceGrid::new(1.0, 1.0, 0).unwrap().z_e_points().is_empty());
    }

    #[test]
    fn secrecy_rate_is_positive_part() {
        assert_eq!(secrecy_rate(1.0, 0.5, 2.0, 1.0), 0.0);
        assert!((secrecy_rate(1.0, 3.0, 0.0, 1.0) - 2.0).abs() < 1e-15);
        assert_eq!(secrecy_rate(0.0, 3.0, 0.0, 1.0), 0.0);
    }
}
