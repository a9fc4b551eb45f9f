//! Fixtures shared by the benchmarks in `benches/`.

use secure_qos::{CsiMode, FadingLaw, LinkBudget, PowerPolicy, QosSpec, Tolerances};

/// Unit-mean Rayleigh fading for both links.
pub fn law() -> FadingLaw {
    FadingLaw::exponential(1.0).expect("valid law")
}

/// 0 dB, equal noise.
pub fn link() -> LinkBudget {
    LinkBudget::new(1.0, 1.0).expect("valid link")
}

pub fn qos(theta: f64) -> QosSpec {
    QosSpec::with_theta(theta).expect("valid theta")
}

/// Calibrated policy at 0 dB.
pub fn policy(csi: CsiMode, theta: f64) -> PowerPolicy {
    secure_qos::calibrated_policy(csi, &qos(theta), &link(), &law(), &law(), &Tolerances::default())
        .expect("calibration")
}
