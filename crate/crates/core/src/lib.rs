//! Optimal power control and effective secure throughput for block-fading
//! wiretap channels under a statistical QoS (queue-tail decay) constraint.
//!
//! The transmitter either knows both channel gains ([`full_csi`]) or only the
//! main-channel gain ([`main_csi`]). For a QoS exponent `theta > 0` the policy
//! minimizes `E{r^(-beta)}` with `r = (1 + mu z_m) / (1 + gamma mu z_e)` and
//! `beta = theta T B / ln 2`; `theta = 0` reduces to maximizing the expected
//! secrecy rate ([`ergodic`]). [`queue`] checks the tail-decay semantics of the
//! result by simulating the transmit buffer.

pub mod calibration;
pub mod ergodic;
pub mod error;
pub mod full_csi;
pub mod main_csi;
pub mod model;
pub mod numerics;
pub mod queue;
pub mod solve;

pub use calibration::Calibration;
pub use error::{Error, Result};
pub use model::{
    make_qos, sample_gain, secrecy_rate, CsiMode, FadingLaw, LinkBudget, PolicySurface, PowerPolicy, QosSpec,
    SurfaceGrid, ThroughputResult, DEFAULT_BANDWIDTH, DEFAULT_FRAME_T,
};
pub use numerics::{Quadrature, Tolerances};
pub use queue::{estimate_decay, simulate_queue, DecayEstimate, TailHistogram};
pub use solve::{calibrated_policy, effective_secure_throughput, solve};
