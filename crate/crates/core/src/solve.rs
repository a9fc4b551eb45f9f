//! Entry points that route a QoS exponent to the matching solver.

use crate::error::Result;
use crate::model::{CsiMode, FadingLaw, LinkBudget, PowerPolicy, QosSpec, ThroughputResult};
use crate::numerics::Tolerances;
use crate::{ergodic, full_csi, main_csi};

/// Calibrated policy and effective secure throughput for one CSI mode.
///
/// `theta = 0` goes to the unconstrained baseline; its `lambda` is then in
/// nats per unit power.
pub fn solve(
    csi: CsiMode,
    qos: &QosSpec,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<(PowerPolicy, ThroughputResult)> {
    tol.validate()?;
    match (csi, qos.is_ergodic()) {
        (CsiMode::Full, false) => full_csi::solve_full(qos, link, law_m, law_e, tol),
        (CsiMode::Main, false) => main_csi::solve_main(qos, link, law_m, law_e, tol),
        (CsiMode::Full, true) => {
            let (policy, _) = ergodic::ergodic_policy_full(link, law_m, law_e, tol)?;
            let r = ergodic::ergodic_throughput_full(link, law_m, law_e, tol)?;
            Ok((policy, r.into_result(qos)))
        }
        (CsiMode::Main, true) => {
            let (policy, _) = ergodic::ergodic_policy_main(link, law_m, law_e, tol)?;
            let r = ergodic::ergodic_throughput_main(link, law_m, law_e, tol)?;
            Ok((policy, r.into_result(qos)))
        }
    }
}

/// Policy only; avoids the throughput integral.
pub fn calibrated_policy(
    csi: CsiMode,
    qos: &QosSpec,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<PowerPolicy> {
    tol.validate()?;
    let (policy, _) = match (csi, qos.is_ergodic()) {
        (CsiMode::Full, false) => full_csi::policy_full(qos, link, law_m, law_e, tol)?,
        (CsiMode::Main, false) => main_csi::policy_main(qos, link, law_m, law_e, tol)?,
        (CsiMode::Full, true) => ergodic::ergodic_policy_full(link, law_m, law_e, tol)?,
        (CsiMode::Main, true) => ergodic::ergodic_policy_main(link, law_m, law_e, tol)?,
    };
    Ok(policy)
}

/// Effective secure throughput for one CSI mode.
pub fn effective_secure_throughput(
    csi: CsiMode,
    qos: &QosSpec,
    link: &LinkBudget,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<ThroughputResult> {
    solve(csi, qos, link, law_m, law_e, tol).map(|(_, r)| r)
}
