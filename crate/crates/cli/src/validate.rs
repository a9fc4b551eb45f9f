//! Self-checks reported as `PASS`/`FAIL` lines.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secure_qos::full_csi::{kkt_residual_full, mean_power_full, pointwise_power};
use secure_qos::main_csi::{kkt_lhs_main, mean_power_main, power_main};
use secure_qos::{calibrated_policy, effective_secure_throughput, CsiMode, LinkBudget};

use crate::config::RunConfig;
use crate::sweep::queue_runs;

const KKT_REL_TOL: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 1e-8;
const CALIBRATION_TOL: f64 = 1e-4;
const ORDER_TOL: f64 = 1e-6;
const DECAY_REL_TOL: f64 = 0.2;
const FULL_STATES: usize = 200;
const MAIN_STATES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

/// Result of one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn judge(name: String, ok: bool, detail: String) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Check { name, status, detail }
    }

    fn from_result(name: String, r: secure_qos::Result<(bool, String)>) -> Self {
        match r {
            Ok((ok, detail)) => Check::judge(name, ok, detail),
            Err(e) => Check {
                name,
                status: Status::Fail,
                detail: format!("error=\"{e}\""),
            },
        }
    }

    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        };
        format!("{tag} {} {}", self.name, self.detail)
    }
}

/// Multiplier drawn log-uniformly from `beta * [1e-2, 1]`.
fn random_lambda(rng: &mut ChaCha8Rng, beta: f64) -> f64 {
    beta * 10f64.powf(-2.0 * rng.random::<f64>())
}

fn kkt_full(cfg: &RunConfig, theta: f64, link: &LinkBudget) -> secure_qos::Result<(bool, String)> {
    let beta = cfg.qos(theta)?.beta();
    let (law_m, law_e) = (cfg.law_m()?, cfg.law_e()?);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut worst, mut active, mut misplaced) = (0.0_f64, 0, 0);
    for _ in 0..FULL_STATES {
        let (zm, ze) = (law_m.sample(&mut rng), law_e.sample(&mut rng));
        let lambda = random_lambda(&mut rng, beta);
        let mu = pointwise_power(zm, ze, link, beta, lambda, &cfg.tol)?;
        if zm - link.gamma() * ze <= lambda / beta {
            misplaced += usize::from(mu != 0.0);
            continue;
        }
        active += 1;
        let (r, _) = kkt_residual_full(mu, zm, ze, link.gamma(), beta, lambda);
        worst = worst.max((r / lambda).abs());
        misplaced += usize::from(mu <= 0.0);
    }
    let ok = worst <= KKT_REL_TOL && misplaced == 0;
    Ok((ok, format!("max_rel_residual={worst:e} active={active} misplaced={misplaced} bound={KKT_REL_TOL:e}")))
}

fn kkt_main(cfg: &RunConfig, theta: f64, link: &LinkBudget) -> secure_qos::Result<(bool, String)> {
    let beta = cfg.qos(theta)?.beta();
    let (law_m, law_e) = (cfg.law_m()?, cfg.law_e()?);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut worst, mut active) = (0.0_f64, 0);
    for _ in 0..MAIN_STATES {
        let zm = law_m.sample(&mut rng);
        let lambda = random_lambda(&mut rng, beta);
        let mu = power_main(zm, beta, lambda, link, &law_e, &cfg.tol)?;
        if mu == 0.0 {
            continue;
        }
        active += 1;
        let lhs = kkt_lhs_main(zm, mu, beta, link, &law_e, &cfg.tol)?;
        worst = worst.max((lhs / lambda - 1.0).abs());
    }
    let ok = worst <= KKT_REL_TOL && active > 0;
    Ok((ok, format!("max_rel_residual={worst:e} active={active} bound={KKT_REL_TOL:e}")))
}

fn closed_form(cfg: &RunConfig) -> secure_qos::Result<(bool, String)> {
    let link = LinkBudget::new(1.0, cfg.gamma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (law_m, law_e) = (cfg.law_m()?, cfg.law_e()?);
    let mut worst = 0.0_f64;
    for k in 0..1000 {
        let (zm, ze) = (law_m.sample(&mut rng), law_e.sample(&mut rng));
        let lambda = 0.05 * (1 + k % 20) as f64;
        let mu = pointwise_power(zm, ze, &link, 1.0, lambda, &cfg.tol)?;
        let d = zm - cfg.gamma * ze;
        let exact = if d > lambda { ((d / lambda).sqrt() - 1.0) / zm } else { 0.0 };
        worst = worst.max((mu - exact).abs());
    }
    Ok((worst <= CLOSED_FORM_TOL, format!("max_abs_error={worst:e} bound={CLOSED_FORM_TOL:e}")))
}

fn calibration(cfg: &RunConfig, csi: CsiMode, theta: f64, link: &LinkBudget) -> secure_qos::Result<(bool, String)> {
    let qos = cfg.qos(theta)?;
    let (law_m, law_e) = (cfg.law_m()?, cfg.law_e()?);
    let p = calibrated_policy(csi, &qos, link, &law_m, &law_e, &cfg.tol)?;
    if link.avg_snr() == 0.0 {
        return Ok((p.lambda.is_infinite(), "silent=true".to_string()));
    }
    let power = match csi {
        CsiMode::Full => mean_power_full(p.lambda, p.beta, link, &law_m, &law_e, &cfg.tol)?,
        CsiMode::Main => mean_power_main(p.lambda, p.beta, link, &law_m, &law_e, &cfg.tol)?,
    };
    let rel = (power.value / link.avg_snr() - 1.0).abs();
    Ok((rel <= CALIBRATION_TOL, format!("rel_error={rel:e} bound={CALIBRATION_TOL:e}")))
}

fn ordering(cfg: &RunConfig, theta: f64, link: &LinkBudget) -> secure_qos::Result<(bool, String)> {
    let qos = cfg.qos(theta)?;
    let (law_m, law_e) = (cfg.law_m()?, cfg.law_e()?);
    let full = effective_secure_throughput(CsiMode::Full, &qos, link, &law_m, &law_e, &cfg.tol)?;
    let main = effective_secure_throughput(CsiMode::Main, &qos, link, &law_m, &law_e, &cfg.tol)?;
    let (f, m) = (full.throughput_bits_s_hz, main.throughput_bits_s_hz);
    Ok((f >= m - ORDER_TOL, format!("full={f} main={m}")))
}

fn queue_decay(cfg: &RunConfig, theta: f64, snr_db: f64) -> secure_qos::Result<(bool, String)> {
    let runs = queue_runs(cfg, theta, snr_db, CsiMode::Full, 1.0)?;
    let mut fits = Vec::new();
    for (_, r) in runs {
        fits.push(r?.0);
    }
    let (mean, se) = secure_qos::queue::aggregate_decay(&fits).unwrap_or((f64::NAN, f64::NAN));
    let rel = (mean / theta - 1.0).abs();
    let ok = rel <= DECAY_REL_TOL;
    Ok((ok, format!("theta_hat={mean} std_error={se:e} rel_error={rel:e} bound={DECAY_REL_TOL}")))
}

/// Runs every check for each configured `theta > 0` at the first SNR.
pub fn run_checks(cfg: &RunConfig) -> Vec<Check> {
    let snr_db = cfg.snr_db.first().copied().unwrap_or(0.0);
    let mut checks = vec![Check::from_result("closed_form_beta1".into(), closed_form(cfg))];
    let link = match cfg.link(snr_db) {
        Ok(l) => l,
        Err(e) => {
            checks.push(Check::from_result("link".into(), Err(e)));
            return checks;
        }
    };
    for &theta in cfg.theta.iter().filter(|&&t| t > 0.0) {
        let tag = |name: &str| format!("{name}[theta={theta}]");
        checks.push(Check::from_result(tag("kkt_full"), kkt_full(cfg, theta, &link)));
        checks.push(Check::from_result(tag("kkt_main"), kkt_main(cfg, theta, &link)));
        for csi in [CsiMode::Full, CsiMode::Main] {
            checks.push(Check::from_result(tag(&format!("calibration_{csi}")), calibration(cfg, csi, theta, &link)));
        }
        checks.push(Check::from_result(tag("full_ge_main"), ordering(cfg, theta, &link)));
        checks.push(Check::from_result(tag("queue_decay"), queue_decay(cfg, theta, snr_db)));
    }
    checks
}

/// Writes the report; returns 1 if any check failed or could not be computed.
pub fn validate<W: Write>(cfg: &RunConfig, mut out: W) -> std::io::Result<i32> {
    out.write_all(cfg.header("validate").as_bytes())?;
    let checks = run_checks(cfg);
    for c in &checks {
        writeln!(out, "{}", c.line())?;
    }
    out.flush()?;
    let code = i32::from(checks.iter().any(|c| c.status != Status::Pass));
    Ok(code)
}
