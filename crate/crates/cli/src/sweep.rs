//! CSV-producing commands.

use std::io::Write;

use rayon::prelude::*;
use secure_qos::queue::aggregate_decay;
use secure_qos::{
    calibrated_policy, effective_secure_throughput, estimate_decay, simulate_queue, CsiMode, DecayEstimate,
    ThroughputResult,
};

use crate::config::RunConfig;

/// Rows written and rows that failed.
#[derive(Debug, Default, Clone, Copy)]
pub struct Outcome {
    pub rows: usize,
    pub failed: usize,
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn csv_writer<W: Write>(mut out: W, header: &str, columns: &[&str]) -> std::io::Result<csv::Writer<W>> {
    out.write_all(header.as_bytes())?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(columns)?;
    Ok(w)
}

fn throughput_fields(r: &secure_qos::Result<ThroughputResult>) -> [String; 4] {
    match r {
        Ok(r) => [fmt(r.throughput_bits_s_hz), fmt(r.lambda), fmt(r.power_residual), String::new()],
        Err(e) => [String::new(), String::new(), String::new(), e.to_string()],
    }
}

fn solve_point(cfg: &RunConfig, theta: f64, snr_db: f64, csi: CsiMode) -> secure_qos::Result<ThroughputResult> {
    let qos = cfg.qos(theta)?;
    let link = cfg.link(snr_db)?;
    effective_secure_throughput(csi, &qos, &link, &cfg.law_m()?, &cfg.law_e()?, &cfg.tol)
}

/// One row per `(theta, csi)` at the first configured SNR.
pub fn sweep_theta<W: Write>(cfg: &RunConfig, out: W) -> std::io::Result<Outcome> {
    let snr_db = cfg.snr_db.first().copied().unwrap_or(0.0);
    let jobs: Vec<(f64, CsiMode)> =
        cfg.theta.iter().flat_map(|&t| cfg.csi.modes().iter().map(move |&m| (t, m))).collect();
    let results: Vec<_> = jobs.par_iter().map(|&(t, m)| solve_point(cfg, t, snr_db, m)).collect();

    let columns = ["theta", "beta", "csi", "throughput_bits_s_hz", "lambda", "power_residual", "error"];
    let mut w = csv_writer(out, &cfg.header("sweep-theta"), &columns)?;
    let mut outcome = Outcome::default();
    for ((t, m), r) in jobs.iter().zip(&results) {
        let beta = cfg.qos(*t).map(|q| q.beta()).unwrap_or(f64::NAN);
        let [c, l, p, e] = throughput_fields(r);
        w.write_record([fmt(*t), fmt(beta), m.to_string(), c, l, p, e])?;
        outcome.rows += 1;
        outcome.failed += usize::from(r.is_err());
    }
    w.flush()?;
    Ok(outcome)
}

/// One row per `(theta, snr_db, csi)`.
pub fn sweep_snr<W: Write>(cfg: &RunConfig, out: W) -> std::io::Result<Outcome> {
    let mut jobs = Vec::new();
    for &t in &cfg.theta {
        for &s in &cfg.snr_db {
            for &m in cfg.csi.modes() {
                jobs.push((t, s, m));
            }
        }
    }
    let results: Vec<_> = jobs.par_iter().map(|&(t, s, m)| solve_point(cfg, t, s, m)).collect();

    let columns = ["theta", "snr_db", "beta", "csi", "throughput_bits_s_hz", "lambda", "power_residual", "error"];
    let mut w = csv_writer(out, &cfg.header("sweep-snr"), &columns)?;
    let mut outcome = Outcome::default();
    for ((t, s, m), r) in jobs.iter().zip(&results) {
        let beta = cfg.qos(*t).map(|q| q.beta()).unwrap_or(f64::NAN);
        let [c, l, p, e] = throughput_fields(r);
        w.write_record([fmt(*t), fmt(*s), fmt(beta), m.to_string(), c, l, p, e])?;
        outcome.rows += 1;
        outcome.failed += usize::from(r.is_err());
    }
    w.flush()?;
    Ok(outcome)
}

/// Long-format `(z_e, z_m, mu)` rows for every `(theta, csi)` at the first SNR.
pub fn policy_surface<W: Write>(cfg: &RunConfig, out: W) -> std::io::Result<Outcome> {
    let columns = ["theta", "csi", "z_e", "z_m", "mu", "error"];
    let mut w = csv_writer(out, &cfg.header("policy-surface"), &columns)?;
    let mut outcome = Outcome::default();
    if cfg.grid.steps == 0 {
        w.flush()?;
        return Ok(outcome);
    }
    let snr_db = cfg.snr_db.first().copied().unwrap_or(0.0);
    let jobs: Vec<(f64, CsiMode)> =
        cfg.theta.iter().flat_map(|&t| cfg.csi.modes().iter().map(move |&m| (t, m))).collect();
    let surfaces: Vec<_> = jobs
        .par_iter()
        .map(|&(t, m)| {
            let policy = calibrated_policy(m, &cfg.qos(t)?, &cfg.link(snr_db)?, &cfg.law_m()?, &cfg.law_e()?, &cfg.tol)?;
            policy.surface(&cfg.grid)
        })
        .collect();

    for ((t, m), s) in jobs.iter().zip(&surfaces) {
        match s {
            Ok(s) => {
                for (ze, zm, mu) in s.rows() {
                    w.write_record([fmt(*t), m.to_string(), fmt(ze), fmt(zm), fmt(mu), String::new()])?;
                    outcome.rows += 1;
                }
            }
            Err(e) => {
                w.write_record([fmt(*t), m.to_string(), String::new(), String::new(), String::new(), e.to_string()])?;
                outcome.rows += 1;
                outcome.failed += 1;
            }
        }
    }
    w.flush()?;
    Ok(outcome)
}

/// Number of independent queue runs.
pub const QUEUE_SEEDS: u64 = 8;

/// Tail decay fits for each `(theta, csi)` over [`QUEUE_SEEDS`] seeds, with
/// arrivals at `load` times the effective secure throughput.
pub fn queue<W: Write>(cfg: &RunConfig, load: f64, out: W) -> std::io::Result<Outcome> {
    let snr_db = cfg.snr_db.first().copied().unwrap_or(0.0);
    let columns = ["theta", "csi", "seed", "theta_hat", "std_error", "points", "unstable", "error"];
    let mut w = csv_writer(out, &cfg.header("queue"), &columns)?;
    let mut outcome = Outcome::default();
    for &t in &cfg.theta {
        for &m in cfg.csi.modes() {
            let runs = match queue_runs(cfg, t, snr_db, m, load) {
                Ok(runs) => runs,
                Err(e) => {
                    let row = [fmt(t), m.to_string(), String::new(), String::new(), String::new(), String::new()];
                    w.write_record(row.into_iter().chain([String::new(), e.to_string()]))?;
                    outcome.rows += 1;
                    outcome.failed += 1;
                    continue;
                }
            };
            let mut fits = Vec::new();
            for (seed, r) in runs {
                let fields = match &r {
                    Ok((est, unstable)) => {
                        fits.push(*est);
                        [fmt(est.theta_hat), fmt(est.std_error), est.points.to_string(), unstable.to_string(), String::new()]
                    }
                    Err(e) => [String::new(), String::new(), String::new(), String::new(), e.to_string()],
                };
                w.write_record([fmt(t), m.to_string(), seed.to_string()].into_iter().chain(fields))?;
                outcome.rows += 1;
                outcome.failed += usize::from(r.is_err());
            }
            if let Some((mean, se)) = aggregate_decay(&fits) {
                w.write_record([
                    fmt(t),
                    m.to_string(),
                    "mean".to_string(),
                    fmt(mean),
                    fmt(se),
                    fits.len().to_string(),
                    String::new(),
                    String::new(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(outcome)
}

type QueueRun = (u64, secure_qos::Result<(DecayEstimate, bool)>);

/// Simulates the buffer for seeds `cfg.seed .. cfg.seed + QUEUE_SEEDS`.
pub fn queue_runs(cfg: &RunConfig, theta: f64, snr_db: f64, csi: CsiMode, load: f64) -> secure_qos::Result<Vec<QueueRun>> {
    let qos = cfg.qos(theta)?;
    if qos.is_ergodic() {
        return Err(secure_qos::Error::InvalidParameter {
            name: "theta",
            reason: "queue decay needs theta > 0".to_string(),
        });
    }
    let (law_m, law_e) = (cfg.law_m()?, cfg.law_e()?);
    let link = cfg.link(snr_db)?;
    let (policy, result) = secure_qos::solve(csi, &qos, &link, &law_m, &law_e, &cfg.tol)?;
    let arrival = load * qos.bits_per_frame(result.throughput_bits_s_hz);
    let seeds: Vec<u64> = (0..QUEUE_SEEDS).map(|k| cfg.seed.wrapping_add(k)).collect();
    Ok(seeds
        .par_iter()
        .map(|&seed| {
            let run = simulate_queue(&policy, &qos, &law_m, &law_e, arrival, cfg.frames, seed).and_then(|h| {
                let est = estimate_decay(&h, h.default_fit_range())?;
                Ok((est, h.unstable))
            });
            (seed, run)
        })
        .collect())
}
