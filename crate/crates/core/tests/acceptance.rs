//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use secure_qos::ergodic::{ergodic_power_full, ergodic_power_main};
use secure_qos::full_csi::{pointwise_power, state_objective};
use secure_qos::main_csi::power_main;
use secure_qos::queue::aggregate_decay;
use secure_qos::{
    estimate_decay, secrecy_rate, simulate_queue, solve, CsiMode, FadingLaw, LinkBudget, PowerPolicy, QosSpec,
    SurfaceGrid, ThroughputResult, Tolerances,
};

type Outcome = Result<(bool, String), String>;

fn exp1() -> FadingLaw {
    FadingLaw::exponential(1.0).unwrap()
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn e(err: secure_qos::Error) -> String {
    err.to_string()
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Minimizer of a convex function on `[0, hi]` by repeated grid refinement.
fn grid_argmin(obj: impl Fn(f64) -> f64, hi: f64) -> f64 {
    let scan = |lo: f64, hi: f64, n: usize| {
        let h = (hi - lo) / n as f64;
        let best = (0..=n)
            .map(|i| lo + i as f64 * h)
            .map(|x| (x, obj(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        (best, h)
    };
    let (mut best, mut h) = scan(0.0, hi, 2000);
    for _ in 0..5 {
        (best, h) = scan((best - 2.0 * h).max(0.0), (best + 2.0 * h).min(hi), 200);
    }
    let _ = h;
    best
}

// 1. Closed form at beta = 1.
fn closed_form() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let law = exp1();
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let (zm, ze) = (law.sample(&mut rng), law.sample(&mut rng));
        let gamma = rng.random_range(0.25..4.0);
        let lambda = 10f64.powf(rng.random_range(-2.0..0.5));
        let link = LinkBudget::new(1.0, gamma).map_err(e)?;
        let mu = pointwise_power(zm, ze, &link, 1.0, lambda, &tol()).map_err(e)?;
        let exact = (((zm - gamma * ze) / lambda).max(0.0).sqrt() - 1.0).max(0.0) / zm;
        worst = worst.max((mu - exact).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-8 && secs < 1.0, format!("max |mu - closed form| = {worst:.2e} (<= 1e-8), {secs:.2} s (< 1 s)")))
}

// 2. Grid minimizers of the reduced Lagrangians.
fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let law = exp1();
    let (mut worst_full, mut worst_main, mut active) = (0.0_f64, 0.0_f64, 0);
    for _ in 0..100 {
        let (zm, ze) = (law.sample(&mut rng), law.sample(&mut rng));
        let beta = 10f64.powf(rng.random_range(-1.0..1.0));
        let gamma = rng.random_range(0.25..4.0);
        let lambda = beta * 10f64.powf(rng.random_range(-1.5..0.0));
        let link = LinkBudget::new(1.0, gamma).map_err(e)?;
        // L(mu*) <= L(0) <= 1 and L(mu) >= lambda mu, so mu* <= 1 / lambda.
        let hi = 1.0 / lambda;

        let full = pointwise_power(zm, ze, &link, beta, lambda, &tol()).map_err(e)?;
        let full_oracle = grid_argmin(
            |mu| {
                let log_r = ((mu * zm).ln_1p() - (gamma * mu * ze).ln_1p()).max(0.0);
                (-beta * log_r).exp() + lambda * mu
            },
            hi,
        );
        worst_full = worst_full.max((full - full_oracle).abs());

        let main = power_main(zm, beta, lambda, &link, &law, &tol()).map_err(e)?;
        let main_oracle = grid_argmin(
            |mu| simpson(|z| state_objective(mu, zm, z, gamma, beta) * (-z).exp(), 0.0, zm / gamma, 400) + lambda * mu,
            hi,
        );
        worst_main = worst_main.max((main - main_oracle).abs());
        active += usize::from(full > 0.0) + usize::from(main > 0.0);
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst_full <= 1e-3 && worst_main <= 1e-3 && secs < 60.0;
    Ok((
        ok,
        format!(
            "max |mu - oracle| full = {worst_full:.2e}, main = {worst_main:.2e} (<= 1e-3), {active}/200 active, {secs:.1} s (< 60 s)"
        ),
    ))
}

/// `int_0^inf h(t) e^(-t) dt` by Simpson's rule in `u = ln t`, which resolves
/// the steep rise of the power just past the zero-power boundary.
fn simpson_log(h: impl Fn(f64) -> f64) -> f64 {
    simpson(
        |u| {
            let t = u.exp();
            h(t) * (-t).exp() * t
        },
        -32.0,
        40f64.ln(),
        1200,
    )
}

/// `E{mu}` by Simpson rules in log coordinates, both measured from the edge of
/// the zero-power region.
fn mean_power_simpson(policy: &PowerPolicy) -> Result<f64, String> {
    let gamma = policy.link.gamma();
    let err = std::cell::RefCell::new(None);
    let mu = |zm: f64, ze: f64| {
        policy.power(zm, ze).unwrap_or_else(|x| {
            err.borrow_mut().get_or_insert(x.to_string());
            0.0
        })
    };
    let value = match policy.csi {
        CsiMode::Full => simpson_log(|ze| {
            let lower = gamma * ze + policy.threshold;
            (-lower).exp() * simpson_log(|t| mu(lower + t, ze))
        }),
        CsiMode::Main => {
            let alpha = policy.threshold;
            (-alpha).exp() * simpson_log(|t| mu(alpha + t, 0.0))
        }
    };
    match err.into_inner() {
        Some(msg) => Err(msg),
        None => Ok(value),
    }
}

struct GridPoint {
    theta: f64,
    snr: f64,
    csi: CsiMode,
    policy: PowerPolicy,
    result: ThroughputResult,
}

fn solve_grid(thetas: &[f64], snrs: &[f64]) -> Result<Vec<GridPoint>, String> {
    let mut out = Vec::new();
    for &theta in thetas {
        for &snr in snrs {
            for csi in [CsiMode::Full, CsiMode::Main] {
                let qos = QosSpec::with_theta(theta).map_err(e)?;
                let link = LinkBudget::new(snr, 1.0).map_err(e)?;
                let (policy, result) = solve(csi, &qos, &link, &exp1(), &exp1(), &tol()).map_err(e)?;
                out.push(GridPoint {
                    theta,
                    snr,
                    csi,
                    policy,
                    result,
                });
            }
        }
    }
    Ok(out)
}

// 3. Calibration accuracy.
fn calibration(grid: &[GridPoint]) -> Outcome {
    let mut worst = 0.0_f64;
    for p in grid {
        let power = mean_power_simpson(&p.policy)?;
        worst = worst.max((power / p.snr - 1.0).abs());
    }
    Ok((worst <= 1e-4, format!("max |E(mu) - snr| / snr = {worst:.2e} (<= 1e-4) over {} cases", grid.len())))
}

// 4. Ordering of throughputs.
fn ordering(grid: &[GridPoint], thetas: &[f64], snrs: &[f64]) -> Outcome {
    let c = |theta: f64, snr: f64, csi: CsiMode| {
        grid.iter()
            .find(|p| p.theta == theta && p.snr == snr && p.csi == csi)
            .map(|p| p.result.throughput_bits_s_hz)
            .unwrap()
    };
    let mut problems = Vec::new();
    for &t in thetas {
        for &s in snrs {
            if c(t, s, CsiMode::Full) < c(t, s, CsiMode::Main) - 1e-6 {
                problems.push(format!("full < main at theta={t}, snr={s}"));
            }
        }
    }
    for csi in [CsiMode::Full, CsiMode::Main] {
        for &s in snrs {
            for w in thetas.windows(2) {
                if c(w[1], s, csi) > c(w[0], s, csi) {
                    problems.push(format!("{csi} increases in theta at snr={s}"));
                }
            }
        }
        for &t in thetas {
            for w in snrs.windows(2) {
                if c(t, w[1], csi) < c(t, w[0], csi) {
                    problems.push(format!("{csi} decreases in snr at theta={t}"));
                }
            }
        }
    }
    let gap = |t: f64, s: f64| {
        let f = c(t, s, CsiMode::Full);
        (f - c(t, s, CsiMode::Main)) / f
    };
    let (lo, hi) = (thetas[0], thetas[thetas.len() - 1]);
    let mut gaps = Vec::new();
    for &s in snrs {
        let (g_lo, g_hi) = (gap(lo, s), gap(hi, s));
        if !(g_hi < g_lo) {
            problems.push(format!("relative gap not smaller at theta={hi}, snr={s}"));
        }
        gaps.push(format!("snr {s}: {g_lo:.3} -> {g_hi:.3}"));
    }
    let detail = if problems.is_empty() {
        format!("full >= main, monotone in theta and snr; relative gap theta {lo} -> {hi}: {}", gaps.join(", "))
    } else {
        problems.join("; ")
    };
    Ok((problems.is_empty(), detail))
}

/// Power table on `[alpha, alpha + 40]` with linear interpolation.
struct PowerTable {
    start: f64,
    step: f64,
    mu: Vec<f64>,
}

impl PowerTable {
    fn at(&self, z: f64) -> f64 {
        if z <= self.start {
            return 0.0;
        }
        let x = (z - self.start) / self.step;
        let i = x.floor() as usize;
        if i + 1 >= self.mu.len() {
            return *self.mu.last().unwrap();
        }
        let w = x - i as f64;
        (1.0 - w) * self.mu[i] + w * self.mu[i + 1]
    }
}

/// Monte Carlo mean secrecy rate and its standard error.
fn monte_carlo(n: usize, seed: u64, rate: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let law = exp1();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let r = rate(law.sample(&mut rng), law.sample(&mut rng));
        s += r;
        s2 += r * r;
    }
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean) * n as f64 / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

// 5. Continuity at theta -> 0 and a Monte Carlo check of the ergodic values.
fn continuity() -> Outcome {
    const SAMPLES: usize = 10_000_000;
    let link = LinkBudget::from_db(0.0, 1.0).map_err(e)?;
    let law = exp1();
    let mut parts = Vec::new();
    let mut ok = true;
    for csi in [CsiMode::Full, CsiMode::Main] {
        let (ergodic_policy, ergodic) =
            solve(csi, &QosSpec::with_theta(0.0).map_err(e)?, &link, &law, &law, &tol()).map_err(e)?;
        let (_, small) = solve(csi, &QosSpec::with_theta(1e-6).map_err(e)?, &link, &law, &law, &tol()).map_err(e)?;
        let diff = (small.throughput_bits_s_hz - ergodic.throughput_bits_s_hz).abs();
        let lambda = ergodic_policy.lambda;
        let (mc, se) = match csi {
            CsiMode::Full => {
                monte_carlo(SAMPLES, 55, |zm, ze| secrecy_rate(ergodic_power_full(zm, ze, &link, lambda), zm, ze, 1.0))
            }
            CsiMode::Main => {
                let start = ergodic_policy.threshold;
                let step = 1e-3;
                let mu = (0..=40_000)
                    .map(|i| ergodic_power_main(start + i as f64 * step, &link, lambda, &law, &tol()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(e)?;
                let table = PowerTable { start, step, mu };
                monte_carlo(SAMPLES, 56, |zm, ze| secrecy_rate(table.at(zm), zm, ze, 1.0))
            }
        };
        let z = (mc - ergodic.throughput_bits_s_hz).abs() / se;
        ok &= diff <= 1e-3 && z <= 3.0;
        parts.push(format!(
            "{csi}: |C(1e-6) - C(0)| = {diff:.2e} (<= 1e-3), C(0) = {:.5}, MC = {mc:.5} +/- {se:.1e} ({z:.2} SE, <= 3)",
            ergodic.throughput_bits_s_hz
        ));
    }
    Ok((ok, parts.join("; ")))
}

// 6. Structure of the full-CSI power surface.
fn surface_structure() -> Outcome {
    let link = LinkBudget::from_db(0.0, 1.0).map_err(e)?;
    let law = exp1();
    let grid = SurfaceGrid::new(5.0, 5.0, 51).map_err(e)?;
    let surface = |theta: f64| -> Result<_, String> {
        let (policy, _) = solve(CsiMode::Full, &QosSpec::with_theta(theta).map_err(e)?, &link, &law, &law, &tol()).map_err(e)?;
        policy.surface(&grid).map_err(e)
    };
    let (s0, s1) = (surface(0.0)?, surface(0.01)?);
    // The two off-diagonal bands of the grid.
    const SMALL_GAP: f64 = 0.2;
    let (mut nonzero_below, mut small_cells, mut small_bad, mut reversed) = (0, 0, 0, 0);
    let (mut best, mut best_gap) = ((0, 0), f64::NEG_INFINITY);
    for (i, &ze) in s0.z_e.iter().enumerate() {
        for (j, &zm) in s0.z_m.iter().enumerate() {
            let gap = zm - ze;
            if gap <= 0.0 {
                nonzero_below += usize::from(s0.get(i, j) != 0.0) + usize::from(s1.get(i, j) != 0.0);
            } else if gap <= SMALL_GAP + 1e-9 {
                small_cells += 1;
                small_bad += usize::from(!(s1.get(i, j) > s0.get(i, j)));
            } else if gap <= 0.5 + 1e-9 {
                reversed += usize::from(s1.get(i, j) <= s0.get(i, j));
            }
            if gap > best_gap {
                (best, best_gap) = ((i, j), gap);
            }
        }
    }
    let (p0, p1) = (s0.get(best.0, best.1), s1.get(best.0, best.1));
    let ok = nonzero_below == 0 && p0 > p1 && small_bad == 0 && small_cells > 0;
    Ok((
        ok,
        format!(
            "nonzero cells with z_m <= z_e: {nonzero_below}; at max z_m - z_e: mu(0) = {p0:.4} > mu(0.01) = {p1:.4}; \
             cells with 0 < z_m - z_e <= {SMALL_GAP} where mu(0.01) <= mu(0): {small_bad}/{small_cells} \
             (for 0.2 < z_m - z_e <= 0.5: {reversed})"
        ),
    ))
}

// 7. Queue tail decay.
fn queue_decay() -> Outcome {
    const FRAMES: usize = 10_000_000;
    let start = Instant::now();
    let theta = 0.01;
    let qos = QosSpec::new(theta, 2e-3, 1e5).map_err(e)?;
    let link = LinkBudget::from_db(0.0, 1.0).map_err(e)?;
    let law = exp1();
    let (policy, result) = solve(CsiMode::Full, &qos, &link, &law, &law, &tol()).map_err(e)?;
    let arrival = qos.bits_per_frame(result.throughput_bits_s_hz);
    let fits = (0..8u64)
        .into_par_iter()
        .map(|seed| {
            let h = simulate_queue(&policy, &qos, &law, &law, arrival, FRAMES, seed)?;
            estimate_decay(&h, h.default_fit_range())
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(e)?;
    let (mean, se) = aggregate_decay(&fits).unwrap();
    let rel = (mean / theta - 1.0).abs();
    let secs = start.elapsed().as_secs_f64();
    Ok((
        rel <= 0.2 && secs < 300.0,
        format!("theta_hat = {mean:.5} +/- {se:.1e} vs theta = {theta} ({:.1}% off, <= 20%), {secs:.0} s (< 300 s)", 100.0 * rel),
    ))
}

// 8. Degenerate limits.
fn degenerate() -> Outcome {
    let law = exp1();
    let silent = LinkBudget::new(0.0, 1.0).map_err(e)?;
    let deaf = LinkBudget::new(1.0, 1e6).map_err(e)?;
    let mut zero = Vec::new();
    let mut tiny = Vec::new();
    for theta in [0.0, 0.01] {
        let qos = QosSpec::with_theta(theta).map_err(e)?;
        for csi in [CsiMode::Full, CsiMode::Main] {
            let (_, r) = solve(csi, &qos, &silent, &law, &law, &tol()).map_err(e)?;
            zero.push(r.throughput_bits_s_hz);
            let (_, r) = solve(csi, &qos, &deaf, &law, &law, &tol()).map_err(e)?;
            tiny.push(r.throughput_bits_s_hz);
        }
    }
    let max_tiny = tiny.iter().copied().fold(0.0, f64::max);
    let ok = zero.iter().all(|&c| c == 0.0) && max_tiny <= 1e-3;
    Ok((ok, format!("snr = 0: {zero:?} (exactly 0); gamma = 1e6: max {max_tiny:.2e} (<= 1e-3)")))
}

fn main() {
    let thetas = [1e-3, 1e-2, 1e-1];
    let snrs = [0.1, 1.0, 10.0];
    let grid = solve_grid(&thetas, &snrs);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("closed form at beta = 1", Box::new(closed_form)),
        ("grid-oracle equivalence", Box::new(oracle_equivalence)),
        ("power calibration", Box::new(|| calibration(grid.as_ref().map_err(Clone::clone)?))),
        ("throughput ordering", Box::new(|| ordering(grid.as_ref().map_err(Clone::clone)?, &thetas, &snrs))),
        ("theta -> 0 continuity", Box::new(continuity)),
        ("power surface structure", Box::new(surface_structure)),
        ("queue tail decay", Box::new(queue_decay)),
        ("degenerate limits", Box::new(degenerate)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check().unwrap_or_else(|msg| (false, format!("error: {msg}")));
        failed += usize::from(!ok);
        println!("{} {}. {name}: {detail}", if ok { "PASS" } else { "FAIL" }, k + 1);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
