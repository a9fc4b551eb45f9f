//! Scalar root finding and semi-infinite quadrature shared by the policy solvers.
//!
//! Quadrature is a global adaptive Gauss-Kronrod (10/21 point) scheme with the
//! QUADPACK error heuristics. Integrals against a fading density are truncated
//! where the neglected tail mass drops below [`Tolerances::quad_trunc_mass`].
//! Panel refinement and summation happen in a fixed order, so results are
//! bit-reproducible.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::model::FadingLaw;

/// Numerical tolerances used by every solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute tolerance on scalar roots (bracket width or Newton step).
    pub root_tol: f64,
    /// Relative tolerance for adaptive quadrature.
    pub quad_rel_tol: f64,
    /// Absolute floor for adaptive quadrature.
    pub quad_abs_tol: f64,
    /// Probability mass allowed to be dropped when truncating `[0, inf)`.
    pub quad_trunc_mass: f64,
    /// Relative tolerance on the average-power constraint when calibrating a multiplier.
    pub power_rel_tol: f64,
    /// Iteration cap for root finders and panel cap for quadrature.
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            root_tol: 1e-13,
            quad_rel_tol: 1e-10,
            quad_abs_tol: 1e-15,
            quad_trunc_mass: 1e-12,
            power_rel_tol: 1e-8,
            max_iter: 500,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("root_tol", self.root_tol),
            ("quad_rel_tol", self.quad_rel_tol),
            ("quad_abs_tol", self.quad_abs_tol),
            ("quad_trunc_mass", self.quad_trunc_mass),
            ("power_rel_tol", self.power_rel_tol),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.quad_trunc_mass >= 1.0 {
            return Err(Error::invalid("quad_trunc_mass", "must be < 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

/// Value of a definite integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gk21<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    let fc = checked(f(center)?)?;
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = checked(f(center - dx)?)?;
        let f2 = checked(f(center + dx)?)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = checked(f(center - dx)?)?;
        let f2 = checked(f(center + dx)?)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_k - res_g) * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    Ok(Panel {
        a,
        b,
        value: res_k * half,
        error: rescale_error(err, res_abs, res_asc),
        abs: res_abs,
    })
}

fn checked(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("integrand"))
    }
}

/// Adaptive integral of `f` over `[a, b]` for an integrand that can fail.
pub fn integrate_with<F>(mut f: F, a: f64, b: f64, tol: &Tolerances) -> Result<Quadrature>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("integration limits"));
    }
    if b <= a {
        return Ok(Quadrature::default());
    }
    let mut panels = vec![gk21(&mut f, a, b)?];
    let mut evaluations = 21;
    loop {
        let (value, error, abs) = panels.iter().fold((0.0, 0.0, 0.0), |acc, p| {
            (acc.0 + p.value, acc.1 + p.error, acc.2 + p.abs)
        });
        let target = tol
            .quad_abs_tol
            .max(tol.quad_rel_tol * value.abs())
            .max(100.0 * f64::EPSILON * abs);
        if error <= target {
            return Ok(Quadrature {
                value,
                error,
                evaluations,
            });
        }
        if panels.len() >= tol.max_iter {
            return Err(Error::Quadrature { value, error });
        }
        // First panel with the largest error; ties resolve to the lowest index.
        let worst = panels
            .iter()
            .enumerate()
            .fold(0, |best, (i, p)| if p.error > panels[best].error { i } else { best });
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Quadrature { value, error });
        }
        panels[worst] = gk21(&mut f, p.a, mid)?;
        panels.insert(worst + 1, gk21(&mut f, mid, p.b)?);
        evaluations += 42;
    }
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: &Tolerances) -> Result<Quadrature>
where
    F: FnMut(f64) -> f64,
{
    integrate_with(|x| Ok(f(x)), a, b, tol)
}

/// `E[g(Z); lo <= Z < hi]` for `Z ~ law`, truncating the upper tail at
/// [`FadingLaw::support_end`].
pub fn expect_between<F>(mut g: F, law: &FadingLaw, lo: f64, hi: f64, tol: &Tolerances) -> Result<Quadrature>
where
    F: FnMut(f64) -> Result<f64>,
{
    match *law {
        FadingLaw::PointMass { at } => {
            if lo <= at && at < hi {
                Ok(Quadrature {
                    value: checked(g(at)?)?,
                    error: 0.0,
                    evaluations: 1,
                })
            } else {
                Ok(Quadrature::default())
            }
        }
        FadingLaw::Exponential { .. } => {
            let lo = lo.max(0.0);
            let hi = hi.min(law.support_end(tol.quad_trunc_mass));
            integrate_with(|z| Ok(g(z)? * law.density(z)), lo, hi, tol)
        }
    }
}

/// `E[g(Z)]` for `Z ~ law`: the integral of `g` against the density over the
/// truncated support.
pub fn integrate_density<F>(mut g: F, law: &FadingLaw, tol: &Tolerances) -> Result<Quadrature>
where
    F: FnMut(f64) -> f64,
{
    expect_between(|z| Ok(g(z)), law, 0.0, f64::INFINITY, tol)
}

/// `E[g(z_m, z_e)]` for independent gains, as an iterated integral with the
/// eavesdropper gain outermost.
///
/// The reported error is the outer estimate plus the largest inner estimate,
/// which bounds the accumulated inner error since the outer weights sum to at most one.
pub fn expectation_joint<F>(
    mut g: F,
    law_m: &FadingLaw,
    law_e: &FadingLaw,
    tol: &Tolerances,
) -> Result<Quadrature>
where
    F: FnMut(f64, f64) -> f64,
{
    let inner_err = Cell::new(0.0_f64);
    let mut evaluations = 0;
    let outer = expect_between(
        |ze| {
            let inner = integrate_density(|zm| g(zm, ze), law_m, tol)?;
            inner_err.set(inner_err.get().max(inner.error));
            evaluations += inner.evaluations;
            Ok(inner.value)
        },
        law_e,
        0.0,
        f64::INFINITY,
        tol,
    )?;
    Ok(Quadrature {
        value: outer.value,
        error: outer.error + inner_err.get(),
        evaluations,
    })
}

fn finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_nan() {
        Err(Error::NonFinite(what))
    } else {
        Ok(v)
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `root_tol`, when it can no longer be
/// split in floating point, or when `f` vanishes exactly.
pub fn bisect_root<F>(mut f: F, lo: f64, hi: f64, tol: &Tolerances) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = finite(f(lo)?, "root function")?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = finite(f(hi)?, "root function")?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..tol.max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol.root_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = finite(f(mid)?, "root function")?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grows `hi` geometrically by `factor` until `f` changes sign between the
/// returned endpoints. `lo` moves up to the last `hi` that did not change sign,
/// which keeps the bracket tight for monotone `f`.
pub fn expand_bracket<F>(mut f: F, lo: f64, hi: f64, factor: f64, cap: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f_lo = finite(f(lo)?, "root function")?;
    let (mut lo, mut hi) = (lo, hi);
    loop {
        let f_hi = finite(f(hi)?, "root function")?;
        if f_hi == 0.0 || f_hi.signum() != f_lo.signum() {
            return Ok((lo, hi));
        }
        if hi >= cap {
            return Err(Error::Bracket { lo, hi, f_lo, f_hi });
        }
        lo = hi;
        hi = (hi * factor).min(cap);
    }
}

/// Newton iteration safeguarded by a bisection bracket.
///
/// `fdf` returns the function value and its derivative. The iteration starts at
/// `lo`; any Newton step that leaves the current bracket is replaced by a
/// bisection step.
pub fn newton_bisect_root<F>(mut fdf: F, lo: f64, hi: f64, tol: &Tolerances) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (f_lo, df_lo) = fdf(lo)?;
    let f_lo = finite(f_lo, "root function")?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let (f_hi, _) = fdf(hi)?;
    let f_hi = finite(f_hi, "root function")?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    // neg/pos track the endpoints where f < 0 and f > 0.
    let (mut neg, mut pos) = if f_lo < 0.0 { (lo, hi) } else { (hi, lo) };
    let (mut x, mut fx, mut dfx) = (lo, f_lo, df_lo);
    for _ in 0..tol.max_iter {
        let (a, b) = if neg < pos { (neg, pos) } else { (pos, neg) };
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        if step <= tol.root_tol.max(4.0 * f64::EPSILON * x.abs()) {
            return Ok(x);
        }
        let (f, df) = fdf(x)?;
        fx = finite(f, "root function")?;
        dfx = df;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            neg = x;
        } else {
            pos = x;
        }
        if (pos - neg).abs() <= tol.root_tol {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Illinois-modified regula falsi on a bracket `[a, b]`.
///
/// Stops once `|f| <= f_tol` or the bracket is narrower than `x_tol`.
pub fn regula_falsi_root<F>(mut f: F, a: f64, b: f64, f_tol: f64, x_tol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = finite(f(a)?, "root function")?;
    if fa.abs() <= f_tol {
        return Ok(a);
    }
    let mut fb = finite(f(b)?, "root function")?;
    if fb.abs() <= f_tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }
    let mut side = 0;
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for _ in 0..max_iter {
        if (b - a).abs() <= x_tol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !(c > lo && c < hi) {
            c = 0.5 * (a + b);
        }
        let fc = finite(f(c)?, "root function")?;
        if fc.abs() < best.1.abs() {
            best = (c, fc);
        }
        if fc.abs() <= f_tol {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(best.0)
}
