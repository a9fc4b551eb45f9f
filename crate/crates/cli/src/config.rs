//! Run configuration: defaults, `key=value` files and flag overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use secure_qos::{CsiMode, FadingLaw, LinkBudget, QosSpec, SurfaceGrid, Tolerances, DEFAULT_BANDWIDTH, DEFAULT_FRAME_T};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error(transparent)]
    Model(#[from] secure_qos::Error),
}

type Result<T> = std::result::Result<T, ConfigError>;

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// CSI modes to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiSelect {
    Full,
    Main,
    Both,
}

impl CsiSelect {
    pub fn modes(self) -> &'static [CsiMode] {
        match self {
            CsiSelect::Full => &[CsiMode::Full],
            CsiSelect::Main => &[CsiMode::Main],
            CsiSelect::Both => &[CsiMode::Full, CsiMode::Main],
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            CsiSelect::Full => "full",
            CsiSelect::Main => "main",
            CsiSelect::Both => "both",
        }
    }
}

impl FromStr for CsiSelect {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "full" => Ok(CsiSelect::Full),
            "main" => Ok(CsiSelect::Main),
            "both" => Ok(CsiSelect::Both),
            other => Err(format!("expected full, main or both, got `{other}`")),
        }
    }
}

/// Unresolved settings: every field is optional so files and flags can be layered.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub theta: Option<Vec<f64>>,
    pub snr_db: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub mean_zm: Option<f64>,
    pub mean_ze: Option<f64>,
    pub frame_t: Option<f64>,
    pub bandwidth: Option<f64>,
    pub csi: Option<CsiSelect>,
    pub grid: Option<(f64, f64, usize)>,
    pub tol: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub frames: Option<usize>,
    pub out: Option<PathBuf>,
}

fn parse_scalar<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse().map_err(|e: T::Err| bad(key, e.to_string()))
}

/// Comma-separated list; an empty string is an empty list.
pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_scalar(key, s)).collect()
}

pub fn parse_grid(v: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = v.split(',').collect();
    let [ze, zm, steps] = parts[..] else {
        return Err(bad("grid", "expected zE_max,zM_max,steps"));
    };
    Ok((parse_scalar("grid", ze)?, parse_scalar("grid", zm)?, parse_scalar("grid", steps)?))
}

/// `name=value` pairs separated by commas.
pub fn parse_tol(v: &str) -> Result<Vec<(String, String)>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| bad("tol", format!("expected name=value, got `{kv}`")))
        })
        .collect()
}

impl Overrides {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "theta" => self.theta = Some(parse_list(key, value)?),
            "snr_db" => self.snr_db = Some(parse_list(key, value)?),
            "gamma" => self.gamma = Some(parse_scalar(key, value)?),
            "mean_zm" => self.mean_zm = Some(parse_scalar(key, value)?),
            "mean_ze" => self.mean_ze = Some(parse_scalar(key, value)?),
            "frame_t" => self.frame_t = Some(parse_scalar(key, value)?),
            "bandwidth" => self.bandwidth = Some(parse_scalar(key, value)?),
            "csi" => self.csi = Some(parse_scalar(key, value)?),
            "grid" => self.grid = Some(parse_grid(value)?),
            "tol" => self.tol.extend(parse_tol(value)?),
            "seed" => self.seed = Some(parse_scalar(key, value)?),
            "frames" => self.frames = Some(parse_scalar(key, value)?),
            "out" => self.out = Some(PathBuf::from(value.trim())),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Parses a `key = value` file. `#` starts a comment.
    pub fn parse_file(text: &str) -> Result<Self> {
        let mut o = Overrides::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            o.set(k.trim(), v.trim())?;
        }
        Ok(o)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_file(&text)
    }

    /// `other` wins wherever it is set.
    pub fn merge(mut self, other: Overrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(theta, snr_db, gamma, mean_zm, mean_ze, frame_t, bandwidth, csi, grid, seed, frames, out);
        self.tol.extend(other.tol);
        self
    }
}

/// Command-specific defaults for the swept lists.
#[derive(Debug, Clone)]
pub struct Defaults {
    pub theta: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub frames: usize,
}

/// `10^(-3 + 0.25 k)` for `k = 0..=8`.
pub fn log_theta_grid() -> Vec<f64> {
    (0..=8).map(|k| 10f64.powf(-3.0 + 0.25 * f64::from(k))).collect()
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub theta: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub gamma: f64,
    pub mean_zm: f64,
    pub mean_ze: f64,
    pub frame_t: f64,
    pub bandwidth: f64,
    pub csi: CsiSelect,
    pub grid: SurfaceGrid,
    pub tol: Tolerances,
    pub seed: u64,
    pub frames: usize,
    pub out: Option<PathBuf>,
}

fn apply_tol(mut tol: Tolerances, pairs: &[(String, String)]) -> Result<Tolerances> {
    for (k, v) in pairs {
        match k.as_str() {
            "root_tol" => tol.root_tol = parse_scalar(k, v)?,
            "quad_rel_tol" => tol.quad_rel_tol = parse_scalar(k, v)?,
            "quad_abs_tol" => tol.quad_abs_tol = parse_scalar(k, v)?,
            "quad_trunc_mass" => tol.quad_trunc_mass = parse_scalar(k, v)?,
            "power_rel_tol" => tol.power_rel_tol = parse_scalar(k, v)?,
            "max_iter" => tol.max_iter = parse_scalar(k, v)?,
            other => return Err(ConfigError::UnknownKey(format!("tol.{other}"))),
        }
    }
    tol.validate()?;
    Ok(tol)
}

impl RunConfig {
    pub fn resolve(o: Overrides, defaults: Defaults) -> Result<Self> {
        let (ze_max, zm_max, steps) = o.grid.unwrap_or((5.0, 5.0, 51));
        let cfg = RunConfig {
            theta: o.theta.unwrap_or(defaults.theta),
            snr_db: o.snr_db.unwrap_or(defaults.snr_db),
            gamma: o.gamma.unwrap_or(1.0),
            mean_zm: o.mean_zm.unwrap_or(1.0),
            mean_ze: o.mean_ze.unwrap_or(1.0),
            frame_t: o.frame_t.unwrap_or(DEFAULT_FRAME_T),
            bandwidth: o.bandwidth.unwrap_or(DEFAULT_BANDWIDTH),
            csi: o.csi.unwrap_or(CsiSelect::Both),
            grid: SurfaceGrid::new(ze_max, zm_max, steps)?,
            tol: apply_tol(Tolerances::default(), &o.tol)?,
            seed: o.seed.unwrap_or(1),
            frames: o.frames.unwrap_or(defaults.frames),
            out: o.out,
        };
        for &t in &cfg.theta {
            cfg.qos(t)?;
        }
        for &s in &cfg.snr_db {
            cfg.link(s)?;
        }
        cfg.law_m()?;
        cfg.law_e()?;
        Ok(cfg)
    }

    pub fn qos(&self, theta: f64) -> secure_qos::Result<QosSpec> {
        QosSpec::new(theta, self.frame_t, self.bandwidth)
    }

    pub fn link(&self, snr_db: f64) -> secure_qos::Result<LinkBudget> {
        LinkBudget::from_db(snr_db, self.gamma)
    }

    pub fn law_m(&self) -> secure_qos::Result<FadingLaw> {
        FadingLaw::rayleigh(self.mean_zm)
    }

    pub fn law_e(&self) -> secure_qos::Result<FadingLaw> {
        FadingLaw::rayleigh(self.mean_ze)
    }

    /// `# key = value` lines describing the resolved configuration.
    pub fn header(&self, command: &str) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let t = &self.tol;
        let mut h = String::new();
        let _ = writeln!(h, "# secure-qos {} {}", env!("CARGO_PKG_VERSION"), command);
        let _ = writeln!(h, "# theta = {}", list(&self.theta));
        let _ = writeln!(h, "# snr_db = {}", list(&self.snr_db));
        let _ = writeln!(h, "# gamma = {:?}", self.gamma);
        let _ = writeln!(h, "# mean_zm = {:?}", self.mean_zm);
        let _ = writeln!(h, "# mean_ze = {:?}", self.mean_ze);
        let _ = writeln!(h, "# frame_t = {:?}", self.frame_t);
        let _ = writeln!(h, "# bandwidth = {:?}", self.bandwidth);
        let _ = writeln!(h, "# csi = {}", self.csi.as_str());
        let _ = writeln!(h, "# grid = {:?},{:?},{}", self.grid.z_e_max, self.grid.z_m_max, self.grid.steps);
        let _ = writeln!(
            h,
            "# tol = root_tol={:?},quad_rel_tol={:?},quad_abs_tol={:?},quad_trunc_mass={:?},power_rel_tol={:?},max_iter={}",
            t.root_tol, t.quad_rel_tol, t.quad_abs_tol, t.quad_trunc_mass, t.power_rel_tol, t.max_iter
        );
        let _ = writeln!(h, "# seed = {}", self.seed);
        let _ = writeln!(h, "# frames = {}", self.frames);
        h
    }
}
