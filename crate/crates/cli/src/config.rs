//! Flat key-value run configuration.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank
//! lines ignored. Unknown keys and malformed values are reported with their
//! line number.

use std::fmt;
use std::path::Path;

use fracground::DomainKind;

/// Parsed run configuration with defaults applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dim: usize,
    pub s: f64,
    pub lambda: f64,
    pub p: f64,
    pub kind: DomainKind,
    pub semiaxes: [f64; 2],
    /// Domain scale factor for single-run commands.
    pub r: f64,
    pub h: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub n_seeds: usize,
    /// Number of eigenpairs for spectral commands.
    pub k: usize,
    /// Ascending scale factors for `sweep`.
    pub r_list: Vec<f64>,
    /// Threshold separating "numerically zero" eigenvalues from positive ones.
    pub tol_zero: f64,
    /// Truncation radius for the whole-space reference profile.
    pub q_radius: f64,
    /// Optional target resolution for `rescale` (default: h / R).
    pub h_target: Option<f64>,
}

/// Config-file error carrying the offending line number.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "{}:{}: {}", self.path, n, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(path: &Path, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Loads and validates a configuration file.
pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err(path, None, format!("cannot read config: {e}")))?;

    let mut dim: Option<usize> = None;
    let mut s: Option<f64> = None;
    let mut lambda: Option<f64> = None;
    let mut p: Option<f64> = None;
    let mut h: Option<f64> = None;
    let mut kind: Option<DomainKind> = None;
    let mut cfg = RunConfig {
        dim: 0,
        s: 0.0,
        lambda: 0.0,
        p: 0.0,
        kind: DomainKind::Interval,
        semiaxes: [1.0, 1.0],
        r: 1.0,
        h: 0.0,
        tol: 1e-9,
        max_iter: 500,
        seed: 0,
        n_seeds: 10,
        k: 4,
        r_list: Vec::new(),
        tol_zero: 1e-6,
        q_radius: 20.0,
        h_target: None,
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(path, Some(lineno), format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(err(path, Some(lineno), format!("empty value for `{key}`")));
        }

        macro_rules! parse {
            ($ty:ty) => {
                value.parse::<$ty>().map_err(|e| {
                    err(path, Some(lineno), format!("bad value for `{key}`: {e}"))
                })?
            };
        }

        match key {
            "N" => dim = Some(parse!(usize)),
            "s" => s = Some(parse!(f64)),
            "lambda" => lambda = Some(parse!(f64)),
            "p" => p = Some(parse!(f64)),
            "h" => h = Some(parse!(f64)),
            "R" => cfg.r = parse!(f64),
            "tol" => cfg.tol = parse!(f64),
            "max_iter" => cfg.max_iter = parse!(usize),
            "seed" => cfg.seed = parse!(u64),
            "n_seeds" => cfg.n_seeds = parse!(usize),
            "k" => cfg.k = parse!(usize),
            "tol_zero" => cfg.tol_zero = parse!(f64),
            "q_radius" => cfg.q_radius = parse!(f64),
            "h_target" => cfg.h_target = Some(parse!(f64)),
            "a1" => cfg.semiaxes[0] = parse!(f64),
            "a2" => cfg.semiaxes[1] = parse!(f64),
            "kind" => {
                kind = Some(match value {
                    "interval" => DomainKind::Interval,
                    "disc" => DomainKind::Disc,
                    "ellipse" => DomainKind::AxisEllipse,
                    other => {
                        return Err(err(
                            path,
                            Some(lineno),
                            format!("unknown kind `{other}` (interval, disc, ellipse)"),
                        ))
                    }
                })
            }
            "R_list" => {
                cfg.r_list = value
                    .split(',')
                    .map(|tok| {
                        tok.trim().parse::<f64>().map_err(|e| {
                            err(path, Some(lineno), format!("bad R_list entry `{}`: {e}", tok.trim()))
                        })
                    })
                    .collect::<Result<Vec<f64>, ConfigError>>()?;
            }
            other => return Err(err(path, Some(lineno), format!("unknown key `{other}`"))),
        }
    }

    cfg.dim = dim.ok_or_else(|| err(path, None, "missing required key `N`"))?;
    cfg.s = s.ok_or_else(|| err(path, None, "missing required key `s`"))?;
    cfg.lambda = lambda.ok_or_else(|| err(path, None, "missing required key `lambda`"))?;
    cfg.p = p.ok_or_else(|| err(path, None, "missing required key `p`"))?;
    cfg.h = h.ok_or_else(|| err(path, None, "missing required key `h`"))?;

    if cfg.dim != 1 && cfg.dim != 2 {
        return Err(err(path, None, format!("N must be 1 or 2, got {}", cfg.dim)));
    }
    cfg.kind = kind.unwrap_or(match cfg.dim {
        1 => DomainKind::Interval,
        _ => DomainKind::Disc,
    });
    let kind_dim = match cfg.kind {
        DomainKind::Interval => 1,
        _ => 2,
    };
    if kind_dim != cfg.dim {
        return Err(err(path, None, "domain kind does not match N"));
    }
    if cfg.h <= 0.0 {
        return Err(err(path, None, "h must be positive"));
    }
    if cfg.r <= 0.0 {
        return Err(err(path, None, "R must be positive"));
    }
    Ok(cfg)
}
