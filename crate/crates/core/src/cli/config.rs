//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! kind = harmonic
//! seed = 7
//! domain.n = 17
//! [space]
//! id = "quantile-entropy"
//! m = 32
//! ```
//!
//! A `[section]` header prefixes the keys after it with `section.`. Values are
//! bare words, numbers, quoted strings, or comma-separated lists (optionally in
//! brackets). Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Harmonic,
    EviSuite,
    Ipp,
    Perturbation,
    MaxPrinciples,
}

impl Kind {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "harmonic" => Kind::Harmonic,
            "evi-suite" => Kind::EviSuite,
            "ipp" => Kind::Ipp,
            "perturbation" => Kind::Perturbation,
            "max-principles" | "maximum-principles" => Kind::MaxPrinciples,
            other => return err(format!("unknown experiment kind {other:?}")),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Harmonic => "harmonic",
            Kind::EviSuite => "evi-suite",
            Kind::Ipp => "ipp",
            Kind::Perturbation => "perturbation",
            Kind::MaxPrinciples => "max-principles",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceSpec {
    EuclidQuadratic { center: Vec<f64> },
    EuclidLinear { direction: Vec<f64> },
    QuantileEntropy { m: usize, tau: f64, gamma_min: f64 },
    TripodQuadratic { branch: u8, radius: f64 },
}

impl SpaceSpec {
    pub fn id(&self) -> &'static str {
        match self {
            SpaceSpec::EuclidQuadratic { .. } => "euclid-quadratic",
            SpaceSpec::EuclidLinear { .. } => "euclid-linear",
            SpaceSpec::QuantileEntropy { .. } => "quantile-entropy",
            SpaceSpec::TripodQuadratic { .. } => "tripod-quadratic",
        }
    }
}

/// How boundary values are assigned; interpreted per plugin.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    /// `linear`, `saddle` or `wave` (Euclidean), `plates` (quantile),
    /// `spokes` (tripod).
    pub recipe: String,
    /// Euclidean `linear`: gradient of the scalar profile.
    pub coefficients: Vec<f64>,
    /// Quantile `plates`: support `[a, b]` of the uniform law at `x₁ = 0`.
    pub left: [f64; 2],
    /// Support at `x₁ = 1`.
    pub right: [f64; 2],
    /// Tripod `spokes`: largest boundary radius.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub out: PathBuf,
    pub dim: usize,
    pub n: usize,
    pub space: SpaceSpec,
    pub boundary: BoundarySpec,
    pub test_function: String,
    pub deltas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub ipp_pair: String,
    pub ipp_eps: Vec<f64>,
    pub lp_q: Vec<f64>,
    /// Also solve at `2n − 1` to test Lᵖ ratio stability.
    pub lp_refine: bool,
    pub subharmonic_tol: f64,
    pub max_principle_tol: f64,
    pub max_sweeps: usize,
    pub fixed_point_tol: f64,
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub n: Option<usize>,
    pub space: Option<String>,
}

/// Parses the text into flat dotted keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let at = |m: &str| ConfigError(format!("line {}: {m}", lineno + 1));
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| at("unterminated section header"))?.trim();
            if !valid_key(name) {
                return Err(at("bad section name"));
            }
            section = format!("{name}.");
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| at("expected key = value"))?;
        let key = format!("{section}{}", k.trim());
        if !valid_key(&key) {
            return Err(at(&format!("bad key {:?}", k.trim())));
        }
        let value = unquote(v.trim()).map_err(|m| at(&m))?;
        if out.insert(key.clone(), value).is_some() {
            return Err(at(&format!("duplicate key {key}")));
        }
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        })
}

fn unquote(v: &str) -> Result<String, String> {
    if let Some(rest) = v.strip_prefix('"') {
        let inner = rest.strip_suffix('"').ok_or("unterminated string")?;
        if inner.contains('"') {
            return Err("stray quote".into());
        }
        return Ok(inner.to_string());
    }
    Ok(v.to_string())
}

/// Typed access to the parsed pairs; remembers which keys were read so
/// leftovers can be reported.
struct Table {
    pairs: BTreeMap<String, String>,
}

impl Table {
    fn take(&mut self, key: &str) -> Option<String> {
        self.pairs.remove(key)
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.take(key).unwrap_or_else(|| default.to_string())
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.trim().parse().or_else(|_| err(format!("{key}: cannot parse {v:?}"))),
        }
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(&v).ok_or_else(|| ConfigError(format!("{key}: cannot parse list {v:?}"))),
        }
    }

    fn pair(&mut self, key: &str, default: [f64; 2]) -> Result<[f64; 2], ConfigError> {
        let v = self.list(key, &default)?;
        v.try_into().or_else(|_| err(format!("{key}: expected two numbers")))
    }
}

fn parse_list(v: &str) -> Option<Vec<f64>> {
    let v = v.trim();
    let v = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')).unwrap_or(v);
    if v.trim().is_empty() {
        return Some(Vec::new());
    }
    v.split(',').map(|x| x.trim().parse::<f64>().ok().filter(|x| x.is_finite())).collect()
}

impl ExperimentConfig {
    /// Builds a config for `kind` from file text (possibly empty) and overrides.
    pub fn build(kind: Kind, text: &str, ov: &Overrides) -> Result<Self, ConfigError> {
        let mut t = Table { pairs: parse_pairs(text)? };
        if let Some(k) = t.take("kind") {
            if Kind::parse(&k)? != kind {
                return err(format!("config is for {k:?}, but {} was requested", kind.name()));
            }
        }
        let seed = t.parse("seed", 0u64)?;
        let out = PathBuf::from(t.string("output.dir", "mhl-out"));
        let dim = t.parse("domain.dim", 2usize)?;
        let n_default = match kind {
            Kind::Ipp => 129,
            Kind::MaxPrinciples => 33,
            _ => 17,
        };
        let n = t.parse("domain.n", n_default)?;
        let space_id = t.string("space.id", "euclid-quadratic");
        let components = t.parse("space.components", 2usize)?;
        let space = match space_id.as_str() {
            "euclid-quadratic" => SpaceSpec::EuclidQuadratic {
                center: t.list("space.center", &vec![0.0; components])?,
            },
            "euclid-linear" => {
                let mut unit = vec![0.0; components];
                if let Some(first) = unit.first_mut() {
                    *first = 1.0;
                }
                SpaceSpec::EuclidLinear {
                    direction: t.list("space.direction", &unit)?,
                }
            }
            "quantile-entropy" => SpaceSpec::QuantileEntropy {
                m: t.parse("space.m", 32usize)?,
                tau: t.parse("space.tau", crate::space::DEFAULT_TAU)?,
                gamma_min: t.parse("space.gamma_min", crate::space::DEFAULT_GAMMA_MIN)?,
            },
            "tripod-quadratic" => SpaceSpec::TripodQuadratic {
                branch: t.parse("space.target_branch", 1u8)?,
                radius: t.parse("space.target_radius", 0.0f64)?,
            },
            other => return err(format!("unknown space id {other:?}")),
        };
        let recipe_default = match space {
            SpaceSpec::QuantileEntropy { .. } => "plates",
            SpaceSpec::TripodQuadratic { .. } => "spokes",
            _ => "linear",
        };
        let boundary = BoundarySpec {
            recipe: t.string("boundary.recipe", recipe_default),
            coefficients: t.list("boundary.coefficients", &[1.0, 0.0])?,
            left: t.pair("boundary.left", [0.0, 0.5])?,
            right: t.pair("boundary.right", [0.0, 1.0])?,
            radius: t.parse("boundary.radius", 1.0)?,
        };
        let phi_default = if dim == 1 { "bump" } else { "product-bump" };
        let cfg = Self {
            kind,
            seed,
            out,
            dim,
            n,
            space,
            boundary,
            test_function: t.string("test.function", phi_default),
            deltas: t.list("test.delta", &[0.01, 0.1])?,
            lambdas: t.list("test.lambdas", &[0.2, 0.1, 0.05, 0.025])?,
            samples: t.parse("evi.samples", 1000usize)?,
            t_min: t.parse("evi.t_min", 0.05)?,
            t_max: t.parse("evi.t_max", 2.0)?,
            ipp_pair: t.string("ipp.pair", "linear"),
            ipp_eps: t.list("ipp.eps", &[0.2, 0.1, 0.05])?,
            lp_q: t.list("lp.q", &[1.5, 2.0, 3.0])?,
            lp_refine: t.parse("lp.refine", true)?,
            subharmonic_tol: t.parse("tol.subharmonic", crate::verify::SUBHARMONIC_TOL)?,
            max_principle_tol: t.parse("tol.max_principle", crate::verify::MAX_PRINCIPLE_TOL)?,
            max_sweeps: t.parse("solver.max_sweeps", 200_000usize)?,
            fixed_point_tol: t.parse("solver.tol", 1e-13)?,
        };
        if let Some(k) = t.pairs.keys().next() {
            return err(format!("unknown key {k:?}"));
        }
        cfg.with_overrides(ov)?.validated()
    }

    fn with_overrides(mut self, ov: &Overrides) -> Result<Self, ConfigError> {
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(o) = &ov.out {
            self.out = o.clone();
        }
        if let Some(n) = ov.n {
            self.n = n;
        }
        if let Some(id) = &ov.space {
            if id != self.space.id() {
                // Re-read with defaults for the requested plugin.
                let text = format!("space.id = \"{id}\"");
                let fresh = Self::build(self.kind, &text, &Overrides::default())?;
                self.space = fresh.space;
                self.boundary.recipe = fresh.boundary.recipe;
            }
        }
        Ok(self)
    }

    fn validated(self) -> Result<Self, ConfigError> {
        if !(1..=2).contains(&self.dim) {
            return err(format!("domain.dim must be 1 or 2, got {}", self.dim));
        }
        if self.n < 3 {
            return err(format!("domain.n must be at least 3, got {}", self.n));
        }
        if !(self.t_min > 0.0 && self.t_min < self.t_max) {
            return err("evi.t_min must be positive and below evi.t_max");
        }
        if self.deltas.iter().any(|d| !(*d > 0.0)) {
            return err("test.delta values must be positive");
        }
        if self.samples == 0 {
            return err("evi.samples must be positive");
        }
        Ok(self)
    }
}
