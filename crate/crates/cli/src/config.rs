//! Run configuration: a JSON document, every field defaulted except the
//! command, unknown keys rejected.

use std::fmt;
use std::path::PathBuf;

use rellich_core::profiles::{bump, ParameterRanges, RadialProfile};
use rellich_core::sharp::{GridSpec, MIN_SEARCH_BUDGET};
use rellich_core::verify::RuleSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Sharp,
    Angle,
    Oracle,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Sharp => "sharp",
            Command::Angle => "angle",
            Command::Oracle => "oracle",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual of the mode identity and of every closed-form comparison.
    pub identity_rel: f64,
    /// Sign slack, relative to the natural scale of each signed quantity.
    pub sign_rel: f64,
    /// Relative gap allowed between the eigen and symbol constants.
    pub constant_rel: f64,
    /// Relative discrepancy allowed in the dissipativity closed forms.
    pub dissipativity_rel: f64,
    /// Absolute floor for angle cosines where nonnegativity is claimed.
    pub angle_abs: f64,
    /// Largest grid-vs-quadrature deviation per term, n = 3 and n = 4.
    pub oracle_rel_3d: f64,
    pub oracle_rel_4d: f64,
    /// Smallest observed order under h-halving, every term.
    pub oracle_min_order: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity_rel: 1e-10,
            sign_rel: 1e-12,
            constant_rel: 0.05,
            dissipativity_rel: 1e-11,
            angle_abs: 1e-10,
            oracle_rel_3d: 0.02,
            oracle_rel_4d: 0.05,
            oracle_min_order: 1.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub dimensions: Vec<usize>,
    pub degrees: Vec<usize>,
    /// Random profiles per (n, ℓ).
    pub samples: usize,
    /// Bumps per random profile.
    pub components: usize,
    pub ranges: ParameterRanges,
    pub quadrature: RuleSpec,
    /// Assert cross-term positivity in every dimension, not only n ≥ 4.
    pub assert_theorem_everywhere: bool,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            dimensions: vec![2, 3, 4, 5, 6, 8],
            degrees: vec![0, 1, 2, 3],
            samples: 20,
            components: 3,
            ranges: ParameterRanges::default(),
            quadrature: RuleSpec::default(),
            assert_theorem_everywhere: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpParams {
    /// (n, ℓ) pairs.
    pub cases: Vec<[usize; 2]>,
    pub grid: GridSpec,
    /// Nodes dropped at each end of `grid` for the widening check.
    pub trim: usize,
    pub s_max: f64,
    pub s_points: usize,
}

impl Default for SharpParams {
    fn default() -> Self {
        Self {
            cases: vec![[5, 0], [5, 1], [6, 0], [7, 2]],
            grid: GridSpec::default(),
            trim: 512,
            s_max: 10.0,
            s_points: 2001,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleParams {
    pub dimensions: Vec<usize>,
    /// Degree set searched jointly; every entry ≥ 1.
    pub degrees: Vec<usize>,
    pub budget: usize,
}

impl Default for AngleParams {
    fn default() -> Self {
        Self {
            dimensions: vec![3, 4, 5, 6],
            degrees: vec![1, 2],
            budget: MIN_SEARCH_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    /// (n, ℓ) pairs with n ∈ {3, 4}.
    pub cases: Vec<[usize; 2]>,
    pub extent: f64,
    /// Resolutions per axis, ascending; consecutive pairs give convergence orders.
    pub points_3d: Vec<usize>,
    pub points_4d: Vec<usize>,
    pub profile: RadialProfile,
    /// Write the sampled mode fields under `<out>/fields/`.
    pub dump: bool,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            cases: vec![[3, 1], [3, 2], [4, 1]],
            extent: 3.2,
            points_3d: vec![64, 128],
            points_4d: vec![64],
            profile: bump(2.0, 0.8, 1.0).expect("default oracle profile"),
            dump: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub verify: VerifyParams,
    #[serde(default)]
    pub sharp: SharpParams,
    #[serde(default)]
    pub angle: AngleParams,
    #[serde(default)]
    pub oracle: OracleParams,
}

fn default_out() -> PathBuf {
    PathBuf::from("rellich-out")
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            out: default_out(),
            tolerances: Tolerances::default(),
            verify: VerifyParams::default(),
            sharp: SharpParams::default(),
            angle: AngleParams::default(),
            oracle: OracleParams::default(),
        }
    }
}

/// A config problem, located in the source text when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "config error at line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "config error at line {l}: {}", self.message),
            _ => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a config document; the command must be present.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, None)
}

/// As [`parse_config`], with `command` filling in a missing `"command"` key.
/// A document naming a different command is rejected.
pub fn parse_config_with(text: &str, command: Option<Command>) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(located)?;
    let command = match (raw.command, command) {
        (Some(a), Some(b)) if a != b => {
            return Err(at_key(text, "command", format!("config names {} but {} was requested", a.name(), b.name())))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => {
            return Err(ConfigError {
                line: Some(1),
                column: Some(1),
                message: "missing \"command\" (one of verify, sharp, angle, oracle, sweep)".into(),
            })
        }
    };
    let config = RunConfig {
        command,
        seed: raw.seed,
        out: raw.out,
        tolerances: raw.tolerances,
        verify: raw.verify,
        sharp: raw.sharp,
        angle: raw.angle,
        oracle: raw.oracle,
    };
    validate(&config).map_err(|(key, msg)| at_key(text, key, msg))?;
    Ok(config)
}

/// [`RunConfig`] with the command optional, so every serde error keeps its
/// position in the source text.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    command: Option<Command>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_out")]
    out: PathBuf,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    verify: VerifyParams,
    #[serde(default)]
    sharp: SharpParams,
    #[serde(default)]
    angle: AngleParams,
    #[serde(default)]
    oracle: OracleParams,
}

fn located(e: serde_json::Error) -> ConfigError {
    ConfigError {
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string(),
    }
}

/// Points at the first occurrence of `"key"` in the text.
fn at_key(text: &str, key: &str, message: String) -> ConfigError {
    let needle = format!("\"{key}\"");
    let line = text.lines().position(|l| l.contains(&needle)).map(|i| i + 1);
    let column = line.and_then(|l| text.lines().nth(l - 1)).and_then(|l| l.find(&needle)).map(|c| c + 1);
    ConfigError { line, column, message }
}

type Invalid = (&'static str, String);

fn positive(key: &'static str, v: f64) -> Result<(), Invalid> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err((key, format!("{key} must be a positive finite number, got {v}")))
    }
}

fn validate(c: &RunConfig) -> Result<(), Invalid> {
    let t = &c.tolerances;
    positive("identity_rel", t.identity_rel)?;
    positive("sign_rel", t.sign_rel)?;
    positive("constant_rel", t.constant_rel)?;
    positive("dissipativity_rel", t.dissipativity_rel)?;
    positive("angle_abs", t.angle_abs)?;
    positive("oracle_rel_3d", t.oracle_rel_3d)?;
    positive("oracle_rel_4d", t.oracle_rel_4d)?;
    positive("oracle_min_order", t.oracle_min_order)?;

    let v = &c.verify;
    if v.dimensions.iter().any(|&n| n < 2) {
        return Err(("dimensions", "dimension entries must be at least 2".into()));
    }
    if v.samples == 0 || v.components == 0 {
        return Err(("samples", "samples and components must be at least 1".into()));
    }
    v.ranges.validate().map_err(|e| ("ranges", e.to_string()))?;
    if v.quadrature.panels == 0 || v.quadrature.nodes_per_panel == 0 {
        return Err(("quadrature", "quadrature needs at least one panel and one node".into()));
    }

    let s = &c.sharp;
    if s.cases.iter().any(|&[n, _]| n < 2) {
        return Err(("cases", "sharp cases need n ≥ 2".into()));
    }
    let g = s.grid;
    if !(g.lo >= 1e-6 && g.hi <= 1e6 && g.lo < g.hi && g.points >= 256) {
        return Err(("grid", "grid needs 1e-6 ≤ lo < hi ≤ 1e6 and at least 256 points".into()));
    }
    if g.points < 2 * s.trim + 256 {
        return Err(("trim", "trim must leave at least 256 grid points".into()));
    }
    positive("s_max", s.s_max)?;
    if s.s_points < 1000 {
        return Err(("s_points", "s_points must be at least 1000".into()));
    }

    let a = &c.angle;
    if a.dimensions.iter().any(|&n| n < 2) {
        return Err(("dimensions", "dimension entries must be at least 2".into()));
    }
    if a.degrees.is_empty() || a.degrees.contains(&0) {
        return Err(("degrees", "angle degrees must be non-empty and at least 1".into()));
    }
    if a.budget < MIN_SEARCH_BUDGET {
        return Err(("budget", format!("search budget must be at least {MIN_SEARCH_BUDGET}")));
    }

    let o = &c.oracle;
    if o.cases.iter().any(|&[n, _]| n != 3 && n != 4) {
        return Err(("cases", "oracle cases need n ∈ {3, 4}".into()));
    }
    positive("extent", o.extent)?;
    for (key, pts) in [("points_3d", &o.points_3d), ("points_4d", &o.points_4d)] {
        if pts.is_empty() || pts.windows(2).any(|w| w[0] >= w[1]) {
            return Err((key, format!("{key} must be non-empty and strictly ascending")));
        }
    }
    Ok(())
}
