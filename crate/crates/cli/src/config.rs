//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! scenario = contract
//! diffusion.n = 0.5
//! exponents.alpha = 0.8
//! exponents.p = 2.5
//! initial.u = cosine(base=1, amplitude=0.5, mode=1)
//! initial.v = gaussian(center=3, width=0.5, height=1, base=0.5) + cosine(base=0.2, amplitude=0.1, mode=2)
//! ```
//!
//! Every key is optional except `scenario`; omitted keys take the values of
//! [`ExperimentConfig::defaults`]. Unknown keys, repeated keys and malformed
//! values are errors carrying the offending line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use pmcontract_core::admissible::DEFAULT_BOUNDARY_TOL;
use pmcontract_core::solver::{make_initial, Lift};
use pmcontract_core::{DiffusionParams, InitialKind, TorusGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Region,
    Matrices,
    Simulate,
    Contract,
    Gradient,
    Directional,
    Gradflow,
    Sweep,
    Validate,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Region,
        Scenario::Matrices,
        Scenario::Simulate,
        Scenario::Contract,
        Scenario::Gradient,
        Scenario::Directional,
        Scenario::Gradflow,
        Scenario::Sweep,
        Scenario::Validate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Region => "region",
            Scenario::Matrices => "matrices",
            Scenario::Simulate => "simulate",
            Scenario::Contract => "contract",
            Scenario::Gradient => "gradient",
            Scenario::Directional => "directional",
            Scenario::Gradflow => "gradflow",
            Scenario::Sweep => "sweep",
            Scenario::Validate => "validate",
        }
    }

    fn uses_solver(&self) -> bool {
        matches!(
            self,
            Scenario::Simulate
                | Scenario::Contract
                | Scenario::Gradient
                | Scenario::Directional
                | Scenario::Gradflow
                | Scenario::Sweep
        )
    }

    fn needs_pair(&self) -> bool {
        matches!(self, Scenario::Contract | Scenario::Sweep)
    }

    fn needs_exponents(&self) -> bool {
        matches!(self, Scenario::Matrices | Scenario::Contract | Scenario::Gradient | Scenario::Directional)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL
            .iter()
            .find(|c| c.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown scenario {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Parse,
    Range,
    Inconsistency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub kind: ConfigErrorKind,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ConfigErrorKind::Parse => "parse error",
            ConfigErrorKind::Range => "range error",
            ConfigErrorKind::Inconsistency => "inconsistent configuration",
        };
        match self.line {
            Some(l) => write!(f, "line {l}: {kind}: {}", self.message),
            None => write!(f, "{kind}: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Inclusive linear range `start:end:count`; a single number is a range of one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinRange {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl LinRange {
    pub fn single(x: f64) -> Self {
        Self { start: x, end: x, count: 1 }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.end
                } else {
                    self.start + (self.end - self.start) * i as f64 / (self.count - 1) as f64
                }
            })
            .collect()
    }
}

impl fmt::Display for LinRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count == 1 {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}:{}:{}", self.start, self.end, self.count)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cells: usize,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub t_end: f64,
    pub sample_every: f64,
    pub cfl: f64,
    pub lift: Lift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub alpha_steps: usize,
    pub p_max: f64,
    pub p_steps: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub w_min: f64,
    pub w_max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSpec {
    pub xi_t: f64,
    pub xi_x: Vec<i64>,
    pub eta_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n: Vec<f64>,
    pub alpha: LinRange,
    pub p: LinRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub diffusion: DiffusionParams,
    pub alpha: f64,
    pub p: f64,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub initial_u: InitialKind,
    pub initial_v: Option<InitialKind>,
    pub region: RegionSpec,
    pub scan: ScanSpec,
    pub directional: DirectionalSpec,
    pub sweep: SweepSpec,
    pub seed: u64,
    pub output: PathBuf,
}

const KEYS: &[&str] = &[
    "scenario",
    "seed",
    "output",
    "diffusion.n",
    "diffusion.m",
    "diffusion.d",
    "exponents.alpha",
    "exponents.p",
    "grid.cells",
    "grid.period",
    "solver.t_end",
    "solver.sample_every",
    "solver.cfl",
    "solver.lift",
    "solver.lift_absolute",
    "initial.u",
    "initial.v",
    "region.alpha_steps",
    "region.p_max",
    "region.p_steps",
    "region.tol",
    "scan.w_min",
    "scan.w_max",
    "scan.steps",
    "directional.xi_t",
    "directional.xi_x",
    "directional.eta_steps",
    "sweep.n",
    "sweep.alpha",
    "sweep.p",
];

impl ExperimentConfig {
    /// Defaults for `scenario`: a 1-d torus of length `2π` with 256 cells,
    /// `n = 0.5`, `(α, p) = (0.8, 2.5)` and smooth positive initial data.
    pub fn defaults(scenario: Scenario) -> Self {
        let params = DiffusionParams::from_n(if scenario == Scenario::Gradflow { -1.0 / 3.0 } else { 0.5 }, 1)
            .expect("valid default");
        let alpha = if scenario == Scenario::Gradflow { 1.0 + params.n() / 2.0 } else { 0.8 };
        Self {
            scenario,
            diffusion: params,
            alpha,
            p: if scenario == Scenario::Gradflow { 2.0 } else { 2.5 },
            grid: GridSpec { cells: 256, period: 2.0 * std::f64::consts::PI },
            solver: SolverSpec { t_end: 1.0, sample_every: 0.01, cfl: 0.4, lift: Lift::default() },
            initial_u: InitialKind::ConstantPlusCosine { base: 1.0, amplitude: 0.5, mode: 1 },
            initial_v: scenario.needs_pair().then_some(InitialKind::Gaussian {
                center: 2.0,
                width: 0.6,
                height: 0.8,
                base: 0.7,
            }),
            region: RegionSpec { alpha_steps: 100, p_max: 12.0, p_steps: 221, tol: DEFAULT_BOUNDARY_TOL },
            scan: ScanSpec { w_min: 1e-3, w_max: 1.0, steps: 2000 },
            directional: DirectionalSpec { xi_t: 0.0, xi_x: vec![1], eta_steps: 4 },
            sweep: SweepSpec {
                n: vec![0.5],
                alpha: LinRange { start: 0.6, end: 0.9, count: 5 },
                p: LinRange { start: 2.0, end: 3.0, count: 5 },
            },
            seed: 0,
            output: PathBuf::from(format!("out/{}", scenario.as_str())),
        }
    }

    pub fn torus(&self) -> TorusGrid {
        TorusGrid::new(self.diffusion.dim(), self.grid.cells, self.grid.period).expect("validated grid")
    }

    /// Render in the input format; `parse_config(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("scenario", self.scenario.to_string());
        put("seed", self.seed.to_string());
        put("output", self.output.display().to_string());
        put("diffusion.m", self.diffusion.m().to_string());
        put("diffusion.d", self.diffusion.dim().to_string());
        put("exponents.alpha", self.alpha.to_string());
        put("exponents.p", self.p.to_string());
        put("grid.cells", self.grid.cells.to_string());
        put("grid.period", self.grid.period.to_string());
        put("solver.t_end", self.solver.t_end.to_string());
        put("solver.sample_every", self.solver.sample_every.to_string());
        put("solver.cfl", self.solver.cfl.to_string());
        match self.solver.lift {
            Lift::RelativeToMax(r) => put("solver.lift", r.to_string()),
            Lift::Absolute(e) => put("solver.lift_absolute", e.to_string()),
        }
        put("initial.u", format_initial(&self.initial_u));
        if let Some(v) = &self.initial_v {
            put("initial.v", format_initial(v));
        }
        put("region.alpha_steps", self.region.alpha_steps.to_string());
        put("region.p_max", self.region.p_max.to_string());
        put("region.p_steps", self.region.p_steps.to_string());
        put("region.tol", self.region.tol.to_string());
        put("scan.w_min", self.scan.w_min.to_string());
        put("scan.w_max", self.scan.w_max.to_string());
        put("scan.steps", self.scan.steps.to_string());
        put("directional.xi_t", self.directional.xi_t.to_string());
        put(
            "directional.xi_x",
            self.directional.xi_x.iter().map(i64::to_string).collect::<Vec<_>>().join(","),
        );
        put("directional.eta_steps", self.directional.eta_steps.to_string());
        put("sweep.n", self.sweep.n.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        put("sweep.alpha", self.sweep.alpha.to_string());
        put("sweep.p", self.sweep.p.to_string());
        out
    }
}

fn err(kind: ConfigErrorKind, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { kind, line, message: message.into() }
}

fn parse_value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T, ConfigError> {
    raw.parse()
        .map_err(|_| err(ConfigErrorKind::Parse, Some(line), format!("cannot parse {key} from {raw:?}")))
}

/// Split at commas or `+` that are not nested in parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes: Vec<char> = s.chars().collect();
    let mut offset = 0;
    for (i, &c) in bytes.iter().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ if c == sep && depth == 0 => {
                // a `+` directly after an exponent marker belongs to a number
                let exponent = sep == '+' && i > 0 && matches!(bytes[i - 1], 'e' | 'E');
                if !exponent {
                    parts.push(&s[start..offset]);
                    start = offset + c.len_utf8();
                }
            }
            _ => {}
        }
        offset += c.len_utf8();
    }
    parts.push(&s[start..]);
    parts
}

/// `kind(key=value, ...)` terms joined by `+`.
pub fn parse_initial(text: &str) -> Result<InitialKind, String> {
    let terms: Vec<&str> = split_top(text.trim(), '+').into_iter().map(str::trim).collect();
    if terms.len() > 1 {
        return Ok(InitialKind::Sum { parts: terms.iter().map(|t| parse_term(t)).collect::<Result<_, _>>()? });
    }
    parse_term(terms[0])
}

fn parse_term(term: &str) -> Result<InitialKind, String> {
    let open = term.find('(').ok_or_else(|| format!("expected kind(...), found {term:?}"))?;
    if !term.ends_with(')') {
        return Err(format!("missing ')' in {term:?}"));
    }
    let kind = term[..open].trim();
    let inner = &term[open + 1..term.len() - 1];
    let mut args = BTreeMap::new();
    for item in split_top(inner, ',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (k, v) = item.split_once('=').ok_or_else(|| format!("expected key=value, found {item:?}"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("cannot parse {} from {:?}", k.trim(), v.trim()))?;
        if args.insert(k.trim().to_string(), v).is_some() {
            return Err(format!("repeated argument {:?}", k.trim()));
        }
    }
    let mut take = |name: &str, default: Option<f64>| -> Result<f64, String> {
        match args.remove(name) {
            Some(v) => Ok(v),
            None => default.ok_or_else(|| format!("{kind} needs {name}")),
        }
    };
    let out = match kind {
        "cosine" => {
            let base = take("base", None)?;
            let amplitude = take("amplitude", None)?;
            let mode = take("mode", Some(1.0))?;
            if !(mode >= 0.0 && mode.fract() == 0.0 && mode <= u32::MAX as f64) {
                return Err(format!("mode must be a nonnegative integer, got {mode}"));
            }
            InitialKind::ConstantPlusCosine { base, amplitude, mode: mode as u32 }
        }
        "gaussian" => InitialKind::Gaussian {
            center: take("center", None)?,
            width: take("width", None)?,
            height: take("height", Some(1.0))?,
            base: take("base", Some(0.0))?,
        },
        "bump" => InitialKind::Bump {
            center: take("center", None)?,
            radius: take("radius", None)?,
            height: take("height", Some(1.0))?,
        },
        "barenblatt" => InitialKind::Barenblatt { t0: take("t0", None)?, c: take("c", Some(1.0))? },
        other => return Err(format!("unknown initial data kind {other:?}")),
    };
    if let Some(k) = args.keys().next() {
        return Err(format!("unknown argument {k:?} for {kind}"));
    }
    Ok(out)
}

pub fn format_initial(kind: &InitialKind) -> String {
    match kind {
        InitialKind::ConstantPlusCosine { base, amplitude, mode } => {
            format!("cosine(base={base}, amplitude={amplitude}, mode={mode})")
        }
        InitialKind::Gaussian { center, width, height, base } => {
            format!("gaussian(center={center}, width={width}, height={height}, base={base})")
        }
        InitialKind::Bump { center, radius, height } => {
            format!("bump(center={center}, radius={radius}, height={height})")
        }
        InitialKind::Barenblatt { t0, c } => format!("barenblatt(t0={t0}, c={c})"),
        InitialKind::Sum { parts } => parts.iter().map(format_initial).collect::<Vec<_>>().join(" + "),
    }
}

fn parse_range(raw: &str) -> Option<LinRange> {
    let parts: Vec<&str> = raw.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [x] => Some(LinRange::single(x.parse().ok()?)),
        [a, b, k] => {
            let r = LinRange { start: a.parse().ok()?, end: b.parse().ok()?, count: k.parse().ok()? };
            (r.count >= 1).then_some(r)
        }
        _ => None,
    }
}

/// Parse and fully validate a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(text, None)
}

/// As [`parse_config`], with `scenario` supplied (or overridden) by the caller.
pub fn parse_config_with(text: &str, scenario: Option<Scenario>) -> Result<ExperimentConfig, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| err(ConfigErrorKind::Parse, Some(line), format!("expected `key = value`, found {content:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(err(ConfigErrorKind::Parse, Some(line), format!("unknown key {k:?}")));
        }
        if v.is_empty() {
            return Err(err(ConfigErrorKind::Parse, Some(line), format!("empty value for {k}")));
        }
        if let Some((first, _)) = entries.insert(k.to_string(), (line, v.to_string())) {
            return Err(err(ConfigErrorKind::Parse, Some(line), format!("{k} already set on line {first}")));
        }
    }
    if entries.is_empty() && scenario.is_none() {
        return Err(err(ConfigErrorKind::Parse, None, "empty configuration"));
    }
    let scenario = match (scenario, entries.get("scenario")) {
        (Some(s), _) => s,
        (None, Some((line, v))) => v.parse().map_err(|e: String| err(ConfigErrorKind::Parse, Some(*line), e))?,
        (None, None) => return Err(err(ConfigErrorKind::Parse, None, "missing key `scenario`")),
    };
    if let Some((line, v)) = entries.get("scenario") {
        v.parse::<Scenario>().map_err(|e| err(ConfigErrorKind::Parse, Some(*line), e))?;
    }

    let mut cfg = ExperimentConfig::defaults(scenario);
    let line_of = |k: &str| entries.get(k).map(|(l, _)| *l);
    let get = |k: &str| entries.get(k).map(|(l, v)| (*l, v.as_str()));

    if let Some((l, v)) = get("seed") {
        cfg.seed = parse_value("seed", v, l)?;
    }
    if let Some((_, v)) = get("output") {
        cfg.output = PathBuf::from(v);
    }

    let dim: usize = match get("diffusion.d") {
        Some((l, v)) => parse_value("diffusion.d", v, l)?,
        None => cfg.diffusion.dim(),
    };
    let m = match (get("diffusion.n"), get("diffusion.m")) {
        (Some(_), Some((l, _))) => {
            return Err(err(ConfigErrorKind::Inconsistency, Some(l), "set only one of diffusion.n and diffusion.m"))
        }
        (Some((l, v)), None) => 1.0 + parse_value::<f64>("diffusion.n", v, l)?,
        (None, Some((l, v))) => parse_value("diffusion.m", v, l)?,
        (None, None) => cfg.diffusion.m(),
    };
    let diffusion_line = line_of("diffusion.n").or(line_of("diffusion.m")).or(line_of("diffusion.d"));
    cfg.diffusion = DiffusionParams::new(m, dim)
        .map_err(|e| err(ConfigErrorKind::Range, diffusion_line, e.to_string()))?;

    if let Some((l, v)) = get("exponents.alpha") {
        cfg.alpha = parse_value("exponents.alpha", v, l)?;
    } else if scenario == Scenario::Gradflow {
        cfg.alpha = 1.0 + cfg.diffusion.n() / 2.0;
    }
    if let Some((l, v)) = get("exponents.p") {
        cfg.p = parse_value("exponents.p", v, l)?;
    }
    if let Some((l, v)) = get("grid.cells") {
        cfg.grid.cells = parse_value("grid.cells", v, l)?;
    }
    if let Some((l, v)) = get("grid.period") {
        cfg.grid.period = parse_value("grid.period", v, l)?;
    }
    if let Some((l, v)) = get("solver.t_end") {
        cfg.solver.t_end = parse_value("solver.t_end", v, l)?;
    }
    if let Some((l, v)) = get("solver.sample_every") {
        cfg.solver.sample_every = parse_value("solver.sample_every", v, l)?;
    }
    if let Some((l, v)) = get("solver.cfl") {
        cfg.solver.cfl = parse_value("solver.cfl", v, l)?;
    }
    match (get("solver.lift"), get("solver.lift_absolute")) {
        (Some(_), Some((l, _))) => {
            return Err(err(ConfigErrorKind::Inconsistency, Some(l), "set only one of solver.lift and solver.lift_absolute"))
        }
        (Some((l, v)), None) => cfg.solver.lift = Lift::RelativeToMax(parse_value("solver.lift", v, l)?),
        (None, Some((l, v))) => cfg.solver.lift = Lift::Absolute(parse_value("solver.lift_absolute", v, l)?),
        (None, None) => {}
    }
    if let Some((l, v)) = get("initial.u") {
        cfg.initial_u = parse_initial(v).map_err(|e| err(ConfigErrorKind::Parse, Some(l), e))?;
    }
    if let Some((l, v)) = get("initial.v") {
        cfg.initial_v = Some(parse_initial(v).map_err(|e| err(ConfigErrorKind::Parse, Some(l), e))?);
    }
    if let Some((l, v)) = get("region.alpha_steps") {
        cfg.region.alpha_steps = parse_value("region.alpha_steps", v, l)?;
    }
    if let Some((l, v)) = get("region.p_max") {
        cfg.region.p_max = parse_value("region.p_max", v, l)?;
    }
    if let Some((l, v)) = get("region.p_steps") {
        cfg.region.p_steps = parse_value("region.p_steps", v, l)?;
    }
    if let Some((l, v)) = get("region.tol") {
        cfg.region.tol = parse_value("region.tol", v, l)?;
    }
    if let Some((l, v)) = get("scan.w_min") {
        cfg.scan.w_min = parse_value("scan.w_min", v, l)?;
    }
    if let Some((l, v)) = get("scan.w_max") {
        cfg.scan.w_max = parse_value("scan.w_max", v, l)?;
    }
    if let Some((l, v)) = get("scan.steps") {
        cfg.scan.steps = parse_value("scan.steps", v, l)?;
    }
    if let Some((l, v)) = get("directional.xi_t") {
        cfg.directional.xi_t = parse_value("directional.xi_t", v, l)?;
    }
    if let Some((l, v)) = get("directional.xi_x") {
        cfg.directional.xi_x =
            v.split(',').map(|x| parse_value("directional.xi_x", x.trim(), l)).collect::<Result<_, _>>()?;
    } else if dim == 2 {
        cfg.directional.xi_x = vec![1, 0];
    }
    if let Some((l, v)) = get("directional.eta_steps") {
        cfg.directional.eta_steps = parse_value("directional.eta_steps", v, l)?;
    }
    if let Some((l, v)) = get("sweep.n") {
        cfg.sweep.n = v.split(',').map(|x| parse_value("sweep.n", x.trim(), l)).collect::<Result<_, _>>()?;
    } else if get("diffusion.n").is_some() || get("diffusion.m").is_some() {
        cfg.sweep.n = vec![cfg.diffusion.n()];
    }
    for (key, slot) in [("sweep.alpha", &mut cfg.sweep.alpha), ("sweep.p", &mut cfg.sweep.p)] {
        if let Some((l, v)) = get(key) {
            *slot = parse_range(v).ok_or_else(|| {
                err(ConfigErrorKind::Parse, Some(l), format!("{key} must be `x` or `start:end:count`, found {v:?}"))
            })?;
        }
    }

    validate(&cfg, &line_of)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig, line_of: &dyn Fn(&str) -> Option<usize>) -> Result<(), ConfigError> {
    use ConfigErrorKind::{Inconsistency, Range};
    let range = |k: &str, msg: String| Err(err(Range, line_of(k), msg));
    let s = cfg.scenario;
    let n = cfg.diffusion.n();
    let diff_line = line_of("diffusion.n").or(line_of("diffusion.m"));

    if cfg.grid.cells < pmcontract_core::grid::MIN_CELLS {
        return range("grid.cells", format!("grid.cells must be >= {}", pmcontract_core::grid::MIN_CELLS));
    }
    if !(cfg.grid.period > 0.0 && cfg.grid.period.is_finite()) {
        return range("grid.period", "grid.period must be positive".into());
    }
    if cfg.diffusion.dim() > 2 {
        return range("diffusion.d", "only d = 1 and d = 2 are supported".into());
    }
    if !(cfg.alpha > 0.0 && cfg.alpha <= 1.0) {
        return range("exponents.alpha", format!("alpha must lie in (0, 1], got {}", cfg.alpha));
    }
    if !(cfg.p >= 1.0 && cfg.p.is_finite()) {
        return range("exponents.p", format!("p must be >= 1, got {}", cfg.p));
    }
    if !(cfg.solver.t_end > 0.0 && cfg.solver.t_end.is_finite()) {
        return range("solver.t_end", "solver.t_end must be positive".into());
    }
    if !(cfg.solver.sample_every > 0.0 && cfg.solver.sample_every <= cfg.solver.t_end) {
        return range("solver.sample_every", "solver.sample_every must lie in (0, t_end]".into());
    }
    if !(cfg.solver.cfl > 0.0 && cfg.solver.cfl < 1.0) {
        return range("solver.cfl", "solver.cfl must lie in (0, 1)".into());
    }
    match cfg.solver.lift {
        Lift::RelativeToMax(r) if !(0.0..1.0).contains(&r) => {
            return range("solver.lift", "solver.lift must lie in [0, 1)".into())
        }
        Lift::Absolute(e) if !(e >= 0.0 && e.is_finite()) => {
            return range("solver.lift_absolute", "solver.lift_absolute must be >= 0".into())
        }
        _ => {}
    }
    if !(cfg.region.alpha_steps >= 2 && cfg.region.p_steps >= 2) {
        return range("region.alpha_steps", "region grids need at least 2 steps per axis".into());
    }
    if !(cfg.region.p_max > 1.0) {
        return range("region.p_max", "region.p_max must exceed 1".into());
    }
    if !(cfg.region.tol > 0.0) {
        return range("region.tol", "region.tol must be positive".into());
    }
    if !(cfg.scan.w_min > 0.0 && cfg.scan.w_min <= cfg.scan.w_max && cfg.scan.w_max <= 1.0) {
        return range("scan.w_min", "scan range must satisfy 0 < w_min <= w_max <= 1".into());
    }
    if cfg.scan.steps < 2 {
        return range("scan.steps", "scan.steps must be >= 2".into());
    }

    let contraction = !matches!(s, Scenario::Simulate | Scenario::Validate);
    if contraction && !(n.abs() < 1.0) {
        return Err(err(Range, diff_line, format!("{s} needs |n| < 1, got n = {n}")));
    }
    if s.needs_exponents() {
        if cfg.alpha < n.abs() {
            return Err(err(
                Inconsistency,
                line_of("exponents.alpha").or(diff_line),
                format!("alpha = {} < |n| = {}: the admissible set requires alpha >= |n|", cfg.alpha, n.abs()),
            ));
        }
        if cfg.p == 1.0 && cfg.alpha != 1.0 {
            return Err(err(Inconsistency, line_of("exponents.p"), "p = 1 is only meaningful with alpha = 1"));
        }
    }
    if s == Scenario::Gradflow {
        if !(n > -1.0 && n <= 0.0) {
            return Err(err(Range, diff_line, format!("gradflow needs n in (-1, 0], got {n}")));
        }
        let expect = 1.0 + n / 2.0;
        if (cfg.alpha - expect).abs() > 1e-12 {
            return Err(err(
                Inconsistency,
                line_of("exponents.alpha"),
                format!("gradflow needs alpha = 1 + n/2 = {expect}, got {}", cfg.alpha),
            ));
        }
        if cfg.p != 2.0 {
            return Err(err(Inconsistency, line_of("exponents.p"), "gradflow needs p = 2"));
        }
    }
    if s == Scenario::Directional {
        let d = &cfg.directional;
        if d.xi_x.len() != cfg.diffusion.dim() {
            return range("directional.xi_x", format!("directional.xi_x needs {} components", cfg.diffusion.dim()));
        }
        if !(d.xi_t >= 0.0) || (d.xi_t == 0.0 && d.xi_x.iter().all(|&k| k == 0)) {
            return range("directional.xi_t", "direction must be nonzero with xi_t >= 0".into());
        }
        let k = d.xi_t / cfg.solver.sample_every;
        if (k - k.round()).abs() > 1e-9 {
            return Err(err(
                Inconsistency,
                line_of("directional.xi_t"),
                "directional.xi_t must be a multiple of solver.sample_every",
            ));
        }
        let ratio = cfg.solver.t_end / cfg.solver.sample_every;
        if d.xi_t > 0.0 && (ratio - ratio.round()).abs() > 1e-9 {
            return Err(err(
                Inconsistency,
                line_of("solver.t_end"),
                "time shifts need t_end to be a multiple of solver.sample_every",
            ));
        }
        if d.eta_steps == 0 || d.eta_steps > 10 {
            return range("directional.eta_steps", "directional.eta_steps must lie in 1..=10".into());
        }
        if (1usize << (d.eta_steps - 1)) * d.xi_x.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
            >= cfg.grid.cells
        {
            return range("directional.eta_steps", "largest shift exceeds the grid".into());
        }
    }
    if s == Scenario::Sweep {
        if cfg.sweep.n.is_empty() || cfg.sweep.n.iter().any(|x| !(x.abs() < 1.0)) {
            return range("sweep.n", "sweep.n needs values with |n| < 1".into());
        }
        let alphas = cfg.sweep.alpha.values();
        let ps = cfg.sweep.p.values();
        if alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return range("sweep.alpha", "sweep.alpha values must lie in (0, 1]".into());
        }
        if ps.iter().any(|p| !(*p > 1.0 && p.is_finite())) {
            return range("sweep.p", "sweep.p values must exceed 1".into());
        }
    }

    if s.uses_solver() {
        let grid = cfg.torus();
        let check = |kind: &InitialKind, key: &str| -> Result<(), ConfigError> {
            let f = make_initial(kind, grid, &cfg.diffusion).map_err(|e| err(Range, line_of(key), e.to_string()))?;
            if cfg.diffusion.m() < 1.0 && matches!(cfg.solver.lift, Lift::Absolute(e) if e == 0.0) && !(f.min() > 0.0)
            {
                return Err(err(
                    Inconsistency,
                    line_of(key),
                    "fast diffusion needs strictly positive data or a positive lift",
                ));
            }
            Ok(())
        };
        check(&cfg.initial_u, "initial.u")?;
        if s.needs_pair() {
            match &cfg.initial_v {
                Some(v) => check(v, "initial.v")?,
                None => return Err(err(Inconsistency, None, format!("{s} needs initial.v"))),
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_an_error() {
        assert!(parse_config("").is_err());
        assert!(parse_config("# only a comment\n\n").is_err());
    }

    #[test]
    fn unknown_keys_carry_line_numbers() {
        let e = parse_config("scenario = simulate\n\ngrid.size = 4\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert_eq!(e.kind, ConfigErrorKind::Parse);
        assert!(e.to_string().starts_with("line 3:"));
    }

    #[test]
    fn contract_rejects_alpha_below_abs_n() {
        let e = parse_config("scenario = contract\ndiffusion.n = 0.5\nexponents.alpha = 0.3\n").unwrap_err();
        assert_eq!(e.kind, ConfigErrorKind::Inconsistency);
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn minimal_simulate_round_trips() {
        let c = parse_config("scenario = simulate\n").unwrap();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);

        let text = "scenario = contract\ndiffusion.n = -0.25\nexponents.alpha = 0.6\nexponents.p = 1.75\n\
                    initial.u = cosine(base=1, amplitude=0.25, mode=2)\n\
                    initial.v = gaussian(center=1.5, width=0.3, height=1e+0, base=0.1) + bump(center=4, radius=1, height=0.5)\n\
                    solver.lift_absolute = 0.01\nseed = 42\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.seed, 42);
        assert!(matches!(c.initial_v, Some(InitialKind::Sum { ref parts }) if parts.len() == 2));
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn value_errors() {
        assert_eq!(parse_config("scenario = simulate\ngrid.cells = many\n").unwrap_err().line, Some(2));
        assert_eq!(parse_config("scenario = simulate\ngrid.cells = 4\n").unwrap_err().kind, ConfigErrorKind::Range);
        assert!(parse_config("scenario = nope\n").is_err());
        assert!(parse_config("scenario = simulate\nseed = 1\nseed = 2\n").is_err());
        assert!(parse_config("scenario = simulate\ninitial.u = cosine(base=1, amplitude=2)\n").is_err());
        assert!(parse_config("scenario = simulate\ninitial.u = wave(a=1)\n").is_err());
        assert!(parse_config("scenario = gradflow\ndiffusion.n = -0.5\nexponents.alpha = 0.8\n").is_err());
        assert!(parse_config("scenario = gradflow\ndiffusion.n = -0.5\n").is_ok());
        assert!(parse_config("scenario = directional\ndirectional.xi_t = 0.015\n").is_err());
        assert!(parse_config("scenario = contract\ndiffusion.m = 2.5\n").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(LinRange { start: 1.0, end: 2.0, count: 3 }.values(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_range("0.5"), Some(LinRange::single(0.5)));
        assert_eq!(parse_range("1:2:0"), None);
        assert_eq!(split_top("a(1,2),b", ','), vec!["a(1,2)", "b"]);
    }
}
