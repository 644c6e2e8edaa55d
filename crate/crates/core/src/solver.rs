//! Explicit conservative time stepping of `m U_t = ΔU^m` on the torus.
//!
//! The update `U ← U + (dt/m) Δ_h(U^m)` is monotone under
//! `dt ≤ h² / (2d max U^{m−1})`, so it preserves order, positivity and
//! the discrete maximum principle, and conserves `h^d Σ U` by telescoping.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::admissible::DiffusionParams;
use crate::error::{Error, Result};
use crate::grid::snapshot;
use crate::grid::{ScalarField, TorusGrid};

/// Values below this after a step are treated as a loss of stability.
pub const NEGATIVITY_LIMIT: f64 = -1e-13;

/// Initial data profiles. Coordinates are those of [`TorusGrid::coords`];
/// centred profiles use the nearest periodic image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialKind {
    /// `base + amplitude Π_k cos(2π·mode·x_k/L)`
    ConstantPlusCosine { base: f64, amplitude: f64, mode: u32 },
    /// `base + height·exp(−|x−c|²/(2 width²))`, centre `c` on the diagonal.
    Gaussian { center: f64, width: f64, height: f64, base: f64 },
    /// `height·exp(1 − 1/(1 − r²/R²))` for `r < R`, zero outside.
    Bump { center: f64, radius: f64, height: f64 },
    /// Self-similar source solution at time `t0` centred at `L/2`, with
    /// free constant `c` (`m > 1` only).
    Barenblatt { t0: f64, c: f64 },
    Sum { parts: Vec<InitialKind> },
}

/// Periodic displacement `x − c` folded into `[−L/2, L/2)`.
fn periodic_delta(x: f64, c: f64, period: f64) -> f64 {
    (x - c + 0.5 * period).rem_euclid(period) - 0.5 * period
}

fn periodic_r2(grid: &TorusGrid, x: [f64; 2], c: f64) -> f64 {
    (0..grid.dim()).map(|k| periodic_delta(x[k], c, grid.period()).powi(2)).sum()
}

/// Barenblatt profile of `m U_t = ΔU^m` (m > 1) at time `t` and squared
/// distance `r2` from the centre: `B(t/m, r)` where
/// `B(s, r) = s^{−a}(c − k r² s^{−2a/d})_+^{1/(m−1)}`,
/// `a = d/(d(m−1)+2)`, `k = a(m−1)/(2md)`.
pub fn barenblatt_profile(m: f64, d: usize, c: f64, t: f64, r2: f64) -> f64 {
    let s = t / m;
    let df = d as f64;
    let a = df / (df * (m - 1.0) + 2.0);
    let k = a * (m - 1.0) / (2.0 * m * df);
    let inner = c - k * r2 * s.powf(-2.0 * a / df);
    s.powf(-a) * inner.max(0.0).powf(1.0 / (m - 1.0))
}

/// Support radius of [`barenblatt_profile`] at time `t`.
pub fn barenblatt_radius(m: f64, d: usize, c: f64, t: f64) -> f64 {
    let s = t / m;
    let df = d as f64;
    let a = df / (df * (m - 1.0) + 2.0);
    let k = a * (m - 1.0) / (2.0 * m * df);
    (c / k).sqrt() * s.powf(a / df)
}

pub fn make_initial(kind: &InitialKind, grid: TorusGrid, params: &DiffusionParams) -> Result<ScalarField> {
    let field = profile(kind, grid, params)?;
    if !field.is_nonnegative() {
        return Err(Error::invalid("initial data must be nonnegative"));
    }
    Ok(field)
}

fn profile(kind: &InitialKind, grid: TorusGrid, params: &DiffusionParams) -> Result<ScalarField> {
    let l = grid.period();
    let d = grid.dim();
    match *kind {
        InitialKind::ConstantPlusCosine { base, amplitude, mode } => {
            if !(base > amplitude.abs()) {
                return Err(Error::invalid(format!(
                    "cosine data needs base > |amplitude| (base = {base}, amplitude = {amplitude})"
                )));
            }
            let k = 2.0 * PI * mode as f64 / l;
            Ok(ScalarField::from_fn(grid, |x| {
                base + amplitude * (0..d).map(|i| (k * x[i]).cos()).product::<f64>()
            }))
        }
        InitialKind::Gaussian { center, width, height, base } => {
            if !(width > 0.0 && height >= 0.0 && base >= 0.0) {
                return Err(Error::invalid("gaussian needs width > 0, height >= 0, base >= 0"));
            }
            Ok(ScalarField::from_fn(grid, |x| {
                base + height * (-periodic_r2(&grid, x, center) / (2.0 * width * width)).exp()
            }))
        }
        InitialKind::Bump { center, radius, height } => {
            if !(radius > 0.0 && radius < 0.5 * l && height >= 0.0) {
                return Err(Error::invalid("bump needs 0 < radius < L/2 and height >= 0"));
            }
            Ok(ScalarField::from_fn(grid, |x| {
                let s = periodic_r2(&grid, x, center) / (radius * radius);
                if s < 1.0 {
                    height * (1.0 - 1.0 / (1.0 - s)).exp()
                } else {
                    0.0
                }
            }))
        }
        InitialKind::Barenblatt { t0, c } => {
            let m = params.m();
            if !(m > 1.0) {
                return Err(Error::invalid("Barenblatt data requires m > 1"));
            }
            if !(t0 > 0.0 && c > 0.0) {
                return Err(Error::invalid("Barenblatt data needs t0 > 0 and c > 0"));
            }
            if barenblatt_radius(m, d, c, t0) >= 0.5 * l {
                return Err(Error::invalid("Barenblatt support does not fit in the torus"));
            }
            Ok(ScalarField::from_fn(grid, |x| {
                barenblatt_profile(m, d, c, t0, periodic_r2(&grid, x, 0.5 * l))
            }))
        }
        InitialKind::Sum { ref parts } => {
            let mut acc = ScalarField::constant(grid, 0.0);
            for part in parts {
                acc = acc.zip_map(&profile(part, grid, params)?, |a, b| a + b)?;
            }
            Ok(acc)
        }
    }
}

/// Stored variable of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variable", content = "alpha", rename_all = "snake_case")]
pub enum Variable {
    /// The density `U`.
    Density,
    /// `u = U^α`.
    Power(f64),
}

/// Regularising shift `U₀ ↦ U₀ + ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lift", content = "value", rename_all = "snake_case")]
pub enum Lift {
    Absolute(f64),
    /// `ε = factor · max U₀`
    RelativeToMax(f64),
}

impl Default for Lift {
    fn default() -> Self {
        Lift::RelativeToMax(1e-3)
    }
}

impl Lift {
    pub fn resolve(&self, max_u0: f64) -> Result<f64> {
        let eps = match *self {
            Lift::Absolute(e) => e,
            Lift::RelativeToMax(r) => r * max_u0,
        };
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("epsilon lift must be >= 0, got {eps}")));
        }
        if eps > 0.0 && !(eps < max_u0) {
            return Err(Error::invalid(format!(
                "epsilon lift {eps} must be below the initial maximum {max_u0}"
            )));
        }
        Ok(eps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: DiffusionParams,
    pub cfl_fraction: f64,
    pub t_end: f64,
    pub sample_every: f64,
    pub lift: Lift,
    pub variable: Variable,
}

impl SolverConfig {
    pub fn new(params: DiffusionParams, t_end: f64, sample_every: f64) -> Self {
        Self {
            params,
            cfl_fraction: 0.4,
            t_end,
            sample_every,
            lift: Lift::default(),
            variable: Variable::Density,
        }
    }

    pub fn with_lift(mut self, lift: Lift) -> Self {
        self.lift = lift;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl_fraction = cfl;
        self
    }

    pub fn with_variable(mut self, variable: Variable) -> Self {
        self.variable = variable;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_fraction > 0.0 && self.cfl_fraction < 1.0) {
            return Err(Error::invalid(format!("cfl_fraction must lie in (0, 1), got {}", self.cfl_fraction)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.sample_every > 0.0) {
            return Err(Error::invalid(format!("sample_every must be > 0, got {}", self.sample_every)));
        }
        if let Variable::Power(a) = self.variable {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::invalid(format!("stored power alpha must lie in (0, 1], got {a}")));
            }
        }
        Ok(())
    }

    /// `0, Δ, 2Δ, …` up to and including `t_end`.
    pub fn sample_times(&self) -> Vec<f64> {
        let mut times = vec![0.0];
        if self.t_end == 0.0 {
            return times;
        }
        let mut k = 1u64;
        loop {
            let t = k as f64 * self.sample_every;
            if t >= self.t_end * (1.0 - 1e-12) {
                break;
            }
            times.push(t);
            k += 1;
        }
        times.push(self.t_end);
        times
    }
}

/// Largest stable step `cfl·h²/(2d·max U^{m−1})`.
pub fn stable_dt(u: &ScalarField, params: &DiffusionParams, cfl_fraction: f64) -> Result<f64> {
    stable_dt_values(u.grid(), u.values(), params.m(), cfl_fraction)
}

fn stable_dt_values(g: &TorusGrid, values: &[f64], m: f64, cfl_fraction: f64) -> Result<f64> {
    let h = g.spacing();
    let diffusivity = if m == 1.0 {
        1.0
    } else if m < 1.0 {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(lo > 0.0) {
            return Err(Error::domain("fast diffusion needs a strictly positive field"));
        }
        lo.powf(m - 1.0)
    } else {
        values.iter().copied().fold(0.0, f64::max).powf(m - 1.0)
    };
    if diffusivity == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(cfl_fraction * h * h / (2.0 * g.dim() as f64 * diffusivity))
}

/// One explicit step `U + (dt/m) Δ_h(U^m)`.
pub fn step(u: &ScalarField, dt: f64, params: &DiffusionParams) -> Result<ScalarField> {
    let mut out = vec![0.0; u.values().len()];
    let mut scratch = vec![0.0; u.values().len()];
    step_into(u.grid(), u.values(), dt, params.m(), &mut scratch, &mut out);
    check_state(&mut out, f64::NAN)?;
    Ok(ScalarField::from_raw(*u.grid(), out))
}

fn step_into(g: &TorusGrid, u: &[f64], dt: f64, m: f64, pow: &mut [f64], out: &mut [f64]) {
    if m == 1.0 {
        pow.copy_from_slice(u);
    } else if m == 2.0 {
        pow.iter_mut().zip(u).for_each(|(p, &x)| *p = x * x);
    } else {
        pow.iter_mut().zip(u).for_each(|(p, &x)| *p = x.max(0.0).powf(m));
    }
    let h = g.spacing();
    let coef = dt / (m * h * h);
    let n = g.cells();
    match g.dim() {
        1 => {
            for i in 0..n {
                let l = if i == 0 { n - 1 } else { i - 1 };
                let r = if i + 1 == n { 0 } else { i + 1 };
                out[i] = u[i] + coef * (pow[l] - 2.0 * pow[i] + pow[r]);
            }
        }
        _ => {
            for i in 0..n {
                let im = if i == 0 { n - 1 } else { i - 1 };
                let ip = if i + 1 == n { 0 } else { i + 1 };
                for j in 0..n {
                    let jm = if j == 0 { n - 1 } else { j - 1 };
                    let jp = if j + 1 == n { 0 } else { j + 1 };
                    let c = i * n + j;
                    let lap = pow[im * n + j] + pow[ip * n + j] + pow[i * n + jm] + pow[i * n + jp]
                        - 4.0 * pow[c];
                    out[c] = u[c] + coef * lap;
                }
            }
        }
    }
}

/// Abort on non-finite or clearly negative values; clamp rounding-level
/// negatives to zero.
fn check_state(values: &mut [f64], t: f64) -> Result<()> {
    for v in values.iter_mut() {
        if !v.is_finite() {
            return Err(Error::Instability { t, reason: "non-finite value".into() });
        }
        if *v < 0.0 {
            if *v < NEGATIVITY_LIMIT {
                return Err(Error::Instability { t, reason: format!("negative value {v}") });
            }
            *v = 0.0;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<ScalarField>,
    pub config: SolverConfig,
    /// The absolute ε actually added to the initial data.
    pub epsilon: f64,
    pub variable: Variable,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> &TorusGrid {
        self.fields[0].grid()
    }

    /// The same trajectory expressed in `u = U^α`.
    pub fn to_power(&self, alpha: f64) -> Result<Trajectory> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        match self.variable {
            Variable::Power(a) if a == alpha => Ok(self.clone()),
            Variable::Power(a) => Err(Error::invalid(format!(
                "trajectory already stores U^{a}; cannot re-express as U^{alpha}"
            ))),
            Variable::Density => Ok(Trajectory {
                times: self.times.clone(),
                fields: self.fields.iter().map(|f| f.map(|x| x.powf(alpha))).collect(),
                config: self.config.clone(),
                epsilon: self.epsilon,
                variable: Variable::Power(alpha),
            }),
        }
    }

    /// The exponent `α` of the stored variable (1 for the density).
    pub fn stored_alpha(&self) -> f64 {
        match self.variable {
            Variable::Density => 1.0,
            Variable::Power(a) => a,
        }
    }

    /// Write `snap_NNNNN.bin` files and `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::with_capacity(self.len());
        for (k, (t, f)) in self.times.iter().zip(&self.fields).enumerate() {
            let name = format!("snap_{k:05}.bin");
            let bytes = snapshot::encode_binary(*t, f);
            std::fs::write(dir.join(&name), &bytes)?;
            files.push(ManifestEntry { file: name, time: *t, sha256: snapshot::sha256_hex(&bytes) });
        }
        let manifest = Manifest {
            format: MANIFEST_FORMAT.into(),
            version: snapshot::VERSION,
            config: self.config.clone(),
            epsilon: self.epsilon,
            variable: self.variable,
            times: self.times.clone(),
            snapshots: files,
        };
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    /// Load a directory written by [`Trajectory::save`], verifying checksums.
    pub fn load(dir: &Path) -> Result<Trajectory> {
        let manifest: Manifest = serde_json::from_slice(&std::fs::read(dir.join("manifest.json"))?)?;
        if manifest.format != MANIFEST_FORMAT || manifest.version != snapshot::VERSION {
            return Err(Error::Format("unrecognised trajectory manifest".into()));
        }
        let mut fields = Vec::with_capacity(manifest.snapshots.len());
        for entry in &manifest.snapshots {
            let bytes = std::fs::read(dir.join(&entry.file))?;
            if snapshot::sha256_hex(&bytes) != entry.sha256 {
                return Err(Error::Format(format!("checksum mismatch for {}", entry.file)));
            }
            let snap = snapshot::read_binary(&bytes[..])?;
            if snap.time != entry.time {
                return Err(Error::Format(format!("time mismatch in {}", entry.file)));
            }
            fields.push(snap.field);
        }
        Ok(Trajectory {
            times: manifest.times,
            fields,
            config: manifest.config,
            epsilon: manifest.epsilon,
            variable: manifest.variable,
        })
    }
}

const MANIFEST_FORMAT: &str = "pmcontract-trajectory";

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    file: String,
    time: f64,
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    config: SolverConfig,
    epsilon: f64,
    variable: Variable,
    times: Vec<f64>,
    snapshots: Vec<ManifestEntry>,
}

pub fn evolve(u0: &ScalarField, config: &SolverConfig) -> Result<Trajectory> {
    Ok(evolve_many(std::slice::from_ref(u0), config)?.pop().expect("one trajectory"))
}

/// Evolve `U₀` and `V₀` with a common step sequence, so that the discrete
/// comparison and `L¹` contraction properties hold between the two runs.
pub fn evolve_pair(u0: &ScalarField, v0: &ScalarField, config: &SolverConfig) -> Result<(Trajectory, Trajectory)> {
    let mut out = evolve_many(&[u0.clone(), v0.clone()], config)?;
    let v = out.pop().expect("two trajectories");
    let u = out.pop().expect("two trajectories");
    Ok((u, v))
}

/// Evolve several initial data on one grid with a shared adaptive step.
pub fn evolve_many(initial: &[ScalarField], config: &SolverConfig) -> Result<Vec<Trajectory>> {
    config.validate()?;
    let first = initial.first().ok_or_else(|| Error::invalid("no initial data"))?;
    for f in initial {
        f.same_grid(first)?;
        if !f.is_nonnegative() {
            return Err(Error::invalid("initial data must be nonnegative"));
        }
    }
    let grid = *first.grid();
    let params = config.params;
    if params.dim() != grid.dim() {
        return Err(Error::invalid("grid dimension differs from the diffusion parameters"));
    }
    let max0 = initial.iter().map(|f| f.max()).fold(0.0, f64::max);
    let epsilon = config.lift.resolve(max0)?;

    let mut states: Vec<Vec<f64>> = initial.iter().map(|f| f.values().iter().map(|x| x + epsilon).collect()).collect();
    let mut scratch = vec![0.0; grid.len()];
    let mut next = vec![0.0; grid.len()];
    let store = |v: &[f64]| -> ScalarField {
        match config.variable {
            Variable::Density => ScalarField::from_raw(grid, v.to_vec()),
            Variable::Power(a) => ScalarField::from_raw(grid, v.iter().map(|x| x.powf(a)).collect()),
        }
    };

    let times = config.sample_times();
    let mut snaps: Vec<Vec<ScalarField>> = states.iter().map(|s| vec![store(s)]).collect();
    let mut t = 0.0;
    for &target in &times[1..] {
        while t < target {
            let mut dt = f64::INFINITY;
            for s in &states {
                dt = dt.min(stable_dt_values(&grid, s, params.m(), config.cfl_fraction)?);
            }
            let last = dt >= target - t;
            if last {
                dt = target - t;
            }
            for s in states.iter_mut() {
                step_into(&grid, s, dt, params.m(), &mut scratch, &mut next);
                check_state(&mut next, t + dt)?;
                std::mem::swap(s, &mut next);
            }
            t = if last { target } else { t + dt };
        }
        for (k, s) in states.iter().enumerate() {
            snaps[k].push(store(s));
        }
    }
    Ok(snaps
        .into_iter()
        .map(|fields| Trajectory {
            times: times.clone(),
            fields,
            config: config.clone(),
            epsilon,
            variable: config.variable,
        })
        .collect())
}
