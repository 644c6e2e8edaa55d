//! Scenario pipelines. Every run writes its artifacts, the echoed
//! configuration (`config.txt`, `config.json`) and `manifest.json` into the
//! output directory.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use pmcontract_core::admissible::{classify, derived_exponents, p_bounds, sample_region, ExponentPair};
use pmcontract_core::functionals::{
    self, contraction_balance, directional_quotient, gradient_balance, gradient_flow_gamma,
    gradient_flow_residual, max_positive_jump, write_diagnostics_csv, DiagnosticsRow, DirectionVector,
};
use pmcontract_core::grid::snapshot::sha256_hex;
use pmcontract_core::harness;
use pmcontract_core::solver::{evolve, evolve_pair, make_initial, SolverConfig, Trajectory};
use pmcontract_core::{DiffusionParams, Error as CoreError, Forms, RegionClass, ScalarField};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Scenario};

/// Relative tolerance for Lyapunov monotonicity.
pub const MONOTONE_TOL: f64 = 1e-8;
/// Relative tolerance for mass conservation.
pub const MASS_TOL: f64 = 1e-10;
/// Relative tolerance for the directional bound.
pub const DIRECTIONAL_TOL: f64 = 1e-6;
/// Bound on the gradient-flow residual.
pub const GRADFLOW_TOL: f64 = 5e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub rerun: String,
    pub status: String,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
    pub files: Vec<FileEntry>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub checks: Vec<CheckResult>,
    pub output: PathBuf,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug)]
pub enum RunError {
    Core(CoreError),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io(io) => RunError::Io(io),
            other => RunError::Core(other),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<serde_json::Error> for RunError {
    fn from(e: serde_json::Error) -> Self {
        RunError::Core(CoreError::Json(e))
    }
}

/// Collects artifact paths relative to the output directory.
struct Artifacts {
    root: PathBuf,
    files: Vec<PathBuf>,
    notes: Vec<String>,
}

impl Artifacts {
    fn create(&mut self, name: &str) -> Result<std::io::BufWriter<fs::File>, RunError> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        self.files.push(PathBuf::from(name));
        Ok(std::io::BufWriter::new(fs::File::create(path)?))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn trajectory(&mut self, name: &str, traj: &Trajectory) -> Result<(), RunError> {
        traj.save(&self.root.join(name))?;
        for k in 0..traj.len() {
            self.files.push(PathBuf::from(format!("{name}/snap_{k:05}.bin")));
        }
        self.files.push(PathBuf::from(format!("{name}/manifest.json")));
        Ok(())
    }
}

/// Scenario tag embedded in diagnostics file names.
fn tag(cfg: &ExperimentConfig, n: f64, alpha: f64, p: f64) -> String {
    format!("n{}_a{}_p{}_N{}_seed{}", short(n), short(alpha), short(p), cfg.grid.cells, cfg.seed)
}

/// At most four decimals, trailing zeros removed.
fn short(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn solver_config(cfg: &ExperimentConfig, params: DiffusionParams) -> SolverConfig {
    SolverConfig::new(params, cfg.solver.t_end, cfg.solver.sample_every)
        .with_cfl(cfg.solver.cfl)
        .with_lift(cfg.solver.lift)
}

fn initial_pair(cfg: &ExperimentConfig) -> Result<(ScalarField, ScalarField), RunError> {
    let grid = cfg.torus();
    let u0 = make_initial(&cfg.initial_u, grid, &cfg.diffusion)?;
    let v_kind = cfg.initial_v.as_ref().unwrap_or(&cfg.initial_u);
    Ok((u0, make_initial(v_kind, grid, &cfg.diffusion)?))
}

fn monotone_check(name: &str, rows: &[DiagnosticsRow]) -> CheckResult {
    let scale = rows[0].lyapunov.abs().max(f64::MIN_POSITIVE);
    let jump = max_positive_jump(rows);
    CheckResult::at_most(name, if jump == 0.0 { 0.0 } else { jump / scale }, MONOTONE_TOL)
}

fn class_of(n: f64, alpha: f64, p: f64) -> Result<RegionClass, RunError> {
    Ok(classify(n, ExponentPair::new(alpha, p)?, pmcontract_core::admissible::DEFAULT_BOUNDARY_TOL)?)
}

/// Execute `cfg`, writing all artifacts under `cfg.output`.
pub fn run(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutcome, RunError> {
    fs::create_dir_all(&cfg.output)?;
    let mut art = Artifacts { root: cfg.output.clone(), files: Vec::new(), notes: Vec::new() };
    {
        let mut w = art.create("config.txt")?;
        w.write_all(cfg.to_text().as_bytes())?;
        w.flush()?;
    }
    art.json("config.json", cfg)?;

    let checks = match cfg.scenario {
        Scenario::Region => region(cfg, &mut art)?,
        Scenario::Matrices => matrices(cfg, &mut art)?,
        Scenario::Simulate => simulate(cfg, &mut art)?,
        Scenario::Contract => contract(cfg, &mut art)?,
        Scenario::Gradient => gradient(cfg, &mut art)?,
        Scenario::Directional => directional(cfg, &mut art)?,
        Scenario::Gradflow => gradflow(cfg, &mut art)?,
        Scenario::Sweep => sweep(cfg, &mut art, workers)?,
        Scenario::Validate => validate(cfg, &mut art)?,
    };

    let mut files = Vec::with_capacity(art.files.len());
    for f in &art.files {
        let bytes = fs::read(art.root.join(f))?;
        files.push(FileEntry { path: f.to_string_lossy().replace('\\', "/"), sha256: sha256_hex(&bytes) });
    }
    let manifest = RunManifest {
        tool: "pmcontract".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: cfg.scenario,
        seed: cfg.seed,
        rerun: format!("pmcontract {} --config config.txt --seed {}", cfg.scenario, cfg.seed),
        status: if checks.iter().all(|c| c.pass) { "pass".into() } else { "fail".into() },
        checks: checks.clone(),
        notes: art.notes.clone(),
        files,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(cfg.output.join("manifest.json"), text + "\n")?;
    Ok(RunOutcome { checks, output: cfg.output.clone() })
}

fn region(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<CheckResult>, RunError> {
    let n = cfg.diffusion.n();
    let r = &cfg.region;
    let grid = sample_region(n, r.alpha_steps, r.p_max, r.p_steps, r.tol)?;
    let mut w = art.create("region.csv")?;
    grid.write_csv(&mut w)?;
    w.flush()?;

    let mut w = art.create("boundary.csv")?;
    writeln!(w, "alpha,p_minus,p_plus")?;
    for &alpha in &grid.alphas {
        if n == 0.0 {
            writeln!(w, "{alpha},{},inf", 1.0 / alpha)?;
        } else if alpha >= n.abs() {
            let (lo, hi) = p_bounds(n, alpha)?;
            writeln!(w, "{alpha},{lo},{hi}")?;
        }
    }
    w.flush()?;
    Ok(Vec::new())
}

#[derive(Serialize)]
struct MatrixSummary {
    n: f64,
    alpha: f64,
    p: f64,
    class: RegionClass,
    gamma: f64,
    gamma_bar: f64,
    big_gamma: Option<f64>,
    gamma_minus: Option<f64>,
    gamma_plus: Option<f64>,
    m_matrix: [f64; 3],
    m_det: f64,
    m_det_closed_form: f64,
    big_f_gamma_at_1: Option<f64>,
    positivity: pmcontract_core::PositivityReport,
    negative_witness: Option<(f64, f64)>,
}

fn matrices(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<CheckResult>, RunError> {
    let (n, alpha, p) = (cfg.diffusion.n(), cfg.alpha, cfg.p);
    let forms = Forms::from_values(n, alpha, p)?;
    let s = &cfg.scan;
    let report = forms.q_positivity_scan(s.w_min, s.w_max, s.steps)?;
    let witness = forms.negative_witness(s.w_min, s.w_max, s.steps)?;
    let mut w = art.create("scan.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let d = derived_exponents(n, ExponentPair::new(alpha, p)?);
    let m = forms.m_matrix();
    let class = class_of(n, alpha, p)?;
    art.json(
        "matrices.json",
        &MatrixSummary {
            n,
            alpha,
            p,
            class,
            gamma: d.gamma,
            gamma_bar: d.gamma_bar,
            big_gamma: d.big_gamma,
            gamma_minus: d.gamma_minus,
            gamma_plus: d.gamma_plus,
            m_matrix: [m.a11, m.a12, m.a22],
            m_det: m.det(),
            m_det_closed_form: forms.m_det_closed_form(),
            big_f_gamma_at_1: (p > 1.0).then(|| forms.big_f_gamma(1.0)).transpose()?,
            positivity: report.clone(),
            negative_witness: witness,
        },
    )?;
    let row = harness::region_check_point_with(n, alpha, p, s.w_min, s.w_max, s.steps)?;
    let disagree = if row.consistent() { 0.0 } else { 1.0 };
    Ok(vec![CheckResult::at_most(format!("classification ({class}) disagrees with Q/M positivity"), disagree, 0.0)])
}

fn simulate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<CheckResult>, RunError> {
    let u0 = make_initial(&cfg.initial_u, cfg.torus(), &cfg.diffusion)?;
    let traj = evolve(&u0, &solver_config(cfg, cfg.diffusion))?;
    art.trajectory("trajectory", &traj)?;
    let mut w = art.create("mass.csv")?;
    writeln!(w, "t,mass,min,max")?;
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        writeln!(w, "{t},{},{},{}", f.mass(), f.min(), f.max())?;
    }
    w.flush()?;
    let top = traj.fields[0].max();
    let overshoot = traj.fields.iter().map(|f| f.max() - top).fold(0.0, f64::max);
    Ok(vec![
        CheckResult::at_most("mass drift", harness::mass_drift(&traj), MASS_TOL),
        CheckResult::at_most("maximum principle overshoot", overshoot, 1e-12),
    ])
}

fn contract(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<CheckResult>, RunError> {
    let (n, alpha, p) = (cfg.diffusion.n(), cfg.alpha, cfg.p);
    let (u0, v0) = initial_pair(cfg)?;
    let (tu, tv) = evolve_pair(&u0, &v0, &solver_config(cfg, cfg.diffusion))?;
    let (pu, pv) = (tu.to_power(alpha)?, tv.to_power(alpha)?);
    let forward = contraction_balance(&pu, &pv, n, alpha, p)?;
    let backward = contraction_balance(&pv, &pu, n, alpha, p)?;
    let t = tag(cfg, n, alpha, p);
    for (name, rows) in [("vu", &forward), ("uv", &backward)] {
        let mut w = art.create(&format!("contract_{name}_{t}.csv"))?;
        write_diagnostics_csv(rows, &mut w)?;
        w.flush()?;
    }
    let class = class_of(n, alpha, p)?;
    if !class.is_admissible() {
        art.notes.push(format!("(alpha, p) = ({alpha}, {p}) is {class}; monotonicity is reported, not checked"));
        return Ok(Vec::new());
    }
    Ok(vec![monotone_check("(v-u)_+ monotone", &forward), monotone_check("(u-v)_+ monotone", &backward)])
}

fn gradient(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<CheckResult>, RunError> {
    let (n, alpha, p) = (cfg.diffusion.n(), cfg.alpha, cfg.p);
    let u0 = make_initial(&cfg.initial_u, cfg.torus(), &cfg.diffusion)?;
    let traj = evolve(&u0, &solver_config(cfg, cfg.diffusion))?.to_power(alpha)?;
    let rows = gradient_balance(&traj, n, alpha, p)?;
    let mut w = art.create(&format!("gradient_{}.csv", tag(cfg, n, alpha, p)))?;
    write_diagnostics_csv(&rows, &mut w)?;
    w.flush()?;
    if !class_of(n, alpha, p)?.is_admissible() {
        art.notes.push(format!("(alpha, p) = ({alpha}, {p}) is outside K; monotonicity is reported, not checked"));
        return Ok(Vec::new());
    }
    Ok(vec![monotone_check("gradient functional monotone", &rows)])
}

fn directional(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<CheckResult>, RunError> {
    let (n, alpha, p) = (cfg.diffusion.n(), cfg.alpha, cfg.p);
    let u0 = make_initial(&cfg.initial_u, cfg.torus(), &cfg.diffusion)?;
    let traj = evolve(&u0, &solver_config(cfg, cfg.diffusion))?.to_power(alpha)?;
    let xi = DirectionVector::new(cfg.directional.xi_t, cfg.directional.xi_x.clone())?;
    let rep = directional_quotient(&traj, &xi, cfg.directional.eta_steps, p)?;
    let mut w = art.create(&format!("directional_{}.csv", tag(cfg, n, alpha, p)))?;
    rep.write_csv(&mut w)?;
    w.flush()?;
    art.notes.push(format!("C_xi estimate {}", rep.c_xi));
    if !class_of(n, alpha, p)?.is_admissible() {
        art.notes.push(format!("(alpha, p) = ({alpha}, {p}) is outside K; the bound is reported, not checked"));
        return Ok(Vec::new());
    }
    Ok(vec![CheckResult::at_most("directional excess over C_xi", rep.max_relative_excess.max(0.0), DIRECTIONAL_TOL)])
}

fn gradflow(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<CheckResult>, RunError> {
    let n = cfg.diffusion.n();
    let u0 = make_initial(&cfg.initial_u, cfg.torus(), &cfg.diffusion)?;
    let traj = evolve(&u0, &solver_config(cfg, cfg.diffusion))?.to_power(cfg.alpha)?;
    let energy = functionals::energy_series(&traj, gradient_flow_gamma(n));
    let mut w = art.create(&format!("energy_{}.csv", tag(cfg, n, cfg.alpha, 2.0)))?;
    writeln!(w, "t,energy")?;
    for (t, e) in traj.times.iter().zip(&energy) {
        writeln!(w, "{t},{e}")?;
    }
    w.flush()?;
    let scale = energy[0].abs().max(f64::MIN_POSITIVE);
    let mut checks = vec![CheckResult::at_most("energy monotone", harness::max_increase(&energy) / scale, MONOTONE_TOL)];
    if traj.len() >= 3 {
        checks.push(CheckResult::at_most("gradient-flow residual", gradient_flow_residual(&traj, n)?, GRADFLOW_TOL));
    }
    Ok(checks)
}

/// One `(n, α, p)` point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: f64,
    pub alpha: f64,
    pub p: f64,
    pub class: RegionClass,
    pub min_scaled_eig: f64,
    pub m_min_eig: f64,
    /// Largest increase of `∫(v−u)_+^p`, relative to its initial value.
    pub max_jump: f64,
    /// `|balance_residual(t_end)| / lyapunov(0)`.
    pub final_residual: f64,
    pub monotone: bool,
    /// Whether the class agrees with `Q`/`M` positivity at this point.
    #[serde(skip)]
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// `n,alpha,p,class,min_scaled_eig,m_min_eig,max_jump,final_residual,monotone`
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,alpha,p,class,min_scaled_eig,m_min_eig,max_jump,final_residual,monotone")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n, r.alpha, r.p, r.class, r.min_scaled_eig, r.m_min_eig, r.max_jump, r.final_residual, r.monotone
            )?;
        }
        Ok(())
    }
}

fn sweep_point(
    cfg: &ExperimentConfig,
    n: f64,
    alpha: f64,
    p: f64,
    pair: &(Trajectory, Trajectory),
) -> Result<SweepRow, RunError> {
    let s = &cfg.scan;
    let check = harness::region_check_point_with(n, alpha, p, s.w_min, s.w_max, s.steps)?;
    let (pu, pv) = (pair.0.to_power(alpha)?, pair.1.to_power(alpha)?);
    let rows = contraction_balance(&pu, &pv, n, alpha, p)?;
    let l0 = rows[0].lyapunov;
    let (max_jump, final_residual) = if l0 > 0.0 {
        (max_positive_jump(&rows) / l0, rows.last().map_or(0.0, |r| r.balance_residual.abs()) / l0)
    } else {
        (0.0, 0.0)
    };
    Ok(SweepRow {
        n,
        alpha,
        p,
        class: check.class,
        min_scaled_eig: check.min_scaled_eig,
        m_min_eig: check.m_min_eig,
        max_jump,
        final_residual,
        monotone: max_jump <= MONOTONE_TOL,
        consistent: check.consistent(),
    })
}

pub fn sweep_report(cfg: &ExperimentConfig, workers: usize) -> Result<SweepReport, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))?;
    let alphas = cfg.sweep.alpha.values();
    let ps = cfg.sweep.p.values();
    let (u0, v0) = initial_pair(cfg)?;
    pool.install(|| {
        let pairs: Vec<(Trajectory, Trajectory)> = cfg
            .sweep
            .n
            .par_iter()
            .map(|&n| {
                let params = DiffusionParams::from_n(n, cfg.diffusion.dim())?;
                Ok(evolve_pair(&u0, &v0, &solver_config(cfg, params))?)
            })
            .collect::<Result<_, RunError>>()?;
        let mut points = Vec::with_capacity(cfg.sweep.n.len() * alphas.len() * ps.len());
        for k in 0..cfg.sweep.n.len() {
            for &a in &alphas {
                for &p in &ps {
                    points.push((k, a, p));
                }
            }
        }
        let rows = points
            .par_iter()
            .map(|&(k, alpha, p)| sweep_point(cfg, cfg.sweep.n[k], alpha, p, &pairs[k]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SweepReport { rows })
    })
}

fn sweep(cfg: &ExperimentConfig, art: &mut Artifacts, workers: usize) -> Result<Vec<CheckResult>, RunError> {
    let report = sweep_report(cfg, workers)?;
    let mut w = art.create(&format!("sweep_N{}_seed{}.csv", cfg.grid.cells, cfg.seed))?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let interior: Vec<&SweepRow> = report.rows.iter().filter(|r| r.class == RegionClass::Interior).collect();
    let worst = interior.iter().map(|r| r.max_jump).fold(0.0, f64::max);
    let inconsistent = report.rows.iter().filter(|r| !r.consistent).count();
    art.notes.push(format!("{} of {} points are interior", interior.len(), report.rows.len()));
    Ok(vec![
        CheckResult::at_most("worst interior jump", worst, MONOTONE_TOL),
        CheckResult::at_most("points where class and Q/M positivity disagree", inconsistent as f64, 0.0),
    ])
}

fn validate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<CheckResult>, RunError> {
    let mut checks = Vec::new();

    let mut rows = Vec::new();
    for (k, n) in [-0.9, -0.5, -0.1, 0.1, 0.5, 0.9].into_iter().enumerate() {
        rows.extend(harness::region_check(n, 40, 12.0, cfg.seed.wrapping_add(k as u64))?);
    }
    let mut w = art.create("region_check.csv")?;
    harness::write_region_check_csv(&rows, &mut w)?;
    w.flush()?;
    let bad = rows.iter().filter(|r| !r.consistent()).count();
    checks.push(CheckResult::at_most("region/positivity disagreements", bad as f64, 0.0));

    let mut worst: f64 = 0.0;
    for (k, n) in [-0.5, 0.5].into_iter().enumerate() {
        for (alpha, p) in harness::sample_in_k(n, 100, 8.0, cfg.seed.wrapping_add(100 + k as u64))? {
            let (a, b) = harness::closed_form_defects(&Forms::from_values(n, alpha, p)?)?;
            worst = worst.max(a.abs() / (p - 1.0).powi(2)).max(b.abs());
        }
    }
    checks.push(CheckResult::at_most("closed-form defect", worst, 1e-12));

    let grid = pmcontract_core::TorusGrid::new(1, 128, 2.0 * std::f64::consts::PI)?;
    let u0 = ScalarField::from_fn(grid, |x| 1.0 + 0.5 * x[0].cos());
    let heat = DiffusionParams::new(1.0, 1)?;
    let traj = evolve(&u0, &SolverConfig::new(heat, 0.5, 0.05))?;
    checks.push(CheckResult::at_most("heat mode rate error", (harness::fourier_decay_rate(&traj, 1.0) - 1.0).abs(), 1e-3));
    checks.push(CheckResult::at_most("mass drift", harness::mass_drift(&traj), MASS_TOL));

    let etas: Vec<f64> = (3..=10).map(|k| 2f64.powi(-k)).collect();
    let forms = Forms::from_values(0.5, 0.8, 2.5)?;
    let errs = harness::j_eta_errors(&forms, 1.3, 0.7, &[0.4], &[-0.9], &etas)?;
    checks.push(CheckResult::at_most(
        "J_eta rate deviation from 1",
        (harness::convergence_rate(&etas, &errs) - 1.0).abs(),
        0.15,
    ));

    let mut w = art.create("validate.csv")?;
    writeln!(w, "check,value,tolerance,pass")?;
    for c in &checks {
        writeln!(w, "{},{},{},{}", c.name, c.value, c.tolerance, c.pass)?;
    }
    w.flush()?;
    Ok(checks)
}

/// Exit status of a finished run: 0 when every check passes, 4 otherwise.
pub fn status_code(outcome: &RunOutcome) -> i32 {
    if outcome.passed() {
        0
    } else {
        4
    }
}

pub fn write_summary(outcome: &RunOutcome, out: &mut dyn Write) -> std::io::Result<()> {
    for c in &outcome.checks {
        writeln!(out, "{} {}: {} (tolerance {})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance)?;
    }
    writeln!(out, "artifacts in {}", outcome.output.display())
}
