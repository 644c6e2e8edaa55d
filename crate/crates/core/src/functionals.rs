//! Lyapunov functionals along trajectories and their dissipation balances.
//!
//! All trajectory inputs are expected in the power variable `u = U^α`
//! (see [`Trajectory::to_power`]). On the torus each functional `L` obeys
//! `L(t) + p ∫₀ᵗ D = L(0)` for smooth positive solutions, where `D` is the
//! spatial integral of the matching pointwise dissipation; the
//! `balance_residual` column measures the discrete defect of that identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, ScalarField};
use crate::quadforms::Forms;
use crate::solver::{Trajectory, Variable};

/// Relative threshold below which `v − u` is treated as zero.
pub const DELTA_MASK_REL: f64 = 1e-12;
/// Default gradient floor relative to `max |∇u(0)|`.
pub const G_FLOOR_REL: f64 = 1e-8;
/// Default `u_floor = U_FLOOR_FACTOR · ε`.
pub const U_FLOOR_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub lyapunov: f64,
    pub dissipation: f64,
    pub cumulative_dissipation: f64,
    pub balance_residual: f64,
}

/// `t,lyapunov,dissipation,cumulative_dissipation,balance_residual`
pub fn write_diagnostics_csv<W: std::io::Write>(rows: &[DiagnosticsRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,lyapunov,dissipation,cumulative_dissipation,balance_residual")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.t, r.lyapunov, r.dissipation, r.cumulative_dissipation, r.balance_residual
        )?;
    }
    Ok(())
}

/// Largest increase between consecutive Lyapunov values (0 if nonincreasing).
pub fn max_positive_jump(rows: &[DiagnosticsRow]) -> f64 {
    rows.windows(2).map(|w| w[1].lyapunov - w[0].lyapunov).fold(0.0, f64::max)
}

/// Integration domain cut-offs for the singular weights `u^{γ−2}` and `|w|^{p−2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Masks {
    /// Cells with `u ≤ u_floor` are excluded.
    pub u_floor: f64,
    /// Cells with `|∇u| ≤ g_floor` are excluded from gradient dissipation.
    pub g_floor: f64,
    /// Cells with `v − u ≤ delta_rel · max v` are excluded from `e[v,u]`.
    pub delta_rel: f64,
}

impl Masks {
    pub fn for_trajectory(traj: &Trajectory) -> Self {
        let g0 = grid::gradient(&traj.fields[0]);
        let gmax = (0..traj.grid().len()).map(|i| g0.norm_at(i)).fold(0.0, f64::max);
        Masks {
            u_floor: U_FLOOR_FACTOR * traj.epsilon,
            g_floor: G_FLOOR_REL * gmax,
            delta_rel: DELTA_MASK_REL,
        }
    }
}

/// `Ψ_{δ,p}(w) = (w^p/p − δ^{p−1}w − δ^p(1/p − 1))·1_{w>δ}`, a C¹
/// regularisation of `Ψ_{0,p}(w) = w_+^p/p`.
pub fn psi_delta(delta: f64, p: f64, w: f64) -> f64 {
    if w > delta {
        w.powf(p) / p - delta.powf(p - 1.0) * w - delta.powf(p) * (1.0 / p - 1.0)
    } else {
        0.0
    }
}

/// `Ψ′_{δ,p}(w) = (w^{p−1} − δ^{p−1})·1_{w>δ}`.
pub fn psi_delta_derivative(delta: f64, p: f64, w: f64) -> f64 {
    if w > delta {
        w.powf(p - 1.0) - delta.powf(p - 1.0)
    } else {
        0.0
    }
}

/// `w_+^p/p`, the `δ = 0` member of the family.
pub fn psi_zero(p: f64, w: f64) -> f64 {
    psi_delta(0.0, p, w)
}

/// `w_+^p`, the normalisation used by the contraction functional.
pub fn psi_zero_unnormalized(p: f64, w: f64) -> f64 {
    w.max(0.0).powf(p)
}

/// `∫ (v − u)_+^p`.
pub fn contraction_functional(v: &ScalarField, u: &ScalarField, p: f64) -> Result<f64> {
    let diff = v.zip_map(u, |a, b| (a - b).max(0.0))?;
    grid::integrate_lp(&diff, p, None)
}

/// `∫_{v−u>0, u>u_floor} e[v,u]` with centered-difference gradients.
pub fn dissipation_integral(v: &ScalarField, u: &ScalarField, forms: &Forms, u_floor: f64) -> Result<f64> {
    dissipation_integral_masked(v, u, forms, &Masks { u_floor, g_floor: 0.0, delta_rel: DELTA_MASK_REL })
}

fn dissipation_integral_masked(v: &ScalarField, u: &ScalarField, forms: &Forms, masks: &Masks) -> Result<f64> {
    v.same_grid(u)?;
    let g = *v.grid();
    let gv = grid::gradient(v);
    let gu = grid::gradient(u);
    let threshold = masks.delta_rel * v.max().abs();
    let (vv, uu) = (v.values(), u.values());
    let mut sum = 0.0;
    for i in 0..g.len() {
        if vv[i] - uu[i] > threshold && uu[i] > masks.u_floor && uu[i] > 0.0 {
            let a = gv.at(i);
            let b = gu.at(i);
            sum += forms.e_form(vv[i], uu[i], &a[..g.dim()], &b[..g.dim()]);
        }
    }
    Ok(sum * g.cell_volume())
}

fn require_power(traj: &Trajectory, alpha: f64) -> Result<()> {
    let ok = match traj.variable {
        Variable::Power(a) => (a - alpha).abs() <= 1e-12,
        Variable::Density => alpha == 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "trajectory stores {:?}, expected the power variable U^{alpha}",
            traj.variable
        )))
    }
}

/// Trapezoidal cumulative dissipation and balance residuals.
fn assemble(times: &[f64], lyapunov: Vec<f64>, dissipation: Vec<f64>, p: f64) -> Vec<DiagnosticsRow> {
    let mut rows = Vec::with_capacity(times.len());
    let mut cum = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            cum += 0.5 * (times[k] - times[k - 1]) * (dissipation[k] + dissipation[k - 1]);
        }
        rows.push(DiagnosticsRow {
            t: times[k],
            lyapunov: lyapunov[k],
            dissipation: dissipation[k],
            cumulative_dissipation: cum,
            balance_residual: lyapunov[k] + p * cum - lyapunov[0],
        });
    }
    rows
}

/// Diagnostics of `∫(v − u)_+^p` against `p ∫∫ e[v,u]`.
pub fn contraction_balance(
    traj_u: &Trajectory,
    traj_v: &Trajectory,
    n: f64,
    alpha: f64,
    p: f64,
) -> Result<Vec<DiagnosticsRow>> {
    let masks = Masks::for_trajectory(traj_u);
    contraction_balance_with(traj_u, traj_v, &Forms::from_values(n, alpha, p)?, &masks)
}

pub fn contraction_balance_with(
    traj_u: &Trajectory,
    traj_v: &Trajectory,
    forms: &Forms,
    masks: &Masks,
) -> Result<Vec<DiagnosticsRow>> {
    require_power(traj_u, forms.alpha())?;
    require_power(traj_v, forms.alpha())?;
    if traj_u.times != traj_v.times {
        return Err(Error::invalid("trajectories are not sampled at the same times"));
    }
    let p = forms.p();
    let mut lyap = Vec::with_capacity(traj_u.len());
    let mut diss = Vec::with_capacity(traj_u.len());
    for (u, v) in traj_u.fields.iter().zip(&traj_v.fields) {
        lyap.push(contraction_functional(v, u, p)?);
        diss.push(dissipation_integral_masked(v, u, forms, masks)?);
    }
    Ok(assemble(&traj_u.times, lyap, diss, p))
}

/// `∫ |∇u|^p` with centered-difference gradients.
pub fn gradient_functional(u: &ScalarField, p: f64) -> Result<f64> {
    let g = *u.grid();
    let gr = grid::gradient(u);
    let norms: Vec<f64> = (0..g.len()).map(|i| gr.norm_at(i)).collect();
    grid::integrate_lp(&ScalarField::new(g, norms)?, p, None)
}

/// `∫_{|∇u|>g_floor, u>u_floor} ē[u, ∇u, D²u]`.
pub fn gradient_dissipation(u: &ScalarField, forms: &Forms, masks: &Masks) -> Result<f64> {
    let g = *u.grid();
    let d = g.dim();
    let gr = grid::gradient(u);
    let hess = grid::hessian(u);
    let mut sum = 0.0;
    for i in 0..g.len() {
        let ui = u.values()[i];
        if !(ui > masks.u_floor && ui > 0.0) {
            continue;
        }
        let w = gr.at(i);
        let wn = gr.norm_at(i);
        if !(wn > masks.g_floor && wn > 0.0) {
            continue;
        }
        sum += forms.dissipation_ebar(ui, &w[..d], &hess.matrix_at(i))?;
    }
    Ok(sum * g.cell_volume())
}

/// Diagnostics of `∫|∇u|^p` against `p ∫∫ ē`.
pub fn gradient_balance(traj_u: &Trajectory, n: f64, alpha: f64, p: f64) -> Result<Vec<DiagnosticsRow>> {
    let masks = Masks::for_trajectory(traj_u);
    gradient_balance_with(traj_u, &Forms::from_values(n, alpha, p)?, &masks)
}

pub fn gradient_balance_with(traj_u: &Trajectory, forms: &Forms, masks: &Masks) -> Result<Vec<DiagnosticsRow>> {
    require_power(traj_u, forms.alpha())?;
    let p = forms.p();
    let mut lyap = Vec::with_capacity(traj_u.len());
    let mut diss = Vec::with_capacity(traj_u.len());
    for u in &traj_u.fields {
        lyap.push(gradient_functional(u, p)?);
        diss.push(gradient_dissipation(u, forms, masks)?);
    }
    Ok(assemble(&traj_u.times, lyap, diss, p))
}

/// Space-time direction `ξ` in lattice units: one η-step moves by
/// `xi_t` in time and `xi_x·h` in space, so that the physical increment is
/// `η = steps·h` and `ξ = (xi_t/h, xi_x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionVector {
    pub xi_t: f64,
    pub xi_x: Vec<i64>,
}

impl DirectionVector {
    pub fn new(xi_t: f64, xi_x: Vec<i64>) -> Result<Self> {
        if !(xi_t >= 0.0 && xi_t.is_finite()) {
            return Err(Error::invalid(format!("time component must be >= 0, got {xi_t}")));
        }
        if xi_t == 0.0 && xi_x.iter().all(|&k| k == 0) {
            return Err(Error::invalid("direction must be nonzero"));
        }
        Ok(Self { xi_t, xi_x })
    }

    pub fn spatial(axis: usize, dim: usize) -> Self {
        let mut xi_x = vec![0; dim];
        xi_x[axis] = 1;
        Self { xi_t: 0.0, xi_x }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalReport {
    /// Sample times at which every η level is available.
    pub times: Vec<f64>,
    /// Physical increments `η`, decreasing.
    pub etas: Vec<f64>,
    /// `quotients[k][j] = ∫|u((t_k,x)+η_j ξ) − u(t_k,x)|^p / η_j^p`.
    pub quotients: Vec<Vec<f64>>,
    /// Richardson extrapolation `η → 0` per time.
    pub extrapolated: Vec<f64>,
    /// Extrapolated value at `t = 0`, the estimate of `C_ξ`.
    pub c_xi: f64,
    /// `max_{t>0} (extrapolated(t) − C_ξ) / C_ξ` (0 when `C_ξ = 0`).
    pub max_relative_excess: f64,
}

impl DirectionalReport {
    /// `t,eta,quotient` rows, followed by `t,0,extrapolated` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,eta,quotient")?;
        for (k, t) in self.times.iter().enumerate() {
            for (j, eta) in self.etas.iter().enumerate() {
                writeln!(out, "{t},{eta},{}", self.quotients[k][j])?;
            }
            writeln!(out, "{t},0,{}", self.extrapolated[k])?;
        }
        Ok(())
    }
}

/// Richardson table for values `q(η_j)` at `η_j = η_0 / 2^j`, assuming
/// an expansion in integer powers of `η`.
pub fn richardson(values: &[f64]) -> f64 {
    let mut table = values.to_vec();
    for k in 1..values.len() {
        let f = 2f64.powi(k as i32);
        for j in (k..values.len()).rev() {
            table[j] = (f * table[j] - table[j - 1]) / (f - 1.0);
        }
    }
    *table.last().expect("non-empty")
}

/// Difference quotients of `u` along `ξ` for dyadic `η = 2^j h`,
/// `j = eta_steps−1, …, 0`.
pub fn directional_quotient(
    traj_u: &Trajectory,
    xi: &DirectionVector,
    eta_steps: usize,
    p: f64,
) -> Result<DirectionalReport> {
    let g = *traj_u.grid();
    if xi.xi_x.len() != g.dim() {
        return Err(Error::invalid("spatial direction has the wrong dimension"));
    }
    if eta_steps == 0 {
        return Err(Error::invalid("need at least one eta level"));
    }
    let times = &traj_u.times;
    let samples_per_step = if xi.xi_t == 0.0 {
        0usize
    } else {
        if times.len() < 2 {
            return Err(Error::invalid("time shifts need at least two samples"));
        }
        let cadence = times[1] - times[0];
        for w in times.windows(2) {
            if ((w[1] - w[0]) - cadence).abs() > 1e-9 * cadence {
                return Err(Error::invalid("time shifts need a uniform sample cadence"));
            }
        }
        let k = xi.xi_t / cadence;
        if (k - k.round()).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "xi_t = {} is not a multiple of the sample cadence {cadence}",
                xi.xi_t
            )));
        }
        k.round() as usize
    };
    let h = g.spacing();
    let steps: Vec<usize> = (0..eta_steps).rev().map(|j| 1usize << j).collect();
    let etas: Vec<f64> = steps.iter().map(|&s| s as f64 * h).collect();
    let max_shift = steps[0] * samples_per_step;
    if max_shift >= times.len() {
        return Err(Error::invalid("trajectory too short for the requested time shifts"));
    }
    let usable = times.len() - max_shift;
    let mut quotients = Vec::with_capacity(usable);
    let mut extrapolated = Vec::with_capacity(usable);
    for k in 0..usable {
        let u = &traj_u.fields[k];
        let mut row = Vec::with_capacity(steps.len());
        for (&s, &eta) in steps.iter().zip(&etas) {
            let offset: Vec<i64> = xi.xi_x.iter().map(|&c| c * s as i64).collect();
            let v = grid::shift(&traj_u.fields[k + s * samples_per_step], &offset)?;
            let diff = v.zip_map(u, |a, b| a - b)?;
            row.push(grid::integrate_lp(&diff, p, None)? / eta.powf(p));
        }
        extrapolated.push(richardson(&row));
        quotients.push(row);
    }
    let c_xi = extrapolated[0];
    let max_relative_excess = if c_xi > 0.0 {
        extrapolated[1..].iter().map(|&e| (e - c_xi) / c_xi).fold(f64::NEG_INFINITY, f64::max)
    } else {
        0.0
    };
    Ok(DirectionalReport {
        times: times[..usable].to_vec(),
        etas,
        quotients,
        extrapolated,
        c_xi,
        max_relative_excess: if max_relative_excess.is_finite() { max_relative_excess } else { 0.0 },
    })
}

/// `E(u) = ∫ u^γ |∇u|²/2`.
pub fn energy_e(u: &ScalarField, gamma: f64) -> f64 {
    let g = *u.grid();
    let gr = grid::gradient(u);
    let sum: f64 = (0..g.len())
        .map(|i| {
            let n = gr.norm_at(i);
            u.values()[i].powf(gamma) * n * n
        })
        .sum();
    0.5 * sum * g.cell_volume()
}

/// `δE/δu = −u^γ Δu − (γ/2) u^{γ−1} |∇u|²`, assembled with grid operators.
pub fn energy_variation(u: &ScalarField, gamma: f64) -> ScalarField {
    let g = *u.grid();
    let gr = grid::gradient(u);
    let lap = grid::laplacian(u);
    let values = (0..g.len())
        .map(|i| {
            let ui = u.values()[i];
            let n = gr.norm_at(i);
            -ui.powf(gamma) * lap.values()[i] - 0.5 * gamma * ui.powf(gamma - 1.0) * n * n
        })
        .collect();
    ScalarField::from_raw(g, values)
}

/// `E(u + s d) − 2E(u) + E(u − s d)`.
pub fn energy_second_difference(u: &ScalarField, dir: &ScalarField, gamma: f64, s: f64) -> Result<f64> {
    let plus = u.zip_map(dir, |a, b| a + s * b)?;
    let minus = u.zip_map(dir, |a, b| a - s * b)?;
    Ok(energy_e(&plus, gamma) - 2.0 * energy_e(u, gamma) + energy_e(&minus, gamma))
}

/// `γ = n/α` with `α = 1 + n/2`, the exponent for which the power variable
/// is an `L²` gradient flow of `E`.
pub fn gradient_flow_gamma(n: f64) -> f64 {
    n / (1.0 + 0.5 * n)
}

fn l2_norm(values: impl Iterator<Item = f64>, cell_volume: f64) -> f64 {
    (values.map(|x| x * x).sum::<f64>() * cell_volume).sqrt()
}

/// `max_k ‖u_t + δE/δu‖₂ / ‖u_t‖₂` over interior samples, with `u_t` from a
/// second-order three-point difference in time.
pub fn gradient_flow_residual(traj_u: &Trajectory, n: f64) -> Result<f64> {
    if !(n > -1.0 && n <= 0.0) {
        return Err(Error::domain(format!("gradient-flow structure needs n in (-1, 0], got {n}")));
    }
    let alpha = 1.0 + 0.5 * n;
    if (traj_u.stored_alpha() - alpha).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "gradient-flow residual needs alpha = 1 + n/2 = {alpha}, trajectory stores alpha = {}",
            traj_u.stored_alpha()
        )));
    }
    if traj_u.len() < 3 {
        return Err(Error::invalid("need at least three samples"));
    }
    let gamma = gradient_flow_gamma(n);
    let g = *traj_u.grid();
    let t = &traj_u.times;
    let mut worst: f64 = 0.0;
    for k in 1..traj_u.len() - 1 {
        let (h1, h2) = (t[k] - t[k - 1], t[k + 1] - t[k]);
        let (a, b, c) = (&traj_u.fields[k - 1], &traj_u.fields[k], &traj_u.fields[k + 1]);
        let denom = h1 * h2 * (h1 + h2);
        let ut: Vec<f64> = (0..g.len())
            .map(|i| {
                (h1 * h1 * c.values()[i] - h2 * h2 * a.values()[i] - (h1 * h1 - h2 * h2) * b.values()[i]) / denom
            })
            .collect();
        let var = energy_variation(b, gamma);
        let num = l2_norm(ut.iter().zip(var.values()).map(|(x, y)| x + y), g.cell_volume());
        let den = l2_norm(ut.iter().copied(), g.cell_volume());
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    Ok(worst)
}

/// `E(u(t))` for every sample.
pub fn energy_series(traj_u: &Trajectory, gamma: f64) -> Vec<f64> {
    traj_u.fields.iter().map(|u| energy_e(u, gamma)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissible::DiffusionParams;
    use crate::grid::TorusGrid;
    use crate::solver::{evolve_pair, SolverConfig};
    use std::f64::consts::PI;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn psi_examples() {
        for &(d, p) in &[(0.1, 2.0), (0.3, 3.5), (0.05, 1.5)] {
            assert!(psi_delta(d, p, d).abs() < 1e-15);
            let h = 1e-7;
            assert!((psi_delta(d, p, d + h) / h).abs() < 1e-5);
            for w in [0.4, 0.9, 1.7] {
                let fd = (psi_delta(d, p, w + h) - psi_delta(d, p, w - h)) / (2.0 * h);
                assert!((fd - psi_delta_derivative(d, p, w)).abs() < 1e-6);
            }
        }
        assert!((psi_zero(3.0, 2.0) - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(psi_zero(3.0, -1.0), 0.0);
        assert_eq!(psi_zero_unnormalized(3.0, 2.0), 8.0);
    }

    #[test]
    fn psi_uniform_gap() {
        let (w_max, p): (f64, f64) = (3.0, 2.5);
        for delta in [0.2, 0.05, 0.01] {
            let gap = (0..=3000)
                .map(|i| {
                    let w = w_max * i as f64 / 3000.0;
                    (psi_delta(delta, p, w) - psi_zero(p, w)).abs()
                })
                .fold(0.0, f64::max);
            let bound = delta.powf(p - 1.0) * w_max + delta.powf(p) * (1.0 - 1.0 / p);
            assert!(gap <= bound, "{gap} > {bound}");
        }
    }

    #[test]
    fn contraction_functional_examples() {
        let g = grid1(64);
        let u = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].sin());
        assert_eq!(contraction_functional(&u, &u, 2.5).unwrap(), 0.0);
        let v = u.map(|x| x + 0.5);
        let expect = 0.5f64.powf(2.5) * 2.0 * PI;
        assert!((contraction_functional(&v, &u, 2.5).unwrap() - expect).abs() < 1e-12);

        // piecewise pair against an independent summation
        let w = ScalarField::from_fn(g, |x| if x[0] < PI { 2.0 } else { 0.5 });
        let one = ScalarField::constant(g, 1.0);
        let h = g.spacing();
        let cells_above = (0..64).filter(|&i| (i as f64) * h < PI).count() as f64;
        let got = contraction_functional(&w, &one, 3.0).unwrap();
        assert!((got - cells_above * h).abs() < 1e-12);

        let other = ScalarField::constant(grid1(32), 1.0);
        assert!(matches!(contraction_functional(&other, &u, 2.0), Err(Error::GridMismatch)));
    }

    #[test]
    fn dissipation_integral_examples() {
        let g = grid1(128);
        let f = Forms::from_values(-0.5, 0.75, 2.0).unwrap();
        let u = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].sin());
        assert_eq!(dissipation_integral(&u, &u, &f, 0.0).unwrap(), 0.0);
        let v = ScalarField::from_fn(g, |x| 2.0 + 0.4 * (2.0 * x[0]).cos());
        assert!(dissipation_integral(&v, &u, &f, 0.0).unwrap() > 0.0);

        let conv = |n: usize| {
            let g = grid1(n);
            let u = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].sin());
            let v = ScalarField::from_fn(g, |x| 2.0 + 0.4 * (2.0 * x[0]).cos());
            dissipation_integral(&v, &u, &f, 0.0).unwrap()
        };
        let (a, b, c) = (conv(64), conv(128), conv(256));
        let order = ((a - b) / (b - c)).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn swapped_dissipation_sum_is_symmetric() {
        let g = grid1(64);
        let f = Forms::from_values(0.5, 0.8, 2.5).unwrap();
        let u = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].sin());
        let v = ScalarField::from_fn(g, |x| 1.0 + 0.3 * (x[0] + 1.0).cos());
        let a = dissipation_integral(&v, &u, &f, 0.0).unwrap() + dissipation_integral(&u, &v, &f, 0.0).unwrap();
        let b = dissipation_integral(&u, &v, &f, 0.0).unwrap() + dissipation_integral(&v, &u, &f, 0.0).unwrap();
        assert_eq!(a, b);
        for i in 0..g.len() {
            let (vi, ui) = (v.values()[i], u.values()[i]);
            let (gv, gu) = ([0.3 * i as f64], [-0.2]);
            let x = f.e_form(vi, ui, &gv, &gu);
            let y = f.e_form(ui, vi, &gu, &gv);
            assert!((x - y).abs() <= 1e-13 * x.abs().max(1.0));
        }
    }

    fn heat_pair(n: usize, t_end: f64) -> (Trajectory, Trajectory) {
        let g = grid1(n);
        let params = DiffusionParams::new(1.0, 1).unwrap();
        let u0 = ScalarField::from_fn(g, |x| 1.0 + 0.2 * x[0].cos());
        let v0 = ScalarField::from_fn(g, |x| 1.5 + 0.3 * x[0].cos());
        let cfg = SolverConfig::new(params, t_end, t_end / 200.0).with_lift(crate::solver::Lift::Absolute(0.0));
        evolve_pair(&u0, &v0, &cfg).unwrap()
    }

    #[test]
    fn identical_trajectories_have_zero_residual() {
        let (u, _) = heat_pair(32, 0.1);
        let rows = contraction_balance(&u, &u, 0.0, 1.0, 2.0).unwrap();
        assert!(rows.iter().all(|r| r.lyapunov == 0.0 && r.balance_residual == 0.0));
    }

    #[test]
    fn heat_pair_matches_fourier_dissipation() {
        // v − u = 0.5 + 0.1 cos x e^{−t}: ∫(v−u)² and 2∫|∇(v−u)|² in closed form.
        let (u, v) = heat_pair(256, 0.5);
        let rows = contraction_balance(&u, &v, 0.0, 1.0, 2.0).unwrap();
        let last = rows.last().unwrap();
        let t = last.t;
        let lyap = 2.0 * PI * 0.25 + PI * 0.01 * (-2.0 * t).exp();
        assert!((last.lyapunov - lyap).abs() < 1e-5 * lyap);
        let diss = PI * 0.01 * (-2.0 * t).exp();
        assert!((last.dissipation - diss).abs() < 1e-3 * diss);
        assert!(last.balance_residual.abs() < 1e-4 * rows[0].lyapunov);
    }

    #[test]
    fn balance_rejects_wrong_variable_or_times() {
        let (u, v) = heat_pair(32, 0.1);
        assert!(contraction_balance(&u, &v, 0.5, 0.8, 2.0).is_err());
        let (u2, _) = heat_pair(32, 0.2);
        assert!(contraction_balance(&u, &u2, 0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn gradient_functional_examples() {
        let g = grid1(64);
        let c = ScalarField::constant(g, 2.0);
        assert_eq!(gradient_functional(&c, 3.0).unwrap(), 0.0);
        let f = Forms::from_values(0.0, 1.0, 2.0).unwrap();
        let masks = Masks { u_floor: 0.0, g_floor: 0.0, delta_rel: DELTA_MASK_REL };
        assert_eq!(gradient_dissipation(&c, &f, &masks).unwrap(), 0.0);

        // heat equation, single mode: ∫|u_x|² = π a² e^{−2t}
        let (u, _) = heat_pair(256, 0.5);
        let rows = gradient_balance(&u, 0.0, 1.0, 2.0).unwrap();
        let last = rows.last().unwrap();
        let expect = PI * 0.04 * (-2.0 * last.t).exp();
        assert!((last.lyapunov - expect).abs() < 1e-3 * expect);
        assert!(rows.windows(2).all(|w| w[1].lyapunov <= w[0].lyapunov));
    }

    #[test]
    fn directional_constant_and_forward_difference() {
        let g = grid1(64);
        let params = DiffusionParams::new(1.0, 1).unwrap();
        let cfg = SolverConfig::new(params, 0.1, 0.01);
        let flat = crate::solver::evolve(&ScalarField::constant(g, 1.0), &cfg).unwrap();
        let rep = directional_quotient(&flat, &DirectionVector::spatial(0, 1), 3, 2.0).unwrap();
        assert!(rep.extrapolated.iter().all(|&x| x == 0.0));

        let (u, _) = heat_pair(128, 0.1);
        let rep = directional_quotient(&u, &DirectionVector::spatial(0, 1), 1, 3.0).unwrap();
        let fwd = grid::forward_difference(&u.fields[0], 0);
        let expect = grid::integrate_lp(&fwd, 3.0, None).unwrap();
        assert!((rep.quotients[0][0] - expect).abs() < 1e-12 * expect);
        assert!(rep.max_relative_excess <= 1e-6);

        assert!(DirectionVector::new(0.0, vec![0]).is_err());
        let bad = DirectionVector::new(0.00075, vec![1]).unwrap();
        assert!(directional_quotient(&u, &bad, 2, 2.0).is_err());
    }

    #[test]
    fn richardson_removes_polynomial_terms() {
        let q = |eta: f64| 3.0 + 0.7 * eta - 0.2 * eta * eta;
        let vals: Vec<f64> = (0..3).map(|j| q(0.4 / 2f64.powi(j))).collect();
        assert!((richardson(&vals) - 3.0).abs() < 1e-13);
        assert_eq!(richardson(&[5.0]), 5.0);
    }

    #[test]
    fn energy_examples() {
        let g = grid1(64);
        assert_eq!(energy_e(&ScalarField::constant(g, 3.0), -0.5), 0.0);
        // γ = 0: δE/δu = −Δu
        let u = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].sin());
        let var = energy_variation(&u, 0.0);
        let lap = grid::laplacian(&u);
        assert!(var.values().iter().zip(lap.values()).all(|(a, b)| (a + b).abs() < 1e-15));
    }

    #[test]
    fn energy_variation_matches_finite_differences() {
        let g = grid1(512);
        let gamma = -0.4;
        let u = ScalarField::from_fn(g, |x| 1.2 + 0.4 * x[0].sin());
        let dir = ScalarField::from_fn(g, |x| (2.0 * x[0]).cos() + 0.3 * x[0].sin());
        let s = 1e-5;
        let fd = energy_second_difference(&u, &dir, gamma, s).unwrap();
        let plus = energy_e(&u.zip_map(&dir, |a, b| a + s * b).unwrap(), gamma);
        let minus = energy_e(&u.zip_map(&dir, |a, b| a - s * b).unwrap(), gamma);
        let slope = (plus - minus) / (2.0 * s);
        let var = energy_variation(&u, gamma);
        let pairing: f64 = var.values().iter().zip(dir.values()).map(|(a, b)| a * b).sum::<f64>() * g.cell_volume();
        assert!((slope - pairing).abs() < 1e-4 * pairing.abs(), "{slope} vs {pairing}");
        assert!(fd > -1e-10);
    }

    #[test]
    fn gradient_flow_residual_requires_matching_alpha() {
        let (u, _) = heat_pair(32, 0.1);
        assert!(gradient_flow_residual(&u, -0.5).is_err());
        assert!(gradient_flow_residual(&u, 0.5).is_err());
        let r = gradient_flow_residual(&u, 0.0).unwrap();
        assert!(r < 5e-2, "{r}");
    }
}
