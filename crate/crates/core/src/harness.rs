//! Verification routines shared by the command-line tool and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::admissible::{classify, p_bounds, ExponentPair, RegionClass, DEFAULT_BOUNDARY_TOL};
use crate::error::Result;
use crate::grid::ScalarField;
use crate::quadforms::Forms;
use crate::solver::Trajectory;

/// Scan range and resolution for `Q(1, w)`.
pub const SCAN_W_MIN: f64 = 1e-3;
pub const SCAN_W_MAX: f64 = 1.0;
pub const SCAN_STEPS: usize = 2000;

/// One sampled `(α, p)` of the region/positivity comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCheckRow {
    pub n: f64,
    pub alpha: f64,
    pub p: f64,
    pub class: RegionClass,
    /// `min_w λ_min(Q(1, w))` over the scan grid, refined for negative values.
    pub min_scaled_eig: f64,
    pub m_min_eig: f64,
    /// Location of a negative eigenvalue, if any.
    pub witness_w: Option<f64>,
}

impl RegionCheckRow {
    /// Interior points need `Q ⪰ 0` (to `−1e−10`) and `M ≻ 0` (to `1e−12`);
    /// outside points need a witness below `−1e−8`. Boundary points pass.
    pub fn consistent(&self) -> bool {
        match self.class {
            RegionClass::Interior => self.min_scaled_eig >= -1e-10 && self.m_min_eig >= 1e-12,
            RegionClass::Outside => self.witness_w.is_some() && self.min_scaled_eig <= -1e-8,
            RegionClass::Boundary => true,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` pairs with `α ∈ (0, 1]` and `p ∈ (1, p_max]`, uniform.
pub fn sample_pairs(count: usize, p_max: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let alpha = 1.0 - r.gen::<f64>();
            let p = p_max - (p_max - 1.0) * r.gen::<f64>();
            (alpha, p)
        })
        .collect()
}

/// `count` pairs strictly inside `K_|n|` with `p ≤ p_max`, by rejection.
pub fn sample_in_k(n: f64, count: usize, p_max: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) {
            return Err(crate::error::Error::domain(format!("no admissible pairs with p <= {p_max} for n = {n}")));
        }
        let alpha = n.abs() + (1.0 - n.abs()) * r.gen::<f64>();
        let p = 1.0 + (p_max - 1.0) * r.gen::<f64>();
        if classify(n, ExponentPair::new(alpha, p)?, DEFAULT_BOUNDARY_TOL)? == RegionClass::Interior && p > 1.0 {
            out.push((alpha, p));
        }
    }
    Ok(out)
}

pub fn region_check_point(n: f64, alpha: f64, p: f64) -> Result<RegionCheckRow> {
    region_check_point_with(n, alpha, p, SCAN_W_MIN, SCAN_W_MAX, SCAN_STEPS)
}

pub fn region_check_point_with(
    n: f64,
    alpha: f64,
    p: f64,
    w_min: f64,
    w_max: f64,
    steps: usize,
) -> Result<RegionCheckRow> {
    let class = classify(n, ExponentPair::new(alpha, p)?, DEFAULT_BOUNDARY_TOL)?;
    let forms = Forms::from_values(n, alpha, p)?;
    let scan = forms.q_positivity_scan(w_min, w_max, steps)?;
    let witness = forms.negative_witness(w_min, w_max, steps)?;
    Ok(RegionCheckRow {
        n,
        alpha,
        p,
        class,
        min_scaled_eig: witness.map_or(scan.min_scaled_eig, |(_, e)| e.min(scan.min_scaled_eig)),
        m_min_eig: scan.nu1,
        witness_w: witness.map(|(w, _)| w),
    })
}

/// Classification against `Q`/`M` positivity for random pairs.
pub fn region_check(n: f64, count: usize, p_max: f64, seed: u64) -> Result<Vec<RegionCheckRow>> {
    sample_pairs(count, p_max, seed)
        .into_iter()
        .map(|(alpha, p)| region_check_point(n, alpha, p))
        .collect()
}

/// `n,alpha,p,class,min_scaled_eig,witness_w` (empty witness if none).
pub fn write_region_check_csv<W: std::io::Write>(rows: &[RegionCheckRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,alpha,p,class,min_scaled_eig,witness_w")?;
    for r in rows {
        let w = r.witness_w.map_or(String::new(), |w| w.to_string());
        writeln!(out, "{},{},{},{},{},{}", r.n, r.alpha, r.p, r.class, r.min_scaled_eig, w)?;
    }
    Ok(())
}

/// Closed-form defects `(det M − (p−1)²(Γ(1−Γ) − γ²/4), F_γ(1) + 2 det M/(p−1)²)`.
pub fn closed_form_defects(forms: &Forms) -> Result<(f64, f64)> {
    let det = forms.m_matrix().det();
    let p1 = forms.p() - 1.0;
    Ok((det - forms.m_det_closed_form(), forms.big_f_gamma(1.0)? + 2.0 * det / (p1 * p1)))
}

/// Whether `(α, p)` lies strictly between `P_−(α)` and `P_+(α)`.
pub fn strictly_inside(n: f64, alpha: f64, p: f64) -> Result<bool> {
    let (lo, hi) = p_bounds(n, alpha)?;
    Ok(lo < p && p < hi)
}

/// Largest increase of a series (0 if nonincreasing).
pub fn max_increase(series: &[f64]) -> f64 {
    series.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

pub fn mass_series(traj: &Trajectory) -> Vec<f64> {
    traj.fields.iter().map(ScalarField::mass).collect()
}

/// `max_k |mass(t_k) − mass(0)| / mass(0)`.
pub fn mass_drift(traj: &Trajectory) -> f64 {
    let m = mass_series(traj);
    m.iter().map(|x| (x - m[0]).abs()).fold(0.0, f64::max) / m[0].abs()
}

pub fn l1_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    let g = a.grid();
    a.same_grid(b)?;
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum::<f64>() * g.cell_volume())
}

pub fn l1_series(a: &Trajectory, b: &Trajectory) -> Result<Vec<f64>> {
    a.fields.iter().zip(&b.fields).map(|(x, y)| l1_distance(x, y)).collect()
}

/// Least-squares slope of `ln y` against `x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Exponential decay rate of the `cos(k x₀)` Fourier coefficient.
pub fn fourier_decay_rate(traj: &Trajectory, k: f64) -> f64 {
    let g = *traj.grid();
    let coef: Vec<f64> = traj
        .fields
        .iter()
        .map(|f| {
            (0..g.len())
                .map(|i| f.values()[i] * (k * g.coords(i)[0]).cos())
                .sum::<f64>()
                .abs()
        })
        .collect();
    -log_slope(&traj.times, &coef)
}

/// Observed orders `log₂(e_k / e_{k+1})` of a refinement sequence.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// `|J_η − J₀|` at a point along `v_η = u + ηw`, `∇v_η = ∇u + η∇w`.
pub fn j_eta_errors(
    forms: &Forms,
    u: f64,
    w: f64,
    grad_u: &[f64],
    grad_w: &[f64],
    etas: &[f64],
) -> Result<Vec<f64>> {
    let j0 = forms.j_zero(u, w, grad_w, grad_u)?;
    etas.iter()
        .map(|&eta| {
            let gv: Vec<f64> = grad_u.iter().zip(grad_w).map(|(a, b)| a + eta * b).collect();
            Ok((forms.j_eta(eta, u + eta * w, u, &gv, grad_u)? - j0).abs())
        })
        .collect()
}

/// Least-squares rate of `err(η) ~ C η^r` over the supplied increments.
pub fn convergence_rate(etas: &[f64], errors: &[f64]) -> f64 {
    let lx: Vec<f64> = etas.iter().map(|e| e.ln()).collect();
    log_slope(&lx, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let a = sample_pairs(50, 12.0, 7);
        assert_eq!(a, sample_pairs(50, 12.0, 7));
        assert!(a.iter().all(|&(al, p)| al > 0.0 && al <= 1.0 && p > 1.0 && p <= 12.0));
        let k = sample_in_k(0.5, 20, 8.0, 3).unwrap();
        assert!(k.iter().all(|&(al, p)| strictly_inside(0.5, al, p).unwrap()));
    }

    #[test]
    fn orders_and_slopes() {
        assert_eq!(observed_orders(&[4.0, 1.0, 0.25]), vec![2.0, 2.0]);
        assert_eq!(max_increase(&[3.0, 2.0, 2.5, 1.0]), 0.5);
        let xs = [0.0, 1.0, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 2.0 * (-1.5 * x).exp()).collect();
        assert!((log_slope(&xs, &ys) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn region_rows_are_consistent() {
        for n in [-0.5, 0.5] {
            for row in region_check(n, 30, 12.0, 11).unwrap() {
                assert!(row.consistent(), "{row:?}");
            }
        }
    }

    #[test]
    fn j_eta_rate_is_first_order() {
        let f = Forms::from_values(0.5, 0.8, 2.5).unwrap();
        let etas: Vec<f64> = (3..=10).map(|k| 2f64.powi(-k)).collect();
        let errs = j_eta_errors(&f, 1.3, 0.7, &[0.4], &[-0.9], &etas).unwrap();
        assert!((convergence_rate(&etas, &errs) - 1.0).abs() < 0.15);
    }
}
