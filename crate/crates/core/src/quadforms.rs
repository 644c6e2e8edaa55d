//! The symmetric matrices `Q_{α,p}(v,u)` and `M_{α,p}` and the pointwise
//! dissipation integrands assembled from them.

use serde::{Deserialize, Serialize};

use crate::admissible::{derived_exponents, ExponentPair};
use crate::error::{Error, Result};

/// Symmetric 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMatrix2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMatrix2 {
    pub const ZERO: SymMatrix2 = SymMatrix2 { a11: 0.0, a12: 0.0, a22: 0.0 };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.a11, s * self.a12, s * self.a22)
    }

    /// Eigenvalues `(λ_min, λ_max)` from the closed form. The smaller one is
    /// recovered as `det/λ_max` when `λ_max > 0` to avoid cancellation.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_diff = 0.5 * (self.a11 - self.a22);
        let r = half_diff.hypot(self.a12);
        let mean = 0.5 * self.trace();
        let hi = mean + r;
        let lo = if hi > 0.0 { self.det() / hi } else { mean - r };
        (lo.min(hi), hi)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    /// `(x, y)ᵀ A (x, y)` for scalars.
    pub fn quad(&self, x: f64, y: f64) -> f64 {
        self.a11 * x * x + 2.0 * self.a12 * x * y + self.a22 * y * y
    }

    /// `(X, Y)ᵀ A (X, Y)` for vectors `X, Y ∈ ℝ^d`, i.e. `a11|X|² + 2a12 X·Y + a22|Y|²`.
    pub fn quad_vec(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(y) {
            xx += a * a;
            xy += a * b;
            yy += b * b;
        }
        self.a11 * xx + 2.0 * self.a12 * xy + self.a22 * yy
    }
}

/// `f_γ(w) = w^γ − 2 + w^{−γ}`.
pub fn f_gamma(gamma: f64, w: f64) -> Result<f64> {
    check_ratio(w)?;
    let a = w.powf(gamma);
    Ok(a - 2.0 + 1.0 / a)
}

/// `G_γ(w) = Γ(1−Γ) f_1(w) − f_γ(w)/4`; its sign is the sign of `det Q(v, wv)`.
pub fn g_gamma(big_gamma: f64, gamma: f64, w: f64) -> Result<f64> {
    Ok(big_gamma * (1.0 - big_gamma) * f_gamma(1.0, w)? - 0.25 * f_gamma(gamma, w)?)
}

/// `F_γ(w) = γ((γ−1)w^{γ+1} + (γ+1)w^{1−γ})/4 − 2Γ(1−Γ)`, with `G″_γ = −w^{−3} F_γ`.
pub fn big_f_gamma(big_gamma: f64, gamma: f64, w: f64) -> Result<f64> {
    check_ratio(w)?;
    Ok(0.25 * gamma * ((gamma - 1.0) * w.powf(gamma + 1.0) + (gamma + 1.0) * w.powf(1.0 - gamma))
        - 2.0 * big_gamma * (1.0 - big_gamma))
}

fn check_ratio(w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("ratio w = {w} must be positive")))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {x} must be positive")))
    }
}

/// Precomputed coefficients for one exponent triple `(n, α, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forms {
    n: f64,
    pair: ExponentPair,
    gamma: f64,
    big_gamma: f64,
    unit: bool,
}

impl Forms {
    /// Requires `|n| < 1` and either `p > 1` or the pair `(1, 1)`.
    pub fn new(n: f64, pair: ExponentPair) -> Result<Self> {
        if !(n.abs() < 1.0) {
            return Err(Error::ExponentOutOfRange(n));
        }
        let unit = pair.is_unit();
        let d = derived_exponents(n, pair);
        let big_gamma = match (unit, d.big_gamma) {
            (true, _) => 0.0,
            (false, Some(g)) => g,
            (false, None) => {
                return Err(Error::domain(format!(
                    "p = 1 is only admissible together with alpha = 1 (got alpha = {})",
                    pair.alpha()
                )))
            }
        };
        Ok(Self { n, pair, gamma: d.gamma, big_gamma, unit })
    }

    pub fn from_values(n: f64, alpha: f64, p: f64) -> Result<Self> {
        Self::new(n, ExponentPair::new(alpha, p)?)
    }

    pub fn n(&self) -> f64 {
        self.n
    }
    pub fn alpha(&self) -> f64 {
        self.pair.alpha()
    }
    pub fn p(&self) -> f64 {
        self.pair.p()
    }
    pub fn pair(&self) -> ExponentPair {
        self.pair
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    /// `Γ`, taken as 0 for the pair `(1, 1)`.
    pub fn big_gamma(&self) -> f64 {
        self.big_gamma
    }

    pub fn q_matrix(&self, v: f64, u: f64) -> Result<SymMatrix2> {
        check_positive("v", v)?;
        check_positive("u", u)?;
        Ok(self.q_unchecked(v, u))
    }

    fn q_unchecked(&self, v: f64, u: f64) -> SymMatrix2 {
        if self.unit {
            return SymMatrix2::ZERO;
        }
        let pm1 = self.p() - 1.0;
        let vg = v.powf(self.gamma);
        let ug = u.powf(self.gamma);
        let g = self.big_gamma;
        SymMatrix2::new(
            pm1 * vg * (1.0 + g * (u / v - 1.0)),
            -0.5 * pm1 * (vg + ug),
            pm1 * ug * (1.0 + g * (v / u - 1.0)),
        )
    }

    pub fn m_matrix(&self) -> SymMatrix2 {
        if self.unit {
            return SymMatrix2::ZERO;
        }
        let pm1 = self.p() - 1.0;
        let g = self.big_gamma;
        SymMatrix2::new(pm1, pm1 * (-g + 0.5 * self.gamma), pm1 * g * (1.0 - self.gamma))
    }

    /// `(p−1)²(Γ(1−Γ) − γ²/4)`, the closed form of `det M`.
    pub fn m_det_closed_form(&self) -> f64 {
        if self.unit {
            return 0.0;
        }
        let pm1 = self.p() - 1.0;
        let g = self.big_gamma;
        pm1 * pm1 * (g * (1.0 - g) - 0.25 * self.gamma * self.gamma)
    }

    pub fn g_gamma(&self, w: f64) -> Result<f64> {
        g_gamma(self.big_gamma, self.gamma, w)
    }

    pub fn big_f_gamma(&self, w: f64) -> Result<f64> {
        big_f_gamma(self.big_gamma, self.gamma, w)
    }

    /// Pointwise contraction dissipation
    /// `e[v,u] = |v−u|^{p−2} (∇v,∇u)ᵀ Q(v,u) (∇v,∇u)`, defined for `v > u > 0`.
    pub fn dissipation_e(&self, v: f64, u: f64, grad_v: &[f64], grad_u: &[f64]) -> Result<f64> {
        check_positive("u", u)?;
        if !(v > u) {
            return Err(Error::domain(format!("e[v,u] requires v > u (v = {v}, u = {u})")));
        }
        check_len(grad_v, grad_u)?;
        Ok(self.e_form(v, u, grad_v, grad_u))
    }

    /// The `e[v,u]` expression without the ordering check; symmetric under
    /// swapping `(v, ∇v)` with `(u, ∇u)`.
    pub fn e_form(&self, v: f64, u: f64, grad_v: &[f64], grad_u: &[f64]) -> f64 {
        let weight = (v - u).abs().powf(self.p() - 2.0);
        weight * self.q_unchecked(v, u).quad_vec(grad_v, grad_u)
    }

    /// Gradient dissipation `ē[u, w, A]` with `w = ∇u` and `A = D²u` given
    /// row-major as a `d×d` slice. `A` is split along `b = w/|w|` into
    /// `A₀ = bᵀAb`, the off-diagonal block `A₁` and the block `A₂` on `b^⊥`;
    /// block norms are Frobenius norms.
    pub fn dissipation_ebar(&self, u: f64, w: &[f64], a: &[f64]) -> Result<f64> {
        check_positive("u", u)?;
        let d = w.len();
        if a.len() != d * d {
            return Err(Error::invalid(format!("Hessian has {} entries for d = {d}", a.len())));
        }
        let w2: f64 = w.iter().map(|x| x * x).sum();
        if !(w2 > 0.0) {
            return Err(Error::domain("ebar is undefined where the gradient vanishes"));
        }
        let blocks = split_along(w, a);
        let wn = w2.sqrt();
        let pre = wn.powf(self.p() - 2.0);
        let m = self.m_matrix();
        Ok(pre * u.powf(self.gamma - 2.0) * m.quad(u * blocks.a0, w2)
            + pre * u.powf(self.gamma) * (blocks.a2_sq + self.p() * blocks.a1_sq))
    }

    /// Directional dissipation
    /// `ē̄[u, w, ∇u] = |w|^{p−2} u^{γ−2} (u∇w, w∇u)ᵀ M (u∇w, w∇u)`.
    pub fn dissipation_ebarbar(
        &self,
        u: f64,
        w: f64,
        grad_w: &[f64],
        grad_u: &[f64],
    ) -> Result<f64> {
        if w == 0.0 {
            return Err(Error::domain("ebarbar is undefined where w = 0"));
        }
        Ok(w.abs().powf(self.p() - 2.0) * self.j_zero(u, w, grad_w, grad_u)?)
    }

    /// `J_η = η^{−2} (∇v_η,∇u)ᵀ Q(v_η,u) (∇v_η,∇u)`.
    pub fn j_eta(
        &self,
        eta: f64,
        v_eta: f64,
        u: f64,
        grad_v_eta: &[f64],
        grad_u: &[f64],
    ) -> Result<f64> {
        check_positive("eta", eta)?;
        check_len(grad_v_eta, grad_u)?;
        Ok(self.q_matrix(v_eta, u)?.quad_vec(grad_v_eta, grad_u) / (eta * eta))
    }

    /// `J₀ = u^{γ−2} (u∇w, w∇u)ᵀ M (u∇w, w∇u)`, the `η → 0` limit of `J_η`
    /// along `v_η = u + ηw + O(η²)`.
    pub fn j_zero(&self, u: f64, w: f64, grad_w: &[f64], grad_u: &[f64]) -> Result<f64> {
        check_positive("u", u)?;
        check_len(grad_w, grad_u)?;
        let m = self.m_matrix();
        let (mut ww, mut wu, mut uu) = (0.0, 0.0, 0.0);
        for (gw, gu) in grad_w.iter().zip(grad_u) {
            ww += gw * gw;
            wu += gw * gu;
            uu += gu * gu;
        }
        let form = m.a11 * u * u * ww + 2.0 * m.a12 * u * w * wu + m.a22 * w * w * uu;
        Ok(u.powf(self.gamma - 2.0) * form)
    }

    /// Scan `Q(1, w)` over a logarithmic grid of `w ∈ [w_min, w_max]`; by the
    /// homogeneity `Q(λv, λu) = λ^γ Q(v, u)` this covers the cone of ratios.
    pub fn q_positivity_scan(&self, w_min: f64, w_max: f64, steps: usize) -> Result<PositivityReport> {
        let ws = log_grid(w_min, w_max, steps)?;
        let mut samples = Vec::with_capacity(ws.len());
        for &w in &ws {
            let q = self.q_unchecked(1.0, w);
            let (lo, hi) = q.eigenvalues();
            samples.push(ScanSample { w, eig_min: lo, eig_max: hi, q11: q.a11 });
        }
        let argmin = samples
            .iter()
            .min_by(|a, b| a.eig_min.total_cmp(&b.eig_min))
            .copied()
            .expect("non-empty scan");
        let q11_min = samples
            .iter()
            .filter(|s| s.w <= 1.0)
            .min_by(|a, b| a.q11.total_cmp(&b.q11))
            .copied();
        let mut witnesses = vec![(argmin.w, argmin.eig_min)];
        if let Some(s) = q11_min {
            witnesses.push((s.w, s.q11));
        }
        Ok(PositivityReport {
            n: self.n,
            alpha: self.alpha(),
            p: self.p(),
            w_min,
            w_max,
            steps,
            min_scaled_eig: argmin.eig_min,
            nu: argmin.eig_min.max(0.0),
            nu0: q11_min.map_or(f64::NAN, |s| s.q11),
            nu1: self.m_matrix().min_eigenvalue(),
            witnesses,
            samples,
        })
    }

    /// Most negative `λ_min(Q(1, w))` over `[w_min, w_max]`, refined by a
    /// golden-section search around the best grid point. `None` unless the
    /// minimum is below `−WITNESS_FLOOR`, which absorbs the rounding of the
    /// exact zero eigenvalue at `w = 1`.
    pub fn negative_witness(&self, w_min: f64, w_max: f64, steps: usize) -> Result<Option<(f64, f64)>> {
        let ws = log_grid(w_min, w_max, steps)?;
        let eig = |lw: f64| self.q_unchecked(1.0, lw.exp()).min_eigenvalue();
        let (k, best) = ws
            .iter()
            .map(|w| eig(w.ln()))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty grid");
        let lo = ws[k.saturating_sub(1)].ln();
        let hi = ws[(k + 1).min(ws.len() - 1)].ln();
        let (lw, val) = golden_min(eig, lo, hi, 80);
        let (w, val) = if val < best { (lw.exp(), val) } else { (ws[k], best) };
        Ok((val < -WITNESS_FLOOR).then_some((w, val)))
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::invalid(format!("gradient lengths differ: {} vs {}", a.len(), b.len())))
    }
}

/// Squared block norms of a symmetric matrix in the splitting `ℝb ⊕ b^⊥`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Blocks {
    pub a0: f64,
    pub a1_sq: f64,
    pub a2_sq: f64,
}

pub(crate) fn split_along(w: &[f64], a: &[f64]) -> Blocks {
    let d = w.len();
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut ab = vec![0.0; d];
    let mut frob = 0.0;
    for i in 0..d {
        for j in 0..d {
            let aij = a[i * d + j];
            ab[i] += aij * w[j] / wn;
            frob += aij * aij;
        }
    }
    let a0: f64 = ab.iter().zip(w).map(|(x, wi)| x * wi / wn).sum();
    let ab_sq: f64 = ab.iter().map(|x| x * x).sum();
    let a1_sq = (ab_sq - a0 * a0).max(0.0);
    let a2_sq = (frob - a0 * a0 - 2.0 * a1_sq).max(0.0);
    Blocks { a0, a1_sq, a2_sq }
}

/// Rounding allowance for [`Forms::negative_witness`].
pub const WITNESS_FLOOR: f64 = 1e-13;

pub fn log_grid(w_min: f64, w_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(w_min > 0.0 && w_min <= w_max && w_max.is_finite()) {
        return Err(Error::invalid(format!("invalid scan range [{w_min}, {w_max}]")));
    }
    if steps < 2 {
        return Ok(vec![w_min]);
    }
    let (l0, l1) = (w_min.ln(), w_max.ln());
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                w_max
            } else {
                (l0 + (l1 - l0) * i as f64 / (steps - 1) as f64).exp()
            }
        })
        .collect())
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub w: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    pub q11: f64,
}

/// Result of [`Forms::q_positivity_scan`]. The constants `ν, ν₀, ν₁` are
/// infima over the scanned range, not closed-form values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub n: f64,
    pub alpha: f64,
    pub p: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub steps: usize,
    /// `inf_w λ_min(Q(1, w))`
    pub min_scaled_eig: f64,
    /// `max(0, min_scaled_eig)`; positive only for scans excluding `w = 1`.
    pub nu: f64,
    /// `inf_{w ≤ 1} Q₁₁(1, w)`
    pub nu0: f64,
    /// `λ_min(M)`
    pub nu1: f64,
    /// `(w, value)` at the eigenvalue minimum and at the `Q₁₁` minimum.
    pub witnesses: Vec<(f64, f64)>,
    #[serde(skip)]
    pub samples: Vec<ScanSample>,
}

impl PositivityReport {
    /// `w,eig_min,eig_max,q11` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "w,eig_min,eig_max,q11")?;
        for s in &self.samples {
            writeln!(out, "{},{},{},{}", s.w, s.eig_min, s.eig_max, s.q11)?;
        }
        Ok(())
    }
}
