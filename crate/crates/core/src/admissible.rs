//! The admissible exponent set `K_|n|` and the exponents derived from `(n, α, p)`.
//!
//! For `0 < |n| < 1` the set is bounded by the two curves
//! `P_±(α) = 1 + (2/n²)(1−α)(α ± √(α²−n²))` over `α ∈ [|n|, 1]`;
//! for `n = 0` it is `{α ∈ (0,1], αp ≥ 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance separating `Interior` from `Boundary`.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

/// Exponent `m` of `m U_t = ΔU^m` together with the space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    m: f64,
    d: usize,
}

impl DiffusionParams {
    /// Accepts any `m > 0`; contraction analyses additionally call
    /// [`DiffusionParams::require_contraction_range`].
    pub fn new(m: f64, d: usize) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::invalid(format!("m must be positive, got {m}")));
        }
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Ok(Self { m, d })
    }

    pub fn from_n(n: f64, d: usize) -> Result<Self> {
        Self::new(1.0 + n, d)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn n(&self) -> f64 {
        self.m - 1.0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `m_c(d) = max(0, (d−2)/d)`.
    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.d)
    }

    pub fn require_contraction_range(&self) -> Result<f64> {
        check_n(self.n())
    }
}

pub fn critical_exponent(d: usize) -> f64 {
    let d = d as f64;
    ((d - 2.0) / d).max(0.0)
}

/// A point `(α, p)` with `α ∈ (0,1]` and `p ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    alpha: f64,
    p: f64,
}

impl ExponentPair {
    pub fn new(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("p must be >= 1, got {p}")));
        }
        Ok(Self { alpha, p })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The pair `(1, 1)` for which `Q` and `M` are defined to vanish.
    pub fn is_unit(&self) -> bool {
        self.alpha == 1.0 && self.p == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    /// `γ = n/α`
    pub gamma: f64,
    /// `γ̄ = γ − 1 + 1/α`
    pub gamma_bar: f64,
    /// `Γ = (1−α)/(α(p−1))`, `None` when `p = 1`.
    pub big_gamma: Option<f64>,
    /// `Γ_− = (1 − √(1−γ²))/2`, `None` when `|γ| > 1`.
    pub gamma_minus: Option<f64>,
    /// `Γ_+ = (1 + √(1−γ²))/2`, `None` when `|γ| > 1`.
    pub gamma_plus: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionClass {
    Interior,
    Boundary,
    Outside,
}

impl RegionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionClass::Interior => "interior",
            RegionClass::Boundary => "boundary",
            RegionClass::Outside => "outside",
        }
    }

    /// Interior or boundary.
    pub fn is_admissible(&self) -> bool {
        !matches!(self, RegionClass::Outside)
    }
}

impl std::fmt::Display for RegionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(RegionClass::Interior),
            "boundary" => Ok(RegionClass::Boundary),
            "outside" => Ok(RegionClass::Outside),
            other => Err(Error::Format(format!("unknown region class {other:?}"))),
        }
    }
}

fn check_n(n: f64) -> Result<f64> {
    if n.is_finite() && n.abs() < 1.0 {
        Ok(n)
    } else {
        Err(Error::ExponentOutOfRange(n))
    }
}

/// `√(α² − n²)`, clamped at zero for `α = |n|` up to rounding.
fn root_gap(n: f64, alpha: f64) -> f64 {
    (alpha * alpha - n * n).max(0.0).sqrt()
}

/// The bounds `(P_−(α), P_+(α))` of the admissible fiber over `α`.
///
/// `P_−` uses the rationalised form `1 + 2(1−α)/(α + √(α²−n²))`, which
/// stays accurate as `n → 0` where it tends to `1/α`.
pub fn p_bounds(n: f64, alpha: f64) -> Result<(f64, f64)> {
    check_n(n)?;
    if n == 0.0 {
        return Err(Error::domain("p_bounds is undefined for n = 0; use classify"));
    }
    let abs_n = n.abs();
    if !(alpha >= abs_n && alpha <= 1.0) {
        return Err(Error::domain(format!("alpha = {alpha} must lie in [|n|, 1] = [{abs_n}, 1]")));
    }
    let s = root_gap(n, alpha);
    let p_minus = 1.0 + 2.0 * (1.0 - alpha) / (alpha + s);
    let p_plus = 1.0 + 2.0 / (n * n) * (1.0 - alpha) * (alpha + s);
    Ok((p_minus, p_plus))
}

/// Classify `(α, p)` against `K_|n|` with an absolute tolerance on the
/// distance to the bounding curves and to the edge `α = |n|`.
pub fn classify(n: f64, pair: ExponentPair, tol: f64) -> Result<RegionClass> {
    check_n(n)?;
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let (alpha, p) = (pair.alpha, pair.p);
    if n == 0.0 {
        let s = alpha * p - 1.0;
        return Ok(if s > tol {
            RegionClass::Interior
        } else if s >= -tol {
            RegionClass::Boundary
        } else {
            RegionClass::Outside
        });
    }
    let abs_n = n.abs();
    if alpha < abs_n - tol {
        return Ok(RegionClass::Outside);
    }
    let (lo, hi) = p_bounds(n, alpha.max(abs_n))?;
    if alpha <= abs_n + tol {
        // The fiber degenerates to a point at α = |n|.
        return Ok(if p >= lo - tol && p <= hi + tol {
            RegionClass::Boundary
        } else {
            RegionClass::Outside
        });
    }
    Ok(if p > lo + tol && p < hi - tol {
        RegionClass::Interior
    } else if p >= lo - tol && p <= hi + tol {
        RegionClass::Boundary
    } else {
        RegionClass::Outside
    })
}

pub fn derived_exponents(n: f64, pair: ExponentPair) -> DerivedExponents {
    let (alpha, p) = (pair.alpha, pair.p);
    let gamma = n / alpha;
    let gamma_bar = gamma - 1.0 + 1.0 / alpha;
    let big_gamma = (p > 1.0).then(|| (1.0 - alpha) / (alpha * (p - 1.0)));
    let (gamma_minus, gamma_plus) = match gamma_roots(gamma) {
        Some((lo, hi)) => (Some(lo), Some(hi)),
        None => (None, None),
    };
    DerivedExponents { gamma, gamma_bar, big_gamma, gamma_minus, gamma_plus }
}

/// Roots `Γ_∓ = (1 ∓ √(1−γ²))/2` of `Γ(1−Γ) = γ²/4`.
pub fn gamma_roots(gamma: f64) -> Option<(f64, f64)> {
    if gamma.abs() > 1.0 {
        return None;
    }
    let r = (1.0 - gamma * gamma).max(0.0).sqrt();
    let minus = gamma * gamma / (2.0 * (1.0 + r));
    Some((minus, 1.0 - minus))
}

/// `Γ(α, p) = (1−α)/(α(p−1))` for `p > 1`.
pub fn big_gamma(alpha: f64, p: f64) -> Option<f64> {
    (p > 1.0).then(|| (1.0 - alpha) / (alpha * (p - 1.0)))
}

/// Residuals `(Γ(α,P_−) − Γ_+, Γ(α,P_+) − Γ_−)`. Both vanish: on the lower
/// boundary curve `Γ` hits the upper root and vice versa.
pub fn boundary_gamma_identity(n: f64, alpha: f64) -> Result<(f64, f64)> {
    let (lo, hi) = p_bounds(n, alpha)?;
    if alpha >= 1.0 {
        return Err(Error::domain("alpha must be < 1 for the boundary identity"));
    }
    let (g_minus, g_plus) = gamma_roots(n / alpha)
        .ok_or_else(|| Error::domain("|gamma| > 1 below the admissible range"))?;
    let at_lo = big_gamma(alpha, lo).expect("P_- > 1 for alpha < 1");
    let at_hi = big_gamma(alpha, hi).expect("P_+ > 1 for alpha < 1");
    Ok((at_lo - g_plus, at_hi - g_minus))
}

/// Classification grid over `(α, p) ∈ (0,1] × [1, p_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub n: f64,
    pub tol: f64,
    pub alphas: Vec<f64>,
    pub ps: Vec<f64>,
    /// Row-major with `α` as the outer index.
    pub cells: Vec<RegionClass>,
}

impl RegionGrid {
    pub fn get(&self, i_alpha: usize, j_p: usize) -> RegionClass {
        self.cells[i_alpha * self.ps.len() + j_p]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, RegionClass)> + '_ {
        self.alphas
            .iter()
            .flat_map(move |&a| self.ps.iter().map(move |&p| (a, p)))
            .zip(self.cells.iter())
            .map(|((a, p), &c)| (a, p, c))
    }

    /// `alpha,p,class` rows in grid order.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "alpha,p,class")?;
        for (a, p, c) in self.iter() {
            writeln!(out, "{a},{p},{c}")?;
        }
        Ok(())
    }
}

/// `α_i = i/alpha_steps` for `i = 1..=alpha_steps` and `p_j` uniform on `[1, p_max]`.
pub fn sample_region(
    n: f64,
    alpha_steps: usize,
    p_max: f64,
    p_steps: usize,
    tol: f64,
) -> Result<RegionGrid> {
    check_n(n)?;
    if alpha_steps < 2 || p_steps < 2 {
        return Err(Error::invalid("grid needs at least 2 steps per axis"));
    }
    if !(p_max > 1.0) {
        return Err(Error::invalid(format!("p_max must exceed 1, got {p_max}")));
    }
    let alphas: Vec<f64> = (1..=alpha_steps).map(|i| i as f64 / alpha_steps as f64).collect();
    let ps: Vec<f64> = (0..p_steps)
        .map(|j| 1.0 + (p_max - 1.0) * j as f64 / (p_steps - 1) as f64)
        .collect();
    let mut cells = Vec::with_capacity(alphas.len() * ps.len());
    for &a in &alphas {
        for &p in &ps {
            cells.push(classify(n, ExponentPair::new(a, p)?, tol)?);
        }
    }
    Ok(RegionGrid { n, tol, alphas, ps, cells })
}
