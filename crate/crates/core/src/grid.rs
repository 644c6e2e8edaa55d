//! Periodic torus grids in one and two dimensions, sampled fields and
//! second-order centered-difference operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod snapshot;

pub const MIN_CELLS: usize = 8;

/// `[0, L)^d` with `N` cells per dimension and spacing `h = L/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    cells: usize,
    period: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, cells: usize, period: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if cells < MIN_CELLS {
            return Err(Error::invalid(format!("need at least {MIN_CELLS} cells, got {cells}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::invalid(format!("period must be positive, got {period}")));
        }
        Ok(Self { dim, cells, period })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn cells(&self) -> usize {
        self.cells
    }
    pub fn period(&self) -> f64 {
        self.period
    }
    pub fn spacing(&self) -> f64 {
        self.period / self.cells as f64
    }
    /// `h^d`
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }
    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }
    /// Total number of cells `N^d`.
    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of a flat row-major index; the first axis varies slowest.
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.cells, idx % self.cells],
        }
    }

    pub fn ravel(&self, ij: [usize; 2]) -> usize {
        match self.dim {
            1 => ij[0],
            _ => ij[0] * self.cells + ij[1],
        }
    }

    /// Cell coordinates `x_i = i h` (unused trailing entries are zero).
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let ij = self.unravel(idx);
        let mut x = [ij[0] as f64 * h, ij[1] as f64 * h];
        if self.dim == 1 {
            x[1] = 0.0;
        }
        x
    }

    #[inline]
    fn wrap(&self, i: usize, off: isize) -> usize {
        let n = self.cells as isize;
        (i as isize + off).rem_euclid(n) as usize
    }

    /// Flat index of the neighbour offset by `off` cells along `axis`.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, off: isize) -> usize {
        let mut ij = self.unravel(idx);
        ij[axis] = self.wrap(ij[axis], off);
        self.ravel(ij)
    }
}

/// Values sampled at the cells of a [`TorusGrid`], row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at cell {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `h^d Σ f_i`
    pub fn mass(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}

/// Vector field stored per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: TorusGrid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }
    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }
    /// Vector at one cell; the second entry is zero in one dimension.
    pub fn at(&self, idx: usize) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, c) in self.components.iter().enumerate() {
            out[k] = c[idx];
        }
        out
    }
    pub fn norm_at(&self, idx: usize) -> f64 {
        self.components.iter().map(|c| c[idx] * c[idx]).sum::<f64>().sqrt()
    }
}

/// Symmetric `d×d` matrix field; entries `(i, j)` with `i ≤ j` stored in
/// the order `xx` (d = 1) or `xx, xy, yy` (d = 2).
#[derive(Debug, Clone, PartialEq)]
pub struct HessianField {
    grid: TorusGrid,
    entries: Vec<Vec<f64>>,
}

impl HessianField {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }
    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let k = match (self.grid.dim, i, j) {
            (_, 0, 0) => 0,
            (2, 0, 1) => 1,
            (2, 1, 1) => 2,
            _ => panic!("entry ({i}, {j}) out of range for d = {}", self.grid.dim),
        };
        &self.entries[k]
    }
    /// Full row-major `d×d` matrix at one cell.
    pub fn matrix_at(&self, idx: usize) -> Vec<f64> {
        match self.grid.dim {
            1 => vec![self.entries[0][idx]],
            _ => {
                let (xx, xy, yy) = (self.entries[0][idx], self.entries[1][idx], self.entries[2][idx]);
                vec![xx, xy, xy, yy]
            }
        }
    }
    pub fn trace(&self) -> ScalarField {
        let values = match self.grid.dim {
            1 => self.entries[0].clone(),
            _ => self.entries[0].iter().zip(&self.entries[2]).map(|(a, b)| a + b).collect(),
        };
        ScalarField::from_raw(self.grid, values)
    }
}

/// Centered differences `(f_{i+1} − f_{i−1})/(2h)` per axis.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = f.grid;
    let inv = 0.5 / g.spacing();
    let v = &f.values;
    let components = (0..g.dim)
        .map(|axis| {
            (0..g.len())
                .map(|i| (v[g.neighbor(i, axis, 1)] - v[g.neighbor(i, axis, -1)]) * inv)
                .collect()
        })
        .collect();
    VectorField { grid: g, components }
}

/// Forward differences `(f_{i+1} − f_i)/h` along one axis.
pub fn forward_difference(f: &ScalarField, axis: usize) -> ScalarField {
    let g = f.grid;
    let inv = 1.0 / g.spacing();
    let v = &f.values;
    let values = (0..g.len()).map(|i| (v[g.neighbor(i, axis, 1)] - v[i]) * inv).collect();
    ScalarField::from_raw(g, values)
}

fn second_difference(f: &ScalarField, axis: usize, i: usize) -> f64 {
    let g = &f.grid;
    let v = &f.values;
    v[g.neighbor(i, axis, 1)] - 2.0 * v[i] + v[g.neighbor(i, axis, -1)]
}

/// 3-point (d = 1) or 5-point (d = 2) Laplacian.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = f.grid;
    let inv = 1.0 / (g.spacing() * g.spacing());
    let values = (0..g.len())
        .map(|i| (0..g.dim).map(|axis| second_difference(f, axis, i)).sum::<f64>() * inv)
        .collect();
    ScalarField::from_raw(g, values)
}

/// Second centered differences on the diagonal and the 4-point mixed
/// stencil off the diagonal. Its trace is exactly [`laplacian`].
pub fn hessian(f: &ScalarField) -> HessianField {
    let g = f.grid;
    let h2 = g.spacing() * g.spacing();
    let diag = |axis: usize| -> Vec<f64> {
        (0..g.len()).map(|i| second_difference(f, axis, i) / h2).collect()
    };
    let entries = match g.dim {
        1 => vec![diag(0)],
        _ => {
            let v = &f.values;
            let mixed = (0..g.len())
                .map(|idx| {
                    let [i, j] = g.unravel(idx);
                    let at = |di: isize, dj: isize| v[g.ravel([g.wrap(i, di), g.wrap(j, dj)])];
                    (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h2)
                })
                .collect();
            vec![diag(0), mixed, diag(1)]
        }
    };
    HessianField { grid: g, entries }
}

/// Midpoint rule `h^d Σ_{mask} |f_i|^p`.
pub fn integrate_lp(f: &ScalarField, p: f64, mask: Option<&[bool]>) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("p must be >= 1, got {p}")));
    }
    if let Some(m) = mask {
        if m.len() != f.values.len() {
            return Err(Error::invalid("mask length differs from the field"));
        }
    }
    let pow = |x: f64| if p == 1.0 { x.abs() } else if p == 2.0 { x * x } else { x.abs().powf(p) };
    let sum: f64 = match mask {
        None => f.values.iter().map(|&x| pow(x)).sum(),
        Some(m) => f.values.iter().zip(m).filter(|(_, &keep)| keep).map(|(&x, _)| pow(x)).sum(),
    };
    Ok(sum * f.grid.cell_volume())
}

/// Periodic lattice shift: `shift(f, k)(x) = f(x + k h)`.
pub fn shift(f: &ScalarField, offset: &[i64]) -> Result<ScalarField> {
    let g = f.grid;
    if offset.len() != g.dim {
        return Err(Error::invalid(format!(
            "offset has {} components for a {}-dimensional grid",
            offset.len(),
            g.dim
        )));
    }
    let n = g.cells as i64;
    let off: Vec<isize> = offset.iter().map(|&k| k.rem_euclid(n) as isize).collect();
    let values = (0..g.len())
        .map(|idx| {
            let mut ij = g.unravel(idx);
            for (axis, &k) in off.iter().enumerate() {
                ij[axis] = g.wrap(ij[axis], k);
            }
            f.values[g.ravel(ij)]
        })
        .collect();
    Ok(ScalarField::from_raw(g, values))
}

/// Physical shift `x ↦ x + s`; `s` must be a lattice vector up to `1e−9 h`.
pub fn shift_by_distance(f: &ScalarField, s: &[f64]) -> Result<ScalarField> {
    let h = f.grid.spacing();
    let mut offset = Vec::with_capacity(s.len());
    for &x in s {
        let k = (x / h).round();
        if (x / h - k).abs() > 1e-9 {
            return Err(Error::domain(format!("shift {x} is not a multiple of h = {h}")));
        }
        offset.push(k as i64);
    }
    shift(f, &offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n, 2.0 * PI).unwrap()
    }

    fn max_err(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
        a.iter().enumerate().map(|(i, x)| (x - b(i)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(3, 16, 1.0).is_err());
        assert!(TorusGrid::new(1, 4, 1.0).is_err());
        assert!(TorusGrid::new(2, 16, -1.0).is_err());
        let g = TorusGrid::new(2, 16, 3.0).unwrap();
        assert_eq!(g.len(), 256);
        assert!((g.spacing() * 16.0 - 3.0).abs() < 1e-15);
        assert_eq!(g.neighbor(g.ravel([0, 5]), 0, -1), g.ravel([15, 5]));
        assert_eq!(g.neighbor(g.ravel([3, 15]), 1, 1), g.ravel([3, 0]));
    }

    #[test]
    fn constants_are_annihilated() {
        for d in [1, 2] {
            let g = TorusGrid::new(d, 16, 1.0).unwrap();
            let c = ScalarField::constant(g, 3.5);
            let gr = gradient(&c);
            assert!((0..d).all(|k| gr.component(k).iter().all(|&x| x == 0.0)));
            assert!(laplacian(&c).values().iter().all(|&x| x == 0.0));
            let h = hessian(&c);
            assert!(h.trace().values().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn sine_gradient_second_order() {
        let err = |n: usize| {
            let g = TorusGrid::new(1, n, 3.0).unwrap();
            let k = 2.0 * PI / 3.0;
            let f = ScalarField::from_fn(g, |x| (k * x[0]).sin());
            let gr = gradient(&f);
            max_err(gr.component(0), |i| k * (k * g.coords(i)[0]).cos())
        };
        let (e1, e2) = (err(128), err(256));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
        assert!(e2 < 1e-3);
    }

    #[test]
    fn laplacian_and_hessian_second_order() {
        let errs = |n: usize| {
            let g = grid1(n);
            let f = ScalarField::from_fn(g, |x| x[0].cos());
            let lap = laplacian(&f);
            let hxx = hessian(&f);
            (
                max_err(lap.values(), |i| -f.values()[i]),
                max_err(hxx.entry(0, 0), |i| -f.values()[i]),
            )
        };
        let (a1, b1) = errs(64);
        let (a2, b2) = errs(128);
        assert!(((a1 / a2).log2() - 2.0).abs() < 0.1);
        assert!(((b1 / b2).log2() - 2.0).abs() < 0.1);
    }

    #[test]
    fn mixed_derivative_second_order() {
        let err = |n: usize| {
            let g = TorusGrid::new(2, n, 2.0 * PI).unwrap();
            let f = ScalarField::from_fn(g, |x| (x[0] + 2.0 * x[1]).sin());
            let h = hessian(&f);
            max_err(h.entry(0, 1), |i| {
                let x = g.coords(i);
                -2.0 * (x[0] + 2.0 * x[1]).sin()
            })
        };
        let order = (err(32) / err(64)).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn laplacian_sums_to_zero() {
        let g = TorusGrid::new(2, 24, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] * 7.0).exp() * (1.0 + x[1]));
        let s: f64 = laplacian(&f).values().iter().sum();
        let scale: f64 = f.values().iter().map(|x| x.abs()).sum::<f64>() / g.spacing().powi(2);
        assert!(s.abs() < 1e-13 * scale, "{s}");
    }

    #[test]
    fn trace_of_hessian_is_laplacian() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] * 3.0).sin() * x[1]);
        assert_eq!(hessian(&f).trace(), laplacian(&f));
        let h = hessian(&f);
        assert_eq!(h.entry(0, 1), h.entry(1, 0));
    }

    #[test]
    fn shift_equivariance() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] * 9.0).sin() + x[1] * x[1]);
        let off = [3, -5];
        let a = gradient(&shift(&f, &off).unwrap());
        let b = gradient(&f);
        for k in 0..2 {
            let sb = shift(&ScalarField::from_raw(g, b.component(k).to_vec()), &off).unwrap();
            assert_eq!(a.component(k), sb.values());
        }
        assert_eq!(laplacian(&shift(&f, &off).unwrap()), shift(&laplacian(&f), &off).unwrap());
        assert_eq!(shift(&f, &[0, 0]).unwrap(), f);
        assert_eq!(shift(&f, &[16, -32]).unwrap(), f);
        let l1 = integrate_lp(&f, 1.0, None).unwrap();
        let l1s = integrate_lp(&shift(&f, &off).unwrap(), 1.0, None).unwrap();
        assert!((l1 - l1s).abs() < 1e-13 * l1);
        assert!(shift(&f, &[1]).is_err());
    }

    #[test]
    fn shift_direction() {
        let g = grid1(8);
        let f = ScalarField::from_fn(g, |x| x[0]);
        let s = shift(&f, &[1]).unwrap();
        assert_eq!(s.values()[0], f.values()[1]);
        let h = g.spacing();
        assert_eq!(shift_by_distance(&f, &[2.0 * h]).unwrap(), shift(&f, &[2]).unwrap());
        assert!(shift_by_distance(&f, &[0.5 * h]).is_err());
    }

    #[test]
    fn integrate_examples() {
        let g = TorusGrid::new(2, 16, 3.0).unwrap();
        let c = ScalarField::constant(g, 2.0);
        assert!((integrate_lp(&c, 3.0, None).unwrap() - 8.0 * 9.0).abs() < 1e-12);
        let none = vec![false; g.len()];
        assert_eq!(integrate_lp(&c, 3.0, Some(&none)).unwrap(), 0.0);
        assert!(integrate_lp(&c, 0.5, None).is_err());

        let f = ScalarField::from_fn(grid1(256), |x| x[0].sin());
        assert!((integrate_lp(&f, 2.0, None).unwrap() - PI).abs() < 1e-6);
    }
}
