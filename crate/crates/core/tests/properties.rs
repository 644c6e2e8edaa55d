use std::f64::consts::PI;

use pmcontract_core::admissible::{classify, p_bounds, ExponentPair, RegionClass, DEFAULT_BOUNDARY_TOL};
use pmcontract_core::functionals::{
    contraction_balance, gradient_balance, max_positive_jump, psi_delta, psi_zero,
};
use pmcontract_core::grid::{self, ScalarField, TorusGrid};
use pmcontract_core::quadforms::Forms;
use pmcontract_core::solver::{evolve_pair, SolverConfig};
use pmcontract_core::DiffusionParams;
use proptest::prelude::*;

/// `(n, α, p)` strictly inside `K_|n|`, away from the bounding curves.
fn in_k() -> impl Strategy<Value = (f64, f64, f64)> {
    (-0.95f64..0.95, 0.0f64..1.0, 0.02f64..0.98).prop_filter_map("degenerate", |(n, s, t)| {
        if n.abs() < 0.01 {
            return None;
        }
        let alpha = n.abs() + (1.0 - n.abs()) * s;
        if alpha >= 0.999 || alpha - n.abs() < 1e-3 {
            return None;
        }
        let (lo, hi) = p_bounds(n, alpha).ok()?;
        let p = lo + (hi.min(lo + 20.0) - lo) * t;
        Some((n, alpha, p))
    })
}

fn torus(cells: usize) -> TorusGrid {
    TorusGrid::new(1, cells, 2.0 * PI).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn interior_points_classify_interior((n, alpha, p) in in_k()) {
        let c = classify(n, ExponentPair::new(alpha, p).unwrap(), DEFAULT_BOUNDARY_TOL).unwrap();
        prop_assert_eq!(c, RegionClass::Interior);
        prop_assert!(Forms::from_values(n, alpha, p).unwrap().m_matrix().min_eigenvalue() > 0.0);
    }

    #[test]
    fn classification_depends_on_abs_n((n, alpha, p) in in_k()) {
        let pair = ExponentPair::new(alpha, p).unwrap();
        prop_assert_eq!(
            classify(n, pair, DEFAULT_BOUNDARY_TOL).unwrap(),
            classify(-n, pair, DEFAULT_BOUNDARY_TOL).unwrap()
        );
    }

    #[test]
    fn integrands_nonnegative_in_k(
        (n, alpha, p) in in_k(),
        u in 0.05f64..3.0,
        ratio in 1.0001f64..20.0,
        g in prop::array::uniform4(-2.0f64..2.0),
        h in prop::array::uniform3(-2.0f64..2.0),
    ) {
        let f = Forms::from_values(n, alpha, p).unwrap();
        let v = u * ratio;
        let e = f.dissipation_e(v, u, &g[..2], &g[2..]).unwrap();
        prop_assert!(e >= -1e-10 * (1.0 + e.abs()), "e = {}", e);
        prop_assert!((e - f.e_form(u, v, &g[2..], &g[..2])).abs() <= 1e-10 * (1.0 + e.abs()));
        if g[0] != 0.0 || g[1] != 0.0 {
            let a = [h[0], h[1], h[1], h[2]];
            let eb = f.dissipation_ebar(u, &g[..2], &a).unwrap();
            prop_assert!(eb >= -1e-10 * (1.0 + eb.abs()), "ebar = {}", eb);
        }
        let w = g[3];
        if w != 0.0 {
            let ebb = f.dissipation_ebarbar(u, w, &g[..2], &h[..2]).unwrap();
            prop_assert!(ebb >= -1e-10 * (1.0 + ebb.abs()), "ebarbar = {}", ebb);
        }
    }

    #[test]
    fn psi_family_converges_uniformly(delta in 1e-4f64..0.5, p in 1.01f64..6.0, w_max in 0.5f64..4.0) {
        let bound = delta.powf(p - 1.0) * w_max + delta.powf(p) * (1.0 - 1.0 / p);
        for i in 0..=200 {
            let w = w_max * i as f64 / 200.0;
            prop_assert!((psi_delta(delta, p, w) - psi_zero(p, w)).abs() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn shift_is_an_isometry(k in -40i64..40, p in 1.0f64..5.0) {
        let f = ScalarField::from_fn(torus(32), |x| 1.0 + (3.0 * x[0]).sin() * 0.4 + x[0].cos() * 0.1);
        let s = grid::shift(&f, &[k]).unwrap();
        let a = grid::integrate_lp(&f, p, None).unwrap();
        let b = grid::integrate_lp(&s, p, None).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Mass, positivity, the maximum principle, order preservation and the
    /// Lyapunov monotonicity of all three functionals on random data.
    #[test]
    fn solver_runs_respect_invariants(
        n in prop::sample::select(vec![-0.5, 0.0, 0.5]),
        amps in prop::array::uniform4(-0.4f64..0.4),
        lift in 0.0f64..0.5,
        k in 0usize..5,
    ) {
        let g = torus(64);
        let u0 = ScalarField::from_fn(g, |x| 1.0 + amps[0] * x[0].cos() + amps[1] * (2.0 * x[0]).sin());
        let v0 = ScalarField::from_fn(g, |x| 1.0 + lift + amps[2] * (x[0] + 0.5).cos() + amps[3] * (3.0 * x[0]).cos());
        let params = DiffusionParams::from_n(n, 1).unwrap();
        let (tu, tv) = evolve_pair(&u0, &v0, &SolverConfig::new(params, 0.3, 0.03)).unwrap();
        let (m0, top) = (tu.fields[0].mass(), tu.fields[0].max());
        for (a, b) in tu.fields.iter().zip(&tv.fields) {
            prop_assert!((a.mass() - m0).abs() <= 1e-10 * m0);
            prop_assert!(a.min() > 0.0 && a.max() <= top + 1e-12);
            prop_assert!(b.min() > 0.0);
        }

        let pairs = pmcontract_core::harness::sample_in_k(n, 5, 5.0, 17).unwrap();
        let (alpha, p) = pairs[k];
        let (pu, pv) = (tu.to_power(alpha).unwrap(), tv.to_power(alpha).unwrap());
        let rows = contraction_balance(&pu, &pv, n, alpha, p).unwrap();
        if rows[0].lyapunov > 0.0 {
            prop_assert!(max_positive_jump(&rows) <= 1e-8 * rows[0].lyapunov);
        }
        prop_assert!(rows.iter().all(|r| r.dissipation >= -1e-10));
        if p >= 2.0 {
            let rows = gradient_balance(&pu, n, alpha, p).unwrap();
            prop_assert!(max_positive_jump(&rows) <= 1e-8 * rows[0].lyapunov);
            prop_assert!(rows.iter().all(|r| r.dissipation >= -1e-10));
        }
    }
}

#[test]
fn ordered_data_stay_ordered() {
    let g = torus(128);
    let u0 = ScalarField::from_fn(g, |x| 0.6 + 0.3 * x[0].sin());
    let v0 = ScalarField::from_fn(g, |x| 0.6 + 0.3 * x[0].sin() + 0.2 * (-(x[0] - 2.0).powi(2)).exp());
    for n in [-0.5, 0.5] {
        let params = DiffusionParams::from_n(n, 1).unwrap();
        let (tu, tv) = evolve_pair(&u0, &v0, &SolverConfig::new(params, 0.5, 0.05)).unwrap();
        for (a, b) in tu.fields.iter().zip(&tv.fields) {
            assert!(a.values().iter().zip(b.values()).all(|(x, y)| *x <= y + 1e-10));
        }
    }
}
