//! Randomized checks of structural invariants.

use honeycomb_dirac::dirac2d::{DiracSolver, DiracSymbol, SpectralOps, SpinorField};
use honeycomb_dirac::effcoef::EffectiveCoefficients;
use honeycomb_dirac::lattice::{
    build_lattice, invert_dual_index, rotate_dual_index, Anchor, LatticeGeometry,
};
use honeycomb_dirac::potential::standard_honeycomb_potential;
use honeycomb_dirac::scalar::C;
use honeycomb_dirac::spectral::Grid2;
use proptest::prelude::*;

const N: usize = 8;

fn anchor() -> impl Strategy<Value = Anchor> {
    prop_oneof![Just(Anchor::K), Just(Anchor::KPrime), Just(Anchor::Gamma)]
}

fn field() -> impl Strategy<Value = SpinorField<f64>> {
    proptest::collection::vec(-1.0f64..1.0, 4 * N * N).prop_map(|v| {
        let g = Grid2::new(4.0, 5.0, N, N).unwrap();
        let mut f = SpinorField::zeros(g);
        for i in 0..N * N {
            f.a1[i] = C::new(v[4 * i], v[4 * i + 1]);
            f.a2[i] = C::new(v[4 * i + 2], v[4 * i + 3]);
        }
        f
    })
}

fn solver(kappa: f64) -> DiracSolver<f64> {
    let sym = DiracSymbol::new(C::new(-3.6, -2.1), kappa, EffectiveCoefficients::from_b(1.7, 0.66));
    DiracSolver::new(sym, Grid2::new(4.0, 5.0, N, N).unwrap())
}

fn roll(f: &SpinorField<f64>, s1: usize, s2: usize) -> SpinorField<f64> {
    let mut out = f.clone();
    for i1 in 0..N {
        for i2 in 0..N {
            let dst = ((i1 + s1) % N) * N + (i2 + s2) % N;
            out.a1[dst] = f.a1[i1 * N + i2];
            out.a2[dst] = f.a2[i1 * N + i2];
        }
    }
    out
}

fn geom() -> LatticeGeometry<f64> {
    build_lattice(1.0).unwrap()
}

proptest! {
    #[test]
    fn index_rotation_has_order_three(a in -50i64..50, b in -50i64..50, an in anchor()) {
        let r = |m| rotate_dual_index(m, an);
        prop_assert_eq!(r(r(r((a, b)))), (a, b));
        prop_assert_eq!(invert_dual_index(invert_dual_index((a, b))), (a, b));
    }

    #[test]
    fn index_rotation_preserves_anchored_length(a in -30i64..30, b in -30i64..30, an in anchor()) {
        let g = geom();
        let m = (a, b);
        let n0 = g.anchored_norm_sqr(m, an);
        let n1 = g.anchored_norm_sqr(rotate_dual_index(m, an), an);
        prop_assert!((n0 - n1).abs() <= 1e-12 * (1.0 + n0));
    }

    #[test]
    fn potential_is_real_even_rotation_invariant_and_periodic(x in -3.0f64..3.0, y in -3.0f64..3.0, i in -2i32..3, j in -2i32..3) {
        let g = geom();
        let v = standard_honeycomb_potential(&g, 1.0);
        let p = [x, y];
        let v0 = v.value_at(p);
        prop_assert!(v0.im.abs() < 1e-12);
        prop_assert!((v.value_at([-x, -y]) - v0).norm() < 1e-12);
        prop_assert!((v.value_at(g.rotate(p)) - v0).norm() < 1e-12);
        let shift = [x + i as f64 * g.v1[0] + j as f64 * g.v2[0], y + i as f64 * g.v1[1] + j as f64 * g.v2[1]];
        prop_assert!((v.value_at(shift) - v0).norm() < 1e-11);
    }

    #[test]
    fn propagator_is_unitary(xi1 in -20.0f64..20.0, xi2 in -20.0f64..20.0, dt in -1.0f64..1.0) {
        let u = solver(1.0).sym.propagator(xi1, xi2, dt);
        for r in 0..2 {
            for c in 0..2 {
                let d = u[r][0] * u[c][0].conj() + u[r][1] * u[c][1].conj();
                let want = if r == c { 1.0 } else { 0.0 };
                prop_assert!((d - C::new(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn linear_step_conserves_mass(f in field(), dt in -0.5f64..0.5) {
        let mut g = f.clone();
        solver(0.0).linear_step(&mut g, dt);
        prop_assert!((g.mass() - f.mass()).abs() <= 1e-12 * f.mass());
    }

    #[test]
    fn nonlinear_step_conserves_pointwise_moduli(f in field(), dt in -0.5f64..0.5, kappa in -2.0f64..2.0) {
        let mut g = f.clone();
        solver(kappa).nonlinear_step(&mut g, dt);
        for i in 0..N * N {
            prop_assert!((g.a1[i].norm() - f.a1[i].norm()).abs() < 1e-13);
            prop_assert!((g.a2[i].norm() - f.a2[i].norm()).abs() < 1e-13);
        }
    }

    #[test]
    fn flow_commutes_with_grid_translations(f in field(), s1 in 0usize..N, s2 in 0usize..N, kappa in -2.0f64..2.0) {
        let sv = solver(kappa);
        let mut a = roll(&f, s1, s2);
        let mut b = f.clone();
        for _ in 0..3 {
            sv.strang_step(&mut a, 0.05);
            sv.strang_step(&mut b, 0.05);
        }
        prop_assert!(a.max_diff(&roll(&b, s1, s2)) < 1e-12);
    }

    #[test]
    fn flow_commutes_with_global_phase(f in field(), th in 0.0f64..6.3, kappa in -2.0f64..2.0) {
        let sv = solver(kappa);
        let z = C::from_polar(1.0, th);
        let rot = |f: &SpinorField<f64>| {
            let mut g = f.clone();
            g.a1.iter_mut().chain(g.a2.iter_mut()).for_each(|x| *x *= z);
            g
        };
        let mut a = rot(&f);
        let mut b = f.clone();
        sv.strang_step(&mut a, 0.07);
        sv.strang_step(&mut b, 0.07);
        prop_assert!(a.max_diff(&rot(&b)) < 1e-12);
    }

    #[test]
    fn sobolev_norm_grows_with_order(f in field(), eps in 0.01f64..1.0) {
        let ops = SpectralOps::new(f.grid);
        let norms: Vec<f64> = (0..4).map(|s| ops.scaled_sobolev_norm(&f.a1, s, eps)).collect();
        prop_assert!(norms.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-14)));
        let l2 = f.grid.l2_norm_sqr(&f.a1).sqrt();
        prop_assert!((norms[0] - l2).abs() <= 1e-12 * l2);
    }
}
