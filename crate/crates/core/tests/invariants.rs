use proptest::prelude::*;
use semiclassical::bounds::{
    ehrenfest_time, gamma_by_recursion, remainder_bound, remainder_bound_with_volume, strip_schedule, term_bound,
    BoundContext,
};
use semiclassical::expansion::simplex_volume;
use semiclassical::phase_space::{AnalyticSymbol, Symbol};
use semiclassical::quantum::{weyl_quantize, PositionGrid};

fn context(alpha: f64, b_bar: f64, order: usize) -> BoundContext {
    BoundContext::new(1, alpha, 0.5, 0.5, b_bar, order).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounds_grow_with_time(alpha in 0.01f64..3.0, order in 1usize..6, t in 0.01f64..3.0, dt in 0.01f64..2.0) {
        let ctx = context(alpha, 1.0, order);
        let a = remainder_bound(&ctx, order, t).unwrap().ln;
        let b = remainder_bound(&ctx, order, t + dt).unwrap().ln;
        prop_assert!(b > a);
        let ta = term_bound(&ctx, order, t).unwrap().ln;
        let tb = term_bound(&ctx, order, t + dt).unwrap().ln;
        prop_assert!(tb > ta);
    }

    #[test]
    fn bounds_scale_linearly_with_observable_norm(alpha in 0.01f64..3.0, order in 1usize..6, t in 0.01f64..3.0, k in 1.01f64..50.0) {
        let a = remainder_bound(&context(alpha, 1.0, order), order, t).unwrap().ln;
        let b = remainder_bound(&context(alpha, k, order), order, t).unwrap().ln;
        prop_assert!((b - a - k.ln()).abs() < 1e-9);
    }

    #[test]
    fn ehrenfest_time_doubles_when_hbar_is_squared(hbar in 1e-6f64..0.9, order in 2usize..10, alpha in 0.01f64..5.0) {
        let t1 = ehrenfest_time(hbar, order, alpha).unwrap().value();
        let t2 = ehrenfest_time(hbar * hbar, order, alpha).unwrap().value();
        prop_assert!((t2 / t1 - 2.0).abs() < 1e-12);
        let half = ehrenfest_time(hbar, order, 2.0 * alpha).unwrap().value();
        prop_assert!((t1 / half - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_closed_form_matches_recursion(alpha in 0.0f64..3.0, t in 0.0f64..3.0, order in 1usize..7, b_bar in 0.1f64..10.0) {
        let ctx = context(alpha, b_bar, order);
        let closed = strip_schedule(&ctx, order, t).unwrap().gamma;
        let rec = gamma_by_recursion(&ctx, order, t).unwrap();
        for (c, r) in closed.iter().zip(&rec) {
            prop_assert!((c.ln - r.ln).abs() <= 1e-10 * r.ln.abs().max(1.0));
        }
    }

    #[test]
    fn remainder_bound_uses_simplex_volume(alpha in 0.01f64..3.0, order in 1usize..6, t in 0.05f64..3.0) {
        let ctx = context(alpha, 1.0, order);
        let direct = remainder_bound(&ctx, order, t).unwrap().ln;
        let via = remainder_bound_with_volume(&ctx, order, t, simplex_volume(order, t).unwrap().ln()).unwrap().ln;
        prop_assert!((direct - via).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    // Symbols decay to round-off on the box edge.
    fn quantization_is_linear_and_hermitian(
        c1 in -1.0f64..1.0, c2 in -1.0f64..1.0,
        a in -2.0f64..2.0, b in -2.0f64..2.0,
        w1 in 0.4f64..0.9, w2 in 0.4f64..0.9,
    ) {
        let qg = PositionGrid::new(8.0, 256, 0.2).unwrap();
        let pg = qg.phase_grid();
        let f = AnalyticSymbol::gaussian([c1, c2], [w1, w2]).to_symbol(pg, 0.2).unwrap();
        let g = AnalyticSymbol::gaussian([c2, -c1], [w2, w1]).to_symbol(pg, 0.2).unwrap();
        let lhs = weyl_quantize(&f.combine(a, &g, b).unwrap(), &qg).unwrap();
        let rhs = weyl_quantize(&f, &qg).unwrap().combine(a, &weyl_quantize(&g, &qg).unwrap(), b).unwrap();
        let diff = (lhs.matrix() - rhs.matrix()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
        prop_assert!(lhs.is_hermitian());
        prop_assert!(lhs.hermitian_defect() < 1e-12);
        // An imaginary symbol gives an anti-Hermitian operator.
        let skew: Symbol = f.map(|v| v * num_complex::Complex64::new(0.0, 1.0));
        let op = weyl_quantize(&skew, &qg).unwrap();
        prop_assert!(!op.is_hermitian());
        let anti = (op.matrix() + op.matrix().adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(anti < 1e-12);
    }
}
