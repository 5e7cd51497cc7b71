//! Structural identities of the flow and the transforms, as properties.

use alpha_root::branch::riccati_v_integral_real;
use alpha_root::*;
use nalgebra::Matrix4;
use num_complex::Complex64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.0f64..3.0, 0.3f64..3.0, 1.05f64..1.95)
        .prop_map(|(a, b, alpha)| ModelParams::alpha_root(a, b, alpha).unwrap())
}

fn q() -> QuadratureConfig {
    QuadratureConfig::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ode_residual(p in params(), t in 0.1f64..3.0, l in 0.1f64..10.0) {
        let h = 1e-5;
        let v = riccati_v(t, l.into(), &p).unwrap().re;
        let dv = (riccati_v(t + h, l.into(), &p).unwrap().re
            - riccati_v(t - h, l.into(), &p).unwrap().re) / (2.0 * h);
        let r = dv + p.b * v + v.powf(p.alpha) / p.alpha;
        prop_assert!(r.abs() < 1e-6 * (1.0 + v.abs()), "{}", r);
    }

    #[test]
    fn flow_property(p in params(), t in 0.0f64..3.0, s in 0.0f64..3.0, l in 0.01f64..100.0) {
        let lhs = riccati_v(t + s, l.into(), &p).unwrap();
        let rhs = riccati_v(t, riccati_v(s, l.into(), &p).unwrap(), &p).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
    }

    #[test]
    fn conjugate_symmetry(p in params(), t in 0.0f64..3.0, r in 0.01f64..100.0, phi in -3.0f64..3.0) {
        let z = Complex64::from_polar(r, phi);
        let a = riccati_v(t, z.conj(), &p).unwrap();
        let b = riccati_v(t, z, &p).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-13 * b.norm().max(1e-300));
        let w = principal_pow(z, 1.0 - p.alpha);
        prop_assert!((principal_pow(z.conj(), 1.0 - p.alpha) - w.conj()).norm() <= 1e-14 * w.norm());
        prop_assert_eq!(principal_pow(z, 0.0), Complex64::new(1.0, 0.0));
        let arg = principal_arg(z);
        prop_assert!(arg > -std::f64::consts::PI && arg <= std::f64::consts::PI);
    }

    #[test]
    fn monotone_towards_d(p in params(), t in 0.2f64..3.0, l in 0.1f64..1e3) {
        let d = limit_d(t, &p).unwrap();
        let v1 = riccati_v(t, l.into(), &p).unwrap().re;
        let v2 = riccati_v(t, (2.0 * l).into(), &p).unwrap().re;
        prop_assert!(v1 < v2 && v2 < d);
    }

    #[test]
    fn integral_additivity(p in params(), t in 0.05f64..2.0, s in 0.05f64..2.0, l in 0.1f64..10.0) {
        let whole = riccati_v_integral_real(t + s, l, &p, &q()).unwrap();
        let vs = riccati_v(s, l.into(), &p).unwrap().re;
        let parts = riccati_v_integral_real(s, l, &p, &q()).unwrap()
            + riccati_v_integral_real(t, vs, &p, &q()).unwrap();
        prop_assert!((whole - parts).abs() < 1e-8 * whole.max(1.0));
    }

    #[test]
    fn chapman_kolmogorov(p in params(), t in 0.05f64..2.0, s in 0.05f64..2.0, y in 0.0f64..5.0, l in 0.1f64..10.0) {
        // E e^{-l Y_{t+s}} = E exp(-v_s(l) Y_t) exp(-a int_0^s v_u(l) du)
        let lhs = laplace_y(t + s, y, l, &p, &q()).unwrap();
        let vs = riccati_v(s, l.into(), &p).unwrap().re;
        let rhs = laplace_y(t, y, vs, &p, &q()).unwrap()
            * (-p.a * riccati_v_integral_real(s, l, &p, &q()).unwrap()).exp();
        prop_assert!((lhs - rhs).abs() < 1e-8 * lhs);
    }

    #[test]
    fn immigration_decomposition(p in params(), t in 0.05f64..3.0, y in 0.0f64..5.0, l in 0.0f64..10.0) {
        // Y^y = Y^0 + independent a = 0 process started at y
        let p0 = ModelParams { a: 0.0, ..p };
        let lhs = laplace_y(t, y, l, &p, &q()).unwrap();
        let rhs = laplace_y(t, 0.0, l, &p, &q()).unwrap() * laplace_y(t, y, l, &p0, &q()).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn log_convex_in_lambda(p in params(), t in 0.1f64..3.0, y in 0.0f64..3.0, l in 0.05f64..10.0, frac in 0.01f64..0.5) {
        prop_assume!(p.a > 0.0 || y > 0.0);
        let h = l * frac;
        let f = |x: f64| laplace_y(t, y, x, &p, &q()).unwrap().ln();
        let c = f(l + h) - 2.0 * f(l) + f(l - h);
        prop_assert!(c >= -1e-10, "{}", c);
    }

    #[test]
    fn characteristic_function_is_positive_definite(
        p in params(), t in 0.2f64..2.0, y in 0.0f64..3.0,
        xs in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let mut g = Matrix4::<Complex64>::zeros();
        for j in 0..4 {
            for k in 0..4 {
                g[(j, k)] = charfn_y(t, y, xs[j] - xs[k], &p, &q()).unwrap();
            }
        }
        let ev = g.symmetric_eigenvalues();
        prop_assert!(ev.iter().all(|&e| e >= -1e-10), "{:?}", ev);
    }
}

#[test]
fn quadrature_refines_within_its_error_estimate() {
    let p = ModelParams::alpha_root(1.0, 1.0, 1.5).unwrap();
    for l in [0.3, 3.0, 30.0] {
        for tol in [1e-6, 1e-9] {
            let coarse = QuadratureConfig::default().with_abs_tol(tol);
            let fine = QuadratureConfig::default().with_abs_tol(tol / 2.0);
            let e = alpha_root::branch::riccati_v_integral_real_estimate(1.0, l, &p, &coarse).unwrap();
            let f = riccati_v_integral_real(1.0, l, &p, &fine).unwrap();
            assert!((e.value - f).abs() <= e.error.max(1e-15 * f), "{l} {tol}");
        }
    }
}
