use colehopf::burgers::{self, TransformPair};
use colehopf::families::{h_family, HFamily};
use colehopf::grid::Grid1D;
use colehopf::hopf::{apply_transform, DEFAULT_POLE_EPS};
use colehopf::linsolve::{solve_heat, solve_linear_ode2, Boundary, HeatOptions, LinearField};
use colehopf::ode::{self, LinearPotential, OdeProblem};
use colehopf::verify::ode_residual;
use colehopf::{parse, Expr, ParamEnv};
use proptest::prelude::*;

fn env() -> ParamEnv {
    ParamEnv::new().with("a", 0.7)
}

/// Smooth expressions defined on the whole line; divisions are by
/// `2.5 + cos(.)` and exponentials take bounded arguments.
fn smooth() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::x()),
        Just(Expr::param("a")),
        (-12i32..=12).prop_map(|k| Expr::c(f64::from(k) / 4.0)),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (2.5 + b.cos())),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(|a| (0.5 * a.sin()).exp()),
            inner.prop_map(|a| a.powi(2)),
        ]
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

const POINTS: [f64; 5] = [-1.7, -0.4, 0.0, 0.9, 1.6];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn folding_is_idempotent(e in smooth()) {
        let once = e.fold();
        prop_assert_eq!(once.fold(), once);
    }

    #[test]
    fn printed_form_parses_back(e in smooth()) {
        let back = parse(&e.to_string()).unwrap();
        for x in POINTS {
            let (u, v) = (e.eval(x, &env()).unwrap(), back.eval(x, &env()).unwrap());
            prop_assert!(close(u, v, 1e-13), "{} at {}: {} vs {}", e, x, u, v);
        }
    }

    #[test]
    fn simplification_preserves_values(e in smooth()) {
        let s = e.simplify();
        for x in POINTS {
            let (u, v) = (e.eval(x, &env()).unwrap(), s.eval(x, &env()).unwrap());
            prop_assert!(close(u, v, 1e-11), "{} -> {} at {}: {} vs {}", e, s, x, u, v);
        }
    }

    #[test]
    fn derivative_matches_second_order_differences(e in smooth()) {
        let d = e.d();
        let f = |x: f64| e.eval(x, &env()).unwrap();
        for x in POINTS {
            let exact = d.eval(x, &env()).unwrap();
            let err = |h: f64| ((f(x + h) - f(x - h)) / (2.0 * h) - exact).abs();
            let (e1, e2) = (err(1e-3), err(5e-4));
            if e1 < 1e-8 * (1.0 + f(x).abs() + exact.abs()) {
                continue; // at round-off level; no order to observe
            }
            let order = (e1 / e2).log2();
            prop_assert!(order >= 1.9, "{} at {}: order {}", e, x, order);
        }
    }

    #[test]
    fn differentiation_is_linear(f in smooth(), g in smooth(), alpha in -3.0..3.0f64, beta in -3.0..3.0f64) {
        let combined = (alpha * &f + beta * &g).d();
        let (df, dg) = (f.d(), g.d());
        for x in POINTS {
            let lhs = combined.eval(x, &env()).unwrap();
            let rhs = alpha * df.eval(x, &env()).unwrap() + beta * dg.eval(x, &env()).unwrap();
            prop_assert!(close(lhs, rhs, 1e-12), "{} vs {}", lhs, rhs);
        }
    }
}

fn positive_field(grid: Grid1D, k: f64, c: f64) -> LinearField {
    let xs = grid.points();
    let phi = xs.iter().map(|&x| 1.2 + 0.5 * (k * x + c).sin()).collect();
    let dphi = xs.iter().map(|&x| 0.5 * k * (k * x + c).cos()).collect();
    LinearField::new(grid, None, phi, dphi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_is_invariant_under_rescaling_phi(
        p in smooth(), q in smooth(), k in 0.5..6.0f64, c in -3.0..3.0f64,
        scale in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64],
    ) {
        let grid = Grid1D::new(-1.0, 1.0, 41).unwrap();
        let field = positive_field(grid, k, c);
        let scaled = LinearField::new(
            grid,
            None,
            field.phi.iter().map(|v| v * scale).collect(),
            field.dphi.iter().map(|v| v * scale).collect(),
        ).unwrap();
        let pair = TransformPair { p, q };
        let a = apply_transform(&pair, &field, &env(), DEFAULT_POLE_EPS).unwrap();
        let b = apply_transform(&pair, &scaled, &env(), DEFAULT_POLE_EPS).unwrap();
        prop_assert_eq!(a.masked_fraction(), 0.0);
        prop_assert_eq!(&a.mask, &b.mask);
        for (u, v) in a.psi.iter().zip(&b.psi) {
            prop_assert!(close(*u, *v, 1e-12), "{} vs {}", u, v);
        }
    }

    #[test]
    fn residual_stencil_is_local(
        values in proptest::collection::vec(-2.0..2.0f64, 31),
        j in 0usize..31,
        bump in 0.1..1.0f64,
        v in -2.0..2.0f64, w in -2.0..2.0f64,
    ) {
        let grid = Grid1D::new(0.0, 3.0, 31).unwrap();
        let problem = OdeProblem::new(Expr::one(), Expr::c(w), Expr::c(v), Expr::zero(), ParamEnv::new(), (0.0, 3.0));
        let field = colehopf::hopf::TransformedField::from_samples(grid, None, values.clone()).unwrap();
        let mut moved = values;
        moved[j] += bump;
        let perturbed = colehopf::hopf::TransformedField::from_samples(grid, None, moved).unwrap();
        let r0 = ode_residual(&problem, &field, 1e-6).unwrap();
        let r1 = ode_residual(&problem, &perturbed, 1e-6).unwrap();
        for ((x, a), b) in r0.samples.x.iter().zip(&r0.samples.r).zip(&r1.samples.r) {
            let i = (x / grid.dx()).round() as usize;
            if i.abs_diff(j) > 1 {
                prop_assert_eq!(a, b);
            } else {
                prop_assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn scaling_h_rescales_the_pair(
        m_shift in 1.0..3.0f64, m_arg in smooth(), h_arg in smooth(),
        lambda in prop_oneof![-3.0..-0.2f64, 0.2..3.0f64],
    ) {
        let m = m_shift + 0.5 * m_arg.sin();
        let h = 1.5 + h_arg.cos();
        let hl = lambda * &h;
        let xs = burgers::linspace(-1.0, 1.0, 21);
        let base = burgers::derive_transform(&m, &h, &env(), &xs).unwrap();
        let scaled = burgers::derive_transform(&m, &hl, &env(), &xs).unwrap();
        let cb = burgers::derive_coefficients(&m, &h, &env(), &xs).unwrap();
        let cs = burgers::derive_coefficients(&m, &hl, &env(), &xs).unwrap();
        for &x in &xs {
            let at = |e: &Expr| e.eval(x, &env()).unwrap();
            prop_assert!(close(at(&scaled.q), at(&base.q) / lambda, 1e-12));
            prop_assert!(close(at(&scaled.p), at(&base.p) / lambda, 1e-12));
            prop_assert!(close(at(&cs.w), lambda * at(&cb.w), 1e-12));
            prop_assert!(close(at(&cs.v), at(&cb.v), 1e-12));
        }
    }
}

fn family_params() -> impl Strategy<Value = (HFamily, ParamEnv)> {
    let sign = prop_oneof![Just(-1.0), Just(1.0)];
    prop_oneof![
        (-1.0..1.0f64, 1.5..3.0f64)
            .prop_map(|(a, b)| (HFamily::ReciprocalLinear, ParamEnv::new().with("a", a).with("b", b))),
        (0.5..2.0f64, sign.clone(), -1.0..1.0f64, -0.4..0.4f64).prop_map(|(b, s, omega, beta)| {
            (
                HFamily::Secant,
                ParamEnv::new().with("B", s * b).with("omega", omega).with("beta", beta),
            )
        }),
        (0.5..2.0f64, sign, -2.0..2.0f64).prop_map(|(c, s, alpha)| (
            HFamily::Exponential,
            ParamEnv::new().with("C", s * c).with("alpha", alpha)
        )),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn family_members_satisfy_both_identities((family, params) in family_params(), a in 0.1..3.0f64) {
        let h = h_family(family, &params).unwrap();
        let xs = burgers::linspace(0.0, 1.0, 100);
        let hode = burgers::h_ode_residual(&h, &params, &xs, burgers::TOL_SYM).unwrap();
        prop_assert!(hode.holds, "{:?} {:?}: {}", family, params, hode.relative);
        let c = burgers::constraint_residual(&Expr::c(a), &h, &params, &xs, burgers::TOL_SYM).unwrap();
        prop_assert!(c.holds, "{:?} {:?}: {}", family, params, c.relative);
    }

    #[test]
    fn perturbed_members_break_the_h_ode(c in 0.5..2.0f64, alpha in 0.5..2.0f64, eps in 1e-3..1e-1f64) {
        let h = parse(&format!("{c:?}*exp({alpha:?}*x) + {eps:?}*x")).unwrap();
        let xs = burgers::linspace(0.0, 1.0, 100);
        let r = burgers::h_ode_residual(&h, &ParamEnv::new(), &xs, burgers::TOL_SYM).unwrap();
        prop_assert!(!r.holds);
        prop_assert!(r.relative > 1e-6, "{}", r.relative);
    }

    #[test]
    fn synthesized_equations_derive_back(
        u0 in 0.5..2.0f64, u1 in -1.0..1.0f64, k in 0.5..3.0f64,
        p0 in -2.0..2.0f64, p1 in -1.0..1.0f64,
        q0 in 1.0..3.0f64, q1 in -0.3..0.3f64,
    ) {
        let u = parse(&format!("{u0:?} + {u1:?}*exp(-{k:?}*x)")).unwrap();
        let p = parse(&format!("{p0:?} + {p1:?}*x")).unwrap();
        let q = parse(&format!("-({q0:?} + {q1:?}*sin(x))")).unwrap();
        let env = ParamEnv::new();
        let xs = burgers::linspace(0.0, 3.0, 61);
        let problem = ode::reverse_synthesize(&u, &p, &q, &env, (0.0, 3.0), &xs).unwrap();
        let back = ode::forward_derive(&problem, &xs, ode::TOL_CONSTRAINT).unwrap();
        prop_assert!(back.constraint.holds, "{}", back.constraint.relative);
        for &x in &xs {
            let at = |e: &Expr| e.eval(x, &env).unwrap();
            prop_assert!(close(at(&back.pair.q), at(&q), 1e-10));
            prop_assert!(close(at(&back.pair.p), at(&p), 1e-10));
        }
        let resid = back.u_ode.residual(&u, &env, &xs, 1e-8).unwrap();
        prop_assert!(resid.holds, "{}", resid.relative);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn wronskian_is_conserved(c0 in 0.5..2.0f64, c1 in -0.4..1.0f64, k in 0.5..3.0f64) {
        let u = parse(&format!("{c0:?} + {c1:?}*exp(-{k:?}*x)")).unwrap();
        let potential = LinearPotential::closed(u, ParamEnv::new());
        let grid = Grid1D::new(0.0, 3.0, 301).unwrap();
        let a = solve_linear_ode2(&potential, 0.0, 1.0, 0.0, grid).unwrap();
        let b = solve_linear_ode2(&potential, 0.0, 0.0, 1.0, grid).unwrap();
        for i in 0..grid.len() {
            let w = a.phi[i] * b.dphi[i] - b.phi[i] * a.dphi[i];
            prop_assert!((w - 1.0).abs() <= 1e-8, "W({}) = {}", grid.x(i), w);
        }
    }

    #[test]
    fn implicit_steps_obey_the_maximum_principle(
        m0 in 0.1..1.0f64, m1 in 0.0..1.0f64, amp in 0.1..2.0f64, k in 1.0..8.0f64,
        t_end in 0.001..0.1f64, nt in 5usize..60,
    ) {
        let m = parse(&format!("{m0:?} + {m1:?}*x")).unwrap();
        let phi0 = parse(&format!("1 + {amp:?}*sin({k:?}*x)*x")).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 41).unwrap();
        let opts = HeatOptions { theta: 1.0, save_every: 1 };
        let field = solve_heat(&m, &phi0, &ParamEnv::new(), grid, &Boundary::HoldInitial, t_end, nt, opts).unwrap();
        let first = field.phi_level(0);
        let lo = first.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = first.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in &field.phi {
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12, "{} outside [{}, {}]", v, lo, hi);
        }
    }
}

/// Max error against `exp(-pi^2 t) sin(pi x)` with implicit steps and
/// `dt = dx^2 / 2`.
fn heat_error(n: usize) -> f64 {
    let grid = Grid1D::new(0.0, 1.0, n).unwrap();
    let intervals = n - 1;
    let nt = intervals * intervals / 16;
    let t_end = nt as f64 / (2.0 * (intervals * intervals) as f64);
    let phi0 = parse("sin(pi*x)").unwrap();
    let env = ParamEnv::new().with("pi", std::f64::consts::PI);
    let opts = HeatOptions {
        theta: 1.0,
        save_every: nt,
    };
    let field = solve_heat(&Expr::one(), &phi0, &env, grid, &Boundary::HoldInitial, t_end, nt, opts).unwrap();
    let last = field.phi_level(field.levels() - 1);
    let decay = (-std::f64::consts::PI.powi(2) * t_end).exp();
    grid.points()
        .iter()
        .zip(last)
        .map(|(&x, v)| (v - decay * (std::f64::consts::PI * x).sin()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn heat_solver_is_second_order_in_space() {
    let (coarse, fine) = (heat_error(65), heat_error(129));
    let order = (coarse / fine).log2();
    assert!(order >= 1.9, "errors {coarse:e} {fine:e}, order {order}");
}
