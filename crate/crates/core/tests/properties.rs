mod common;

use common::*;
use commutclass::expr::{BinOp, Const, Func, Var};
use commutclass::krein::basis;
use commutclass::time_reversal::{apply_t, ConcreteVector};
use commutclass::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c(re, im))
}

fn operator(n: usize) -> impl Strategy<Value = GamowOperator> {
    prop::collection::vec(complex(), 4 * n * n).prop_map(move |cs| {
        let b = basis(n);
        let pairs = b.iter().flat_map(|&k| b.iter().map(move |&br| (k, br)));
        GamowOperator::from_entries(n, pairs.zip(cs)).unwrap()
    })
}

fn vector(n: usize) -> impl Strategy<Value = FormalVector> {
    prop::collection::vec(complex(), 2 * n)
        .prop_map(move |cs| FormalVector::from_coeffs(n, basis(n).into_iter().zip(cs)).unwrap())
}

fn resonances(n: usize) -> impl Strategy<Value = Vec<Resonance>> {
    prop::collection::vec((-3.0..3.0f64, 0.1..2.0f64), n).prop_map(|v| {
        v.into_iter()
            .map(|(e, g)| Resonance::new(e, g).unwrap())
            .collect()
    })
}

fn kernel(m: usize) -> impl Strategy<Value = OperatorKernel> {
    (
        prop::collection::vec(complex(), m),
        prop::collection::vec(complex(), m * m),
    )
        .prop_map(move |(d, k)| {
            let grid = make_grid(4.0, m).unwrap();
            OperatorKernel::new(
                grid,
                AlgebraTag::Free,
                DVector::from_vec(d),
                DMatrix::from_vec(m, m, k),
            )
            .unwrap()
        })
}

fn families() -> impl Strategy<Value = EvolutionFamily> {
    prop_oneof![
        Just(EvolutionFamily::Decaying),
        Just(EvolutionFamily::Growing),
        Just(EvolutionFamily::Full),
        Just(EvolutionFamily::Asymmetric),
    ]
}

fn expr_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..4000).prop_map(|k| Expr::Real(k as f64 / 16.0)),
        (1u32..400).prop_map(|k| Expr::Imag(k as f64 / 8.0)),
        Just(Expr::Const(Const::Pi)),
        Just(Expr::Const(Const::I)),
        Just(Expr::Var(Var::E)),
        Just(Expr::Var(Var::Ep)),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow),
        ];
        let func = prop_oneof![
            Just(Func::Exp),
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Sqrt),
            Just(Func::Abs),
        ];
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Binary(
                o,
                Box::new(a),
                Box::new(b)
            )),
            (func, inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_associative(n in 1usize..4, seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, d) = (rand_op(&mut r, n), rand_op(&mut r, n), rand_op(&mut r, n));
        let left = a.compose(&b).unwrap().compose(&d).unwrap();
        let right = a.compose(&b.compose(&d).unwrap()).unwrap();
        prop_assert!(left.max_deviation(&right) < 1e-12);
    }

    #[test]
    fn adjoint_reverses_products((a, b) in (operator(2), operator(2))) {
        let lhs = a.compose(&b).unwrap().adjoint();
        let rhs = b.adjoint().compose(&a.adjoint()).unwrap();
        prop_assert!(lhs.max_deviation(&rhs) < 1e-14);
        prop_assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn gram_is_symmetric_and_real(n in 1usize..6) {
        for &x in &basis(n) {
            for &y in &basis(n) {
                let g = commutclass::krein::gram(n, x, y).unwrap();
                prop_assert_eq!(g, commutclass::krein::gram(n, y, x).unwrap());
                prop_assert_eq!(g.im, 0.0);
            }
        }
    }

    #[test]
    fn apply_respects_composition((a, b, v) in (operator(2), operator(2), vector(2))) {
        let lhs = a.compose(&b).unwrap().apply(&v).unwrap();
        let rhs = a.apply(&b.apply(&v).unwrap()).unwrap();
        prop_assert!(lhs.max_deviation(&rhs) < 1e-13);
    }

    #[test]
    fn pseudo_inner_is_conjugate_symmetric((x, y) in (vector(3), vector(3))) {
        let xy = pseudo_inner(&x, &y).unwrap();
        let yx = pseudo_inner(&y, &x).unwrap();
        prop_assert!((xy - yx.conj()).norm() < 1e-15);
    }

    #[test]
    fn adjoint_moves_across_the_pairing((o, x, y) in (operator(2), vector(2), vector(2))) {
        let lhs = pseudo_inner(&x, &o.apply(&y).unwrap()).unwrap();
        let rhs = pseudo_inner(&o.adjoint().apply(&x).unwrap(), &y).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn full_family_is_a_group(res in resonances(2), t1 in -3.0..3.0f64, t2 in -3.0..3.0f64) {
        let u1 = evolution_operator(&res, EvolutionFamily::Full, t1).unwrap();
        let u2 = evolution_operator(&res, EvolutionFamily::Full, t2).unwrap();
        let u12 = evolution_operator(&res, EvolutionFamily::Full, t1 + t2).unwrap();
        let prod = u1.compose(&u2).unwrap();
        prop_assert!(prod.max_deviation(&u12) < 1e-12 * u12.max_norm().max(1.0));
    }

    #[test]
    fn asymmetric_family_is_self_adjoint(res in resonances(3), t in 0.0..10.0f64) {
        let u = evolution_operator(&res, EvolutionFamily::Asymmetric, t).unwrap();
        prop_assert!(u.max_deviation(&u.adjoint()) < 1e-15);
    }

    #[test]
    fn heisenberg_is_linear(res in resonances(2), fam in families(), (a, b) in (operator(2), operator(2)), k in complex(), t in 0.0..3.0f64) {
        let lhs = heisenberg_evolve(&a.add_scaled(&b, k).unwrap(), &res, fam, t).unwrap();
        let ea = heisenberg_evolve(&a, &res, fam, t).unwrap();
        let eb = heisenberg_evolve(&b, &res, fam, t).unwrap();
        let rhs = ea.add_scaled(&eb, k).unwrap();
        prop_assert!(lhs.max_deviation(&rhs) < 1e-12 * rhs.max_norm().max(1.0));
    }

    #[test]
    fn time_reversal_is_antilinear_involution(xs in prop::collection::vec(complex(), 4), ys in prop::collection::vec(complex(), 4), k in complex()) {
        let x = ConcreteVector(xs);
        let y = ConcreteVector(ys);
        let tt = apply_t(&apply_t(&x).unwrap()).unwrap();
        prop_assert!(tt.max_deviation(&x) == 0.0);
        let sum = ConcreteVector(x.0.iter().zip(&y.0).map(|(a, b)| k * a + b).collect());
        let lhs = apply_t(&sum).unwrap();
        let tx = apply_t(&x).unwrap();
        let ty = apply_t(&y).unwrap();
        let rhs = ConcreteVector(tx.0.iter().zip(&ty.0).map(|(a, b)| k.conj() * a + b).collect());
        prop_assert!(lhs.max_deviation(&rhs) < 1e-15);
    }

    #[test]
    fn dense_rep_is_a_homomorphism((a, b) in (kernel(6), kernel(6))) {
        let lhs = a.product(&b).unwrap().dense_rep();
        let rhs = a.dense_rep() * b.dense_rep();
        let scale = rhs.iter().map(|x| x.norm()).fold(1.0, f64::max);
        prop_assert!(max_abs(&(lhs - rhs)) / scale < 1e-13);
    }

    #[test]
    fn kernel_evolution_is_a_group(a in kernel(5), t1 in -0.3..0.3f64, t2 in -0.3..0.3f64) {
        let step = a.evolve(t1).unwrap().evolve(t2).unwrap();
        let once = a.evolve(t1 + t2).unwrap();
        prop_assert!(step.max_deviation(&once) < 1e-13);
    }

    #[test]
    fn kernel_evolution_preserves_products((a, b) in (kernel(5), kernel(5)), t in -0.3..0.3f64) {
        let lhs = a.product(&b).unwrap().evolve(t).unwrap();
        let rhs = a.evolve(t).unwrap().product(&b.evolve(t).unwrap()).unwrap();
        prop_assert!(lhs.max_deviation(&rhs) < 1e-13);
    }

    #[test]
    fn weak_limits_commute((a, b) in (kernel(5), kernel(5))) {
        prop_assert!(a.weak_limit().commutator(&b.weak_limit()).unwrap().is_zero());
    }

    #[test]
    fn printed_trees_parse_back(e in expr_tree()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &e, "{}", text);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn kernel_json_round_trips(a in kernel(4)) {
        let back = OperatorKernel::from_json(&a.to_json()).unwrap();
        prop_assert_eq!(back.max_deviation(&a), 0.0);
    }
}
