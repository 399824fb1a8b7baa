//! Algebraic properties of jet arithmetic.
//!
//! Exactness assertions use jets with small integer coefficients so every
//! intermediate product stays an exact f64 integer; that makes ring axioms,
//! Leibniz and the chain rule checkable coefficient-for-coefficient with no
//! tolerance at all.

use microgen_core::jet::Jet;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct JetSpec {
    num_vars: usize,
    order: usize,
    terms: Vec<(Vec<u8>, i32)>,
}

fn jet_strategy(num_vars: usize, order: usize) -> impl Strategy<Value = JetSpec> {
    let term = (
        prop::collection::vec(0u8..=3, num_vars),
        -3i32..=3,
    );
    prop::collection::vec(term, 0..6).prop_map(move |terms| JetSpec {
        num_vars,
        order,
        terms,
    })
}

fn build(spec: &JetSpec) -> Jet {
    let mut jet = Jet::zero(spec.num_vars, spec.order);
    for (exps, c) in &spec.terms {
        if exps.iter().map(|&e| e as usize).sum::<usize>() <= spec.order {
            let terms = [(exps.as_slice(), *c as f64)];
            jet = jet
                .checked_add(&Jet::from_terms(spec.num_vars, spec.order, &terms).unwrap())
                .unwrap();
        }
    }
    jet
}

/// Same as `build` but with zero constant term, for composition arguments.
fn build_nonconst(spec: &JetSpec) -> Jet {
    let mut jet = build(spec);
    let c = jet.constant_term();
    if c != 0.0 {
        jet = jet.add_scalar(-c);
    }
    jet
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ring_axioms_hold_coefficient_exactly(
        a in jet_strategy(2, 5),
        b in jet_strategy(2, 5),
        c in jet_strategy(2, 5),
    ) {
        let (a, b, c) = (build(&a), build(&b), build(&c));
        // additive and multiplicative associativity
        let ab_c = a.checked_add(&b).unwrap().checked_add(&c).unwrap();
        let a_bc = a.checked_add(&b.checked_add(&c).unwrap()).unwrap();
        prop_assert!(ab_c.exact_eq(&a_bc));
        let m1 = a.checked_mul(&b).unwrap().checked_mul(&c).unwrap();
        let m2 = a.checked_mul(&b.checked_mul(&c).unwrap()).unwrap();
        prop_assert!(m1.exact_eq(&m2));
        // commutativity and distributivity
        prop_assert!(a.checked_mul(&b).unwrap().exact_eq(&b.checked_mul(&a).unwrap()));
        let lhs = a.checked_mul(&b.checked_add(&c).unwrap()).unwrap();
        let rhs = a.checked_mul(&b).unwrap().checked_add(&a.checked_mul(&c).unwrap()).unwrap();
        prop_assert!(lhs.exact_eq(&rhs));
    }

    #[test]
    fn leibniz_rule_exact(
        f in jet_strategy(2, 5),
        g in jet_strategy(2, 5),
        var in 0usize..2,
    ) {
        let (f, g) = (build(&f), build(&g));
        let lhs = f.checked_mul(&g).unwrap().partial(var).unwrap();
        let rhs = f
            .partial(var).unwrap().checked_mul(&g).unwrap()
            .checked_add(&f.checked_mul(&g.partial(var).unwrap()).unwrap())
            .unwrap();
        // both sides live at order - 1; compare there
        prop_assert!(lhs.truncated(rhs.max_order()).exact_eq(&rhs.truncated(lhs.max_order())));
    }

    #[test]
    fn chain_rule_exact(
        f in jet_strategy(2, 6),
        a0 in jet_strategy(2, 6),
        a1 in jet_strategy(2, 6),
        var in 0usize..2,
    ) {
        let f = build(&f);
        let args = vec![build_nonconst(&a0), build_nonconst(&a1)];
        let composed = f.compose(&args).unwrap();
        let lhs = composed.partial(var).unwrap();
        // sum_j (d_j f)(args) * d_var args_j
        let mut rhs = Jet::zero(2, lhs.max_order());
        for (j, arg) in args.iter().enumerate() {
            let dfj = f.partial(j).unwrap().compose(&args).unwrap();
            let term = dfj.checked_mul(&arg.partial(var).unwrap()).unwrap();
            rhs = rhs.checked_add(&term).unwrap();
        }
        let order = lhs.max_order().min(rhs.max_order());
        prop_assert!(lhs.truncated(order).exact_eq(&rhs.truncated(order)));
    }

    #[test]
    fn finite_difference_consistency(
        spec in jet_strategy(2, 5),
        x0 in -0.5f64..0.5,
        x1 in -0.5f64..0.5,
        var in 0usize..2,
    ) {
        let f = build(&spec);
        let h = 1e-5;
        let x = [x0, x1];
        let mut xp = x;
        xp[var] += h;
        let mut xm = x;
        xm[var] -= h;
        let fd = (f.eval(&xp).unwrap() - f.eval(&xm).unwrap()) / (2.0 * h);
        let exact = f.partial(var).unwrap().eval(&x).unwrap();
        prop_assert!(
            (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
            "fd {} vs exact {}", fd, exact
        );
    }

    #[test]
    fn json_roundtrip_identity(spec in jet_strategy(3, 4)) {
        let f = build(&spec);
        let names: Vec<String> = (0..3).map(|i| format!("v{i}")).collect();
        let json = f.to_json(&names);
        let back = Jet::from_json(&json).unwrap();
        prop_assert!(back.exact_eq(&f));
    }
}
