//! Flow-recovery invariants: oracle agreement and its truncation rate,
//! symplecticity and energy certificates on the test systems, and the
//! fiber-graph decomposition against a brute-force intersection oracle.

use microgen_core::dynamics::{
    energy_drift, evolution_relation_point, fiber_decomposition, recover_flow, reference_flow,
    symplecticity_defect, FlowMap, PhasePoint,
};
use microgen_core::expr::parse;
use microgen_core::genfun::{Chart, CoreMap, GeneratingFunction};
use microgen_core::hamjac::{hj_series, Hamiltonian};
use microgen_core::jet::Jet;
use microgen_core::seeded_rng;
use rand::Rng;

fn hamiltonian(src: &str, order: usize) -> Hamiltonian {
    Hamiltonian::from_expr(
        &parse(src).unwrap(),
        &["p".into()],
        &["q".into()],
        &[0.0],
        order,
    )
    .unwrap()
}

fn gap(a: &PhasePoint, b: &PhasePoint) -> f64 {
    a.flat()
        .iter()
        .zip(b.flat())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn flow_oracle_agreement_rate() {
    // order-4 series: halving t cuts the gap to the reference flow by
    // roughly 2^5, within a factor of 4
    let h = hamiltonian("(p^2+q^2)/2", 8);
    let s = hj_series(&h, 4).unwrap();
    let z = PhasePoint::new(vec![0.4], vec![0.3]);
    let gap_at = |t: f64| {
        let rec = recover_flow(&s, t, &z, 1e-13, 50).unwrap();
        let oracle = reference_flow(&h, &z, t, 20_000);
        gap(&rec, &oracle)
    };
    let g_big = gap_at(0.4);
    let g_small = gap_at(0.2);
    let ratio = g_big / g_small;
    assert!(
        (8.0..128.0).contains(&ratio),
        "ratio {ratio} (gaps {g_big:.3e} / {g_small:.3e})"
    );
}

#[test]
fn flow_matches_oracle_on_test_suite() {
    let mut rng = seeded_rng(0);
    for src in ["p^2/2", "(p^2+q^2)/2", "p^2/2 + cos(q)"] {
        let h = hamiltonian(src, 16);
        let s = hj_series(&h, 10).unwrap();
        for _ in 0..5 {
            let z = PhasePoint::new(
                vec![rng.gen_range(-0.5..0.5)],
                vec![rng.gen_range(-0.5..0.5)],
            );
            let rec = recover_flow(&s, 0.05, &z, 1e-13, 50).unwrap();
            let oracle = reference_flow(&h, &z, 0.05, 10_000);
            let g = gap(&rec, &oracle);
            assert!(g < 1e-10, "{src}: gap {g}");
        }
    }
}

#[test]
fn symplecticity_on_test_suite() {
    for src in ["p^2/2", "(p^2+q^2)/2", "p^2/2 + cos(q)"] {
        let h = hamiltonian(src, 16);
        let s = hj_series(&h, 10).unwrap();
        let flow = FlowMap::from_genfun(&s, 1e-13, 50);
        for t in [0.05, 0.1] {
            let z = PhasePoint::new(vec![0.3], vec![0.2]);
            let defect = symplecticity_defect(&flow, t, &z, 1e-4).unwrap();
            assert!(defect < 1e-6, "{src} at t={t}: defect {defect}");
        }
    }
}

#[test]
fn energy_drift_on_test_suite() {
    for src in ["p^2/2", "(p^2+q^2)/2", "p^2/2 + cos(q)"] {
        let h = hamiltonian(src, 16);
        let s = hj_series(&h, 10).unwrap();
        let flow = FlowMap::from_genfun(&s, 1e-13, 50);
        let z = PhasePoint::new(vec![0.4], vec![-0.3]);
        let drift = energy_drift(&h, &flow, 0.05, &z).unwrap();
        assert!(drift < 1e-9, "{src}: drift {drift}");
    }
}

#[test]
fn energy_slot_carries_hamiltonian_of_evolved_point() {
    let h = hamiltonian("(p^2+q^2)/2", 12);
    let s = hj_series(&h, 10).unwrap();
    for (p, q_cap) in [(0.3, 0.2), (-0.4, 0.1), (0.0, 0.5)] {
        let pt = evolution_relation_point(&s, 0.05, &[p], &[q_cap]);
        let e_direct = h.value(0.0, &pt.target.p, &pt.target.q);
        assert!(
            (pt.energy - e_direct).abs() < 1e-10,
            "energy {} vs {}",
            pt.energy,
            e_direct
        );
    }
}

#[test]
fn decomposition_reproduces_relation_exactly() {
    // union over an x2-grid of fiber graphs reconstructs the sampled relation
    let phi = CoreMap::zero_map(1, 1, 6);
    let rem = Jet::from_terms(2, 6, &[(&[2, 1], 1.0)]).unwrap();
    let gf = GeneratingFunction::new(phi, rem, Chart::default_names(1, 1)).unwrap();
    let p_grid: Vec<Vec<f64>> = (0..10).map(|i| vec![-1.0 + 0.2 * i as f64]).collect();
    for i in 0..10 {
        let x2 = [-1.0 + 0.2 * i as f64];
        let fiber = fiber_decomposition(&gf, &x2, p_grid.clone());
        for rp in fiber.as_relation_points() {
            let direct = gf.sample_relation(&rp.p1, &x2);
            assert_eq!(rp, direct);
        }
    }
}

#[test]
fn decomposition_agrees_with_intersection_oracle() {
    // brute force: sample the relation over a (p1, x2) grid and filter the
    // points whose base matches the target fiber; the filtered map must be
    // the fiber graph
    let phi = CoreMap::from_jets(
        vec![Jet::from_terms(1, 6, &[(&[1], 1.0), (&[2], 0.5)]).unwrap()],
        vec![0.0],
    )
    .unwrap();
    let rem = Jet::from_terms(2, 6, &[(&[2, 0], 0.3), (&[2, 1], 0.2)]).unwrap();
    let gf = GeneratingFunction::new(phi, rem, Chart::default_names(1, 1)).unwrap();

    let p_grid: Vec<f64> = (0..7).map(|i| -0.6 + 0.2 * i as f64).collect();
    let x_grid: Vec<f64> = (0..5).map(|i| -0.4 + 0.2 * i as f64).collect();
    let sampled: Vec<_> = p_grid
        .iter()
        .flat_map(|&p| x_grid.iter().map(move |&x| (p, x)))
        .map(|(p, x)| gf.sample_relation(&[p], &[x]))
        .collect();

    let target = 0.2_f64;
    let eps = 1e-9;
    let filtered: Vec<_> = sampled
        .iter()
        .filter(|pt| (pt.x2[0] - target).abs() < eps)
        .collect();
    assert_eq!(filtered.len(), p_grid.len());

    let fiber = fiber_decomposition(
        &gf,
        &[target],
        p_grid.iter().map(|&p| vec![p]).collect(),
    );
    for (oracle_pt, graph_pt) in filtered.iter().zip(fiber.as_relation_points()) {
        for (a, b) in oracle_pt.flat().iter().zip(graph_pt.flat()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn time_dependent_reference_flow() {
    // driven system H(t, p, q) = p^2/2 + t q: under the evolution convention
    // pdot = +dH/dq = t, qdot = -p: p(t) = p0 + t^2/2
    let expr = parse("p^2/2 + t*q").unwrap();
    let h = Hamiltonian::from_expr_time_dependent(
        &expr,
        "t",
        &["p".into()],
        &["q".into()],
        &[0.0],
        8,
    )
    .unwrap();
    let z = PhasePoint::new(vec![0.2], vec![0.1]);
    let out = reference_flow(&h, &z, 0.3, 4_000);
    assert!((out.p[0] - (0.2 + 0.045)).abs() < 1e-10, "p {}", out.p[0]);
    // and the recovered flow from the time-dependent series agrees
    let s = hj_series(&h, 8).unwrap();
    let rec = recover_flow(&s, 0.3, &z, 1e-13, 50).unwrap();
    assert!(gap(&rec, &out) < 1e-9, "gap {}", gap(&rec, &out));
}
