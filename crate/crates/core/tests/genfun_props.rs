//! Relation-level properties of generating functions: deformation/sample
//! consistency, core round-trips, lagrangian certificates and the Schwartz
//! involution.

use microgen_core::genfun::{
    relation_sampler, schwartz, schwartz_inverse, Chart, CoreMap, GeneratingFunction,
    RelationPoint,
};
use microgen_core::jet::Jet;
use microgen_core::morse::lagrangian_defect;
use microgen_core::seeded_rng;
use rand::Rng;

fn random_genfun(rng: &mut impl Rng, order: usize) -> GeneratingFunction {
    // random polynomial core of degree <= 3 and canonical remainder with
    // p-degree >= 2, small coefficients
    let core_jet = Jet::from_terms(
        1,
        order,
        &[
            (&[0], rng.gen_range(-0.3..0.3)),
            (&[1], rng.gen_range(-1.0..1.0)),
            (&[2], rng.gen_range(-0.5..0.5)),
            (&[3], rng.gen_range(-0.3..0.3)),
        ],
    )
    .unwrap();
    let core = CoreMap::from_jets(vec![core_jet], vec![0.0]).unwrap();
    let remainder = Jet::from_terms(
        2,
        order,
        &[
            (&[2, 0], rng.gen_range(-0.5..0.5)),
            (&[2, 1], rng.gen_range(-0.5..0.5)),
            (&[3, 0], rng.gen_range(-0.3..0.3)),
            (&[2, 2], rng.gen_range(-0.3..0.3)),
            (&[4, 1], rng.gen_range(-0.2..0.2)),
        ],
    )
    .unwrap();
    GeneratingFunction::new(core, remainder, Chart::default_names(1, 1)).unwrap()
}

#[test]
fn constructed_genfuns_satisfy_coefficient_constraints() {
    let mut rng = seeded_rng(7);
    for _ in 0..20 {
        let gf = random_genfun(&mut rng, 6);
        assert_eq!(gf.micromorphism_defect(), 0.0);
        assert!(gf.is_canonical());
    }
}

#[test]
fn deformation_of_lift_matches_sample_relation() {
    let mut rng = seeded_rng(8);
    for _ in 0..20 {
        let gf = random_genfun(&mut rng, 6);
        let p1 = vec![rng.gen_range(-0.5..0.5)];
        let x2 = vec![rng.gen_range(-0.5..0.5)];
        // the lift point over (p1, x2): x1 = phi(x2), p2 = (T*phi) p1
        let x1 = gf.core().eval(&x2);
        let p2 = gf.core().cotangent_map(&x2, &p1);
        let deformed = gf.deformation_map(&p1, &x1, &p2, &x2);
        let direct = gf.sample_relation(&p1, &x2);
        for (a, b) in deformed.flat().iter().zip(direct.flat().iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn core_round_trip_on_random_lifts() {
    let mut rng = seeded_rng(9);
    for _ in 0..10 {
        let gf = random_genfun(&mut rng, 6);
        let lift = GeneratingFunction::cotangent_lift(gf.core());
        let recovered = lift.core_of().unwrap();
        for _ in 0..10 {
            let x = vec![rng.gen_range(-0.8..0.8)];
            let a = gf.core().eval(&x);
            let b = recovered.eval(&x);
            assert!((a[0] - b[0]).abs() < 1e-10);
        }
    }
}

#[test]
fn sampled_relations_are_lagrangian() {
    let mut rng = seeded_rng(10);
    for seed in 0..5 {
        let gf = random_genfun(&mut rng, 6);
        let sampler = relation_sampler(&gf);
        let mut check_rng = seeded_rng(seed);
        let base = vec![rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)];
        let defect = lagrangian_defect(&|u| sampler(u), &base, 1e-4, 50, &mut check_rng);
        assert!(defect < 1e-6, "defect {defect}");
    }
}

#[test]
fn schwartz_involution_is_exact() {
    let mut rng = seeded_rng(11);
    for _ in 0..50 {
        let pt = RelationPoint {
            p1: (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            x1: (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            p2: (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            x2: (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        };
        assert_eq!(schwartz_inverse(&schwartz(&pt)), pt);
    }
}

#[test]
fn two_dimensional_relation_is_lagrangian() {
    // phi: R^2 -> R^2 nonlinear, remainder mixing both momentum slots
    let phi = CoreMap::from_jets(
        vec![
            Jet::from_terms(2, 6, &[(&[1, 0], 1.0), (&[0, 2], 0.4)]).unwrap(),
            Jet::from_terms(2, 6, &[(&[0, 1], 1.0), (&[1, 1], -0.3)]).unwrap(),
        ],
        vec![0.0, 0.0],
    )
    .unwrap();
    let remainder = Jet::from_terms(
        4,
        6,
        &[(&[1, 1, 0, 0], 0.2), (&[2, 0, 0, 1], -0.15), (&[0, 2, 1, 0], 0.1)],
    )
    .unwrap();
    let gf = GeneratingFunction::new(phi, remainder, Chart::default_names(2, 2)).unwrap();
    let sampler = relation_sampler(&gf);
    let mut rng = seeded_rng(3);
    let defect = lagrangian_defect(
        &|u| sampler(u),
        &[0.1, -0.05, 0.2, 0.15],
        1e-4,
        50,
        &mut rng,
    );
    assert!(defect < 1e-6, "defect {defect}");
}
