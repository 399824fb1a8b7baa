//! Benchmark-only crate; the criterion targets live in `benches/`.
//!
//! Shared fixtures for the benchmarks.

use microgen_core::expr::parse;
use microgen_core::genfun::{Chart, CoreMap, GeneratingFunction};
use microgen_core::hamjac::Hamiltonian;
use microgen_core::jet::Jet;

/// Dense-ish two-variable jet with irrational-looking coefficients.
pub fn dense_jet(order: usize) -> Jet {
    let mut j = Jet::zero(2, order);
    for a in 0..=order as u8 {
        for b in 0..=(order as u8 - a) {
            let c = ((a as f64) * 0.37 - (b as f64) * 0.21).sin() * 0.5;
            if c != 0.0 {
                let exps = [a, b];
                let terms = [(exps.as_slice(), c)];
                j = j
                    .checked_add(&Jet::from_terms(2, order, &terms).unwrap())
                    .unwrap();
            }
        }
    }
    j
}

pub fn pendulum(order: usize) -> Hamiltonian {
    Hamiltonian::from_expr(
        &parse("p^2/2 + cos(q)").unwrap(),
        &["p".into()],
        &["q".into()],
        &[0.0],
        order,
    )
    .unwrap()
}

pub fn harmonic(order: usize) -> Hamiltonian {
    Hamiltonian::from_expr(
        &parse("(p^2+q^2)/2").unwrap(),
        &["p".into()],
        &["q".into()],
        &[0.0],
        order,
    )
    .unwrap()
}

/// A nontrivial canonical generating function for composition benchmarks.
pub fn bench_genfun(order: usize) -> GeneratingFunction {
    let core = CoreMap::from_jets(
        vec![Jet::from_terms(1, order, &[(&[1], 1.0), (&[2], 0.3), (&[3], -0.1)]).unwrap()],
        vec![0.0],
    )
    .unwrap();
    let remainder = Jet::from_terms(
        2,
        order,
        &[(&[2, 0], 0.25), (&[2, 1], -0.2), (&[3, 1], 0.1), (&[2, 2], 0.05)],
    )
    .unwrap();
    GeneratingFunction::new(core, remainder, Chart::default_names(1, 1)).unwrap()
}
