//! Stationary-point composition `G ⋆ F` of generating functions.
//!
//! For `F(p1, x2)` generating a relation `T*A -> T*B` and `G(p2, x3)`
//! generating `T*B -> T*C`, the composite relation is generated by
//! `(G ⋆ F)(p1, x3) = F(p1, x2) + G(p2, x3) - <p2, x2>` evaluated at the
//! unique critical point of the bracket in `(p2, x2)`. The critical system
//!
//! ```text
//! p2 = d_x F(p1, x2)
//! x2 = d_p G(p2, x3)
//! ```
//!
//! is solved pointwise by Newton iteration ([`star_numeric`]) or order by
//! order in the jet algebra ([`star_series`]), where functional iteration
//! contracts because each pass fixes one further total degree in `p1`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::fd;
use crate::genfun::{Chart, GeneratingFunction};
use crate::jet::Jet;

/// Default Newton residual tolerance.
pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
/// Default Newton iteration cap.
pub const DEFAULT_NEWTON_MAX_ITER: usize = 50;
/// Radius of randomized initial-guess perturbations in [`monicity_probe`].
pub const MONICITY_PERTURBATION: f64 = 0.1;

/// Solved critical point of the composition bracket.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub p2_bar: Vec<f64>,
    pub x2_bar: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Value of `G ⋆ F` at one `(p1, x3)` together with its critical point.
#[derive(Debug, Clone)]
pub struct StarValue {
    pub value: f64,
    pub critical: CriticalPoint,
}

fn check_middle_dims(f: &GeneratingFunction, g: &GeneratingFunction) -> Result<usize> {
    let l = f.dim_x();
    if g.dim_p() != l {
        return Err(Error::DimensionMismatch {
            context: "star composition middle factor",
            expected: l,
            got: g.dim_p(),
        });
    }
    Ok(l)
}

/// Newton solve of the critical-point system from the initial guess
/// `(p2, x2) = (0, psi(x3))`, followed by evaluation of the bracket.
pub fn star_numeric(
    f: &GeneratingFunction,
    g: &GeneratingFunction,
    p1: &[f64],
    x3: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<StarValue> {
    let start = {
        let mut s = vec![0.0; f.dim_x()];
        s.extend(g.core().eval(x3));
        s
    };
    star_numeric_from(f, g, p1, x3, &start, tol, max_iter)
}

/// Newton solve from an explicit initial guess `(p2, x2)` (used by the
/// monicity probe).
pub fn star_numeric_from(
    f: &GeneratingFunction,
    g: &GeneratingFunction,
    p1: &[f64],
    x3: &[f64],
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<StarValue> {
    let l = check_middle_dims(f, g)?;
    if start.len() != 2 * l {
        return Err(Error::DimensionMismatch {
            context: "star_numeric start",
            expected: 2 * l,
            got: start.len(),
        });
    }

    // residual K(p2, x2) = (d_x F(p1, x2) - p2, d_p G(p2, x3) - x2)
    let residual = |u: &[f64]| -> Vec<f64> {
        let (p2, x2) = u.split_at(l);
        let mut r = f.grad_x(p1, x2);
        for (ri, pi) in r.iter_mut().zip(p2) {
            *ri -= pi;
        }
        let mut s = g.grad_p(p2, x3);
        for (si, xi) in s.iter_mut().zip(x2) {
            *si -= xi;
        }
        r.extend(s);
        r
    };

    let mut u = start.to_vec();
    let mut res = residual(&u);
    let mut iterations = 0;
    while fd::norm_inf(&res) > tol {
        if iterations >= max_iter {
            return Err(Error::NewtonNonConvergence {
                iterations,
                residual: fd::norm_inf(&res),
            });
        }
        let jac = fd::jacobian(&residual, &u, fd::FD_STEP_GRADIENT);
        let lu = jac.lu();
        let rhs = DVector::from_vec(res.clone());
        let step = lu.solve(&rhs).ok_or(Error::SingularJacobian {
            iteration: iterations,
        })?;
        for (ui, si) in u.iter_mut().zip(step.iter()) {
            *ui -= si;
        }
        res = residual(&u);
        iterations += 1;
    }

    let (p2_bar, x2_bar) = u.split_at(l);
    let value = f.value(p1, x2_bar) + g.value(p2_bar, x3) - fd::dot(p2_bar, x2_bar);
    Ok(StarValue {
        value,
        critical: CriticalPoint {
            p2_bar: p2_bar.to_vec(),
            x2_bar: x2_bar.to_vec(),
            residual: fd::norm_inf(&res),
            iterations,
        },
    })
}

/// Substitutes value jets into `f` stored around `base` (per-variable shift).
fn compose_shifted(f: &Jet, base: &[f64], value_args: &[Jet]) -> Result<Jet> {
    let args: Vec<Jet> = value_args
        .iter()
        .zip(base)
        .map(|(a, &b)| a.add_scalar(-b))
        .collect();
    f.compose(&args)
}

/// Order-by-order composition in the jet algebra of `(p1, x3)`.
///
/// Iterates `p2 <- d_x F(p1, x2)`, `x2 <- d_p G(p2, x3)` from the seed
/// `(0, psi)` until the truncated jets stabilize (at most `order + 2`
/// passes), then repackages `F + G - <p2, x2>` as a generating function
/// with core `phi ∘ psi`. The composed remainder is re-validated and the
/// construction fails if the canonical constraints are violated.
pub fn star_series(
    f: &GeneratingFunction,
    g: &GeneratingFunction,
    order: usize,
) -> Result<GeneratingFunction> {
    let l = check_middle_dims(f, g)?;
    let k = f.dim_p();
    let m = g.dim_x();
    for (name, stored) in [
        ("F remainder", f.remainder().max_order()),
        ("G remainder", g.remainder().max_order()),
    ] {
        if stored < order {
            return Err(Error::OrderUnderflow {
                context: if name.starts_with('F') {
                    "star_series F remainder"
                } else {
                    "star_series G remainder"
                },
                requested: order,
                stored,
            });
        }
    }
    let phi_jets = f.core().jets().ok_or(Error::MissingJet {
        context: "star_series F core",
    })?;
    let psi_jets = g.core().jets().ok_or(Error::MissingJet {
        context: "star_series G core",
    })?;

    let nv = k + m;
    // value jets of the outer algebra: p1 coordinates and x3 coordinates
    let p1_coords: Vec<Jet> = (0..k)
        .map(|i| Jet::coordinate(nv, order, i))
        .collect::<Result<_>>()?;
    let x3_values: Vec<Jet> = (0..m)
        .map(|j| Ok(Jet::coordinate(nv, order, k + j)?.add_scalar(g.chart().base_x[j])))
        .collect::<Result<_>>()?;
    // psi as value jets of the outer algebra
    let x3_map: Vec<usize> = (k..k + m).collect();
    let psi_embedded: Vec<Jet> = psi_jets
        .iter()
        .map(|j| j.truncated(order.min(j.max_order())).embed(nv, &x3_map))
        .collect::<Result<_>>()?;

    let f_base_full: Vec<f64> = {
        let mut b = vec![0.0; k];
        b.extend_from_slice(f.core().base());
        b
    };
    let g_base_full: Vec<f64> = {
        let mut b = vec![0.0; l];
        b.extend_from_slice(g.core().base());
        b
    };
    let dphi: Vec<Vec<Jet>> = phi_jets
        .iter()
        .map(|j| j.gradient())
        .collect::<Result<_>>()?;
    let f_rem_grad_x: Vec<Jet> = (0..l)
        .map(|j| f.remainder().partial(k + j))
        .collect::<Result<_>>()?;
    let g_rem_grad_p: Vec<Jet> = (0..l)
        .map(|i| g.remainder().partial(i))
        .collect::<Result<_>>()?;

    // Gradient jets are only stored through degree `order - 1`; the critical
    // point is therefore known to that degree. That still determines the
    // bracket value through degree `order`: every sensitivity of the bracket
    // to the critical point has valuation >= 1 in p1, so degree-`order`
    // errors in the iterates only enter the value at degree `order + 1`,
    // which is truncated anyway. The iterates are re-extended to `order` so
    // products do not truncate the value early.
    let mut p2_bar: Vec<Jet> = vec![Jet::zero(nv, order); l];
    let mut x2_bar: Vec<Jet> = psi_embedded.clone();
    let mut stabilized = false;
    for _pass in 0..=(order + 2) {
        // p2 <- (T*phi) p1 + d_x f, both composed with the current x2
        let mut p2_next = Vec::with_capacity(l);
        for j in 0..l {
            let mut acc = Jet::zero(nv, order);
            for (i, p1c) in p1_coords.iter().enumerate() {
                let dphi_ij =
                    compose_shifted(&dphi[i][j], f.core().base(), &x2_bar)?.with_max_order(order);
                acc = acc.checked_add(&dphi_ij.checked_mul(p1c)?)?;
            }
            let mut args = p1_coords.clone();
            args.extend(x2_bar.iter().cloned());
            let grad = compose_shifted(&f_rem_grad_x[j], &f_base_full, &args)?;
            acc = acc.checked_add(&grad.with_max_order(order))?;
            p2_next.push(acc);
        }
        // x2 <- psi(x3) + d_p g(p2, x3)
        let mut x2_next = Vec::with_capacity(l);
        for i in 0..l {
            let mut args = p2_next.clone();
            args.extend(x3_values.iter().cloned());
            let corr = compose_shifted(&g_rem_grad_p[i], &g_base_full, &args)?;
            x2_next.push(psi_embedded[i].checked_add(&corr.with_max_order(order))?);
        }
        let same = p2_next
            .iter()
            .zip(&p2_bar)
            .all(|(a, b)| a.exact_eq(b))
            && x2_next.iter().zip(&x2_bar).all(|(a, b)| a.exact_eq(b));
        p2_bar = p2_next;
        x2_bar = x2_next;
        if same {
            stabilized = true;
            break;
        }
    }
    if !stabilized {
        return Err(Error::Internal(
            "star_series functional iteration did not stabilize".into(),
        ));
    }

    // bracket value F(p1, x2) + G(p2, x3) - <p2, x2>
    let mut value = Jet::zero(nv, order);
    for (i, p1c) in p1_coords.iter().enumerate() {
        let phi_i = compose_shifted(&phi_jets[i], f.core().base(), &x2_bar)?;
        value = value.checked_add(&phi_i.checked_mul(p1c)?)?;
    }
    {
        let mut args = p1_coords.clone();
        args.extend(x2_bar.iter().cloned());
        value = value.checked_add(&compose_shifted(f.remainder(), &f_base_full, &args)?)?;
    }
    for (j, psi_j) in psi_embedded.iter().enumerate() {
        // group the G-core term with the <p2, x2> subtraction so the
        // cancellation is exact whenever psi(x3) and x2 coincide
        let gap = psi_j.checked_sub(&x2_bar[j])?;
        value = value.checked_add(&p2_bar[j].checked_mul(&gap)?)?;
    }
    {
        let mut args = p2_bar.clone();
        args.extend(x3_values.iter().cloned());
        value = value.checked_add(&compose_shifted(g.remainder(), &g_base_full, &args)?)?;
    }

    let chart = Chart::new(
        f.chart().p_names.clone(),
        g.chart().x_names.clone(),
        g.chart().base_x.clone(),
    );
    let composed_core = f.core().compose(g.core())?;
    let composed_func = {
        let c = composed_core.clone();
        std::sync::Arc::new(move |x: &[f64]| c.eval(x)) as _
    };
    GeneratingFunction::from_total_jet(&value, k, chart, true, Some(composed_func))
}

/// Multi-start uniqueness report for the composition critical point.
#[derive(Debug, Clone)]
pub struct MonicityReport {
    pub unique: bool,
    pub worst_spread: f64,
    pub converged_runs: usize,
    pub failed_runs: usize,
    pub max_iterations: usize,
}

/// Runs Newton from `starts` randomized initial guesses near `(0, psi(x3))`
/// at every grid point; converged runs are compared pairwise. Non-convergent
/// starts are excluded and counted.
pub fn monicity_probe(
    f: &GeneratingFunction,
    g: &GeneratingFunction,
    grid: &[(Vec<f64>, Vec<f64>)],
    starts: usize,
    tol: f64,
    rng: &mut impl Rng,
) -> Result<MonicityReport> {
    let l = check_middle_dims(f, g)?;
    let mut report = MonicityReport {
        unique: true,
        worst_spread: 0.0,
        converged_runs: 0,
        failed_runs: 0,
        max_iterations: 0,
    };
    for (p1, x3) in grid {
        let mut base = vec![0.0; l];
        base.extend(g.core().eval(x3));
        let mut found: Vec<Vec<f64>> = Vec::with_capacity(starts);
        for _ in 0..starts {
            let start: Vec<f64> = base
                .iter()
                .map(|b| b + rng.gen_range(-MONICITY_PERTURBATION..MONICITY_PERTURBATION))
                .collect();
            match star_numeric_from(f, g, p1, x3, &start, DEFAULT_NEWTON_TOL, 50) {
                Ok(sv) => {
                    report.converged_runs += 1;
                    report.max_iterations = report.max_iterations.max(sv.critical.iterations);
                    let mut u = sv.critical.p2_bar;
                    u.extend(sv.critical.x2_bar);
                    found.push(u);
                }
                Err(Error::NewtonNonConvergence { .. }) | Err(Error::SingularJacobian { .. }) => {
                    report.failed_runs += 1;
                }
                Err(e) => return Err(e),
            }
        }
        for a in &found {
            for b in &found {
                let spread = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0_f64, f64::max);
                report.worst_spread = report.worst_spread.max(spread);
            }
        }
    }
    report.unique = report.worst_spread < tol;
    Ok(report)
}

/// Second-derivative blocks of the bracket at a critical point, used by
/// diagnostics and tests.
pub fn bracket_hessian(
    f: &GeneratingFunction,
    g: &GeneratingFunction,
    p1: &[f64],
    x3: &[f64],
    cp: &CriticalPoint,
) -> Result<DMatrix<f64>> {
    let l = check_middle_dims(f, g)?;
    let mut u = cp.p2_bar.clone();
    u.extend(cp.x2_bar.clone());
    let residual = |uu: &[f64]| -> Vec<f64> {
        let (p2, x2) = uu.split_at(l);
        let mut r = f.grad_x(p1, x2);
        for (ri, pi) in r.iter_mut().zip(p2) {
            *ri -= pi;
        }
        let mut s = g.grad_p(p2, x3);
        for (si, xi) in s.iter_mut().zip(x2) {
            *si -= xi;
        }
        r.extend(s);
        r
    };
    Ok(fd::jacobian(&residual, &u, fd::FD_STEP_GRADIENT))
}

/// The generating function of the identity relation: core `id`, remainder 0.
pub fn identity_genfun(dim: usize, order: usize) -> GeneratingFunction {
    GeneratingFunction::cotangent_lift(&crate::genfun::CoreMap::identity(dim, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfun::CoreMap;
    use crate::seeded_rng;

    fn lift_sq(order: usize) -> GeneratingFunction {
        let phi = CoreMap::from_jets(
            vec![Jet::from_terms(1, order, &[(&[2], 1.0)]).unwrap()],
            vec![0.0],
        )
        .unwrap();
        GeneratingFunction::cotangent_lift(&phi)
    }

    fn lift_xplus1(order: usize) -> GeneratingFunction {
        let psi = CoreMap::from_jets(
            vec![Jet::from_terms(1, order, &[(&[0], 1.0), (&[1], 1.0)]).unwrap()],
            vec![0.0],
        )
        .unwrap();
        GeneratingFunction::cotangent_lift(&psi)
    }

    fn p2x_genfun(order: usize) -> GeneratingFunction {
        let phi = CoreMap::zero_map(1, 1, order);
        let f = Jet::from_terms(2, order, &[(&[2, 1], 1.0)]).unwrap();
        GeneratingFunction::new(phi, f, Chart::default_names(1, 1)).unwrap()
    }

    #[test]
    fn star_numeric_identity_law() {
        // E * F = F pointwise: critical point forced to x2 = x3
        let f = p2x_genfun(6);
        let e = identity_genfun(1, 6);
        let sv = star_numeric(&f, &e, &[0.1], &[2.0], 1e-12, 50).unwrap();
        assert!((sv.value - f.value(&[0.1], &[2.0])).abs() < 1e-12);
        assert!((sv.value - 0.02).abs() < 1e-12);
        assert!((sv.critical.x2_bar[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn star_numeric_lift_functoriality_value() {
        // (G * F)(p1, x3) = p1 (x3 + 1)^2 for F = lift(x^2), G = lift(x + 1)
        let f = lift_sq(8);
        let g = lift_xplus1(8);
        let sv = star_numeric(&f, &g, &[1.0], &[1.0], 1e-12, 50).unwrap();
        assert!((sv.value - 4.0).abs() < 1e-10, "value {}", sv.value);
        // critical point: x2 = psi(x3) = 2, p2 = (T*phi) p1 = 2 * x2 * p1 = 4
        assert!((sv.critical.x2_bar[0] - 2.0).abs() < 1e-9);
        assert!((sv.critical.p2_bar[0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn star_numeric_gradient_identities() {
        let f = p2x_genfun(8);
        let g = lift_xplus1(8);
        let (p1, x3) = ([0.2], [0.5]);
        let sv = star_numeric(&f, &g, &p1, &x3, 1e-13, 50).unwrap();
        // d_p (G*F)(p1, x3) = d_p F(p1, x2bar), via finite differences of the value
        let h = 1e-6;
        let vp = star_numeric(&f, &g, &[p1[0] + h], &x3, 1e-13, 50).unwrap().value;
        let vm = star_numeric(&f, &g, &[p1[0] - h], &x3, 1e-13, 50).unwrap().value;
        let dp_star = (vp - vm) / (2.0 * h);
        let dp_f = f.grad_p(&p1, &sv.critical.x2_bar)[0];
        assert!((dp_star - dp_f).abs() < 1e-8, "{dp_star} vs {dp_f}");
        let wp = star_numeric(&f, &g, &p1, &[x3[0] + h], 1e-13, 50).unwrap().value;
        let wm = star_numeric(&f, &g, &p1, &[x3[0] - h], 1e-13, 50).unwrap().value;
        let dx_star = (wp - wm) / (2.0 * h);
        let dx_g = g.grad_x(&sv.critical.p2_bar, &x3)[0];
        assert!((dx_star - dx_g).abs() < 1e-8, "{dx_star} vs {dx_g}");
    }

    #[test]
    fn star_series_identity_law_exact() {
        let f = p2x_genfun(6);
        let e = identity_genfun(1, 6);
        let ef = star_series(&f, &e, 6).unwrap();
        assert!(ef.remainder().exact_eq(f.remainder()));
        assert!(ef.core().jets().unwrap()[0].exact_eq(&f.core().jets().unwrap()[0]));
        let fe = star_series(&e, &f, 6).unwrap();
        assert!(fe.remainder().exact_eq(f.remainder()));
    }

    #[test]
    fn star_series_lift_functoriality() {
        let f = lift_sq(8);
        let g = lift_xplus1(8);
        let composed = star_series(&f, &g, 8).unwrap();
        // remainder of a composed lift vanishes
        assert!(composed.remainder().max_abs_coeff() < 1e-12);
        // core equals (x + 1)^2 = 1 + 2x + x^2
        let core = &composed.core().jets().unwrap()[0];
        assert!((core.coeff(&[0]) - 1.0).abs() < 1e-12);
        assert!((core.coeff(&[1]) - 2.0).abs() < 1e-12);
        assert!((core.coeff(&[2]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn star_series_matches_numeric() {
        let f = p2x_genfun(10);
        let g = lift_xplus1(10);
        let series = star_series(&f, &g, 10).unwrap();
        for &(p1, x3) in &[(0.05, 0.3), (-0.08, -0.2), (0.1, 0.0)] {
            let numeric = star_numeric(&f, &g, &[p1], &[x3], 1e-13, 50).unwrap().value;
            let via_series = series.value(&[p1], &[x3]);
            assert!(
                (numeric - via_series).abs() < 1e-8,
                "mismatch at ({p1}, {x3}): {numeric} vs {via_series}"
            );
        }
    }

    #[test]
    fn star_series_order_underflow() {
        let f = p2x_genfun(4);
        let e = identity_genfun(1, 12);
        assert!(matches!(
            star_series(&f, &e, 6),
            Err(Error::OrderUnderflow { .. })
        ));
    }

    #[test]
    fn monicity_with_identity_factor() {
        let f = p2x_genfun(8);
        let e = identity_genfun(1, 8);
        let grid = vec![(vec![0.05], vec![0.3]), (vec![-0.1], vec![-0.2])];
        let mut rng = seeded_rng(1);
        let report = monicity_probe(&f, &e, &grid, 10, 1e-9, &mut rng).unwrap();
        assert!(report.unique);
        assert_eq!(report.failed_runs, 0);
    }

    #[test]
    fn monicity_on_lifts() {
        let f = lift_sq(8);
        let g = lift_xplus1(8);
        let grid: Vec<(Vec<f64>, Vec<f64>)> = [-0.1_f64, 0.0, 0.1]
            .iter()
            .flat_map(|&p| [-0.2_f64, 0.4].iter().map(move |&x| (vec![p], vec![x])))
            .collect();
        let mut rng = seeded_rng(0);
        let report = monicity_probe(&f, &g, &grid, 10, 1e-9, &mut rng).unwrap();
        assert!(report.unique, "spread {}", report.worst_spread);
        assert_eq!(report.failed_runs, 0);
        assert!(report.worst_spread < 1e-9);
    }
}
