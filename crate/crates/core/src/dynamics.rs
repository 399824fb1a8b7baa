//! Flow recovery from evolution generating functions, the Runge-Kutta
//! reference oracle, symplecticity and energy certificates, and the
//! fiber-graph decomposition of a relation.
//!
//! Sign convention: the evolution equation of [`crate::hamjac`] fixes
//! `Qdot = -dH/dp`, `Pdot = +dH/dq`. [`reference_flow`] integrates that
//! system by default; passing `time_reversed = true` flips to the usual
//! `qdot = +dH/dp`, `pdot = -dH/dq` for comparison with other integrators.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fd;
use crate::genfun::{GeneratingFunction, RelationPoint};
use crate::hamjac::{EvolutionGenFun, Hamiltonian};
use crate::jet::Jet;

/// Determinant threshold below which the mixed Hessian `d2S/dp dQ` is
/// treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// A phase-space point `(p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl PhasePoint {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Self {
        PhasePoint { p, q }
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Stacked vector `[p..., q...]`.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.p.clone();
        v.extend_from_slice(&self.q);
        v
    }

    pub fn from_flat(v: &[f64]) -> Self {
        let n = v.len() / 2;
        PhasePoint {
            p: v[..n].to_vec(),
            q: v[n..].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowProvenance {
    RecoveredFromGenFun,
    ReferenceIntegrator,
}

type FlowFn = Arc<dyn Fn(f64, &PhasePoint) -> Result<PhasePoint> + Send + Sync>;

/// A time-parametrized phase-space map.
#[derive(Clone)]
pub struct FlowMap {
    evaluator: FlowFn,
    pub provenance: FlowProvenance,
}

impl FlowMap {
    pub fn eval(&self, t: f64, z: &PhasePoint) -> Result<PhasePoint> {
        (self.evaluator)(t, z)
    }

    /// Flow defined implicitly by `q = d_p S(t, p, Q)`, `P = d_Q S(t, p, Q)`.
    pub fn from_genfun(s: &EvolutionGenFun, tol: f64, max_iter: usize) -> Self {
        let s = s.clone();
        FlowMap {
            evaluator: Arc::new(move |t, z| recover_flow(&s, t, z, tol, max_iter)),
            provenance: FlowProvenance::RecoveredFromGenFun,
        }
    }

    /// Fixed-step RK4 reference flow.
    pub fn from_reference(h: &Hamiltonian, steps: usize, time_reversed: bool) -> Self {
        let h = h.clone();
        FlowMap {
            evaluator: Arc::new(move |t, z| {
                Ok(reference_flow_with(&h, z, t, steps, time_reversed))
            }),
            provenance: FlowProvenance::ReferenceIntegrator,
        }
    }
}

/// Solves the implicit system of the evolution series at fixed `(t, p, q)`:
/// Newton on `Q` with initial guess `Q = q`, then `P = d_Q S(t, p, Q)`.
/// Degeneracy of `d2S/dQ dp` is detected at [`DEGENERACY_THRESHOLD`].
pub fn recover_flow(
    s: &EvolutionGenFun,
    t: f64,
    z: &PhasePoint,
    tol: f64,
    max_iter: usize,
) -> Result<PhasePoint> {
    let n = s.dim();
    if z.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "recover_flow phase point",
            expected: n,
            got: z.dim(),
        });
    }
    // frozen partial jets in (p, Q)
    let frozen = s.freeze(t);
    let sp: Vec<Jet> = (0..n)
        .map(|i| frozen.partial(i))
        .collect::<Result<_>>()?;
    let sq: Vec<Jet> = (0..n)
        .map(|i| frozen.partial(n + i))
        .collect::<Result<_>>()?;
    let sp_dq: Vec<Vec<Jet>> = sp
        .iter()
        .map(|j| (0..n).map(|i| j.partial(n + i)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let mut q_cap = z.q.clone();
    let mut iterations = 0;
    loop {
        let disp = s.displacement(&z.p, &q_cap);
        let residual: Vec<f64> = sp
            .iter()
            .zip(&z.q)
            .map(|(j, &qi)| j.eval(&disp).unwrap() - qi)
            .collect();
        let jac = DMatrix::from_fn(n, n, |r, c| sp_dq[r][c].eval(&disp).unwrap());
        let det = jac.determinant();
        if det.abs() < DEGENERACY_THRESHOLD {
            return Err(Error::Degenerate {
                det,
                threshold: DEGENERACY_THRESHOLD,
            });
        }
        if fd::norm_inf(&residual) < tol {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NewtonNonConvergence {
                iterations,
                residual: fd::norm_inf(&residual),
            });
        }
        let step = jac
            .lu()
            .solve(&DVector::from_vec(residual))
            .ok_or(Error::SingularJacobian {
                iteration: iterations,
            })?;
        for (qi, si) in q_cap.iter_mut().zip(step.iter()) {
            *qi -= si;
        }
        iterations += 1;
    }
    let disp = s.displacement(&z.p, &q_cap);
    let p_cap: Vec<f64> = sq.iter().map(|j| j.eval(&disp).unwrap()).collect();
    Ok(PhasePoint::new(p_cap, q_cap))
}

/// Classical fixed-step RK4 under the evolution-equation sign convention.
pub fn reference_flow(h: &Hamiltonian, z: &PhasePoint, t: f64, steps: usize) -> PhasePoint {
    reference_flow_with(h, z, t, steps, false)
}

/// RK4 with an explicit convention switch (`time_reversed = true` integrates
/// `qdot = +dH/dp`, `pdot = -dH/dq`).
pub fn reference_flow_with(
    h: &Hamiltonian,
    z: &PhasePoint,
    t: f64,
    steps: usize,
    time_reversed: bool,
) -> PhasePoint {
    let steps = steps.max(1);
    let grads = h.gradients();
    let sign = if time_reversed { -1.0 } else { 1.0 };
    let n = z.dim();
    let field = |tau: f64, state: &[f64]| -> Vec<f64> {
        let (p, q) = state.split_at(n);
        let dp = grads.grad_p(tau, p, q);
        let dq = grads.grad_q(tau, p, q);
        // pdot = sign * dH/dq, qdot = -sign * dH/dp
        let mut out = Vec::with_capacity(2 * n);
        out.extend(dq.iter().map(|g| sign * g));
        out.extend(dp.iter().map(|g| -sign * g));
        out
    };
    let dt = t / steps as f64;
    let mut state = z.flat();
    let mut tau = 0.0;
    let axpy = |y: &[f64], a: f64, x: &[f64]| -> Vec<f64> {
        y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
    };
    for _ in 0..steps {
        let k1 = field(tau, &state);
        let k2 = field(tau + dt / 2.0, &axpy(&state, dt / 2.0, &k1));
        let k3 = field(tau + dt / 2.0, &axpy(&state, dt / 2.0, &k2));
        let k4 = field(tau + dt, &axpy(&state, dt, &k3));
        for i in 0..state.len() {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        tau += dt;
    }
    PhasePoint::from_flat(&state)
}

/// Frobenius norm of `M^T J M - J` where `M` is the flow jacobian at `z`
/// (central differences, step `h`) and `J` the standard symplectic matrix.
pub fn symplecticity_defect(flow: &FlowMap, t: f64, z: &PhasePoint, h: f64) -> Result<f64> {
    let n = z.dim();
    let dim = 2 * n;
    let base = z.flat();
    let mut m = DMatrix::zeros(dim, dim);
    for c in 0..dim {
        let mut plus = base.clone();
        plus[c] += h;
        let mut minus = base.clone();
        minus[c] -= h;
        let fp = flow.eval(t, &PhasePoint::from_flat(&plus))?.flat();
        let fm = flow.eval(t, &PhasePoint::from_flat(&minus))?.flat();
        for r in 0..dim {
            m[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    let mut j = DMatrix::zeros(dim, dim);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    let defect = m.transpose() * &j * &m - j;
    Ok(defect.norm())
}

/// `|H(flow(t, z)) - H(z)|` for time-independent hamiltonians.
pub fn energy_drift(h: &Hamiltonian, flow: &FlowMap, t: f64, z: &PhasePoint) -> Result<f64> {
    let end = flow.eval(t, z)?;
    Ok((h.value(0.0, &end.p, &end.q) - h.value(0.0, &z.p, &z.q)).abs())
}

/// One sampled point of the evolution relation:
/// `((t, E), (p, q), (P, Q))` with `E = d_t S`, `q = d_p S`, `P = d_Q S`.
#[derive(Debug, Clone)]
pub struct EvolutionRelationPoint {
    pub time: f64,
    pub energy: f64,
    pub source: PhasePoint,
    pub target: PhasePoint,
}

pub fn evolution_relation_point(
    s: &EvolutionGenFun,
    t: f64,
    p: &[f64],
    q_cap: &[f64],
) -> EvolutionRelationPoint {
    let n = s.dim();
    let frozen = s.freeze(t);
    let disp = s.displacement(p, q_cap);
    let q: Vec<f64> = (0..n)
        .map(|i| frozen.partial(i).unwrap().eval(&disp).unwrap())
        .collect();
    let p_cap: Vec<f64> = (0..n)
        .map(|i| frozen.partial(n + i).unwrap().eval(&disp).unwrap())
        .collect();
    EvolutionRelationPoint {
        time: t,
        energy: s.dt_at(t, p, q_cap),
        source: PhasePoint::new(p.to_vec(), q),
        target: PhasePoint::new(p_cap, q_cap.to_vec()),
    }
}

/// The fiber over `x2` of the graph decomposition of a relation: the curve
/// `L(p1) = (p1, phi(x2) + d_p f(p1, x2))` in the source, and the map `Psi`
/// sending each fiber point to `((T*phi) p1 + d_x f(p1, x2), x2)`.
#[derive(Clone)]
pub struct FiberGraph {
    gf: GeneratingFunction,
    x2: Vec<f64>,
    p1_grid: Vec<Vec<f64>>,
}

/// A matched pair: fiber point and its image under `Psi`.
#[derive(Debug, Clone)]
pub struct FiberGraphPoint {
    pub fiber: (Vec<f64>, Vec<f64>),
    pub image: (Vec<f64>, Vec<f64>),
}

impl FiberGraph {
    /// Parametrization of the fiber `L_{x2}`: `p1 -> (p1, phi(x2) + d_p f)`.
    pub fn fiber_point(&self, p1: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (p1.to_vec(), self.gf.grad_p(p1, &self.x2))
    }

    /// The graph map on a fiber point (its `p1` block parametrizes `L_{x2}`).
    pub fn psi(&self, fiber_point: &(Vec<f64>, Vec<f64>)) -> (Vec<f64>, Vec<f64>) {
        (self.gf.grad_x(&fiber_point.0, &self.x2), self.x2.clone())
    }

    pub fn x2(&self) -> &[f64] {
        &self.x2
    }

    pub fn p1_grid(&self) -> &[Vec<f64>] {
        &self.p1_grid
    }

    /// All grid points of the fiber graph, paired with their images.
    pub fn graph(&self) -> Vec<FiberGraphPoint> {
        self.p1_grid
            .iter()
            .map(|p1| {
                let fiber = self.fiber_point(p1);
                let image = self.psi(&fiber);
                FiberGraphPoint { fiber, image }
            })
            .collect()
    }

    /// Reassembles each graph point as a relation point; by construction
    /// this reproduces `sample_relation` exactly.
    pub fn as_relation_points(&self) -> Vec<RelationPoint> {
        self.graph()
            .into_iter()
            .map(|g| RelationPoint {
                p1: g.fiber.0,
                x1: g.fiber.1,
                p2: g.image.0,
                x2: g.image.1,
            })
            .collect()
    }
}

/// Decomposes the relation of `F` over the base point `x2` into the fiber
/// graph of the vertical fibration.
pub fn fiber_decomposition(
    f: &GeneratingFunction,
    x2: &[f64],
    p1_grid: Vec<Vec<f64>>,
) -> FiberGraph {
    FiberGraph {
        gf: f.clone(),
        x2: x2.to_vec(),
        p1_grid,
    }
}
