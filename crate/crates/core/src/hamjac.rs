//! Hamilton-Jacobi series for the evolution of a hamiltonian system.
//!
//! The mixed-variable generating function `S(t, p, Q)` of the time-`t`
//! evolution solves
//!
//! ```text
//! d_t S(t, p, Q) = H(d_Q S(t, p, Q), Q),      S(0, p, Q) = <p, Q>,
//! ```
//!
//! which forces the flow convention `Qdot = -dH/dp`, `Pdot = +dH/dq` on the
//! implicit system `q = d_p S`, `P = d_Q S` (see [`crate::dynamics`]; a
//! `time_reversed` flag there flips to the usual textbook convention for
//! external comparison). The solver expands `S = <p,Q> + sum_k S_k(p,Q) t^k`
//! with the recursion `(k+1) S_{k+1} = [t^k] H(d_Q S, Q)`; t-order and
//! space-order are tracked separately.

use std::sync::Arc;

use crate::compose::{self, StarValue};

type ScalarMapFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fd;
use crate::genfun::{Chart, GeneratingFunction};
use crate::jet::Jet;

/// Residual tolerance certifying an evolution series solves the equation.
pub const HJ_RESIDUAL_TOL: f64 = 1e-10;
/// Tolerance for core-form (module structure) checks.
pub const CORE_FORM_TOL: f64 = 1e-10;

type ScalarFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>;

/// A hamiltonian `H(p, q)` (or `H(t, p, q)` in time-dependent mode) on a
/// `2n`-dimensional phase-space chart, as a callable plus an optional jet
/// around `(p, q) = (0, base_q)`.
#[derive(Clone)]
pub struct Hamiltonian {
    dim: usize,
    func: ScalarFn,
    jet: Option<Jet>,
    base_q: Vec<f64>,
    time_dependent: bool,
}

impl std::fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Hamiltonian")
            .field("dim", &self.dim)
            .field("has_jet", &self.jet.is_some())
            .field("base_q", &self.base_q)
            .field("time_dependent", &self.time_dependent)
            .finish()
    }
}

impl Hamiltonian {
    pub fn time_independent(
        dim: usize,
        func: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Hamiltonian {
            dim,
            func: Arc::new(move |_t, p, q| func(p, q)),
            jet: None,
            base_q: vec![0.0; dim],
            time_dependent: false,
        }
    }

    pub fn time_dependent(
        dim: usize,
        func: impl Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Hamiltonian {
            dim,
            func: Arc::new(func),
            jet: None,
            base_q: vec![0.0; dim],
            time_dependent: true,
        }
    }

    /// Attaches a jet in `(p, q)` (time-independent) or `(t, p, q)`
    /// (time-dependent) around `(0, base_q)`, checking the constant term
    /// against the callable.
    pub fn with_jet(mut self, jet: Jet, base_q: Vec<f64>) -> Result<Self> {
        let expected = if self.time_dependent {
            1 + 2 * self.dim
        } else {
            2 * self.dim
        };
        if jet.num_vars() != expected {
            return Err(Error::VariableMismatch {
                expected,
                got: jet.num_vars(),
            });
        }
        if base_q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "hamiltonian base",
                expected: self.dim,
                got: base_q.len(),
            });
        }
        let zero_p = vec![0.0; self.dim];
        let at_base = (self.func)(0.0, &zero_p, &base_q);
        if (jet.constant_term() - at_base).abs() > crate::genfun::CONSISTENCY_TOL {
            return Err(Error::InvalidInput {
                context: "hamiltonian jet",
                detail: format!(
                    "jet constant {} vs callable {} at base",
                    jet.constant_term(),
                    at_base
                ),
            });
        }
        self.jet = Some(jet);
        self.base_q = base_q;
        Ok(self)
    }

    /// Lowers an expression `H(p, q)` with the given momentum and position
    /// identifiers into a jet around `(0, base_q)`.
    pub fn from_expr(
        expr: &Expr,
        p_vars: &[String],
        q_vars: &[String],
        base_q: &[f64],
        order: usize,
    ) -> Result<Self> {
        let dim = p_vars.len();
        if q_vars.len() != dim || base_q.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "hamiltonian variables",
                expected: dim,
                got: q_vars.len(),
            });
        }
        let mut vars = p_vars.to_vec();
        vars.extend_from_slice(q_vars);
        let mut base = vec![0.0; dim];
        base.extend_from_slice(base_q);
        let jet = expr.lower_to_jet(&vars, &base, order)?;
        let e = expr.clone();
        let varnames = vars.clone();
        let func = move |p: &[f64], q: &[f64]| {
            let mut env = std::collections::HashMap::new();
            for (name, &v) in varnames.iter().zip(p.iter().chain(q.iter())) {
                env.insert(name.clone(), v);
            }
            e.eval(&env).expect("hamiltonian expression eval")
        };
        Hamiltonian::time_independent(dim, func).with_jet(jet, base_q.to_vec())
    }

    /// Time-dependent variant: expression in `(t, p, q)`.
    pub fn from_expr_time_dependent(
        expr: &Expr,
        t_var: &str,
        p_vars: &[String],
        q_vars: &[String],
        base_q: &[f64],
        order: usize,
    ) -> Result<Self> {
        let dim = p_vars.len();
        let mut vars = vec![t_var.to_string()];
        vars.extend_from_slice(p_vars);
        vars.extend_from_slice(q_vars);
        let mut base = vec![0.0; 1 + dim];
        base.extend_from_slice(base_q);
        let jet = expr.lower_to_jet(&vars, &base, order)?;
        let e = expr.clone();
        let varnames = vars.clone();
        let func = move |t: f64, p: &[f64], q: &[f64]| {
            let mut env = std::collections::HashMap::new();
            env.insert(varnames[0].clone(), t);
            for (name, &v) in varnames[1..].iter().zip(p.iter().chain(q.iter())) {
                env.insert(name.clone(), v);
            }
            e.eval(&env).expect("hamiltonian expression eval")
        };
        Hamiltonian::time_dependent(dim, func).with_jet(jet, base_q.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn jet(&self) -> Option<&Jet> {
        self.jet.as_ref()
    }

    pub fn base_q(&self) -> &[f64] {
        &self.base_q
    }

    pub fn value(&self, t: f64, p: &[f64], q: &[f64]) -> f64 {
        (self.func)(t, p, q)
    }

    /// Gradient `(dH/dp, dH/dq)` at `(t, p, q)`: exact jet derivatives when
    /// a jet is stored, central differences on the callable otherwise.
    pub fn gradients(&self) -> GradFns {
        GradFns::new(self)
    }
}

/// Prepared gradient evaluators for a hamiltonian.
pub struct GradFns {
    dim: usize,
    time_dependent: bool,
    jet_parts: Option<(Vec<Jet>, Vec<Jet>, Vec<f64>)>,
    func: ScalarFn,
}

impl GradFns {
    fn new(h: &Hamiltonian) -> Self {
        let jet_parts = h.jet.as_ref().map(|jet| {
            let off = if h.time_dependent { 1 } else { 0 };
            let dp: Vec<Jet> = (0..h.dim).map(|i| jet.partial(off + i).unwrap()).collect();
            let dq: Vec<Jet> = (0..h.dim)
                .map(|i| jet.partial(off + h.dim + i).unwrap())
                .collect();
            (dp, dq, h.base_q.clone())
        });
        GradFns {
            dim: h.dim,
            time_dependent: h.time_dependent,
            jet_parts,
            func: h.func.clone(),
        }
    }

    fn displacement(&self, t: f64, p: &[f64], q: &[f64], base_q: &[f64]) -> Vec<f64> {
        let mut d = Vec::with_capacity(1 + 2 * self.dim);
        if self.time_dependent {
            d.push(t);
        }
        d.extend_from_slice(p);
        d.extend(q.iter().zip(base_q).map(|(a, b)| a - b));
        d
    }

    pub fn grad_p(&self, t: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
        if let Some((dp, _, base_q)) = &self.jet_parts {
            let disp = self.displacement(t, p, q, base_q);
            dp.iter().map(|j| j.eval(&disp).unwrap()).collect()
        } else {
            let func = &self.func;
            let q = q.to_vec();
            fd::gradient(&move |pp: &[f64]| func(t, pp, &q), p, fd::FD_STEP_GRADIENT)
        }
    }

    pub fn grad_q(&self, t: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
        if let Some((_, dq, base_q)) = &self.jet_parts {
            let disp = self.displacement(t, p, q, base_q);
            dq.iter().map(|j| j.eval(&disp).unwrap()).collect()
        } else {
            let func = &self.func;
            let p = p.to_vec();
            fd::gradient(&move |qq: &[f64]| func(t, &p, qq), q, fd::FD_STEP_GRADIENT)
        }
    }
}

/// Truncated power series in `t` with jet coefficients in `(p, Q)`.
#[derive(Debug, Clone)]
struct TSeries {
    coeffs: Vec<Jet>,
    num_vars: usize,
    space_order: usize,
}

impl TSeries {
    fn zero(num_vars: usize, space_order: usize, t_len: usize) -> Self {
        TSeries {
            coeffs: vec![Jet::zero(num_vars, space_order); t_len],
            num_vars,
            space_order,
        }
    }

    fn from_jet(j: Jet, t_len: usize) -> Self {
        let (num_vars, space_order) = (j.num_vars(), j.max_order());
        let mut s = TSeries::zero(num_vars, space_order, t_len);
        if t_len > 0 {
            s.coeffs[0] = j;
        }
        s
    }

    /// The series `t` itself: zero jet at t^0, unit constant at t^1.
    fn time_coordinate(num_vars: usize, space_order: usize, t_len: usize) -> Self {
        let mut s = TSeries::zero(num_vars, space_order, t_len);
        if t_len > 1 {
            s.coeffs[1] = Jet::constant(num_vars, space_order, 1.0);
        }
        s
    }

    fn t_len(&self) -> usize {
        self.coeffs.len()
    }

    fn add(&self, other: &TSeries) -> Result<TSeries> {
        let t_len = self.t_len().min(other.t_len());
        let mut out = TSeries::zero(self.num_vars, self.space_order, t_len);
        for k in 0..t_len {
            out.coeffs[k] = self.coeffs[k].checked_add(&other.coeffs[k])?;
        }
        Ok(out)
    }

    fn mul(&self, other: &TSeries) -> Result<TSeries> {
        let t_len = self.t_len().min(other.t_len());
        let mut out = TSeries::zero(self.num_vars, self.space_order, t_len);
        for i in 0..t_len {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..t_len - i {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                let prod = self.coeffs[i].checked_mul(&other.coeffs[j])?;
                out.coeffs[i + j] = out.coeffs[i + j].checked_add(&prod)?;
            }
        }
        Ok(out)
    }

    fn is_space_constant_zero(&self) -> bool {
        self.coeffs
            .first()
            .map(|c| c.constant_term() == 0.0)
            .unwrap_or(true)
    }
}

/// Substitutes t-graded series arguments into the polynomial `h`.
///
/// `arg_displacements[i]` supplies the displacement of `h`'s variable `i`
/// from its expansion point; its t^0 part must have zero constant term.
fn tseries_compose(h: &Jet, arg_displacements: &[TSeries], t_len: usize) -> Result<TSeries> {
    if arg_displacements.len() != h.num_vars() {
        return Err(Error::ArityMismatch {
            expected: h.num_vars(),
            got: arg_displacements.len(),
        });
    }
    for a in arg_displacements {
        if !a.is_space_constant_zero() {
            return Err(Error::InvalidInput {
                context: "tseries_compose",
                detail: "argument t^0 part has nonzero constant term".into(),
            });
        }
    }
    let (nv, so) = arg_displacements
        .first()
        .map(|a| (a.num_vars, a.space_order))
        .unwrap_or((0, 0));
    let one = TSeries::from_jet(Jet::constant(nv, so, 1.0), t_len);
    let mut powers: Vec<Vec<TSeries>> = (0..h.num_vars()).map(|_| vec![one.clone()]).collect();
    let mut out = TSeries::zero(nv, so, t_len);
    for (idx, c) in h.terms() {
        let mut term = TSeries::from_jet(Jet::constant(nv, so, c), t_len);
        for (i, &e) in idx.exponents().iter().enumerate() {
            if e == 0 {
                continue;
            }
            while powers[i].len() <= e as usize {
                let next = powers[i].last().unwrap().mul(&arg_displacements[i])?;
                powers[i].push(next);
            }
            term = term.mul(&powers[i][e as usize])?;
        }
        out = out.add(&term)?;
    }
    Ok(out)
}

/// The evolution generating function `S(t, p, Q) = <p, Q> + sum S_k t^k`,
/// with jets `S_k` in `(p, Q)` around `(0, base_q)`.
#[derive(Debug, Clone)]
pub struct EvolutionGenFun {
    n: usize,
    base_q: Vec<f64>,
    /// `coeffs[k]` is the t^k coefficient; `coeffs[0] = <p, Q>`.
    pub(crate) coeffs: Vec<Jet>,
    space_order: usize,
}

impl EvolutionGenFun {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order_t(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn space_order(&self) -> usize {
        self.space_order
    }

    pub fn base_q(&self) -> &[f64] {
        &self.base_q
    }

    pub fn t_coefficient(&self, k: usize) -> Option<&Jet> {
        self.coeffs.get(k)
    }

    /// Variable names `(t, p.., Q..)` used for serialization.
    pub fn var_names(&self) -> Vec<String> {
        let mut names = vec!["t".to_string()];
        if self.n == 1 {
            names.push("p".into());
            names.push("Q".into());
        } else {
            names.extend((0..self.n).map(|i| format!("p{i}")));
            names.extend((0..self.n).map(|i| format!("Q{i}")));
        }
        names
    }

    /// Assembles the whole series as a single jet in `(t, p, Q)`.
    pub fn as_total_jet(&self) -> Jet {
        let nv = 1 + 2 * self.n;
        let order = self.order_t() + self.space_order;
        let var_map: Vec<usize> = (1..nv).collect();
        let mut total = Jet::zero(nv, order);
        for (k, s_k) in self.coeffs.iter().enumerate() {
            let embedded = s_k.truncated(s_k.max_order()).embed(nv, &var_map).unwrap();
            // multiply by t^k
            let t_pow = Jet::coordinate(nv, order, 0).unwrap().powi(k as i32).unwrap();
            let term = embedded
                .truncated(order)
                .checked_mul(&t_pow)
                .unwrap();
            total = total.checked_add(&term).unwrap();
        }
        total
    }

    /// Numeric substitution of `t`: the jet `sum_k t^k S_k` in `(p, Q)`.
    pub fn freeze(&self, t: f64) -> Jet {
        let mut out = Jet::zero(2 * self.n, self.space_order);
        let mut tk = 1.0;
        for (k, s_k) in self.coeffs.iter().enumerate() {
            if k > 0 {
                tk *= t;
            }
            out = out.checked_add(&s_k.scale(tk)).unwrap();
        }
        out
    }

    /// Packages the frozen series as a generating function `T*Q -> T*Q`.
    ///
    /// At `t = 0` this is the identity generating function. At `t != 0` the
    /// core is read off the p-linear block and the remainder keeps any
    /// p-degree-0 terms; for generic hamiltonians the result is a valid
    /// relation germ but not in canonical micromorphism form (the image of
    /// the zero section leaves the zero section), so the canonical
    /// constraints are surfaced through [`GeneratingFunction::validate`]
    /// rather than enforced here.
    pub fn freeze_time(&self, t: f64) -> Result<GeneratingFunction> {
        let frozen = self.freeze(t);
        let chart = self.phase_chart();
        GeneratingFunction::from_total_jet(&frozen, self.n, chart, false, None)
    }

    fn phase_chart(&self) -> Chart {
        let (p_names, q_names) = if self.n == 1 {
            (vec!["p".to_string()], vec!["Q".to_string()])
        } else {
            (
                (0..self.n).map(|i| format!("p{i}")).collect(),
                (0..self.n).map(|i| format!("Q{i}")).collect(),
            )
        };
        Chart::new(p_names, q_names, self.base_q.clone())
    }

    /// Packages the full series as a generating function
    /// `T*E (x) T*Q -> T*Q` with momentum block `(t, p)`; its core is
    /// `Q -> (H(0, Q), Q)`.
    pub fn to_genfun(&self) -> Result<GeneratingFunction> {
        let total = self.as_total_jet();
        let mut p_names = vec!["t".to_string()];
        let chart_pq = self.phase_chart();
        p_names.extend(chart_pq.p_names.clone());
        let chart = Chart::new(p_names, chart_pq.x_names, self.base_q.clone());
        GeneratingFunction::from_total_jet(&total, 1 + self.n, chart, true, None)
    }

    /// Partial derivative series `d S / d var` where `var` indexes `(p, Q)`.
    fn grad_series(&self, var: usize) -> Result<Vec<Jet>> {
        self.coeffs.iter().map(|c| c.partial(var)).collect()
    }

    /// Evaluates `d_t S(t, p, Q)`.
    pub fn dt_at(&self, t: f64, p: &[f64], q_cap: &[f64]) -> f64 {
        let disp = self.displacement(p, q_cap);
        let mut out = 0.0;
        let mut tk = 1.0;
        for k in 1..self.coeffs.len() {
            if k > 1 {
                tk *= t;
            }
            out += k as f64 * tk * self.coeffs[k].eval(&disp).unwrap();
        }
        out
    }

    pub fn displacement(&self, p: &[f64], q_cap: &[f64]) -> Vec<f64> {
        let mut d = p.to_vec();
        d.extend(q_cap.iter().zip(&self.base_q).map(|(a, b)| a - b));
        d
    }

    /// Max coefficient of the equation residual `d_t S - H(d_Q S, Q)` over
    /// t-degrees `<= order_t - 1`.
    pub fn residual_max(&self, h: &Hamiltonian) -> Result<f64> {
        let t_len = self.order_t(); // residual is certified through t^(order_t - 1)
        if t_len == 0 {
            return Ok(0.0);
        }
        let rhs = self.hj_rhs(h, t_len)?;
        let mut worst = 0.0_f64;
        for k in 0..t_len {
            let lhs = self.coeffs[k + 1].scale((k + 1) as f64);
            worst = worst.max(lhs.max_coeff_diff(&rhs.coeffs[k]));
        }
        Ok(worst)
    }

    /// Composes `H(d_Q S, Q)` (and explicit `t` in time-dependent mode) as a
    /// t-series truncated at `t_len` coefficients.
    fn hj_rhs(&self, h: &Hamiltonian, t_len: usize) -> Result<TSeries> {
        let jet = h.jet().ok_or(Error::MissingJet { context: "hj rhs" })?;
        let n = self.n;
        let nv = 2 * n;
        let so = self.space_order;
        let mut args: Vec<TSeries> = Vec::with_capacity(jet.num_vars());
        if h.is_time_dependent() {
            args.push(TSeries::time_coordinate(nv, so, t_len));
        }
        for i in 0..n {
            // displacement of the momentum slot: d_{Q_i} S as a t-series
            let series = self.grad_series(n + i)?;
            let mut ts = TSeries::zero(nv, so, t_len);
            for (k, j) in series.into_iter().enumerate().take(t_len) {
                ts.coeffs[k] = j.truncated(so);
            }
            args.push(ts);
        }
        for i in 0..n {
            // displacement of the position slot: the coordinate jet u_{Q_i}
            args.push(TSeries::from_jet(
                Jet::coordinate(nv, so, n + i)?,
                t_len,
            ));
        }
        tseries_compose(jet, &args, t_len)
    }
}

/// Solves the evolution equation by the order-by-order recursion up to
/// `t^order`. The hamiltonian jet must be stored to space order `>= order`.
pub fn hj_series(h: &Hamiltonian, order: usize) -> Result<EvolutionGenFun> {
    let jet = h.jet().ok_or(Error::MissingJet {
        context: "hj_series",
    })?;
    let n = h.dim();
    let space_order = jet.max_order();
    if space_order < order {
        return Err(Error::OrderUnderflow {
            context: "hj_series hamiltonian jet",
            requested: order,
            stored: space_order,
        });
    }

    // S_0 = <p, Q> around (0, base_q): sum_i p_i (base_q_i + u_{Q_i})
    let nv = 2 * n;
    let mut s0 = Jet::zero(nv, space_order);
    for i in 0..n {
        let p_i = Jet::coordinate(nv, space_order, i)?;
        let q_i = Jet::coordinate(nv, space_order, n + i)?.add_scalar(h.base_q()[i]);
        s0 = s0.checked_add(&p_i.checked_mul(&q_i)?)?;
    }

    let mut evo = EvolutionGenFun {
        n,
        base_q: h.base_q().to_vec(),
        coeffs: vec![s0],
        space_order,
    };
    for k in 0..order {
        let rhs = evo.hj_rhs(h, k + 1)?;
        let s_next = rhs.coeffs[k].scale(1.0 / (k + 1) as f64);
        evo.coeffs.push(s_next);
    }
    Ok(evo)
}

/// Recovers the hamiltonian jet as the t-linear coefficient of the series.
pub fn hamiltonian_from_genfun(s: &EvolutionGenFun) -> Jet {
    s.t_coefficient(1)
        .cloned()
        .unwrap_or_else(|| Jet::zero(2 * s.dim(), s.space_order()))
}

/// The core map `J(q) = (H(0, q), q)` of the evolution relation.
#[derive(Clone)]
pub struct CoreJ {
    h_at_zero: ScalarMapFn,
    dim: usize,
}

impl CoreJ {
    pub fn eval(&self, q: &[f64]) -> (f64, Vec<f64>) {
        ((self.h_at_zero)(q), q.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn core_j(h: &Hamiltonian) -> CoreJ {
    let func = h.func.clone();
    let dim = h.dim();
    CoreJ {
        h_at_zero: Arc::new(move |q: &[f64]| func(0.0, &vec![0.0; dim], q)),
        dim,
    }
}

/// Max over the grid of
/// `|star(freeze(t1), freeze(t2))(p, Q) - freeze(t1 + t2)(p, Q)|`,
/// the numeric shadow of the time-addition module axiom for time-independent
/// hamiltonians (`t1 = 0` reduces it to the unit axiom).
pub fn semigroup_defect(
    h: &Hamiltonian,
    t1: f64,
    t2: f64,
    grid: &[(Vec<f64>, Vec<f64>)],
    order: usize,
) -> Result<f64> {
    let s = hj_series(h, order)?;
    semigroup_defect_of(&s, t1, t2, grid)
}

/// Same defect computed from an existing evolution series.
pub fn semigroup_defect_of(
    s: &EvolutionGenFun,
    t1: f64,
    t2: f64,
    grid: &[(Vec<f64>, Vec<f64>)],
) -> Result<f64> {
    let f1 = s.freeze_time(t1)?;
    let f2 = s.freeze_time(t2)?;
    let f12 = s.freeze_time(t1 + t2)?;
    let mut worst = 0.0_f64;
    for (p, q_cap) in grid {
        let sv: StarValue = compose::star_numeric(
            &f1,
            &f2,
            p,
            q_cap,
            compose::DEFAULT_NEWTON_TOL,
            compose::DEFAULT_NEWTON_MAX_ITER,
        )?;
        let direct = f12.value(p, q_cap);
        worst = worst.max((sv.value - direct).abs());
    }
    Ok(worst)
}

/// Generating function `S(t1, t2; E) = (t1 + t2) E` of the energy-line
/// groupoid product (time addition over a fixed energy): the cotangent lift
/// of the diagonal `E -> (E, E)`.
pub fn energy_monoid_genfun() -> GeneratingFunction {
    let diag = crate::genfun::CoreMap::from_jets(
        vec![
            Jet::coordinate(1, 4, 0).unwrap(),
            Jet::coordinate(1, 4, 0).unwrap(),
        ],
        vec![0.0],
    )
    .unwrap();
    let mut gf = GeneratingFunction::cotangent_lift(&diag);
    // name the chart after its role: fiber times over the energy base
    let chart = Chart::new(
        vec!["t1".into(), "t2".into()],
        vec!["E".into()],
        vec![0.0],
    );
    gf = GeneratingFunction::new(gf.core().clone(), gf.remainder().clone(), chart).unwrap();
    gf
}

/// Result of checking that a generating function `T*E (x) T*Q -> T*Q` has
/// core of the form `Q -> (U(Q), Q)`.
pub struct CoreFormCheck {
    pub pass: bool,
    pub max_defect: f64,
    u: ScalarMapFn,
}

impl CoreFormCheck {
    /// The extracted energy component `U`.
    pub fn u_at(&self, q: &[f64]) -> f64 {
        (self.u)(q)
    }
}

/// Verifies the Q-component of the core is the identity on the samples (to
/// [`CORE_FORM_TOL`]) and extracts the energy component `U`.
pub fn core_form_check(f: &GeneratingFunction, samples: &[Vec<f64>]) -> Result<CoreFormCheck> {
    let n = f.dim_x();
    if f.dim_p() != n + 1 {
        return Err(Error::DimensionMismatch {
            context: "core_form_check momentum block",
            expected: n + 1,
            got: f.dim_p(),
        });
    }
    let core = f.core().clone();
    let mut max_defect = 0.0_f64;
    for q in samples {
        let c = core.eval(q);
        for (ci, qi) in c[1..].iter().zip(q) {
            max_defect = max_defect.max((ci - qi).abs());
        }
    }
    let pass = max_defect <= CORE_FORM_TOL;
    let u = Arc::new(move |q: &[f64]| core.eval(q)[0]);
    Ok(CoreFormCheck {
        pass,
        max_defect,
        u,
    })
}
