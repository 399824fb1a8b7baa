//! Local generating functions of canonical relations between cotangent charts.
//!
//! A relation germ from `T*A` to `T*B` with core map `phi: B -> A` is stored
//! as `F(p1, x2) = <p1, phi(x2)> + f(p1, x2)`: a [`CoreMap`] plus a remainder
//! jet `f` in the variables `(p1, x2)`. In canonical (micromorphism) form the
//! remainder satisfies `f(0, x2) = 0` and `d_p f(0, x2) = 0`; relaxed forms
//! with a nonzero p-degree-0 block arise when an evolution series is frozen
//! at a fixed time and are accepted everywhere a critical-point solve is the
//! only requirement.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::fd;
use crate::jet::{Jet, JetJson};

/// Tolerance for the canonical-form coefficient constraints.
pub const VALIDATION_TOL: f64 = 1e-9;
/// Tolerance for callable-vs-jet consistency at the base point.
pub const CONSISTENCY_TOL: f64 = 1e-10;
/// Remainder order used when a core map carries no jet data.
pub const DEFAULT_REMAINDER_ORDER: usize = 12;

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Smooth map `phi: B -> A` between chart domains, as a callable with an
/// optional jet representation around a base point of `B`.
#[derive(Clone)]
pub struct CoreMap {
    dim_source: usize,
    dim_target: usize,
    func: VecFn,
    jets: Option<Vec<Jet>>,
    base: Vec<f64>,
}

impl std::fmt::Debug for CoreMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoreMap")
            .field("dim_source", &self.dim_source)
            .field("dim_target", &self.dim_target)
            .field("has_jets", &self.jets.is_some())
            .field("base", &self.base)
            .finish()
    }
}

impl CoreMap {
    pub fn from_fn(
        dim_source: usize,
        dim_target: usize,
        func: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        CoreMap {
            dim_source,
            dim_target,
            func: Arc::new(func),
            jets: None,
            base: vec![0.0; dim_source],
        }
    }

    /// Builds the map from jets expanded around `base`; the callable is jet
    /// evaluation.
    pub fn from_jets(jets: Vec<Jet>, base: Vec<f64>) -> Result<Self> {
        let dim_target = jets.len();
        let dim_source = base.len();
        for j in &jets {
            if j.num_vars() != dim_source {
                return Err(Error::VariableMismatch {
                    expected: dim_source,
                    got: j.num_vars(),
                });
            }
        }
        let eval_jets = jets.clone();
        let eval_base = base.clone();
        let func: VecFn = Arc::new(move |x: &[f64]| {
            let disp: Vec<f64> = x.iter().zip(&eval_base).map(|(a, b)| a - b).collect();
            eval_jets
                .iter()
                .map(|j| j.eval(&disp).expect("core jet arity"))
                .collect()
        });
        Ok(CoreMap {
            dim_source,
            dim_target,
            func,
            jets: Some(jets),
            base,
        })
    }

    /// Attaches jet data to a callable map, checking agreement at the base
    /// point to [`CONSISTENCY_TOL`].
    pub fn with_jets(mut self, jets: Vec<Jet>, base: Vec<f64>) -> Result<Self> {
        if jets.len() != self.dim_target || base.len() != self.dim_source {
            return Err(Error::DimensionMismatch {
                context: "core map jets",
                expected: self.dim_target,
                got: jets.len(),
            });
        }
        let at_base = (self.func)(&base);
        for (i, j) in jets.iter().enumerate() {
            if (j.constant_term() - at_base[i]).abs() > CONSISTENCY_TOL {
                return Err(Error::InvalidInput {
                    context: "core map jets",
                    detail: format!(
                        "component {i}: jet constant {} vs callable {} at base",
                        j.constant_term(),
                        at_base[i]
                    ),
                });
            }
        }
        self.jets = Some(jets);
        self.base = base;
        Ok(self)
    }

    pub fn identity(dim: usize, order: usize) -> Self {
        let jets: Vec<Jet> = (0..dim)
            .map(|i| Jet::coordinate(dim, order, i).unwrap())
            .collect();
        CoreMap::from_jets(jets, vec![0.0; dim]).unwrap()
    }

    /// The zero map `B -> A` (every x2 goes to the origin of the A chart).
    pub fn zero_map(dim_source: usize, dim_target: usize, order: usize) -> Self {
        let jets = vec![Jet::zero(dim_source, order); dim_target];
        CoreMap::from_jets(jets, vec![0.0; dim_source]).unwrap()
    }

    /// Lowers component expressions into jets around `base`.
    pub fn from_exprs(
        exprs: &[Expr],
        vars: &[String],
        base: &[f64],
        order: usize,
    ) -> Result<Self> {
        let jets: Vec<Jet> = exprs
            .iter()
            .map(|e| e.lower_to_jet(vars, base, order))
            .collect::<Result<_>>()?;
        CoreMap::from_jets(jets, base.to_vec())
    }

    pub fn dim_source(&self) -> usize {
        self.dim_source
    }

    pub fn dim_target(&self) -> usize {
        self.dim_target
    }

    pub fn jets(&self) -> Option<&[Jet]> {
        self.jets.as_deref()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn jet_order(&self) -> Option<usize> {
        self.jets
            .as_ref()
            .and_then(|js| js.iter().map(Jet::max_order).min())
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.func)(x)
    }

    /// Jacobian `d phi / d x` (dim_target x dim_source); exact from jets when
    /// present, otherwise central differences at [`fd::FD_STEP_GRADIENT`].
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        if let Some(jets) = &self.jets {
            let disp: Vec<f64> = x.iter().zip(&self.base).map(|(a, b)| a - b).collect();
            DMatrix::from_fn(self.dim_target, self.dim_source, |r, c| {
                jets[r]
                    .partial(c)
                    .and_then(|d| d.eval(&disp))
                    .expect("core jet jacobian")
            })
        } else {
            let f = self.func.clone();
            fd::jacobian(&move |y: &[f64]| f(y), x, fd::FD_STEP_GRADIENT)
        }
    }

    /// Pointwise cotangent map: `p1 -> (d phi(x2))^T p1`.
    pub fn cotangent_map(&self, x2: &[f64], p1: &[f64]) -> Vec<f64> {
        let jac = self.jacobian(x2);
        let mut out = vec![0.0; self.dim_source];
        for (j, o) in out.iter_mut().enumerate() {
            *o = (0..self.dim_target).map(|i| jac[(i, j)] * p1[i]).sum();
        }
        out
    }

    /// Composition `self ∘ inner` (evaluates `inner` first).
    pub fn compose(&self, inner: &CoreMap) -> Result<CoreMap> {
        if inner.dim_target != self.dim_source {
            return Err(Error::DimensionMismatch {
                context: "core map composition",
                expected: self.dim_source,
                got: inner.dim_target,
            });
        }
        let outer_f = self.func.clone();
        let inner_f = inner.func.clone();
        let func: VecFn = Arc::new(move |x: &[f64]| outer_f(&inner_f(x)));
        let jets = match (&self.jets, &inner.jets) {
            (Some(outer_jets), Some(inner_jets)) => {
                let args: Vec<Jet> = inner_jets
                    .iter()
                    .zip(&self.base)
                    .map(|(j, &b)| j.add_scalar(-b))
                    .collect();
                Some(
                    outer_jets
                        .iter()
                        .map(|j| j.compose(&args))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            _ => None,
        };
        Ok(CoreMap {
            dim_source: inner.dim_source,
            dim_target: self.dim_target,
            func,
            jets,
            base: inner.base.clone(),
        })
    }
}

/// Chart metadata: variable names and the expansion base of the x2 block.
#[derive(Debug, Clone)]
pub struct Chart {
    pub p_names: Vec<String>,
    pub x_names: Vec<String>,
    pub base_x: Vec<f64>,
}

impl Chart {
    pub fn new(p_names: Vec<String>, x_names: Vec<String>, base_x: Vec<f64>) -> Self {
        Chart {
            p_names,
            x_names,
            base_x,
        }
    }

    pub fn default_names(k: usize, l: usize) -> Self {
        Chart {
            p_names: (0..k).map(|i| format!("p{i}")).collect(),
            x_names: (0..l).map(|i| format!("x{i}")).collect(),
            base_x: vec![0.0; l],
        }
    }

    pub fn var_names(&self) -> Vec<String> {
        self.p_names
            .iter()
            .chain(self.x_names.iter())
            .cloned()
            .collect()
    }
}

/// A point `((p1, x1), (p2, x2))` of a sampled canonical relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationPoint {
    pub p1: Vec<f64>,
    pub x1: Vec<f64>,
    pub p2: Vec<f64>,
    pub x2: Vec<f64>,
}

impl RelationPoint {
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.p1.clone();
        v.extend_from_slice(&self.x1);
        v.extend_from_slice(&self.p2);
        v.extend_from_slice(&self.x2);
        v
    }
}

/// Image of a relation point under the Schwartz transform:
/// `((p1,x1),(p2,x2)) -> (-p1, p2, x1, x2)` in `T*(A x B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchwartzPoint {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

pub fn schwartz(pt: &RelationPoint) -> SchwartzPoint {
    SchwartzPoint {
        q1: pt.p1.iter().map(|p| -p).collect(),
        q2: pt.p2.clone(),
        x1: pt.x1.clone(),
        x2: pt.x2.clone(),
    }
}

pub fn schwartz_inverse(pt: &SchwartzPoint) -> RelationPoint {
    RelationPoint {
        p1: pt.q1.iter().map(|q| -q).collect(),
        x1: pt.x1.clone(),
        p2: pt.q2.clone(),
        x2: pt.x2.clone(),
    }
}

/// Local generating function `F(p1, x2) = <p1, phi(x2)> + f(p1, x2)`.
#[derive(Debug, Clone)]
pub struct GeneratingFunction {
    core: CoreMap,
    remainder: Jet,
    chart: Chart,
}

impl GeneratingFunction {
    /// Canonical constructor: validates the micromorphism coefficient
    /// constraints (`f(0,.) = 0` and `d_p f(0,.) = 0`) to [`VALIDATION_TOL`].
    pub fn new(core: CoreMap, remainder: Jet, chart: Chart) -> Result<Self> {
        let gf = Self::new_relaxed(core, remainder, chart)?;
        gf.validate(VALIDATION_TOL)?;
        Ok(gf)
    }

    /// Constructor that checks dimensions only; the remainder may carry a
    /// p-degree-0 block (frozen-time evolution data).
    pub fn new_relaxed(core: CoreMap, remainder: Jet, chart: Chart) -> Result<Self> {
        let k = core.dim_target;
        let l = core.dim_source;
        if remainder.num_vars() != k + l {
            return Err(Error::VariableMismatch {
                expected: k + l,
                got: remainder.num_vars(),
            });
        }
        if chart.p_names.len() != k || chart.x_names.len() != l || chart.base_x.len() != l {
            return Err(Error::DimensionMismatch {
                context: "generating function chart",
                expected: k + l,
                got: chart.p_names.len() + chart.x_names.len(),
            });
        }
        Ok(GeneratingFunction {
            core,
            remainder,
            chart,
        })
    }

    /// Cotangent lift of a core map: remainder identically zero.
    pub fn cotangent_lift(phi: &CoreMap) -> Self {
        let order = phi.jet_order().unwrap_or(DEFAULT_REMAINDER_ORDER);
        Self::cotangent_lift_with_order(phi, order)
    }

    pub fn cotangent_lift_with_order(phi: &CoreMap, order: usize) -> Self {
        let k = phi.dim_target;
        let l = phi.dim_source;
        let mut chart = Chart::default_names(k, l);
        chart.base_x = phi.base.clone();
        GeneratingFunction {
            core: phi.clone(),
            remainder: Jet::zero(k + l, order),
            chart,
        }
    }

    /// Splits a total jet `F(p, x)` in `k + l` variables into core (the
    /// p-linear block) and remainder. With `strict` set, a p-degree-0 block
    /// larger than [`VALIDATION_TOL`] is an error and smaller junk is
    /// dropped; otherwise it is kept in the remainder.
    pub fn from_total_jet(
        total: &Jet,
        k: usize,
        chart: Chart,
        strict: bool,
        core_func: Option<VecFn>,
    ) -> Result<Self> {
        let nv = total.num_vars();
        if k > nv {
            return Err(Error::DimensionMismatch {
                context: "from_total_jet",
                expected: nv,
                got: k,
            });
        }
        let l = nv - k;
        let core_order = total.max_order().saturating_sub(1);
        let mut core_terms: Vec<Vec<(Vec<u8>, f64)>> = vec![Vec::new(); k];
        let mut remainder_terms: Vec<(Vec<u8>, f64)> = Vec::new();
        for (idx, c) in total.terms() {
            let pdeg = idx.degree_prefix(k);
            match pdeg {
                0 => {
                    if strict {
                        if c.abs() > VALIDATION_TOL {
                            return Err(Error::MalformedGeneratingFunction(format!(
                                "p-degree-0 coefficient {c:.3e} at {idx}"
                            )));
                        }
                        // sub-tolerance junk from series arithmetic: drop
                    } else {
                        remainder_terms.push((idx.exponents().to_vec(), c));
                    }
                }
                1 => {
                    let i = idx.exponents()[..k].iter().position(|&e| e == 1).unwrap();
                    let xexp = idx.exponents()[k..].to_vec();
                    if xexp.iter().map(|&e| e as usize).sum::<usize>() <= core_order {
                        core_terms[i].push((xexp, c));
                    }
                }
                _ => remainder_terms.push((idx.exponents().to_vec(), c)),
            }
        }
        let remainder = {
            let term_refs: Vec<(&[u8], f64)> = remainder_terms
                .iter()
                .map(|(e, c)| (e.as_slice(), *c))
                .collect();
            Jet::from_terms(nv, total.max_order(), &term_refs)?
        };
        let core_jets: Vec<Jet> = core_terms
            .into_iter()
            .map(|terms| {
                let term_refs: Vec<(&[u8], f64)> =
                    terms.iter().map(|(e, c)| (e.as_slice(), *c)).collect();
                Jet::from_terms(l, core_order, &term_refs)
            })
            .collect::<Result<_>>()?;
        let mut core = CoreMap::from_jets(core_jets, chart.base_x.clone())?;
        if let Some(f) = core_func {
            core.func = f;
        }
        GeneratingFunction::new_relaxed(core, remainder, chart)
    }

    pub fn core(&self) -> &CoreMap {
        &self.core
    }

    pub fn remainder(&self) -> &Jet {
        &self.remainder
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim_p(&self) -> usize {
        self.core.dim_target
    }

    pub fn dim_x(&self) -> usize {
        self.core.dim_source
    }

    /// Checks the canonical coefficient constraints on the remainder.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let defect = self.micromorphism_defect();
        if defect > tol {
            return Err(Error::MalformedGeneratingFunction(format!(
                "remainder constraint defect {defect:.3e} exceeds {tol:.1e}"
            )));
        }
        Ok(())
    }

    /// Largest remainder coefficient of p-degree 0 or 1 (zero for canonical
    /// micromorphism generating functions).
    pub fn micromorphism_defect(&self) -> f64 {
        let k = self.dim_p();
        let mut worst: f64 = 0.0;
        for (idx, c) in self.remainder.terms() {
            if idx.degree_prefix(k) <= 1 {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    pub fn is_canonical(&self) -> bool {
        self.validate(VALIDATION_TOL).is_ok()
    }

    fn displacement(&self, p1: &[f64], x2: &[f64]) -> Vec<f64> {
        let mut d = p1.to_vec();
        d.extend(x2.iter().zip(&self.chart.base_x).map(|(a, b)| a - b));
        d
    }

    /// `F(p1, x2)`.
    pub fn value(&self, p1: &[f64], x2: &[f64]) -> f64 {
        let phi = self.core.eval(x2);
        let disp = self.displacement(p1, x2);
        fd::dot(p1, &phi) + self.remainder.eval(&disp).expect("remainder arity")
    }

    /// `d_p F(p1, x2) = phi(x2) + d_p f(p1, x2)` (the x1 block).
    pub fn grad_p(&self, p1: &[f64], x2: &[f64]) -> Vec<f64> {
        let mut out = self.core.eval(x2);
        let disp = self.displacement(p1, x2);
        for (i, o) in out.iter_mut().enumerate() {
            *o += self
                .remainder
                .partial(i)
                .and_then(|d| d.eval(&disp))
                .expect("remainder partial");
        }
        out
    }

    /// `d_x F(p1, x2) = (T*phi) p1 + d_x f(p1, x2)` (the p2 block).
    pub fn grad_x(&self, p1: &[f64], x2: &[f64]) -> Vec<f64> {
        let k = self.dim_p();
        let mut out = self.core.cotangent_map(x2, p1);
        let disp = self.displacement(p1, x2);
        for (j, o) in out.iter_mut().enumerate() {
            *o += self
                .remainder
                .partial(k + j)
                .and_then(|d| d.eval(&disp))
                .expect("remainder partial");
        }
        out
    }

    /// Samples the relation at `(p1, x2)`:
    /// `(p1, phi(x2) + d_p f, (T*phi) p1 + d_x f, x2)`.
    pub fn sample_relation(&self, p1: &[f64], x2: &[f64]) -> RelationPoint {
        RelationPoint {
            p1: p1.to_vec(),
            x1: self.grad_p(p1, x2),
            p2: self.grad_x(p1, x2),
            x2: x2.to_vec(),
        }
    }

    /// Recovers the core map after validating the remainder constraints.
    pub fn core_of(&self) -> Result<CoreMap> {
        self.validate(VALIDATION_TOL)?;
        Ok(self.core.clone())
    }

    /// The deformation of the cotangent lift determined by the remainder:
    /// `(p1, x1, p2, x2) -> (p1, x1 + d_p f, p2 + d_x f, x2)`.
    pub fn deformation_map(
        &self,
        p1: &[f64],
        x1: &[f64],
        p2: &[f64],
        x2: &[f64],
    ) -> RelationPoint {
        let k = self.dim_p();
        let disp = self.displacement(p1, x2);
        let x1_out: Vec<f64> = x1
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                v + self
                    .remainder
                    .partial(i)
                    .and_then(|d| d.eval(&disp))
                    .expect("remainder partial")
            })
            .collect();
        let p2_out: Vec<f64> = p2
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                v + self
                    .remainder
                    .partial(k + j)
                    .and_then(|d| d.eval(&disp))
                    .expect("remainder partial")
            })
            .collect();
        RelationPoint {
            p1: p1.to_vec(),
            x1: x1_out,
            p2: p2_out,
            x2: x2.to_vec(),
        }
    }

    /// Serializable wire form.
    pub fn to_json(&self) -> GenFunJson {
        let names = self.chart.var_names();
        GenFunJson {
            core: CoreJson {
                expr: None,
                jet: self
                    .core
                    .jets()
                    .map(|js| js.iter().map(|j| j.to_json(&self.chart.x_names)).collect()),
                base: Some(self.core.base().to_vec()),
                order: None,
            },
            remainder: self.remainder.to_json(&names),
            p_vars: self.chart.p_names.clone(),
            x_vars: self.chart.x_names.clone(),
        }
    }

    pub fn from_json(json: &GenFunJson) -> Result<Self> {
        let k = json.p_vars.len();
        let l = json.x_vars.len();
        let base = json.core.base.clone().unwrap_or_else(|| vec![0.0; l]);
        let core = match (&json.core.expr, &json.core.jet) {
            (Some(exprs), _) => {
                let parsed: Vec<Expr> = exprs
                    .components()
                    .iter()
                    .map(|s| expr::parse(s))
                    .collect::<Result<_>>()?;
                let order = json.core.order.unwrap_or(DEFAULT_REMAINDER_ORDER);
                CoreMap::from_exprs(&parsed, &json.x_vars, &base, order)?
            }
            (None, Some(jets)) => {
                let jets: Vec<Jet> = jets.iter().map(Jet::from_json).collect::<Result<_>>()?;
                CoreMap::from_jets(jets, base)?
            }
            (None, None) => {
                return Err(Error::InvalidInput {
                    context: "generating function json",
                    detail: "core needs either `expr` or `jet`".into(),
                })
            }
        };
        if core.dim_target != k {
            return Err(Error::DimensionMismatch {
                context: "generating function json core",
                expected: k,
                got: core.dim_target,
            });
        }
        let remainder = Jet::from_json(&json.remainder)?;
        let chart = Chart::new(
            json.p_vars.clone(),
            json.x_vars.clone(),
            core.base().to_vec(),
        );
        GeneratingFunction::new_relaxed(core, remainder, chart)
    }
}

/// Core expressions: a single string for one component or a list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprSpec {
    One(String),
    Many(Vec<String>),
}

impl ExprSpec {
    pub fn components(&self) -> Vec<&str> {
        match self {
            ExprSpec::One(s) => vec![s.as_str()],
            ExprSpec::Many(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

/// JSON wire form of a core map: component expressions or jets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoreJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<ExprSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jet: Option<Vec<JetJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

/// JSON wire form of a generating function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenFunJson {
    pub core: CoreJson,
    pub remainder: JetJson,
    pub p_vars: Vec<String>,
    pub x_vars: Vec<String>,
}

/// The canonical chart identification
/// `K_phi((v1, p2), (p1, x2)) = (p1, phi(x2) + v1, (T*phi) p1 + p2, x2)`.
pub fn canonical_embedding(
    phi: &CoreMap,
    v1: &[f64],
    p2: &[f64],
    p1: &[f64],
    x2: &[f64],
) -> RelationPoint {
    let mut x1 = phi.eval(x2);
    for (a, b) in x1.iter_mut().zip(v1) {
        *a += b;
    }
    let mut p2_out = phi.cotangent_map(x2, p1);
    for (a, b) in p2_out.iter_mut().zip(p2) {
        *a += b;
    }
    RelationPoint {
        p1: p1.to_vec(),
        x1,
        p2: p2_out,
        x2: x2.to_vec(),
    }
}

/// Closure sampling the relation of `F` over `(p1, x2)` parameters, for use
/// with [`crate::morse::lagrangian_defect`].
pub fn relation_sampler(f: &GeneratingFunction) -> impl Fn(&[f64]) -> RelationPoint {
    let f = f.clone();
    let k = f.dim_p();
    move |u: &[f64]| f.sample_relation(&u[..k], &u[k..])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lift_of_square() -> GeneratingFunction {
        // phi(x) = x^2 on the line
        let phi = CoreMap::from_jets(
            vec![Jet::from_terms(1, 6, &[(&[2], 1.0)]).unwrap()],
            vec![0.0],
        )
        .unwrap();
        GeneratingFunction::cotangent_lift(&phi)
    }

    fn p2x_example() -> GeneratingFunction {
        // phi = 0, f(p, x) = p^2 x
        let phi = CoreMap::zero_map(1, 1, 6);
        let f = Jet::from_terms(2, 6, &[(&[2, 1], 1.0)]).unwrap();
        GeneratingFunction::new(phi, f, Chart::default_names(1, 1)).unwrap()
    }

    #[test]
    fn identity_lift_is_diagonal() {
        let e = GeneratingFunction::cotangent_lift(&CoreMap::identity(1, 6));
        let pt = e.sample_relation(&[1.0], &[1.0]);
        assert_eq!(pt.p1, vec![1.0]);
        assert_eq!(pt.x1, vec![1.0]);
        assert_eq!(pt.p2, vec![1.0]);
        assert_eq!(pt.x2, vec![1.0]);
        assert!((e.value(&[2.0], &[3.0]) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn lift_of_square_samples() {
        // phi(x)=x^2, sample at (1, 2): ((1, 4), (4, 2)) since (T*phi)p = 2 x p
        let f = lift_of_square();
        let pt = f.sample_relation(&[1.0], &[2.0]);
        assert_eq!(pt.x1, vec![4.0]);
        assert_eq!(pt.p2, vec![4.0]);
    }

    #[test]
    fn lift_of_constant_zero() {
        let f = GeneratingFunction::cotangent_lift(&CoreMap::zero_map(1, 1, 4));
        let pt = f.sample_relation(&[0.7], &[0.3]);
        assert_eq!(pt.x1, vec![0.0]);
        assert_eq!(pt.p2, vec![0.0]);
    }

    #[test]
    fn p2x_sample_matches_closed_form() {
        // (p, x) -> ((p, 2xp), (p^2, x)) at (1, 2) gives ((1,4),(1,2))
        let f = p2x_example();
        let pt = f.sample_relation(&[1.0], &[2.0]);
        assert_eq!(pt.x1, vec![4.0]);
        assert_eq!(pt.p2, vec![1.0]);
        // zero section maps to the core
        let z = f.sample_relation(&[0.0], &[5.0]);
        assert_eq!(z.x1, vec![0.0]);
        assert_eq!(z.p2, vec![0.0]);
    }

    #[test]
    fn core_of_rejects_malformed() {
        let phi = CoreMap::zero_map(1, 1, 4);
        // f(p, x) = p x violates the p-degree-1 constraint
        let f = Jet::from_terms(2, 4, &[(&[1, 1], 1.0)]).unwrap();
        assert!(
            GeneratingFunction::new(phi.clone(), f.clone(), Chart::default_names(1, 1)).is_err()
        );
        let relaxed = GeneratingFunction::new_relaxed(phi, f, Chart::default_names(1, 1)).unwrap();
        assert!(relaxed.core_of().is_err());
    }

    #[test]
    fn from_total_jet_splits_core() {
        // F(p, x) = p x^2 -> phi(x) = x^2; F = px + p^2 x -> phi(x) = x
        let f1 = Jet::from_terms(2, 5, &[(&[1, 2], 1.0)]).unwrap();
        let g1 =
            GeneratingFunction::from_total_jet(&f1, 1, Chart::default_names(1, 1), true, None)
                .unwrap();
        assert_eq!(g1.core().jets().unwrap()[0].coeff(&[2]), 1.0);
        assert!(g1.remainder().is_zero());

        let f2 = Jet::from_terms(2, 5, &[(&[1, 1], 1.0), (&[2, 1], 1.0)]).unwrap();
        let g2 =
            GeneratingFunction::from_total_jet(&f2, 1, Chart::default_names(1, 1), true, None)
                .unwrap();
        assert_eq!(g2.core().jets().unwrap()[0].coeff(&[1]), 1.0);
        assert_eq!(g2.remainder().coeff(&[2, 1]), 1.0);

        // p^2 x alone: core is the zero map
        let f3 = Jet::from_terms(2, 5, &[(&[2, 1], 1.0)]).unwrap();
        let g3 =
            GeneratingFunction::from_total_jet(&f3, 1, Chart::default_names(1, 1), true, None)
                .unwrap();
        assert!(g3.core().jets().unwrap()[0].is_zero());
    }

    #[test]
    fn schwartz_formula_and_involution() {
        let pt = RelationPoint {
            p1: vec![1.0],
            x1: vec![0.0],
            p2: vec![2.0],
            x2: vec![3.0],
        };
        let s = schwartz(&pt);
        assert_eq!(s.q1, vec![-1.0]);
        assert_eq!(s.q2, vec![2.0]);
        assert_eq!(s.x1, vec![0.0]);
        assert_eq!(s.x2, vec![3.0]);
        assert_eq!(schwartz_inverse(&s), pt);

        let zero = RelationPoint {
            p1: vec![0.0; 2],
            x1: vec![0.5, -0.5],
            p2: vec![0.0],
            x2: vec![1.0],
        };
        let sz = schwartz(&zero);
        assert!(sz.q1.iter().all(|&q| q == 0.0));
        assert_eq!(schwartz_inverse(&sz), zero);
    }

    #[test]
    fn canonical_embedding_consistency() {
        // zero fiber input lands on the cotangent lift
        let phi = CoreMap::identity(1, 6);
        let on_lift = canonical_embedding(&phi, &[0.0], &[0.0], &[1.0], &[1.0]);
        let lift = GeneratingFunction::cotangent_lift(&phi);
        assert_eq!(on_lift, lift.sample_relation(&[1.0], &[1.0]));

        // explicit formula: phi = id, v1 = 0.1, p2 = 0.2 at (1, 1)
        let pt = canonical_embedding(&phi, &[0.1], &[0.2], &[1.0], &[1.0]);
        assert!((pt.x1[0] - 1.1).abs() < 1e-15);
        assert!((pt.p2[0] - 1.2).abs() < 1e-15);

        // derivative inputs reproduce sample_relation for the p^2 x example
        let f = p2x_example();
        let (p1, x2) = (vec![1.0], vec![2.0]);
        let disp = [p1[0], x2[0]];
        let v1 = f.remainder().partial(0).unwrap().eval(&disp).unwrap();
        let p2 = f.remainder().partial(1).unwrap().eval(&disp).unwrap();
        let emb = canonical_embedding(f.core(), &[v1], &[p2], &p1, &x2);
        assert_eq!(emb, f.sample_relation(&p1, &x2));
    }

    #[test]
    fn deformation_of_lift_reproduces_relation() {
        let f = p2x_example();
        // lift point of phi = 0 over (p1, x2) = (1, 2) is ((1, 0), (0, 2))
        let deformed = f.deformation_map(&[1.0], &[0.0], &[0.0], &[2.0]);
        assert_eq!(deformed, f.sample_relation(&[1.0], &[2.0]));
        assert_eq!(deformed.x1, vec![4.0]);
        assert_eq!(deformed.p2, vec![1.0]);

        // zero remainder: deformation is the identity
        let lift = lift_of_square();
        let pt = lift.deformation_map(&[0.4], &[0.3], &[0.2], &[0.1]);
        assert_eq!(
            pt,
            RelationPoint {
                p1: vec![0.4],
                x1: vec![0.3],
                p2: vec![0.2],
                x2: vec![0.1]
            }
        );
    }

    #[test]
    fn core_round_trip_on_lift() {
        let phi = CoreMap::from_jets(
            vec![Jet::from_terms(1, 6, &[(&[1], 1.0), (&[3], -0.5)]).unwrap()],
            vec![0.0],
        )
        .unwrap();
        let lift = GeneratingFunction::cotangent_lift(&phi);
        let back = lift.core_of().unwrap();
        for x in [-0.4, 0.0, 0.7] {
            let a = phi.eval(&[x]);
            let b = back.eval(&[x]);
            assert!((a[0] - b[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn genfun_json_roundtrip() {
        let f = p2x_example();
        let json = f.to_json();
        let text = serde_json::to_string(&json).unwrap();
        let parsed: GenFunJson = serde_json::from_str(&text).unwrap();
        let back = GeneratingFunction::from_json(&parsed).unwrap();
        let a = f.sample_relation(&[0.3], &[0.7]);
        let b = back.sample_relation(&[0.3], &[0.7]);
        assert_eq!(a, b);
    }

    #[test]
    fn genfun_json_expr_core() {
        let text = r#"{
            "core": {"expr": ["x^2"], "order": 8},
            "remainder": {"vars": ["p", "x"], "order": 8, "coeffs": {}},
            "p_vars": ["p"],
            "x_vars": ["x"]
        }"#;
        let parsed: GenFunJson = serde_json::from_str(text).unwrap();
        let gf = GeneratingFunction::from_json(&parsed).unwrap();
        let pt = gf.sample_relation(&[1.0], &[2.0]);
        assert!((pt.x1[0] - 4.0).abs() < 1e-14);
        assert!((pt.p2[0] - 4.0).abs() < 1e-14);
    }
}
