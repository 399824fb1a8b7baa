//! Truncated multivariate Taylor series (jets).
//!
//! A [`Jet`] stores the coefficients of a polynomial in the displacements
//! from an (externally tracked) expansion point, truncated at a fixed total
//! degree. Jets are the computational stand-in for smooth function germs:
//! all arithmetic truncates to the weakest order involved, and two jets that
//! differ only by absent-vs-stored-zero coefficients are indistinguishable.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Exponent vector of a monomial; one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(SmallVec<[u8; 8]>);

impl MultiIndex {
    pub fn new(exponents: &[u8]) -> Self {
        MultiIndex(SmallVec::from_slice(exponents))
    }

    pub fn zeros(len: usize) -> Self {
        MultiIndex(smallvec::smallvec![0; len])
    }

    pub fn unit(len: usize, var: usize) -> Self {
        let mut e = Self::zeros(len);
        e.0[var] = 1;
        e
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree |alpha|.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// Degree restricted to the first `k` variables.
    pub fn degree_prefix(&self, k: usize) -> usize {
        self.0[..k].iter().map(|&e| e as usize).sum()
    }

    pub fn exponent(&self, var: usize) -> u8 {
        self.0[var]
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    fn sum(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    fn decremented(&self, var: usize) -> MultiIndex {
        let mut e = self.clone();
        e.0[var] -= 1;
        e
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Truncated multivariate Taylor series with double-precision coefficients.
///
/// Stored coefficients always satisfy `|alpha| <= max_order`; exact zeros are
/// pruned so that absent and stored-zero entries are indistinguishable.
#[derive(Debug, Clone)]
pub struct Jet {
    num_vars: usize,
    max_order: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

/// Default absolute tolerance for jet coefficient comparison.
pub const JET_EQ_TOL: f64 = 1e-12;

/// Elementary analytic functions applicable to a jet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    PowN(i32),
}

impl Jet {
    pub fn zero(num_vars: usize, max_order: usize) -> Self {
        Jet {
            num_vars,
            max_order,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, max_order: usize, value: f64) -> Self {
        let mut j = Jet::zero(num_vars, max_order);
        if value != 0.0 {
            j.coeffs.insert(MultiIndex::zeros(num_vars), value);
        }
        j
    }

    /// The displacement coordinate `u_var` as a jet (zero constant term).
    pub fn coordinate(num_vars: usize, max_order: usize, var: usize) -> Result<Self> {
        if var >= num_vars {
            return Err(Error::VariableIndexOutOfRange {
                index: var,
                num_vars,
            });
        }
        let mut j = Jet::zero(num_vars, max_order);
        if max_order >= 1 {
            j.coeffs.insert(MultiIndex::unit(num_vars, var), 1.0);
        }
        Ok(j)
    }

    /// Builds a jet from explicit (exponents, coefficient) terms.
    pub fn from_terms(num_vars: usize, max_order: usize, terms: &[(&[u8], f64)]) -> Result<Self> {
        let mut j = Jet::zero(num_vars, max_order);
        for (exps, c) in terms {
            if exps.len() != num_vars {
                return Err(Error::VariableMismatch {
                    expected: num_vars,
                    got: exps.len(),
                });
            }
            let idx = MultiIndex::new(exps);
            if idx.degree() > max_order {
                return Err(Error::OrderUnderflow {
                    context: "from_terms",
                    requested: idx.degree(),
                    stored: max_order,
                });
            }
            if *c != 0.0 {
                *j.coeffs.entry(idx).or_insert(0.0) += *c;
            }
        }
        j.prune();
        Ok(j)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn coeff(&self, exps: &[u8]) -> f64 {
        self.coeffs
            .get(&MultiIndex::new(exps))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs
            .get(&MultiIndex::zeros(self.num_vars))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Minimal total degree of a nonzero term; `None` for the zero jet.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.keys().map(|k| k.degree()).min()
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, &c| m.max(c.abs()))
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| *c != 0.0);
    }

    fn check_vars(&self, other: &Jet) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::VariableMismatch {
                expected: self.num_vars,
                got: other.num_vars,
            });
        }
        Ok(())
    }

    /// Coefficient-wise sum, truncated to the weaker order.
    pub fn checked_add(&self, other: &Jet) -> Result<Jet> {
        self.check_vars(other)?;
        let order = self.max_order.min(other.max_order);
        let mut coeffs = BTreeMap::new();
        for (idx, &c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            if idx.degree() <= order {
                *coeffs.entry(idx.clone()).or_insert(0.0) += c;
            }
        }
        let mut j = Jet {
            num_vars: self.num_vars,
            max_order: order,
            coeffs,
        };
        j.prune();
        Ok(j)
    }

    pub fn checked_sub(&self, other: &Jet) -> Result<Jet> {
        self.checked_add(&other.neg())
    }

    pub fn neg(&self) -> Jet {
        let mut j = self.clone();
        for c in j.coeffs.values_mut() {
            *c = -*c;
        }
        j
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut j = self.clone();
        for c in j.coeffs.values_mut() {
            *c *= s;
        }
        j.prune();
        j
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut j = self.clone();
        let key = MultiIndex::zeros(self.num_vars);
        *j.coeffs.entry(key).or_insert(0.0) += s;
        j.prune();
        j
    }

    /// Cauchy product truncated at the weaker order.
    pub fn checked_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_vars(other)?;
        let order = self.max_order.min(other.max_order);
        let mut coeffs: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (ia, &ca) in &self.coeffs {
            let da = ia.degree();
            if da > order {
                continue;
            }
            for (ib, &cb) in &other.coeffs {
                if da + ib.degree() > order {
                    continue;
                }
                *coeffs.entry(ia.sum(ib)).or_insert(0.0) += ca * cb;
            }
        }
        let mut j = Jet {
            num_vars: self.num_vars,
            max_order: order,
            coeffs,
        };
        j.prune();
        Ok(j)
    }

    /// Formal partial derivative. The result order drops by one; an order-0
    /// input yields the zero jet of order 0.
    pub fn partial(&self, var: usize) -> Result<Jet> {
        if var >= self.num_vars {
            return Err(Error::VariableIndexOutOfRange {
                index: var,
                num_vars: self.num_vars,
            });
        }
        let order = self.max_order.saturating_sub(1);
        let mut coeffs = BTreeMap::new();
        for (idx, &c) in &self.coeffs {
            let e = idx.exponent(var);
            if e > 0 {
                let d = idx.decremented(var);
                if d.degree() <= order {
                    coeffs.insert(d, c * e as f64);
                }
            }
        }
        Ok(Jet {
            num_vars: self.num_vars,
            max_order: order,
            coeffs,
        })
    }

    pub fn gradient(&self) -> Result<Vec<Jet>> {
        (0..self.num_vars).map(|i| self.partial(i)).collect()
    }

    /// Polynomial evaluation at a displacement from the expansion point.
    pub fn eval(&self, displacement: &[f64]) -> Result<f64> {
        if displacement.len() != self.num_vars {
            return Err(Error::VariableMismatch {
                expected: self.num_vars,
                got: displacement.len(),
            });
        }
        let mut total = 0.0;
        for (idx, &c) in &self.coeffs {
            let mut term = c;
            for (i, &e) in idx.exponents().iter().enumerate() {
                if e > 0 {
                    term *= displacement[i].powi(e as i32);
                }
            }
            total += term;
        }
        Ok(total)
    }

    /// Re-centers the polynomial: returns g with g(u) = f(u + shift), exactly.
    pub fn taylor_shift(&self, shift: &[f64]) -> Result<Jet> {
        if shift.len() != self.num_vars {
            return Err(Error::VariableMismatch {
                expected: self.num_vars,
                got: shift.len(),
            });
        }
        let mut out = Jet::zero(self.num_vars, self.max_order);
        let mut stack: Vec<(MultiIndex, f64)> = Vec::new();
        for (idx, &c) in &self.coeffs {
            // expand prod_i (u_i + shift_i)^{e_i} one variable at a time
            stack.clear();
            stack.push((MultiIndex::zeros(self.num_vars), c));
            for (var, &e) in idx.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut next = Vec::with_capacity(stack.len() * (e as usize + 1));
                for (base_idx, base_c) in stack.drain(..) {
                    // binomial expansion of (u_var + s)^e
                    let s = shift[var];
                    let mut binom = 1.0;
                    for b in 0..=e {
                        // coefficient C(e, b) * s^(e-b) on u_var^b
                        let mut term_idx = base_idx.clone();
                        term_idx.0[var] += b;
                        let coeff = base_c * binom * s.powi((e - b) as i32);
                        next.push((term_idx, coeff));
                        binom *= (e - b) as f64 / (b + 1) as f64;
                    }
                }
                stack = next;
            }
            for (term_idx, term_c) in stack.drain(..) {
                if term_c != 0.0 {
                    *out.coeffs.entry(term_idx).or_insert(0.0) += term_c;
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// Drops a jet's formal order (and any terms above it).
    pub fn truncated(&self, order: usize) -> Jet {
        let mut j = self.clone();
        j.max_order = order;
        j.coeffs.retain(|k, _| k.degree() <= order);
        j
    }

    /// Reinterprets the jet at a (possibly higher) formal order. Raising the
    /// order asserts the absent high-degree coefficients are known; callers
    /// must justify that from the surrounding computation.
    pub fn with_max_order(&self, order: usize) -> Jet {
        self.truncated(order)
    }

    /// Substitutes `args[i]` for variable `i`. Arguments with nonzero constant
    /// term are handled by re-centering `self` first (exact for the stored
    /// polynomial). The result order is the weakest order involved.
    pub fn compose(&self, args: &[Jet]) -> Result<Jet> {
        if args.len() != self.num_vars {
            return Err(Error::ArityMismatch {
                expected: self.num_vars,
                got: args.len(),
            });
        }
        if self.num_vars == 0 {
            return Ok(self.clone());
        }
        let out_vars = args[0].num_vars;
        let mut out_order = self.max_order;
        for a in args {
            if a.num_vars != out_vars {
                return Err(Error::VariableMismatch {
                    expected: out_vars,
                    got: a.num_vars,
                });
            }
            out_order = out_order.min(a.max_order);
        }

        let consts: Vec<f64> = args.iter().map(|a| a.constant_term()).collect();
        let shifted;
        let f = if consts.iter().any(|&c| c != 0.0) {
            shifted = self.taylor_shift(&consts)?;
            &shifted
        } else {
            self
        };
        let reduced: Vec<Jet> = args
            .iter()
            .zip(&consts)
            .map(|(a, &c)| {
                let mut r = a.truncated(out_order);
                if c != 0.0 {
                    r = r.add_scalar(-c);
                }
                r
            })
            .collect();
        let valuations: Vec<usize> = reduced
            .iter()
            .map(|a| a.valuation().unwrap_or(out_order + 1))
            .collect();

        // power cache per variable, grown on demand
        let mut powers: Vec<Vec<Jet>> = (0..self.num_vars)
            .map(|_| vec![Jet::constant(out_vars, out_order, 1.0)])
            .collect();
        let mut out = Jet::zero(out_vars, out_order);
        for (idx, &c) in &f.coeffs {
            let weighted: usize = idx
                .exponents()
                .iter()
                .enumerate()
                .map(|(i, &e)| e as usize * valuations[i])
                .sum();
            if weighted > out_order {
                continue;
            }
            let mut term = Jet::constant(out_vars, out_order, c);
            for (i, &e) in idx.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap().checked_mul(&reduced[i])?;
                    powers[i].push(next);
                }
                term = term.checked_mul(&powers[i][e as usize])?;
            }
            out = out.checked_add(&term)?;
        }
        Ok(out)
    }

    /// Applies an elementary analytic function via the univariate Taylor
    /// recurrence around the constant term.
    pub fn elementary(&self, func: Elementary) -> Result<Jet> {
        if let Elementary::PowN(n) = func {
            return self.powi(n);
        }
        let c0 = self.constant_term();
        let n = self.max_order;
        let coeffs = univariate_coeffs(func, c0, n)?;
        let u = self.add_scalar(-c0);
        // Horner evaluation in the jet algebra
        let mut acc = Jet::constant(self.num_vars, n, coeffs[n]);
        for k in (0..n).rev() {
            acc = acc.checked_mul(&u)?.add_scalar(coeffs[k]);
        }
        Ok(acc)
    }

    pub fn exp(&self) -> Result<Jet> {
        self.elementary(Elementary::Exp)
    }

    pub fn log(&self) -> Result<Jet> {
        self.elementary(Elementary::Log)
    }

    pub fn sin(&self) -> Result<Jet> {
        self.elementary(Elementary::Sin)
    }

    pub fn cos(&self) -> Result<Jet> {
        self.elementary(Elementary::Cos)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.elementary(Elementary::Sqrt)
    }

    /// Integer power by repeated squaring (negative powers via reciprocal).
    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = Jet::constant(self.num_vars, self.max_order, 1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.checked_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Jet> {
        let c0 = self.constant_term();
        if c0 == 0.0 {
            return Err(Error::DomainViolation {
                function: "recip",
                detail: "zero constant term".into(),
            });
        }
        let n = self.max_order;
        let mut coeffs = vec![0.0; n + 1];
        let mut p = 1.0 / c0;
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = if k % 2 == 0 { p } else { -p };
            p /= c0;
        }
        let u = self.add_scalar(-c0);
        let mut acc = Jet::constant(self.num_vars, n, coeffs[n]);
        for k in (0..n).rev() {
            acc = acc.checked_mul(&u)?.add_scalar(coeffs[k]);
        }
        Ok(acc)
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet> {
        self.checked_mul(&other.recip()?)
    }

    /// Coefficient comparison up to an absolute tolerance.
    pub fn approx_eq(&self, other: &Jet, tol: f64) -> bool {
        if self.num_vars != other.num_vars {
            return false;
        }
        self.max_coeff_diff(other) <= tol
    }

    /// Coefficient comparison at the default tolerance [`JET_EQ_TOL`].
    pub fn approx_eq_default(&self, other: &Jet) -> bool {
        self.approx_eq(other, JET_EQ_TOL)
    }

    /// Largest coefficient difference over the union of stored terms (only
    /// degrees representable in both jets are compared).
    pub fn max_coeff_diff(&self, other: &Jet) -> f64 {
        let order = self.max_order.min(other.max_order);
        let mut worst: f64 = 0.0;
        for (idx, &c) in &self.coeffs {
            if idx.degree() <= order {
                worst = worst.max((c - other.coeffs.get(idx).copied().unwrap_or(0.0)).abs());
            }
        }
        for (idx, &c) in &other.coeffs {
            if idx.degree() <= order && !self.coeffs.contains_key(idx) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    /// Bitwise equality of the stored coefficient maps.
    pub fn exact_eq(&self, other: &Jet) -> bool {
        self.num_vars == other.num_vars && self.coeffs == other.coeffs
    }

    /// Re-expresses this jet in a larger variable space: variable `i` becomes
    /// variable `var_map[i]` of a jet with `new_num_vars` variables.
    pub fn embed(&self, new_num_vars: usize, var_map: &[usize]) -> Result<Jet> {
        if var_map.len() != self.num_vars {
            return Err(Error::VariableMismatch {
                expected: self.num_vars,
                got: var_map.len(),
            });
        }
        if let Some(&bad) = var_map.iter().find(|&&v| v >= new_num_vars) {
            return Err(Error::VariableIndexOutOfRange {
                index: bad,
                num_vars: new_num_vars,
            });
        }
        let mut coeffs = BTreeMap::new();
        for (idx, &c) in &self.coeffs {
            let mut e = MultiIndex::zeros(new_num_vars);
            for (i, &ei) in idx.exponents().iter().enumerate() {
                e.0[var_map[i]] = ei;
            }
            coeffs.insert(e, c);
        }
        Ok(Jet {
            num_vars: new_num_vars,
            max_order: self.max_order,
            coeffs,
        })
    }

    pub fn format_with(&self, names: &[String]) -> String {
        if self.coeffs.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (idx, &c) in &self.coeffs {
            let mut monomial = String::new();
            for (i, &e) in idx.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !monomial.is_empty() {
                    monomial.push('*');
                }
                let name = names
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| format!("u{i}"));
                monomial.push_str(&name);
                if e > 1 {
                    monomial.push_str(&format!("^{e}"));
                }
            }
            if monomial.is_empty() {
                parts.push(format!("{c}"));
            } else {
                parts.push(format!("{c}*{monomial}"));
            }
        }
        parts.join(" + ")
    }

    /// Serializable form with named variables and comma-joined exponent keys.
    pub fn to_json(&self, names: &[String]) -> JetJson {
        JetJson {
            vars: names.to_vec(),
            order: self.max_order,
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, &v)| (k.to_string(), v))
                .collect(),
        }
    }

    pub fn from_json(json: &JetJson) -> Result<Jet> {
        let num_vars = json.vars.len();
        let mut j = Jet::zero(num_vars, json.order);
        for (key, &c) in &json.coeffs {
            let exps: Vec<u8> = key
                .split(',')
                .map(|s| {
                    s.trim().parse::<u8>().map_err(|e| Error::InvalidInput {
                        context: "jet json",
                        detail: format!("bad exponent `{s}`: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if exps.len() != num_vars {
                return Err(Error::VariableMismatch {
                    expected: num_vars,
                    got: exps.len(),
                });
            }
            let idx = MultiIndex::new(&exps);
            if idx.degree() > json.order {
                return Err(Error::OrderUnderflow {
                    context: "jet json",
                    requested: idx.degree(),
                    stored: json.order,
                });
            }
            if c != 0.0 {
                j.coeffs.insert(idx, c);
            }
        }
        Ok(j)
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.num_vars).map(|i| format!("u{i}")).collect();
        write!(f, "{}", self.format_with(&names))
    }
}

/// JSON wire form of a jet: `{"vars": ["p","x"], "order": 4, "coeffs": {"2,1": 1.0}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JetJson {
    pub vars: Vec<String>,
    pub order: usize,
    pub coeffs: BTreeMap<String, f64>,
}

/// Taylor coefficients a_k = g^(k)(c0)/k! for the elementary function `func`
/// expanded around `c0`, for k = 0..=n.
fn univariate_coeffs(func: Elementary, c0: f64, n: usize) -> Result<Vec<f64>> {
    let mut a = vec![0.0; n + 1];
    match func {
        Elementary::Exp => {
            let e = c0.exp();
            let mut fact = 1.0;
            for (k, ak) in a.iter_mut().enumerate() {
                if k > 0 {
                    fact *= k as f64;
                }
                *ak = e / fact;
            }
        }
        Elementary::Log => {
            if c0 <= 0.0 {
                return Err(Error::DomainViolation {
                    function: "log",
                    detail: format!("constant term {c0} is not strictly positive"),
                });
            }
            a[0] = c0.ln();
            let mut p = 1.0 / c0;
            for (k, ak) in a.iter_mut().enumerate().skip(1) {
                *ak = if k % 2 == 1 { p } else { -p } / k as f64;
                p /= c0;
            }
        }
        Elementary::Sin | Elementary::Cos => {
            let (s, c) = c0.sin_cos();
            let cycle = if func == Elementary::Sin {
                [s, c, -s, -c]
            } else {
                [c, -s, -c, s]
            };
            let mut fact = 1.0;
            for (k, ak) in a.iter_mut().enumerate() {
                if k > 0 {
                    fact *= k as f64;
                }
                *ak = cycle[k % 4] / fact;
            }
        }
        Elementary::Sqrt => {
            if c0 <= 0.0 {
                return Err(Error::DomainViolation {
                    function: "sqrt",
                    detail: format!("constant term {c0} is not strictly positive"),
                });
            }
            let r = c0.sqrt();
            a[0] = r;
            // binomial series: a_k = sqrt(c0) * C(1/2, k) / c0^k
            let mut binom = 1.0;
            let mut p = 1.0;
            for (k, ak) in a.iter_mut().enumerate().skip(1) {
                binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
                p *= c0;
                *ak = r * binom / p;
            }
        }
        Elementary::PowN(_) => unreachable!("handled by powi"),
    }
    Ok(a)
}
