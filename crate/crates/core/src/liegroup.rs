//! Matrix Lie algebra exponential/logarithm, the group-multiplication
//! generating function `S_G(v, w, mu) = <mu, log(exp v exp w)>`, and
//! sampling of the symmetry relation of a hamiltonian group action.
//!
//! The log is computed numerically (inverse scaling by matrix square roots,
//! then the alternating series) rather than by a truncated commutator
//! expansion; the degree-4 commutator series [`bch_series_order4`] exists
//! only as an independent cross-check.

use nalgebra::DMatrix;

use crate::dynamics::PhasePoint;
use crate::error::{Error, Result};
use crate::fd;
use crate::genfun::RelationPoint;

/// Construction tolerance for algebra-tag invariants.
pub const TAG_TOL: f64 = 1e-12;
/// The matrix log domain: `||M - I||_F` must stay strictly below this.
pub const LOG_DOMAIN_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraTag {
    So3,
    Sl2,
    Generic,
}

/// A real square matrix regarded as a Lie-algebra element.
#[derive(Debug, Clone)]
pub struct MatLieElement {
    mat: DMatrix<f64>,
    tag: AlgebraTag,
}

impl MatLieElement {
    /// Checks the tag invariant on construction: so(3) antisymmetric 3x3,
    /// sl(2) traceless 2x2, both to [`TAG_TOL`].
    pub fn new(mat: DMatrix<f64>, tag: AlgebraTag) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidInput {
                context: "lie element",
                detail: format!("matrix is {}x{}, not square", mat.nrows(), mat.ncols()),
            });
        }
        match tag {
            AlgebraTag::So3 => {
                if mat.nrows() != 3 {
                    return Err(Error::DimensionMismatch {
                        context: "so3 element",
                        expected: 3,
                        got: mat.nrows(),
                    });
                }
                let asym = (&mat + mat.transpose()).norm();
                if asym > TAG_TOL {
                    return Err(Error::InvalidInput {
                        context: "so3 element",
                        detail: format!("antisymmetry defect {asym:.3e}"),
                    });
                }
            }
            AlgebraTag::Sl2 => {
                if mat.nrows() != 2 {
                    return Err(Error::DimensionMismatch {
                        context: "sl2 element",
                        expected: 2,
                        got: mat.nrows(),
                    });
                }
                let tr = mat.trace().abs();
                if tr > TAG_TOL {
                    return Err(Error::InvalidInput {
                        context: "sl2 element",
                        detail: format!("trace defect {tr:.3e}"),
                    });
                }
            }
            AlgebraTag::Generic => {}
        }
        Ok(MatLieElement { mat, tag })
    }

    pub fn zero(dim: usize, tag: AlgebraTag) -> Self {
        MatLieElement {
            mat: DMatrix::zeros(dim, dim),
            tag,
        }
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn tag(&self) -> AlgebraTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn commutator(&self, other: &MatLieElement) -> MatLieElement {
        MatLieElement {
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
            tag: if self.tag == other.tag {
                self.tag
            } else {
                AlgebraTag::Generic
            },
        }
    }

    pub fn scale(&self, s: f64) -> MatLieElement {
        MatLieElement {
            mat: &self.mat * s,
            tag: self.tag,
        }
    }

    pub fn add(&self, other: &MatLieElement) -> MatLieElement {
        MatLieElement {
            mat: &self.mat + &other.mat,
            tag: if self.tag == other.tag {
                self.tag
            } else {
                AlgebraTag::Generic
            },
        }
    }
}

/// Coefficients of a dual-algebra element against a fixed basis; the pairing
/// is Euclidean against that basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoAlgebraElement {
    pub mu: Vec<f64>,
}

impl CoAlgebraElement {
    pub fn new(mu: Vec<f64>) -> Self {
        CoAlgebraElement { mu }
    }
}

/// A fixed basis of a matrix Lie algebra with an expansion routine.
#[derive(Debug, Clone)]
pub struct LieBasis {
    mats: Vec<DMatrix<f64>>,
    tag: AlgebraTag,
}

impl LieBasis {
    /// so(3) generators with `[L_x, L_y] = L_z` (cyclically).
    pub fn so3() -> Self {
        let lx = DMatrix::from_row_slice(3, 3, &[0., 0., 0., 0., 0., -1., 0., 1., 0.]);
        let ly = DMatrix::from_row_slice(3, 3, &[0., 0., 1., 0., 0., 0., -1., 0., 0.]);
        let lz = DMatrix::from_row_slice(3, 3, &[0., -1., 0., 1., 0., 0., 0., 0., 0.]);
        LieBasis {
            mats: vec![lx, ly, lz],
            tag: AlgebraTag::So3,
        }
    }

    /// sl(2) basis (e, f, h).
    pub fn sl2() -> Self {
        let e = DMatrix::from_row_slice(2, 2, &[0., 1., 0., 0.]);
        let f = DMatrix::from_row_slice(2, 2, &[0., 0., 1., 0.]);
        let h = DMatrix::from_row_slice(2, 2, &[1., 0., 0., -1.]);
        LieBasis {
            mats: vec![e, f, h],
            tag: AlgebraTag::Sl2,
        }
    }

    /// The abelian line: 1x1 matrices.
    pub fn abelian() -> Self {
        LieBasis {
            mats: vec![DMatrix::from_element(1, 1, 1.0)],
            tag: AlgebraTag::Generic,
        }
    }

    pub fn custom(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::InvalidInput {
                context: "lie basis",
                detail: "empty basis".into(),
            });
        }
        Ok(LieBasis {
            mats,
            tag: AlgebraTag::Generic,
        })
    }

    pub fn dim(&self) -> usize {
        self.mats.len()
    }

    pub fn matrix_dim(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn tag(&self) -> AlgebraTag {
        self.tag
    }

    /// Linear combination `sum_i coeffs[i] * basis[i]`.
    pub fn element(&self, coeffs: &[f64]) -> Result<MatLieElement> {
        if coeffs.len() != self.mats.len() {
            return Err(Error::DimensionMismatch {
                context: "lie basis coefficients",
                expected: self.mats.len(),
                got: coeffs.len(),
            });
        }
        let mut m = DMatrix::zeros(self.matrix_dim(), self.matrix_dim());
        for (c, b) in coeffs.iter().zip(&self.mats) {
            m += b * *c;
        }
        MatLieElement::new(m, self.tag)
    }

    /// Expands a matrix in the basis by least squares; errors if the
    /// residual is not negligible (the matrix is outside the span).
    pub fn expand(&self, m: &DMatrix<f64>) -> Result<Vec<f64>> {
        let d2 = self.matrix_dim() * self.matrix_dim();
        let b = self.mats.len();
        let a = DMatrix::from_fn(d2, b, |r, c| self.mats[c][(r % self.matrix_dim(), r / self.matrix_dim())]);
        let rhs = DMatrix::from_fn(d2, 1, |r, _| m[(r % self.matrix_dim(), r / self.matrix_dim())]);
        let svd = a.clone().svd(true, true);
        let sol = svd.solve(&rhs, 1e-14).map_err(|e| Error::Internal(e.to_string()))?;
        let residual = (&a * &sol - &rhs).norm();
        let scale = m.norm().max(1.0);
        if residual > 1e-8 * scale {
            return Err(Error::InvalidInput {
                context: "lie basis expansion",
                detail: format!("matrix outside basis span, residual {residual:.3e}"),
            });
        }
        Ok(sol.column(0).iter().copied().collect())
    }
}

/// Matrix exponential by scaling and squaring of the Taylor series.
pub fn mat_exp(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let norm = x.norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = x / 2f64.powi(s as i32);
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=64 {
        term = &term * &a / k as f64;
        sum += &term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Matrix square root by the coupled Newton (Denman-Beavers) iteration.
fn mat_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let mut y = m.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..60 {
        let y_inv = y.clone().try_inverse().ok_or(Error::DomainViolation {
            function: "mat_sqrt",
            detail: "singular iterate".into(),
        })?;
        let z_inv = z.clone().try_inverse().ok_or(Error::DomainViolation {
            function: "mat_sqrt",
            detail: "singular iterate".into(),
        })?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.norm().max(1.0) {
            break;
        }
    }
    Ok(y)
}

/// Matrix logarithm on the domain `||M - I||_F < 1`, with inverse scaling
/// (repeated square roots) before the alternating series.
pub fn mat_log(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidInput {
            context: "mat_log",
            detail: "matrix not square".into(),
        });
    }
    let id = DMatrix::identity(n, n);
    let dist = (m - &id).norm();
    if dist >= LOG_DOMAIN_RADIUS {
        return Err(Error::DomainViolation {
            function: "mat_log",
            detail: format!("||M - I|| = {dist:.6} is outside the series domain"),
        });
    }
    let mut a = m.clone();
    let mut scaling = 0u32;
    while (&a - &id).norm() > 0.25 && scaling < 30 {
        a = mat_sqrt(&a)?;
        scaling += 1;
    }
    let e = &a - &id;
    let mut sum = DMatrix::zeros(n, n);
    let mut power = e.clone();
    for k in 1..=80 {
        let term = &power / k as f64;
        if k % 2 == 1 {
            sum += &term;
        } else {
            sum -= &term;
        }
        if term.norm() <= 1e-17 * sum.norm().max(1e-300) {
            break;
        }
        power = &power * &e;
    }
    Ok(sum * 2f64.powi(scaling as i32))
}

/// `log(exp v exp w)`, defined where the group product stays in the log
/// domain.
pub fn bch(v: &MatLieElement, w: &MatLieElement) -> Result<MatLieElement> {
    if v.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            context: "bch",
            expected: v.dim(),
            got: w.dim(),
        });
    }
    let product = mat_exp(v.mat()) * mat_exp(w.mat());
    let log = mat_log(&product)?;
    let tag = if v.tag == w.tag { v.tag } else { AlgebraTag::Generic };
    MatLieElement::new(log, tag)
}

/// Degree-4 commutator series
/// `v + w + [v,w]/2 + ([v,[v,w]] + [w,[w,v]])/12 - [w,[v,[v,w]]]/24`,
/// kept as an independent cross-check for [`bch`].
pub fn bch_series_order4(v: &MatLieElement, w: &MatLieElement) -> MatLieElement {
    let vw = v.commutator(w);
    let vvw = v.commutator(&vw);
    let wwv = w.commutator(&vw.scale(-1.0));
    let wvvw = w.commutator(&vvw);
    v.add(w)
        .add(&vw.scale(0.5))
        .add(&vvw.scale(1.0 / 12.0))
        .add(&wwv.scale(1.0 / 12.0))
        .add(&wvvw.scale(-1.0 / 24.0))
}

/// The symmetry generating function `S_G(v, w, mu) = <mu, log(exp v exp w)>`
/// with the pairing taken against `basis`.
pub fn symmetry_genfun(
    v: &MatLieElement,
    w: &MatLieElement,
    mu: &CoAlgebraElement,
    basis: &LieBasis,
) -> Result<f64> {
    let z = bch(v, w)?;
    let coeffs = basis.expand(z.mat())?;
    Ok(fd::dot(&mu.mu, &coeffs))
}

/// `|<mu, log(exp(exp v exp w) exp u ...) - ...>|`: associativity defect of
/// the bch bracket paired against `mu`. Zero up to matrix-function roundoff.
pub fn assoc_defect(
    u: &MatLieElement,
    v: &MatLieElement,
    w: &MatLieElement,
    mu: &CoAlgebraElement,
    basis: &LieBasis,
) -> Result<f64> {
    let left = bch(&bch(u, v)?, w)?;
    let right = bch(u, &bch(v, w)?)?;
    let diff = left.mat() - right.mat();
    let coeffs = basis.expand(&diff)?;
    Ok(fd::dot(&mu.mu, &coeffs).abs())
}

/// One sampled point of the symmetry relation
/// `((v, j(exp(v) z)), z, exp(v) z)`.
#[derive(Debug, Clone)]
pub struct SymmetrySample {
    pub v: MatLieElement,
    pub mu: CoAlgebraElement,
    pub source: PhasePoint,
    pub target: PhasePoint,
}

pub fn symmetry_relation_sample(
    action: &dyn Fn(&DMatrix<f64>, &PhasePoint) -> PhasePoint,
    momentum_map: &dyn Fn(&PhasePoint) -> CoAlgebraElement,
    v: &MatLieElement,
    z: &PhasePoint,
) -> SymmetrySample {
    let g = mat_exp(v.mat());
    let target = action(&g, z);
    SymmetrySample {
        v: v.clone(),
        mu: momentum_map(&target),
        source: z.clone(),
        target,
    }
}

/// The rotation action of SO(3) on `T*R^3`: `g . (p, q) = (g p, g q)`.
pub fn so3_action(g: &DMatrix<f64>, z: &PhasePoint) -> PhasePoint {
    let rotate = |v: &[f64]| -> Vec<f64> {
        (0..3)
            .map(|i| (0..3).map(|j| g[(i, j)] * v[j]).sum())
            .collect()
    };
    PhasePoint::new(rotate(&z.p), rotate(&z.q))
}

/// Momentum map of the rotation action in so(3)* coordinates.
///
/// Under the evolution-equation convention (`Qdot = -dH/dp`) the components
/// of `p x q` generate the rotations `exp(+v)`; with `time_reversed = true`
/// the usual textbook `q x p` is returned instead.
pub fn so3_momentum_map(z: &PhasePoint, time_reversed: bool) -> CoAlgebraElement {
    let cross = |a: &[f64], b: &[f64]| -> Vec<f64> {
        vec![
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let mu = if time_reversed {
        cross(&z.q, &z.p)
    } else {
        cross(&z.p, &z.q)
    };
    CoAlgebraElement::new(mu)
}

/// Right-trivialized differential of the exponential applied to `x`:
/// `T(v) x = sum_k ad_v^k(x) / (k+1)!`.
fn dexp_right(v: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut sum = x.clone();
    let mut term = x.clone();
    let mut factorial = 1.0;
    for k in 1..=40 {
        term = v * &term - &term * v;
        factorial *= (k + 1) as f64;
        let contribution = &term / factorial;
        sum += &contribution;
        if contribution.norm() <= 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    sum
}

/// The symplectic form of the group-side factor in exponential coordinates
/// `(v, mu)`: the cotangent-bundle form of the group, right-trivialized and
/// pulled back along `exp`. Against the flat `dv ^ dmu` pattern it carries
/// the `dexp` factor and the structure-constant twist `-<mu, [..., ...]>`;
/// both disappear for an abelian algebra.
pub fn groupoid_two_form(
    basis: &LieBasis,
    v_coeffs: &[f64],
    mu: &[f64],
    dv1: &[f64],
    dmu1: &[f64],
    dv2: &[f64],
    dmu2: &[f64],
) -> Result<f64> {
    let v = basis.element(v_coeffs)?;
    let a = basis.element(dv1)?;
    let b = basis.element(dv2)?;
    let ta = dexp_right(v.mat(), a.mat());
    let tb = dexp_right(v.mat(), b.mat());
    let ta_coeffs = basis.expand(&ta)?;
    let tb_coeffs = basis.expand(&tb)?;
    let bracket = &ta * &tb - &tb * &ta;
    let bracket_coeffs = basis.expand(&bracket)?;
    Ok(fd::dot(dmu2, &ta_coeffs) - fd::dot(dmu1, &tb_coeffs) - fd::dot(mu, &bracket_coeffs))
}

/// Lagrangian certificate for the symmetry relation `W_G`.
///
/// Like [`crate::morse::lagrangian_defect`], but the group-side block
/// `(v, mu)` is paired with [`groupoid_two_form`] instead of the flat form
/// (for abelian algebras the two coincide). Parameters are
/// `(v-coefficients, p, q)`; `base` fixes the expansion point and `h` the
/// finite-difference step.
pub fn symmetry_lagrangian_defect(
    basis: &LieBasis,
    sampler: &dyn Fn(&[f64]) -> RelationPoint,
    base: &[f64],
    h: f64,
    trials: usize,
    rng: &mut impl rand::Rng,
) -> Result<f64> {
    let m = base.len();
    let b = basis.dim();
    let at_base = sampler(base);
    let v_coeffs = at_base.p1[..b].to_vec();
    let mu = at_base.x1[..b].to_vec();
    let tangent = |dir: &[f64]| -> RelationPoint {
        let plus: Vec<f64> = base.iter().zip(dir).map(|(x, d)| x + h * d).collect();
        let minus: Vec<f64> = base.iter().zip(dir).map(|(x, d)| x - h * d).collect();
        let sp = sampler(&plus);
        let sm = sampler(&minus);
        let diff = |a: &[f64], bb: &[f64]| -> Vec<f64> {
            a.iter().zip(bb).map(|(x, y)| (x - y) / (2.0 * h)).collect()
        };
        RelationPoint {
            p1: diff(&sp.p1, &sm.p1),
            x1: diff(&sp.x1, &sm.x1),
            p2: diff(&sp.p2, &sm.p2),
            x2: diff(&sp.x2, &sm.x2),
        }
    };
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let d1 = tangent(&random_unit(m, rng));
        let d2 = tangent(&random_unit(m, rng));
        let group_part = groupoid_two_form(
            basis,
            &v_coeffs,
            &mu,
            &d1.p1[..b],
            &d1.x1[..b],
            &d2.p1[..b],
            &d2.x1[..b],
        )?;
        let z_part = fd::dot(&d1.p1[b..], &d2.x1[b..]) - fd::dot(&d2.p1[b..], &d1.x1[b..]);
        let target_part = fd::dot(&d1.p2, &d2.x2) - fd::dot(&d2.p2, &d1.x2);
        worst = worst.max((-group_part - z_part + target_part).abs());
    }
    Ok(worst)
}

fn random_unit(m: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = fd::norm_2(&v);
        if n > 1e-3 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Sampler of the symmetry relation over parameters `(v-coefficients, p, q)`;
/// the co-algebra block rides in the first factor, so the relation-point
/// blocks are `p1 = (v, p)`, `x1 = (mu, q)`, `p2 = P`, `x2 = Q`.
pub fn symmetry_relation_sampler(
    basis: &LieBasis,
    action: impl Fn(&DMatrix<f64>, &PhasePoint) -> PhasePoint + 'static,
    momentum_map: impl Fn(&PhasePoint) -> CoAlgebraElement + 'static,
    phase_dim: usize,
) -> impl Fn(&[f64]) -> RelationPoint {
    let basis = basis.clone();
    move |u: &[f64]| {
        let b = basis.dim();
        let (vc, rest) = u.split_at(b);
        let (p, q) = rest.split_at(phase_dim);
        let v = basis.element(vc).expect("basis element");
        let z = PhasePoint::new(p.to_vec(), q.to_vec());
        let sample = symmetry_relation_sample(&action, &momentum_map, &v, &z);
        let mut p1 = vc.to_vec();
        p1.extend_from_slice(&sample.source.p);
        let mut x1 = sample.mu.mu.clone();
        x1.extend_from_slice(&sample.source.q);
        RelationPoint {
            p1,
            x1,
            p2: sample.target.p.clone(),
            x2: sample.target.q.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morse::lagrangian_defect;
    use crate::seeded_rng;
    use rand::Rng;

    fn random_element(basis: &LieBasis, scale: f64, rng: &mut impl Rng) -> MatLieElement {
        let coeffs: Vec<f64> = (0..basis.dim())
            .map(|_| rng.gen_range(-scale..scale))
            .collect();
        basis.element(&coeffs).unwrap()
    }

    #[test]
    fn exp_zero_and_inverse() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert!((mat_exp(&z) - DMatrix::identity(3, 3)).norm() < 1e-16);

        let basis = LieBasis::so3();
        let x = basis.element(&[0.3, -0.2, 0.4]).unwrap();
        let prod = mat_exp(x.mat()) * mat_exp(&(x.mat() * -1.0));
        assert!((prod - DMatrix::identity(3, 3)).norm() < 1e-13);
    }

    #[test]
    fn exp_rotation_quarter_turn() {
        // z-rotation by pi/2
        let basis = LieBasis::so3();
        let x = basis
            .element(&[0.0, 0.0, std::f64::consts::FRAC_PI_2])
            .unwrap();
        let r = mat_exp(x.mat());
        let expected =
            DMatrix::from_row_slice(3, 3, &[0., -1., 0., 1., 0., 0., 0., 0., 1.]);
        assert!((r - expected).norm() < 1e-14);
    }

    #[test]
    fn log_identity_and_roundtrip() {
        assert!(mat_log(&DMatrix::identity(3, 3)).unwrap().norm() < 1e-16);
        let basis = LieBasis::so3();
        let mut rng = seeded_rng(1);
        for _ in 0..20 {
            let x = random_element(&basis, 0.28, &mut rng);
            let back = mat_log(&mat_exp(x.mat())).unwrap();
            assert!((back - x.mat()).norm() < 1e-12);
        }
    }

    #[test]
    fn log_rotation_recovers_generator() {
        let basis = LieBasis::so3();
        let x = basis.element(&[0.0, 0.0, 0.2]).unwrap();
        let log = mat_log(&mat_exp(x.mat())).unwrap();
        assert!((log - x.mat()).norm() < 1e-13);
    }

    #[test]
    fn log_domain_violation() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 3.0]);
        assert!(matches!(
            mat_log(&m),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn bch_unit_and_commuting_laws() {
        let basis = LieBasis::so3();
        let v = basis.element(&[0.1, -0.05, 0.2]).unwrap();
        let zero = MatLieElement::zero(3, AlgebraTag::So3);
        let z = bch(&v, &zero).unwrap();
        assert!((z.mat() - v.mat()).norm() < 1e-13);
        // parallel elements commute: bch = v + w
        let w = v.scale(0.7);
        let z2 = bch(&v, &w).unwrap();
        assert!((z2.mat() - v.add(&w).mat()).norm() < 1e-13);
    }

    #[test]
    fn bch_leading_commutator() {
        let basis = LieBasis::so3();
        let v = basis.element(&[0.1, 0.0, 0.0]).unwrap();
        let w = basis.element(&[0.0, 0.1, 0.0]).unwrap();
        let z = bch(&v, &w).unwrap();
        let degree2 = v.add(&w).add(&v.commutator(&w).scale(0.5));
        // the gap to the degree-2 truncation is the degree-3 tail
        assert!((z.mat() - degree2.mat()).norm() < 1e-3);
        let degree4 = bch_series_order4(&v, &w);
        let s = (v.norm() * v.norm() + w.norm() * w.norm()).sqrt();
        assert!((z.mat() - degree4.mat()).norm() < 10.0 * s.powi(5));
    }

    #[test]
    fn symmetry_genfun_abelian_reduces_to_time_addition() {
        // t1 + t2 must stay below ln 2 to keep exp(t1)exp(t2) in the log domain
        let basis = LieBasis::abelian();
        let v = basis.element(&[0.3]).unwrap();
        let w = basis.element(&[0.25]).unwrap();
        let mu = CoAlgebraElement::new(vec![2.0]);
        let s = symmetry_genfun(&v, &w, &mu, &basis).unwrap();
        assert!((s - 0.55 * 2.0).abs() < 1e-13);
        // inverse pair annihilates
        let s0 = symmetry_genfun(&v, &v.scale(-1.0), &mu, &basis).unwrap();
        assert!(s0.abs() < 1e-14);
    }

    #[test]
    fn symmetry_genfun_so3_commutator_value() {
        let basis = LieBasis::so3();
        let v = basis.element(&[0.1, 0.0, 0.0]).unwrap();
        let w = basis.element(&[0.0, 0.1, 0.0]).unwrap();
        let mu = CoAlgebraElement::new(vec![0.0, 0.0, 1.0]);
        // <mu, [v, w]/2 + ...> = 0.005 + O(1e-4)
        let s = symmetry_genfun(&v, &w, &mu, &basis).unwrap();
        assert!((s - 0.005).abs() < 1e-4, "value {s}");
    }

    #[test]
    fn assoc_defect_is_roundoff() {
        let mut rng = seeded_rng(2);
        for basis in [LieBasis::so3(), LieBasis::sl2()] {
            let mu = CoAlgebraElement::new(
                (0..basis.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            for _ in 0..20 {
                let u = random_element(&basis, 0.058, &mut rng);
                let v = random_element(&basis, 0.058, &mut rng);
                let w = random_element(&basis, 0.058, &mut rng);
                let d = assoc_defect(&u, &v, &w, &mu, &basis).unwrap();
                assert!(d < 1e-10, "assoc defect {d}");
            }
        }
    }

    #[test]
    fn unit_law_assoc() {
        let basis = LieBasis::so3();
        let mu = CoAlgebraElement::new(vec![0.3, -0.4, 0.5]);
        let v = basis.element(&[0.05, 0.02, -0.04]).unwrap();
        let w = basis.element(&[-0.03, 0.06, 0.01]).unwrap();
        let zero = MatLieElement::zero(3, AlgebraTag::So3);
        assert!(assoc_defect(&zero, &v, &w, &mu, &basis).unwrap() < 1e-12);
        assert!(assoc_defect(&v, &zero, &w, &mu, &basis).unwrap() < 1e-12);
    }

    #[test]
    fn symmetry_sample_shapes() {
        let basis = LieBasis::so3();
        let v = MatLieElement::zero(3, AlgebraTag::So3);
        let z = PhasePoint::new(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]);
        let s = symmetry_relation_sample(
            &so3_action,
            &|zz: &PhasePoint| so3_momentum_map(zz, false),
            &v,
            &z,
        );
        assert_eq!(s.target, z);
        assert_eq!(s.mu, so3_momentum_map(&z, false));
        let _ = basis;
    }

    #[test]
    fn so3_rotation_action_rotates_both_blocks() {
        let basis = LieBasis::so3();
        let v = basis.element(&[0.0, 0.0, 0.1]).unwrap();
        let z = PhasePoint::new(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]);
        let s = symmetry_relation_sample(
            &so3_action,
            &|zz: &PhasePoint| so3_momentum_map(zz, false),
            &v,
            &z,
        );
        let (c, sn) = (0.1_f64.cos(), 0.1_f64.sin());
        assert!((s.target.p[0] - c).abs() < 1e-14);
        assert!((s.target.p[1] - sn).abs() < 1e-14);
        assert!((s.target.q[0] + sn).abs() < 1e-14);
        assert!((s.target.q[1] - c).abs() < 1e-14);
        // equivariance of the momentum map: mu rotates with the action
        let mu0 = so3_momentum_map(&z, false);
        let g = mat_exp(v.mat());
        let rotated: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| g[(i, j)] * mu0.mu[j]).sum())
            .collect();
        for (a, b) in s.mu.mu.iter().zip(&rotated) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetry_relation_is_lagrangian() {
        let basis = LieBasis::so3();
        let sampler = symmetry_relation_sampler(
            &basis,
            so3_action,
            |z: &PhasePoint| so3_momentum_map(z, false),
            3,
        );
        let base = vec![0.02, -0.03, 0.04, 0.5, -0.2, 0.3, 0.1, 0.4, -0.3];
        let mut rng = seeded_rng(0);
        let defect =
            symmetry_lagrangian_defect(&basis, &|u| sampler(u), &base, 1e-4, 50, &mut rng)
                .unwrap();
        assert!(defect < 1e-5, "W_G defect {defect}");
        // flat pairing misses the structure-constant twist and must fail
        let flat = lagrangian_defect(&|u| sampler(u), &base, 1e-4, 50, &mut rng);
        assert!(flat > 1e-2, "flat-form defect {flat}");
    }

    #[test]
    fn symmetry_relation_abelian_matches_flat_form() {
        // time-translation action of the free particle: exp(v)(p, q) =
        // (p, q - v p) under the evolution convention, with j = H = p^2/2
        let basis = LieBasis::abelian();
        let action = |g: &DMatrix<f64>, z: &PhasePoint| {
            let v = g[(0, 0)].ln();
            PhasePoint::new(z.p.clone(), vec![z.q[0] - v * z.p[0]])
        };
        let j = |z: &PhasePoint| CoAlgebraElement::new(vec![0.5 * z.p[0] * z.p[0]]);
        let sampler = symmetry_relation_sampler(&basis, action, j, 1);
        let base = vec![0.1, 0.4, 0.7];
        let mut rng = seeded_rng(0);
        let twisted =
            symmetry_lagrangian_defect(&basis, &|u| sampler(u), &base, 1e-4, 40, &mut rng)
                .unwrap();
        let flat = lagrangian_defect(&|u| sampler(u), &base, 1e-4, 40, &mut rng);
        assert!(twisted < 1e-7, "twisted {twisted}");
        assert!(flat < 1e-7, "flat {flat}");
    }
}
