//! Clean-intersection diagnostics: the Morse-Bott classifier for critical
//! submanifolds and the numeric lagrangian (isotropy) certificate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::fd;
use crate::error::{Error, Result};
use crate::genfun::RelationPoint;

/// Finite-difference step for Hessians and tangent spaces.
pub const MORSE_FD_STEP: f64 = 1e-4;
/// Default relative singular-value threshold for kernel detection.
pub const MORSE_KERNEL_TOL: f64 = 1e-6;
/// Angle tolerance (projection residual) for kernel-inside-tangent checks.
pub const MORSE_ANGLE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleVerdict {
    Clean,
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct MorseBottSample {
    pub point: Vec<f64>,
    pub verdict: SampleVerdict,
    pub kernel_dim: usize,
    pub worst_angle_residual: f64,
}

#[derive(Debug, Clone)]
pub struct MorseBottReport {
    pub samples: Vec<MorseBottSample>,
    pub clean: bool,
}

/// Classifies the critical submanifold `C = image(critical_param)` of `f` as
/// nondegenerate (clean) or degenerate by sampling.
///
/// At each sample the Hessian of `f` is formed by central differences at
/// [`MORSE_FD_STEP`], its numeric kernel is extracted (singular values below
/// `tol * sigma_max`), and the verdict is clean iff the kernel dimension
/// equals `c_dim` and the kernel lies inside the tangent space of `C`.
/// A sample where the gradient is larger than `tol` is reported as an error.
pub fn morse_bott_check(
    f: &dyn Fn(&[f64]) -> f64,
    ambient_dim: usize,
    critical_param: &dyn Fn(&[f64]) -> Vec<f64>,
    c_dim: usize,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<MorseBottReport> {
    let mut out = Vec::with_capacity(samples.len());
    for u in samples {
        if u.len() != c_dim {
            return Err(Error::DimensionMismatch {
                context: "morse_bott_check sample",
                expected: c_dim,
                got: u.len(),
            });
        }
        let x = critical_param(u);
        if x.len() != ambient_dim {
            return Err(Error::DimensionMismatch {
                context: "morse_bott_check critical_param",
                expected: ambient_dim,
                got: x.len(),
            });
        }
        let grad = fd::gradient(f, &x, fd::FD_STEP_GRADIENT);
        let grad_norm = fd::norm_2(&grad);
        if grad_norm > tol {
            return Err(Error::NotCritical { grad_norm, tol });
        }

        let hess = fd::hessian(f, &x, MORSE_FD_STEP);
        let svd = hess.clone().svd(false, true);
        let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);

        if sigma_max == 0.0 {
            // identically flat Hessian: kernel is everything
            let verdict = if c_dim == ambient_dim {
                SampleVerdict::Clean
            } else {
                SampleVerdict::Degenerate
            };
            out.push(MorseBottSample {
                point: x,
                verdict,
                kernel_dim: ambient_dim,
                worst_angle_residual: 0.0,
            });
            continue;
        }

        let v_t = svd.v_t.as_ref().expect("svd v_t");
        let kernel: Vec<DVector<f64>> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < tol * sigma_max)
            .map(|(i, _)| v_t.row(i).transpose())
            .collect();

        let mut verdict = SampleVerdict::Clean;
        let mut worst_residual = 0.0_f64;
        if kernel.len() != c_dim {
            verdict = SampleVerdict::Degenerate;
        } else if c_dim > 0 {
            // tangent space of C from finite differences of the parametrization
            let param = |uu: &[f64]| critical_param(uu);
            let tangent = fd::jacobian(&param, u, MORSE_FD_STEP);
            // orthonormalize columns, then check each kernel vector projects
            // onto the span with small residual
            let qr = tangent.qr();
            let q = qr.q();
            for kv in &kernel {
                let proj = &q * (q.transpose() * kv);
                let residual = (kv - proj).norm();
                worst_residual = worst_residual.max(residual);
                if residual > MORSE_ANGLE_TOL {
                    verdict = SampleVerdict::Degenerate;
                }
            }
        }
        out.push(MorseBottSample {
            point: x,
            verdict,
            kernel_dim: kernel.len(),
            worst_angle_residual: worst_residual,
        });
    }
    let clean = out.iter().all(|s| s.verdict == SampleVerdict::Clean);
    Ok(MorseBottReport {
        samples: out,
        clean,
    })
}

/// Max of `|omega_bar(d1, d2)|` over random tangent-vector pairs of the
/// sampled submanifold, where `omega_bar = (-dp1 ^ dx1) + (dp2 ^ dx2)`.
///
/// Tangent vectors are obtained by central differences of `sampler` at
/// `base` with step `h`, in random directions of the parameter space.
/// A small return value certifies the sampled tangent space is isotropic.
pub fn lagrangian_defect(
    sampler: &dyn Fn(&[f64]) -> RelationPoint,
    base: &[f64],
    h: f64,
    trials: usize,
    rng: &mut impl Rng,
) -> f64 {
    let m = base.len();
    let tangent = |dir: &[f64]| -> RelationPoint {
        let plus: Vec<f64> = base.iter().zip(dir).map(|(b, d)| b + h * d).collect();
        let minus: Vec<f64> = base.iter().zip(dir).map(|(b, d)| b - h * d).collect();
        let sp = sampler(&plus);
        let sm = sampler(&minus);
        let diff = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (x - y) / (2.0 * h)).collect()
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
        let d1 = tangent(&random_direction(m, rng));
        let d2 = tangent(&random_direction(m, rng));
        worst = worst.max(two_form(&d1, &d2).abs());
    }
    worst
}

/// `omega_bar(a, b)` with the first factor carrying the opposite form.
fn two_form(a: &RelationPoint, b: &RelationPoint) -> f64 {
    -(fd::dot(&a.p1, &b.x1) - fd::dot(&b.p1, &a.x1))
        + (fd::dot(&a.p2, &b.x2) - fd::dot(&b.p2, &a.x2))
}

fn random_direction(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = fd::norm_2(&v);
        if n > 1e-3 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Estimates the numeric kernel dimension of a matrix, relative threshold.
pub fn kernel_dimension(m: &DMatrix<f64>, tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return m.ncols();
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s < tol * sigma_max)
        .count()
}
