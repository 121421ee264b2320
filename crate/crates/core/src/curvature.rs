//! Pointwise curvature of `g = e^{2u}|dx|^2` from a derivative stack.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{distance, unit_vector, CurvatureDensity};
use crate::error::{Error, Result};
use crate::potential::{DerivativeStack, PotentialField};
use crate::special::sphere_area;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCurvature {
    pub stack: DerivativeStack,
    /// Scalar curvature `R_g`.
    pub scalar: f64,
    pub q2: f64,
    /// Present only when `n >= 6`.
    pub q4: Option<f64>,
    /// `Q^(n) = f e^{-nu}`.
    pub qtop: f64,
    /// Coordinate matrix of `Ric_g`, row-major.
    pub ric: Vec<f64>,
    /// Eigenvalues of `e^{-2u} Ric`, descending.
    pub ric_eigs: Vec<f64>,
    /// `sigma_1 .. sigma_n` of `ric_eigs`.
    pub sigma: Vec<f64>,
    pub b: f64,
    pub h: Option<f64>,
}

/// `R e^{2u} = -2(n-1)(lap + (n-2)/2 |grad|^2)`.
pub fn scalar_times_e2u(stack: &DerivativeStack) -> f64 {
    let n = stack.dimension() as f64;
    -2.0 * (n - 1.0) * (stack.lap + 0.5 * (n - 2.0) * stack.grad_sq())
}

/// `Q^(4) e^{4u}`, i.e. `e^{-cu} Delta^2 e^{cu}` with `c = (n-4)/2`.
pub fn q4_times_e4u(stack: &DerivativeStack) -> f64 {
    let c = (stack.dimension() as f64 - 4.0) / 2.0;
    let (c2, c3, c4) = (c * c, c * c * c, c * c * c * c);
    let g2 = stack.grad_sq();
    c * stack.bilap
        + 2.0 * c2 * stack.hess_frobenius_sq()
        + 4.0 * c2 * stack.grad_dot_grad_lap()
        + 4.0 * c3 * stack.hess_quadratic()
        + c2 * stack.lap * stack.lap
        + 2.0 * c3 * stack.lap * g2
        + c4 * g2 * g2
}

/// Sum of the absolute values of the terms in [`q4_times_e4u`]; the natural
/// scale for relative sign tests.
pub fn q4_term_scale(stack: &DerivativeStack) -> f64 {
    let c = (stack.dimension() as f64 - 4.0) / 2.0;
    let (c2, c3, c4) = (c * c, c * c * c, c * c * c * c);
    let g2 = stack.grad_sq();
    (c * stack.bilap).abs()
        + (2.0 * c2 * stack.hess_frobenius_sq()).abs()
        + (4.0 * c2 * stack.grad_dot_grad_lap()).abs()
        + (4.0 * c3 * stack.hess_quadratic()).abs()
        + c2 * stack.lap * stack.lap
        + (2.0 * c3 * stack.lap * g2).abs()
        + c4 * g2 * g2
}

/// `Ric_ij = -(n-2)(u_ij - u_i u_j) - (lap + (n-2)|grad|^2) delta_ij`.
pub fn ricci(stack: &DerivativeStack) -> Vec<f64> {
    let n = stack.dimension();
    let nm2 = n as f64 - 2.0;
    let diag = stack.lap + nm2 * stack.grad_sq();
    let mut ric = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            ric[i * n + j] = -nm2 * (stack.hess_at(i, j) - stack.grad[i] * stack.grad[j]);
        }
        ric[i * n + i] -= diag;
    }
    ric
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
    let mut a = matrix.to_vec();
    let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// `sigma_1 .. sigma_m` of `values` via Newton's identities.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let power: Vec<f64> = (1..=m)
        .map(|k| values.iter().map(|v| v.powi(k as i32)).sum())
        .collect();
    let mut e = vec![1.0];
    for k in 1..=m {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * power[i - 1];
        }
        e.push(acc / k as f64);
    }
    e.remove(0);
    e
}

/// Curvature from a precomputed stack.
pub fn curvature_from_stack(
    stack: DerivativeStack,
    alpha: f64,
    density_value: f64,
) -> PointCurvature {
    let n = stack.dimension();
    let nf = n as f64;
    let e2u = (2.0 * stack.u).exp();
    let scalar = scalar_times_e2u(&stack) / e2u;
    let q2 = (nf - 2.0) / (4.0 * (nf - 1.0)) * scalar;
    let q4 = (n >= 6).then(|| q4_times_e4u(&stack) / (e2u * e2u));
    let qtop = density_value * (-nf * stack.u).exp();
    let ric = ricci(&stack);
    let scaled: Vec<f64> = ric.iter().map(|r| r / e2u).collect();
    let ric_eigs = symmetric_eigenvalues(&scaled, n);
    let sigma = elementary_symmetric(&ric_eigs);
    let b = b_from_stack(&stack, alpha);
    let h = (n >= 6).then(|| h_from_stack(&stack, alpha));
    PointCurvature {
        stack,
        scalar,
        q2,
        q4,
        qtop,
        ric,
        ric_eigs,
        sigma,
        b,
        h,
    }
}

pub fn point_curvature(field: &PotentialField, x: &[f64]) -> PointCurvature {
    let stack = field.eval_stack(x);
    curvature_from_stack(stack, field.alpha(), field.density().eval(x))
}

fn b_from_stack(stack: &DerivativeStack, alpha: f64) -> f64 {
    let n = stack.dimension() as f64;
    -alpha / (n - 2.0) * stack.lap - stack.grad_sq()
}

fn h_from_stack(stack: &DerivativeStack, alpha: f64) -> f64 {
    let n = stack.dimension() as f64;
    (stack.grad_dot_grad_lap()
        + alpha / (2.0 * (n - 4.0)) * stack.bilap
        + stack.lap * stack.lap / (n - 2.0))
        / (n - 2.0)
}

/// `(-alpha/(n-2)) lap - |grad|^2`.
pub fn b_identity(field: &PotentialField, x: &[f64]) -> f64 {
    b_from_stack(&field.eval_stack(x), field.alpha())
}

pub fn h_identity(field: &PotentialField, x: &[f64]) -> Result<f64> {
    if field.dimension() < 6 {
        return Err(Error::contract("h is defined only for n >= 6"));
    }
    Ok(h_from_stack(&field.eval_stack(x), field.alpha()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureInequalities {
    pub lhs1: f64,
    pub rhs1: f64,
    pub lhs2: f64,
    pub rhs2: f64,
}

pub fn structure_inequalities(field: &PotentialField, x: &[f64]) -> Result<StructureInequalities> {
    let n = field.dimension();
    if n < 6 {
        return Err(Error::contract("structure inequalities need n >= 6"));
    }
    if !field.density().is_nonnegative() {
        return Err(Error::contract("structure inequalities need a nonnegative density"));
    }
    let st = field.eval_stack(x);
    let alpha = field.alpha();
    let nf = n as f64;
    let b = b_from_stack(&st, alpha);
    let h = h_from_stack(&st, alpha);
    // grad b = -alpha/(n-2) grad lap - 2 hess grad
    let mut lhs1 = 0.0;
    for i in 0..n {
        let hg: f64 = (0..n).map(|j| st.hess_at(i, j) * st.grad[j]).sum();
        let gb = -alpha / (nf - 2.0) * st.grad_lap[i] - 2.0 * hg;
        lhs1 += st.grad[i] * gb;
    }
    Ok(StructureInequalities {
        lhs1,
        rhs1: 2.0 / (nf - 2.0) * (-st.lap) * b + h,
        lhs2: alpha / (nf - 2.0) * st.bilap
            + 2.0 * (st.hess_frobenius_sq() + st.grad_dot_grad_lap()),
        rhs2: 2.0 * (nf - 6.0) * h,
    })
}

/// Both sides of `(4/(n-4)^2) Q4 e^{4u} >= (2-a)(2(n-2)/(n-4)-a)[...]`.
pub fn q4_lower_bound_sides(stack: &DerivativeStack, alpha: f64) -> (f64, f64) {
    let n = stack.dimension() as f64;
    let lhs = 4.0 / ((n - 4.0) * (n - 4.0)) * q4_times_e4u(stack);
    let bracket = (n - 4.0).powi(2) / (4.0 * (n - 2.0).powi(2)) * stack.lap * stack.lap
        + stack.bilap / (2.0 * (n - 2.0));
    let rhs = (2.0 - alpha) * (2.0 * (n - 2.0) / (n - 4.0) - alpha) * bracket;
    (lhs, rhs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

const MC_CHUNKS: usize = 64;
const MIX_LAMBDA: f64 = 0.5;

/// Importance-sampled `c0^2 int int g(y, z) f(y) f(z) dy dz`.
///
/// The proposal mixes the normalized density with a component whose
/// `|y - x|^{1-n}` profile cancels the kernel singularities at `x`, so the
/// weighted integrand has finite variance.
fn double_integral<G>(density: &CurvatureDensity, x: &[f64], mc: MonteCarlo, kernel: G) -> Result<McEstimate>
where
    G: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    if !density.is_nonnegative() {
        return Err(Error::contract("Monte-Carlo double integrals need a nonnegative density"));
    }
    if density.is_zero() {
        return Ok(McEstimate {
            estimate: 0.0,
            stderr: 0.0,
        });
    }
    if mc.samples < 2 {
        return Err(Error::contract("Monte-Carlo needs at least two samples"));
    }
    let n = density.dimension();
    let mass = density.mass();
    let r_h = 2.0 * density.min_scale();
    let omega = sphere_area(n - 1);
    let proposal_pdf = |y: &[f64]| {
        let d = distance(x, y);
        let local = if d < r_h && d > 0.0 {
            1.0 / (omega * r_h * d.powi(n as i32 - 1))
        } else {
            0.0
        };
        (1.0 - MIX_LAMBDA) * density.eval(y) / mass + MIX_LAMBDA * local
    };
    let draw = |rng: &mut ChaCha20Rng| -> Vec<f64> {
        if rng.random::<f64>() < MIX_LAMBDA {
            let dir = unit_vector(n, rng);
            let r = r_h * rng.random::<f64>();
            dir.iter().zip(x).map(|(d, c)| c + r * d).collect()
        } else {
            density.sample(rng)
        }
    };
    let per_chunk = mc.samples.div_ceil(MC_CHUNKS);
    let partial: Vec<(f64, f64, usize)> = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha20Rng::seed_from_u64(mc.seed);
            rng.set_stream(chunk as u64);
            let count = per_chunk.min(mc.samples.saturating_sub(chunk * per_chunk));
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let y = draw(&mut rng);
                let z = draw(&mut rng);
                let qy = proposal_pdf(&y);
                let qz = proposal_pdf(&z);
                let v = if qy > 0.0 && qz > 0.0 {
                    kernel(&y, &z) * density.eval(&y) * density.eval(&z) / (qy * qz)
                } else {
                    0.0
                };
                let v = if v.is_finite() { v } else { 0.0 };
                s1 += v;
                s2 += v * v;
            }
            (s1, s2, count)
        })
        .collect();
    let (s1, s2, count) = partial
        .iter()
        .fold((0.0, 0.0, 0), |acc, p| (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2));
    let m = count as f64;
    let mean = s1 / m;
    let var = (s2 / m - mean * mean).max(0.0) * m / (m - 1.0);
    let c0 = density.c0();
    Ok(McEstimate {
        estimate: c0 * c0 * mean,
        stderr: c0 * c0 * (var / m).sqrt(),
    })
}

/// Monte-Carlo value of `b(x) = int int |y-z|^2 / (2|x-y|^2|x-z|^2) dnu dnu`.
pub fn b_doubleint(density: &CurvatureDensity, x: &[f64], mc: MonteCarlo) -> Result<McEstimate> {
    double_integral(density, x, mc, |y, z| {
        let yz = distance(y, z);
        let xy = distance(x, y);
        let xz = distance(x, z);
        yz * yz / (2.0 * xy * xy * xz * xz)
    })
}

/// Monte-Carlo value of `h(x) = int int |y-z|^2 / (|x-y|^2|x-z|^4) dnu dnu`.
pub fn h_doubleint(density: &CurvatureDensity, x: &[f64], mc: MonteCarlo) -> Result<McEstimate> {
    if density.dimension() < 6 {
        return Err(Error::contract("h is defined only for n >= 6"));
    }
    double_integral(density, x, mc, |y, z| {
        let yz = distance(y, z);
        let xy = distance(x, y);
        let xz2 = distance(x, z).powi(2);
        yz * yz / (xy * xy * xz2 * xz2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // Rotation of diag(3, 1, -2).
        let (c, s) = (0.6_f64, 0.8_f64);
        let m = [
            3.0 * c * c + s * s,
            (3.0 - 1.0) * c * s,
            0.0,
            (3.0 - 1.0) * c * s,
            3.0 * s * s + c * c,
            0.0,
            0.0,
            0.0,
            -2.0,
        ];
        let e = symmetric_eigenvalues(&m, 3);
        assert!((e[0] - 3.0).abs() < 1e-14);
        assert!((e[1] - 1.0).abs() < 1e-14);
        assert!((e[2] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn newton_identities_small_case() {
        let s = elementary_symmetric(&[1.0, 2.0, 3.0]);
        assert_eq!(s, vec![6.0, 11.0, 6.0]);
    }
}
