//! Finite-difference oracles built only from pointwise evaluations.
//!
//! All stencils are fourth-order central differences, composed axis by axis,
//! and Richardson-extrapolated over the step pair `(h, h/2)`.

use crate::potential::{DerivativeStack, PotentialField};

type Stencil = &'static [(i32, f64)];

const D1: Stencil = &[(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
const D2: Stencil = &[
    (-2, -1.0 / 12.0),
    (-1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (1, 16.0 / 12.0),
    (2, -1.0 / 12.0),
];

/// Tensor-product stencil: each `(axis, stencil, order)` entry is applied in turn.
fn apply<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64, ops: &[(usize, Stencil, i32)]) -> f64 {
    let order: i32 = ops.iter().map(|o| o.2).sum();
    let mut y = x.to_vec();
    let mut acc = 0.0;
    fn rec<F: Fn(&[f64]) -> f64>(
        f: &F,
        y: &mut Vec<f64>,
        h: f64,
        ops: &[(usize, Stencil, i32)],
        weight: f64,
        acc: &mut f64,
    ) {
        match ops.split_first() {
            None => *acc += weight * f(y),
            Some((&(axis, st, _), rest)) => {
                for &(k, c) in st {
                    let saved = y[axis];
                    y[axis] = saved + k as f64 * h;
                    rec(f, y, h, rest, weight * c, acc);
                    y[axis] = saved;
                }
            }
        }
    }
    rec(f, &mut y, h, ops, 1.0, &mut acc);
    acc / h.powi(order)
}

fn richardson(coarse: f64, fine: f64) -> f64 {
    (16.0 * fine - coarse) / 15.0
}

fn derivative<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64, ops: &[(usize, Stencil, i32)]) -> f64 {
    richardson(apply(f, x, h, ops), apply(f, x, 0.5 * h, ops))
}

/// FD Laplacian of `f` at `x`.
pub fn fd_laplacian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> f64 {
    (0..x.len()).map(|i| derivative(f, x, h, &[(i, D2, 2)])).sum()
}

/// FD bilaplacian `sum_ij d_ii d_jj f`.
pub fn fd_bilaplacian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += derivative(f, x, h, &[(i, D2, 2), (j, D2, 2)]);
        }
    }
    acc
}

/// Derivative stack from `eval_u` alone. First and second derivatives use
/// step `h`, third derivatives `2h` and the bilaplacian `4h`.
pub fn fd_oracle(field: &PotentialField, x: &[f64], h: f64) -> DerivativeStack {
    let n = field.dimension();
    let u = |y: &[f64]| field.eval_u(y);
    let mut st = DerivativeStack::zeros(n);
    st.u = u(x);
    for i in 0..n {
        st.grad[i] = derivative(&u, x, h, &[(i, D1, 1)]);
        for j in 0..n {
            let v = if i == j {
                derivative(&u, x, h, &[(i, D2, 2)])
            } else if j > i {
                derivative(&u, x, h, &[(i, D1, 1), (j, D1, 1)])
            } else {
                st.hess[j * n + i]
            };
            st.hess[i * n + j] = v;
        }
    }
    st.lap = st.hess_trace();
    for i in 0..n {
        st.grad_lap[i] = (0..n)
            .map(|j| derivative(&u, x, 2.0 * h, &[(i, D1, 1), (j, D2, 2)]))
            .sum();
    }
    st.bilap = fd_bilaplacian(&u, x, 4.0 * h);
    st
}

/// Default FD step: small against the narrowest bump.
pub fn default_step(field: &PotentialField) -> f64 {
    4e-2 * field.density().min_scale()
}

/// Largest discrepancy between two stacks, each derivative order measured
/// relative to its own magnitude (the larger of the two stacks' norms).
pub fn stack_discrepancy(a: &DerivativeStack, b: &DerivativeStack) -> f64 {
    let groups: [(&[f64], &[f64]); 5] = [
        (&a.grad, &b.grad),
        (&a.hess, &b.hess),
        (std::slice::from_ref(&a.lap), std::slice::from_ref(&b.lap)),
        (&a.grad_lap, &b.grad_lap),
        (std::slice::from_ref(&a.bilap), std::slice::from_ref(&b.bilap)),
    ];
    groups
        .iter()
        .map(|(x, y)| {
            let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
            let diff: f64 = x.iter().zip(y.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            let scale = norm(x).max(norm(y));
            if scale > 0.0 {
                diff / scale
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Relative residual of `(-Delta)^{n/2} u = f` using the kernel Laplacian
/// (`n = 4`) or kernel bilaplacian (`n >= 6`) and FD Laplacians on top.
pub fn pde_residual(field: &PotentialField, x: &[f64], h: f64) -> f64 {
    let (fd, target) = pde_sides(field, x, h);
    let denom = if target != 0.0 { target.abs() } else { 1.0 };
    (fd - target).abs() / denom
}

/// `(FD-composed value, expected value)` for the top-order equation.
pub fn pde_sides(field: &PotentialField, x: &[f64], h: f64) -> (f64, f64) {
    let n = field.dimension();
    let f = field.density().eval(x);
    if n == 4 {
        let lap = |y: &[f64]| field.eval_stack(y).lap;
        return (fd_laplacian(&lap, x, h), f);
    }
    let m = n / 2 - 2;
    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let bilap = |y: &[f64]| field.eval_stack(y).bilap;
    (iterated_laplacian(&bilap, x, h, m), sign * f)
}

fn iterated_laplacian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64, times: usize) -> f64 {
    if times == 0 {
        return f(x);
    }
    let inner = |y: &[f64]| iterated_laplacian(f, y, h, times - 1);
    fd_laplacian(&inner, x, h)
}

/// `e^{-cu} Delta^2 e^{cu}` with `c = (n-4)/2`, i.e. FD `Q^(4) e^{4u}`.
pub fn fd_q4_times_e4u(field: &PotentialField, x: &[f64], h: f64) -> f64 {
    let c = (field.dimension() as f64 - 4.0) / 2.0;
    let u0 = field.eval_u(x);
    // Factor out e^{c u(x)} to keep the stencil values O(1).
    let g = |y: &[f64]| (c * (field.eval_u(y) - u0)).exp();
    fd_bilaplacian(&g, x, h)
}
