//! Dimension constants shared by the kernels.

use std::f64::consts::PI;

/// Surface measure of the unit sphere `S^m` embedded in `R^{m+1}`.
pub fn sphere_area(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * sphere_area(m - 2),
    }
}

/// Volume of the unit ball in `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n - 1) / n as f64
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// Rising factorial `(a)_k`.
pub fn pochhammer(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (a + i as f64))
}

/// Normalization `2 / ((n-1)! |S^n|)` of the logarithmic kernel.
pub fn log_kernel_normalization(n: usize) -> f64 {
    2.0 / (factorial(n - 1) * sphere_area(n))
}

/// `Gamma(m)` for a positive integer or half-integer argument given as `2m`.
pub fn gamma_half_integer(two_m: usize) -> f64 {
    assert!(two_m > 0);
    if two_m % 2 == 0 {
        factorial(two_m / 2 - 1)
    } else {
        // Gamma(1/2) = sqrt(pi), Gamma(x + 1) = x Gamma(x)
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while 2.0 * x < two_m as f64 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Beta function `B(a, 5)` for real `a > 0`.
pub fn beta_with_five(a: f64) -> f64 {
    24.0 / (a * (a + 1.0) * (a + 2.0) * (a + 3.0) * (a + 4.0))
}

/// Upper regularized incomplete gamma `Q(m, x)` for a positive integer `m`.
pub fn upper_gamma_regularized_int(m: usize, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..m {
        term *= x / i as f64;
        sum += term;
    }
    (-x).exp() * sum
}

/// Gauss–Legendre nodes and weights on `[0, 1]`; weights sum to one.
pub fn gauss_legendre_unit(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let m = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=count {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if count == 1 { z } else { p1 };
            let pm1 = if count == 1 { 1.0 } else { p0 };
            dp = m * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[count - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[count - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}
