//! Limit estimation from sampled sequences `(r, value)`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitModel {
    /// `A + B r^{-q}`.
    PowerLaw,
    /// `A + (B + C log log r) / log r`, for quantities like `log d(r) / log r`
    /// whose rate may carry a `log log` factor.
    LogRate,
    LastValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub estimate: f64,
    /// Fitted convergence order; `None` means the tail is already constant.
    pub order: Option<f64>,
    pub model: LimitModel,
    pub last_value: f64,
}

fn check_samples(samples: &[(f64, f64)]) -> Result<()> {
    if samples.len() < 4 {
        return Err(Error::contract("limit extrapolation needs at least 4 samples"));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::contract("limit extrapolation needs increasing abscissas"));
    }
    Ok(())
}

fn tail(samples: &[(f64, f64)]) -> &[(f64, f64)] {
    let keep = (samples.len() / 2).max(3);
    &samples[samples.len() - keep..]
}

/// Least squares `y ~ a + b x`; returns `(a, b, residual sum of squares)`.
fn linear_fit(points: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64, f64) {
    let m = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |acc, (x, y)| (acc.0 + x, acc.1 + y));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in points.clone() {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss = points.map(|(x, y)| (y - a - b * x).powi(2)).sum();
    (a, b, rss)
}

pub fn limit_extrapolate(samples: &[(f64, f64)]) -> Result<Extrapolation> {
    limit_extrapolate_with(samples, LimitModel::PowerLaw)
}

pub fn limit_extrapolate_with(samples: &[(f64, f64)], model: LimitModel) -> Result<Extrapolation> {
    check_samples(samples)?;
    let last_value = samples[samples.len() - 1].1;
    let t = tail(samples);
    let spread = t.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max)
        - t.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    if spread <= 1e-13 * last_value.abs().max(1e-300) || spread == 0.0 {
        return Ok(Extrapolation {
            estimate: last_value,
            order: None,
            model,
            last_value,
        });
    }
    match model {
        LimitModel::LastValue => Ok(Extrapolation {
            estimate: last_value,
            order: None,
            model,
            last_value,
        }),
        LimitModel::LogRate => {
            if t.iter().any(|&(r, _)| r <= 1.0) {
                return Err(Error::contract("log-rate extrapolation needs abscissas above 1"));
            }
            let a = log_rate_fit(t);
            Ok(Extrapolation {
                estimate: a,
                order: None,
                model,
                last_value,
            })
        }
        LimitModel::PowerLaw => {
            let rss_at = |q: f64| linear_fit(t.iter().map(|&(r, v)| (r.powf(-q), v)));
            // Coarse scan for the exponent, then golden-section refinement.
            let grid: Vec<f64> = (1..=160).map(|i| 0.05 * i as f64).collect();
            let best = grid
                .iter()
                .copied()
                .min_by(|a, b| rss_at(*a).2.total_cmp(&rss_at(*b).2))
                .unwrap();
            let (mut lo, mut hi) = ((best - 0.05).max(1e-3), best + 0.05);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                if rss_at(m1).2 <= rss_at(m2).2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let q = 0.5 * (lo + hi);
            let (a, _, _) = rss_at(q);
            if !a.is_finite() || q >= 7.99 {
                return Ok(Extrapolation {
                    estimate: last_value,
                    order: None,
                    model: LimitModel::LastValue,
                    last_value,
                });
            }
            Ok(Extrapolation {
                estimate: a,
                order: Some(q),
                model,
                last_value,
            })
        }
    }
}

/// Least squares on the basis `(1, 1/L, log L / L)`, `L = log r`; returns the
/// constant coefficient.
fn log_rate_fit(t: &[(f64, f64)]) -> f64 {
    let rows: Vec<([f64; 3], f64)> = t
        .iter()
        .map(|&(r, v)| {
            let l = r.ln();
            ([1.0, 1.0 / l, l.ln() / l], v)
        })
        .collect();
    // Normal equations with partial pivoting.
    let mut m = [[0.0; 4]; 3];
    for (b, v) in &rows {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += b[i] * b[j];
            }
            m[i][3] += b[i] * v;
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][3] - s) / m[i][i];
    }
    x[0]
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(samples: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    Some(linear_fit(pts.iter().copied()).1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence_flags_infinite_order() {
        let s: Vec<(f64, f64)> = (1..=8).map(|i| (i as f64, 3.0)).collect();
        let e = limit_extrapolate(&s).unwrap();
        assert_eq!(e.estimate, 3.0);
        assert_eq!(e.order, None);
    }

    #[test]
    fn synthetic_power_law() {
        let s: Vec<(f64, f64)> = (0..13)
            .map(|i| {
                let r = 10f64.powf(1.0 + 0.25 * i as f64);
                (r, 2.0 + 1.0 / r)
            })
            .collect();
        let e = limit_extrapolate(&s).unwrap();
        assert!((e.estimate - 2.0).abs() < 1e-6);
        assert!((e.order.unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn log_rate_recovers_limit() {
        let s: Vec<(f64, f64)> = (0..9)
            .map(|i| {
                let r = 10f64.powi(2 + i);
                (r, 0.5 + 0.97 / r.ln())
            })
            .collect();
        let e = limit_extrapolate_with(&s, LimitModel::LogRate).unwrap();
        assert!((e.estimate - 0.5).abs() < 1e-10);
        // Distance exponent at the boundary case: log(c log r) / log r -> 0.
        let s: Vec<(f64, f64)> = (0..9)
            .map(|i| {
                let r = 10f64.powi(2 + i);
                (r, (1.7 * r.ln()).ln() / r.ln())
            })
            .collect();
        let e = limit_extrapolate_with(&s, LimitModel::LogRate).unwrap();
        assert!(e.estimate.abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(limit_extrapolate(&[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]).is_err());
        assert!(limit_extrapolate(&[(1.0, 1.0), (3.0, 1.0), (2.0, 1.0), (4.0, 1.0)]).is_err());
    }
}
