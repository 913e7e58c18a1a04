//! Small descriptive-statistics helpers shared by the fitting and
//! Monte-Carlo code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Population moments (divisor N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    if xs.is_empty() {
        return (m, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    (m, var.sqrt())
}

pub fn moments(xs: &[f64]) -> Result<Moments> {
    if xs.is_empty() {
        return Err(Error::Degenerate("empty sample".into()));
    }
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return Err(Error::Degenerate("sample has zero variance".into()));
    }
    Ok(Moments { count: xs.len(), mean: m, std: m2.sqrt(), skewness: m3 / m2.powf(1.5), kurtosis: m4 / (m2 * m2) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JarqueBera {
    pub statistic: f64,
    pub p_value: f64,
}

/// Jarque–Bera normality test. The p-value is the upper tail of a
/// chi-squared distribution with two degrees of freedom, `exp(-JB/2)`.
pub fn jarque_bera(residuals: &[f64]) -> Result<JarqueBera> {
    if residuals.len() < 8 {
        return Err(Error::Degenerate(format!("Jarque-Bera needs at least 8 observations, got {}", residuals.len())));
    }
    let mo = moments(residuals)?;
    let n = residuals.len() as f64;
    let excess = mo.kurtosis - 3.0;
    let statistic = n / 6.0 * (mo.skewness * mo.skewness + excess * excess / 4.0);
    Ok(JarqueBera { statistic, p_value: (-statistic / 2.0).exp() })
}

/// Sample quantile with linear interpolation between order statistics
/// (`h = (N-1)p`). `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}
