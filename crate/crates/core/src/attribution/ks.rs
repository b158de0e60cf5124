use serde::{Deserialize, Serialize};

use crate::error::{NifError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// sup |ECDF_a - ECDF_b|, in [0, 1].
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// The p-value uses the asymptotic Kolmogorov distribution at
/// `(sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) * D` with `ne = n m / (n + m)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(NifError::Empty("K-S sample"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(NifError::NonFinite("K-S sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] == v {
            i += 1;
        }
        while j < m && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let p_value = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    Ok(KsResult {
        statistic: d,
        p_value,
    })
}

/// Survival function of the Kolmogorov distribution,
/// `Q(l) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 l^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 2.0;
    for j in 1..=200 {
        let term = sign * (a2 * (j * j) as f64).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs().max(1e-300) {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
    }
    // series did not converge: only happens for tiny lambda
    1.0
}
