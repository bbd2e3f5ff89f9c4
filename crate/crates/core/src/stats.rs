//! Statistical helpers used by the diagnostics: two-sample Kolmogorov–Smirnov,
//! weighted least squares, Poisson goodness of fit and correlation.

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov
/// distribution (small-sample corrected effective size).
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> KsResult {
    assert!(!xs.is_empty() && !ys.is_empty());
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    }
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Least squares `y ≈ intercept + slope·x` with weights `w` (inverse variances).
///
/// With inverse-variance weights the reported slope error is the propagated
/// one; with unit weights it is the residual-based error.
pub fn weighted_fit(x: &[f64], y: &[f64], w: Option<&[f64]>) -> LinearFit {
    let n = x.len();
    assert!(n >= 2 && y.len() == n);
    let residual_based = w.is_none();
    let ones = vec![1.0; n];
    let w = w.unwrap_or(&ones);
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (a - mx) * (c - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if residual_based {
        if n > 2 {
            let rss: f64 = x
                .iter()
                .zip(y)
                .map(|(a, c)| (c - intercept - slope * a).powi(2))
                .sum();
            (rss / (n - 2) as f64 / sxx).sqrt()
        } else {
            0.0
        }
    } else {
        (1.0 / sxx).sqrt()
    };
    LinearFit {
        slope,
        intercept,
        slope_stderr,
    }
}

/// Chi-square goodness-of-fit p-value of integer `counts` against Poisson(`mean`).
///
/// Cells are the central quantile range of the Poisson law, with both tails
/// pooled so that every expected count is at least 5.
pub fn poisson_gof_p_value(counts: &[u64], mean: f64) -> f64 {
    let n = counts.len() as f64;
    let max = *counts.iter().max().unwrap_or(&0) as usize;
    let upper = max.max((mean + 10.0 * mean.sqrt() + 10.0) as usize);
    let mut pmf = Vec::with_capacity(upper + 1);
    let mut log_p = -mean;
    for k in 0..=upper {
        if k > 0 {
            log_p += mean.ln() - (k as f64).ln();
        }
        pmf.push(log_p.exp());
    }
    let mut observed = vec![0.0; upper + 1];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    // pool into cells with expected ≥ 5
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for k in 0..=upper {
        e_acc += n * pmf[k];
        o_acc += observed[k];
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    // remaining upper tail, including mass beyond `upper`
    let tail_expected = n * (1.0 - pmf.iter().sum::<f64>()).max(0.0) + e_acc;
    if let Some(last) = cells.last_mut() {
        last.0 += o_acc;
        last.1 += tail_expected;
    }
    let chi2: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(chi2)
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
