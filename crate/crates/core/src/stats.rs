//! One-sample Kolmogorov-Smirnov test against `Unif(0, 1)`.

/// `sup_x |F_n(x) - x|`; `None` for an empty sample.
pub fn ks_uniform(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Some(d)
}

/// Asymptotic p-value of statistic `d` from `n` samples, with Stephens'
/// small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let t = (sn + 0.12 + 0.11 / sn) * d;
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Plotting positions `i / (N + 1)`.
pub fn uniform_quantiles(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistic_on_small_samples() {
        assert_eq!(ks_uniform(&[]), None);
        assert!((ks_uniform(&[0.5]).unwrap() - 0.5).abs() < 1e-15);
        let even: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_uniform(&even).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn pvalue_matches_known_critical_values() {
        // asymptotic 1% and 5% points of the Kolmogorov distribution
        let n = 1_000_000;
        let scale = (n as f64).sqrt() + 0.12 + 0.11 / (n as f64).sqrt();
        assert!((ks_pvalue(1.6276 / scale, n) - 0.01).abs() < 1e-4);
        assert!((ks_pvalue(1.3581 / scale, n) - 0.05).abs() < 1e-4);
        assert_eq!(ks_pvalue(0.0, 10), 1.0);
    }
}
