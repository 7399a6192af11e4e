//! Minimal statistics for the acceptance gates.

/// Sample mean and (n−1) standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Standard normal upper-tail probability via the complementary error
/// function (Abramowitz–Stegun 7.1.26 polynomial, |err| < 1.5e-7).
fn normal_sf(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * x.abs());
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erfc = poly * (-x * x).exp();
    if x >= 0.0 {
        0.5 * erfc
    } else {
        1.0 - 0.5 * erfc
    }
}

/// One-sided Welch test of H1: mean(a) > mean(b). Returns (t, p). The
/// p-value uses the normal approximation, fine at the sample sizes the
/// acceptance suite runs (n = 100 per arm).
pub fn welch_one_sided(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    let va = sa * sa / a.len() as f64;
    let vb = sb * sb / b.len() as f64;
    let t = (ma - mb) / (va + vb).sqrt().max(1e-300);
    (t, normal_sf(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welch_separates_obviously_different_samples() {
        let a: Vec<f64> = (0..100).map(|i| 1.0 + (i % 7) as f64 * 0.01).collect();
        let b: Vec<f64> = (0..100).map(|i| 0.0 + (i % 5) as f64 * 0.01).collect();
        let (t, p) = welch_one_sided(&a, &b);
        assert!(t > 10.0);
        assert!(p < 1e-6);
        let (_, p_rev) = welch_one_sided(&b, &a);
        assert!(p_rev > 0.999);
    }

    #[test]
    fn normal_tail_reference_points() {
        assert!((normal_sf(0.0) - 0.5).abs() < 1e-7);
        assert!((normal_sf(1.96) - 0.025).abs() < 1e-4);
        assert!((normal_sf(2.326) - 0.01).abs() < 1e-4);
    }
}
