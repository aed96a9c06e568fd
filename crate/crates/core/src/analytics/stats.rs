use super::AnalyticsError;

/// Per-feature affine standardization fitted on one set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant features.
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, AnalyticsError> {
        let first = rows.first().ok_or(AnalyticsError::Empty("feature matrix"))?;
        let d = first.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(AnalyticsError::Ragged);
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut sd = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in sd.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let sd = sd
            .into_iter()
            .map(|v| {
                let s = v.sqrt();
                if s > 1e-12 { s } else { 1.0 }
            })
            .collect();
        Ok(Self { mean, sd })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Two-sample Kolmogorov–Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

impl KsResult {
    pub fn report(&self, label_a: &str, label_b: &str) -> String {
        format!(
            "test: two-sample Kolmogorov-Smirnov (asymptotic p-value)\nsample_a: {label_a} (n = {})\nsample_b: {label_b} (n = {})\nD: {}\np_value: {:e}\n",
            self.n_a, self.n_b, self.d, self.p_value
        )
    }
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.18 {
        // Jacobi theta form converges fast for small λ.
        let k = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let a = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf: f64 = (1..=50)
            .map(|j| k * (a * ((2 * j - 1) as f64).powi(2)).exp())
            .sum();
        1.0 - cdf
    } else {
        let mut sum = 0.0;
        for j in 1..=100 {
            let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
            sum += if j % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        2.0 * sum
    };
    q.clamp(0.0, 1.0)
}

/// Two-sample KS statistic over the merged sample points and its asymptotic
/// p-value with effective size `n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, AnalyticsError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalyticsError::Empty("KS sample"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(AnalyticsError::NonFinite);
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    // Largest |i*nb - j*na| in integers, divided once, so D is the correctly
    // rounded fraction.
    let mut gap: u128 = 0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        gap = gap.max((i as u128 * nb as u128).abs_diff(j as u128 * na as u128));
    }
    let d = gap as f64 / (na as f64 * nb as f64);
    let ne = (na * nb) as f64 / (na + nb) as f64;
    Ok(KsResult {
        d,
        p_value: kolmogorov_q(ne.sqrt() * d),
        n_a: na,
        n_b: nb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_branches_agree_at_switch() {
        let lo = {
            let k = (2.0 * std::f64::consts::PI).sqrt() / 1.18;
            let a = -std::f64::consts::PI.powi(2) / (8.0 * 1.18 * 1.18);
            1.0 - (1..=50).map(|j| k * (a * ((2 * j - 1) as f64).powi(2)).exp()).sum::<f64>()
        };
        assert!((lo - kolmogorov_q(1.18)).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_known_values() {
        // Q(1.3581) ≈ 0.05 and Q(1.6276) ≈ 0.01 are the usual critical points.
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_q(0.0), 1.0);
        assert!(kolmogorov_q(10.0) < 1e-80);
    }

    #[test]
    fn standardizer_handles_constant_columns() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.transform(&rows), vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
    }
}
