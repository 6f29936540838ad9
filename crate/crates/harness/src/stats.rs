//! Empirical CDFs and success-rate intervals.

use serde::Serialize;

/// Errors at or below this count as a successful fix, m.
pub const SUCCESS_THRESHOLD: f64 = 1_000.0;

/// Sorted per-trial errors of one mode; failures sit at the tail as `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    errors: Vec<f64>,
}

impl CdfTable {
    pub fn new(mut errors: Vec<f64>) -> Self {
        for e in errors.iter_mut() {
            if e.is_nan() {
                *e = f64::INFINITY;
            }
        }
        errors.sort_by(f64::total_cmp);
        Self { errors }
    }

    pub fn trials(&self) -> usize {
        self.errors.len()
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    /// `(error, fraction of trials <= error)` for the finite errors; with
    /// ties only the last (highest) fraction is kept.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.errors.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &e) in self.errors.iter().enumerate().filter(|(_, e)| e.is_finite()) {
            let frac = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == e => last.1 = frac,
                _ => out.push((e, frac)),
            }
        }
        out
    }

    /// Empirical quantile: smallest error whose CDF reaches `q`.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if self.errors.is_empty() {
            return None;
        }
        let n = self.errors.len();
        let k = ((q * n as f64).ceil() as usize).clamp(1, n);
        Some(self.errors[k - 1])
    }

    pub fn median(&self) -> Option<f64> {
        self.quantile(0.5)
    }

    pub fn successes(&self, threshold: f64) -> usize {
        self.errors.iter().filter(|&&e| e <= threshold).count()
    }
}

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// 95% two-sided normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub wilson95: [f64; 2],
    pub failures: usize,
    pub median_error_m: Option<f64>,
    pub quantiles_m: Vec<(f64, Option<f64>)>,
}

impl ModeSummary {
    pub fn from_cdf(cdf: &CdfTable) -> Self {
        let n = cdf.trials();
        let k = cdf.successes(SUCCESS_THRESHOLD);
        let (lo, hi) = wilson_interval(k, n, Z95);
        Self {
            trials: n,
            successes: k,
            success_rate: if n == 0 { 0.0 } else { k as f64 / n as f64 },
            wilson95: [lo, hi],
            failures: cdf.errors().iter().filter(|e| !e.is_finite()).count(),
            // JSON has no infinity, so failed quantiles become null
            median_error_m: cdf.median().filter(|m| m.is_finite()),
            quantiles_m: [0.1, 0.25, 0.5, 0.75, 0.9]
                .into_iter()
                .map(|q| (q, cdf.quantile(q).filter(|v| v.is_finite())))
                .collect(),
        }
    }
}
