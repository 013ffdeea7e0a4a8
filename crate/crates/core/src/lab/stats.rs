use serde::Serialize;

/// A Monte-Carlo mean with its batched standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// `mean <= bound` up to `k` standard errors.
    pub fn at_most(&self, bound: f64, k: f64) -> bool {
        self.mean <= bound + k * self.se
    }
}

/// Mean of `values` and the standard error from `batches` contiguous
/// batches (the standard deviation of the batch means over `sqrt(B)`).
pub fn batched(values: &[f64], batches: usize) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate { mean: 0.0, se: 0.0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let b = batches.clamp(1, n);
    if b < 2 {
        return Estimate { mean, se: 0.0 };
    }
    let means: Vec<f64> = (0..b)
        .map(|k| {
            let (lo, hi) = (k * n / b, (k + 1) * n / b);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (b - 1) as f64;
    Estimate { mean, se: (var / b as f64).sqrt() }
}

/// Batched estimate of `E[lhs - c rhs]`, paired trajectory by trajectory.
pub fn excess(lhs: &[f64], rhs: &[f64], c: f64, batches: usize) -> Estimate {
    let d: Vec<f64> = lhs.iter().zip(rhs).map(|(l, r)| l - c * r).collect();
    batched(&d, batches)
}

/// `(L / R)^{1/p}` with a delta-method standard error from the paired
/// batches; `0` when both sides vanish.
pub fn root_ratio(lhs: &[f64], rhs: &[f64], p: f64, batches: usize) -> Option<Estimate> {
    let l = batched(lhs, batches);
    let r = batched(rhs, batches);
    if r.mean == 0.0 {
        return (l.mean == 0.0).then_some(Estimate { mean: 0.0, se: 0.0 });
    }
    let ratio = l.mean / r.mean;
    // linearisation: L/R - ratio ~ (L - ratio R)/R
    let lin = excess(lhs, rhs, ratio, batches);
    let se_ratio = lin.se / r.mean;
    let c = ratio.powf(1.0 / p);
    let se = if ratio > 0.0 { c / p * se_ratio / ratio } else { 0.0 };
    Some(Estimate { mean: c, se })
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], prob: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = prob.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}
