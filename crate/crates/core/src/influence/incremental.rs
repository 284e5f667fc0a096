//! Closed-form leave-one-out downdates for the mean, plug-in variance and
//! Gini. Each returns the full sensitivity-curve vector in original
//! observation order at O(n) or O(n log n) total cost, and must agree with
//! the exact re-evaluation route to 1e-9 relative (tested).

use crate::error::{Error, Result};
use crate::sample::Sample;

/// SC_j = n (mean - mean_without_j) = n (y_j - mean) / (n - 1).
pub(crate) fn mean_sc(sample: &Sample) -> Vec<f64> {
    let n = sample.n() as f64;
    let mu = sample.cached_mean();
    sample
        .values()
        .iter()
        .map(|&y| n * (y - mu) / (n - 1.0))
        .collect()
}

/// Plug-in variance downdate via centered sums of squares.
pub(crate) fn variance_sc(sample: &Sample) -> Vec<f64> {
    let n = sample.n() as f64;
    let mu = sample.cached_mean();
    let c2: f64 = sample.values().iter().map(|&y| (y - mu) * (y - mu)).sum();
    let v_full = c2 / n;
    let m = n - 1.0;
    sample
        .values()
        .iter()
        .map(|&y| {
            let c = y - mu;
            // view values centered at the full mean have mean -c/(n-1)
            let v_loo = (c2 - c * c) / m - (c / m) * (c / m);
            n * (v_full - v_loo)
        })
        .collect()
}

/// Gini downdate from prefix sums of the sorted-rank numerator
/// N = sum_i (2i - n - 1) y_(i), so that removing sorted position p costs
/// O(1) after one O(n) pass.
pub(crate) fn gini_sc(sample: &Sample) -> Result<Vec<f64>> {
    let n = sample.n();
    let nf = n as f64;
    let sorted = sample.sorted_values();

    // prefix[k] = sum of first k sorted values; weighted[k] = sum of i*y_(i)
    let mut prefix = Vec::with_capacity(n + 1);
    let mut weighted = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    weighted.push(0.0);
    for (pos, &y) in sorted.iter().enumerate() {
        prefix.push(prefix[pos] + y);
        weighted.push(weighted[pos] + (pos + 1) as f64 * y);
    }
    let total = prefix[n];
    if total == 0.0 {
        return Err(Error::DegenerateSample("Gini undefined for zero-mean data"));
    }
    let numerator = 2.0 * weighted[n] - (nf + 1.0) * total;
    let g_full = numerator / (nf * total);

    let mut out = vec![0.0; n];
    for p in 1..=n {
        let y_p = sorted[p - 1];
        let rest = total - y_p;
        if rest == 0.0 {
            return Err(Error::DegenerateSample("Gini undefined for zero-mean data"));
        }
        // ranks above p drop by one when p is removed
        let num_loo = 2.0 * weighted[p - 1] - nf * prefix[p - 1]
            + 2.0 * (weighted[n] - weighted[p])
            - (nf + 2.0) * (total - prefix[p]);
        let g_loo = num_loo / ((nf - 1.0) * rest);
        out[sample.sort_index()[p - 1] as usize] = nf * (g_full - g_loo);
    }
    Ok(out)
}
