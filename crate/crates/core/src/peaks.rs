//! Constrained local-maximum search.

use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakConstraints {
    /// Minimum index spacing between any two accepted peaks.
    pub min_distance: usize,
    pub min_height: f64,
    pub max_count: Option<usize>,
}

impl PeakConstraints {
    pub fn new(min_distance: usize, min_height: f64) -> Self {
        Self {
            min_distance,
            min_height,
            max_count: None,
        }
    }
}

/// Strict local maxima. A plateau counts once, at its first index, when
/// both of its neighbours are strictly lower. The endpoints never qualify.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    if x.len() < 3 {
        return out;
    }
    let last = x.len() - 1;
    let mut i = 1;
    while i < last {
        if x[i - 1] < x[i] {
            let mut end = i;
            while end < last && x[end + 1] == x[i] {
                end += 1;
            }
            if end < last && x[end + 1] < x[i] {
                out.push(i);
            }
            i = end + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Local maxima at or above `min_height`, thinned greedily so the tallest
/// candidate wins every spacing conflict (earlier index on equal heights).
/// Returned indices are ascending.
pub fn find_peaks(x: &[f64], c: &PeakConstraints) -> Vec<usize> {
    let mut candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&i| x[i] >= c.min_height)
        .collect();
    if c.min_distance <= 1 && c.max_count.is_none() {
        return candidates;
    }

    candidates.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let cap = c.max_count.unwrap_or(usize::MAX);
    let mut kept = BTreeSet::new();
    for i in candidates {
        if kept.len() >= cap {
            break;
        }
        let clear_before = kept
            .range(..i)
            .next_back()
            .is_none_or(|&p| i - p >= c.min_distance);
        let clear_after = kept
            .range(i..)
            .next()
            .is_none_or(|&p| p - i >= c.min_distance);
        if clear_before && clear_after {
            kept.insert(i);
        }
    }
    kept.into_iter().collect()
}
