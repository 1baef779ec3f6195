use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::array::SourceTruth;
use crate::{Error, Result};

/// Exhaustive search is used up to this many sources, greedy beyond.
pub const EXHAUSTIVE_PAIRING_LIMIT: usize = 8;

/// Assignment of estimates to true sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    /// `assignment[k]` is the estimate index matched to true source `k`.
    pub assignment: Vec<usize>,
    /// Signed `estimate - truth`, radians, per true source.
    pub angle_errors: Vec<f64>,
    /// Signed `estimate - truth`, wavelengths, per true source.
    pub range_errors: Vec<f64>,
}

/// Matches `(angle rad, range)` estimates to truth minimizing total |angle error|.
pub fn pair_estimates(estimates: &[(f64, f64)], truth: &[SourceTruth]) -> Result<Pairing> {
    if estimates.len() != truth.len() {
        return Err(Error::InvalidConfig(format!(
            "{} estimates cannot be paired with {} sources",
            estimates.len(),
            truth.len()
        )));
    }
    let k = truth.len();
    let cost = |s: usize, e: usize| (estimates[e].0 - truth[s].angle).abs();
    let assignment = if k <= EXHAUSTIVE_PAIRING_LIMIT {
        // Permutations come in lexicographic order, so ties keep the earliest.
        let mut best: Option<(f64, Vec<usize>)> = None;
        for perm in (0..k).permutations(k) {
            let total: f64 = perm.iter().enumerate().map(|(s, &e)| cost(s, e)).sum();
            if best.as_ref().is_none_or(|(b, _)| total < *b) {
                best = Some((total, perm));
            }
        }
        best.map(|(_, p)| p).unwrap_or_default()
    } else {
        let mut pairs: Vec<(usize, usize)> = (0..k).cartesian_product(0..k).collect();
        pairs.sort_by(|&(s1, e1), &(s2, e2)| cost(s1, e1).total_cmp(&cost(s2, e2)).then((s1, e1).cmp(&(s2, e2))));
        let mut assignment = vec![usize::MAX; k];
        let mut used = vec![false; k];
        for (s, e) in pairs {
            if assignment[s] == usize::MAX && !used[e] {
                assignment[s] = e;
                used[e] = true;
            }
        }
        assignment
    };
    let angle_errors = assignment.iter().enumerate().map(|(s, &e)| estimates[e].0 - truth[s].angle).collect();
    let range_errors = assignment.iter().enumerate().map(|(s, &e)| estimates[e].1 - truth[s].range).collect();
    Ok(Pairing { assignment, angle_errors, range_errors })
}
