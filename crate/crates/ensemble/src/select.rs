//! Greedy pivot selection over a candidate sweep.
//!
//! The parameter-space extremes are always kept (the blend is convex, so
//! anything outside the pivot hull is unreachable); remaining slots go to
//! whichever candidate the current pivots reconstruct worst.

use vb_mesh::AnimSequence;
use vb_metrics::rmse;
use vb_sim::SimParams;

use crate::blend::blend_sequences;
use crate::kernel::{median_pairwise_distance, rbf_weights, Standardization};
use crate::EnsembleError;

fn param_key(p: &SimParams) -> [f64; 3] {
    [p.bending_stiffness, p.mass_density, p.timescale]
}

/// Picks `k` pivot indices from simulated candidates. Returns indices into
/// `candidates`, sorted by parameter value. Deterministic: ties always go
/// to the candidate earliest in that order.
pub fn select_pivots(
    candidates: &[(SimParams, AnimSequence)],
    k: usize,
) -> Result<Vec<usize>, EnsembleError> {
    if candidates.is_empty() {
        return Err(EnsembleError::Config("no pivot candidates".into()));
    }
    if k == 0 || k > candidates.len() {
        return Err(EnsembleError::Config(format!(
            "cannot pick {k} pivots from {} candidates",
            candidates.len()
        )));
    }

    // Canonical order: by parameter tuple, input order breaking ties.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (param_key(&candidates[a].0), param_key(&candidates[b].0));
        ka.iter()
            .zip(&kb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|c| c.is_ne())
            .unwrap_or(a.cmp(&b))
    });

    // Extremes of every coordinate that actually varies.
    let mut selected: Vec<usize> = Vec::new();
    for coord in 0..3 {
        let value = |i: usize| param_key(&candidates[i].0)[coord];
        // min_by keeps the first of equal elements, so ties resolve to the
        // canonical order for both ends.
        let lo = order
            .iter()
            .copied()
            .min_by(|&a, &b| value(a).total_cmp(&value(b)))
            .expect("nonempty");
        let hi = order
            .iter()
            .copied()
            .min_by(|&a, &b| value(b).total_cmp(&value(a)))
            .expect("nonempty");
        if value(lo) < value(hi) {
            for idx in [lo, hi] {
                if !selected.contains(&idx) {
                    selected.push(idx);
                }
            }
        }
    }
    if selected.is_empty() {
        // All candidates share one parameter point; fall back to canonical
        // order.
        selected.push(order[0]);
    }
    if k < selected.len() {
        return Err(EnsembleError::Config(format!(
            "k = {k} cannot cover the {} parameter-range extremes",
            selected.len()
        )));
    }

    let standardization = Standardization::fit(
        &candidates.iter().map(|(p, _)| *p).collect::<Vec<_>>(),
    );
    let feat = |i: usize| standardization.apply(&candidates[i].0).to_vec();

    while selected.len() < k {
        let pivot_feats: Vec<Vec<f64>> = selected.iter().map(|&i| feat(i)).collect();
        let sigma = median_pairwise_distance(&pivot_feats);
        let pivot_seqs: Vec<AnimSequence> =
            selected.iter().map(|&i| candidates[i].1.clone()).collect();

        let mut worst: Option<(usize, f64)> = None;
        for &j in &order {
            if selected.contains(&j) {
                continue;
            }
            let w = rbf_weights(&pivot_feats, &feat(j), sigma)?;
            let blend = blend_sequences(&pivot_seqs, &w)?;
            let err = rmse(&blend, &candidates[j].1)?;
            if worst.map_or(true, |(_, e)| err > e) {
                worst = Some((j, err));
            }
        }
        let (next, err) = worst.expect("k <= candidate count");
        log::debug!("pivot {next} added (reconstruction error {err:.3} mm)");
        selected.push(next);
    }

    Ok(order.into_iter().filter(|i| selected.contains(i)).collect())
}
