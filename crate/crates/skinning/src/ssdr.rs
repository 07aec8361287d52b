//! Skinning decomposition: alternating per-vertex weight solves and per-bone
//! transform solves, seeded by rigid k-means on motion signatures.

use log::debug;
use nalgebra::{DMatrix, DVector, Matrix3};
use vb_mesh::{AnimSequence, Vec3};

use crate::{
    nnls, weighted_procrustes, BoneTracks, RigidTransform, SkinModel, SkinningError, WeightEntry,
};

/// Knobs for the decomposition. `tolerance` is the relative objective
/// improvement per outer iteration below which the alternation stops.
#[derive(Debug, Clone)]
pub struct SsdrConfig {
    pub sparseness: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub rest_frame: usize,
    pub init_iters: usize,
}

impl Default for SsdrConfig {
    fn default() -> Self {
        SsdrConfig {
            sparseness: 4,
            max_iters: 30,
            tolerance: 1e-5,
            rest_frame: 0,
            init_iters: 10,
        }
    }
}

/// Output of [`ssdr_init`]: one cluster per bone, each fit rigidly.
#[derive(Debug, Clone)]
pub struct InitClustering {
    pub assignments: Vec<usize>,
    pub tracks: BoneTracks,
    /// Total squared fit error of the final clustering.
    pub fit_error: f64,
}

/// A finished decomposition plus its reconstruction residual.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub skin_model: SkinModel,
    pub tracks: BoneTracks,
    /// RMS per-vertex-per-frame reconstruction distance, meters.
    pub residual_rmse: f64,
    /// `residual_rmse` as a fraction of the sequence bounding-box diagonal.
    pub residual_relative: f64,
    pub iterations: usize,
}

fn blend_vertex(p: &Vec3, row: &[WeightEntry], frame: &[RigidTransform]) -> Vec3 {
    let mut v = Vec3::zeros();
    for e in row {
        let t = &frame[e.bone as usize];
        v += e.weight * (t.rotation * p + t.translation);
    }
    v
}

/// Squared reconstruction error of one vertex over all frames.
fn row_objective(
    seq: &AnimSequence,
    rest: &[Vec3],
    vertex: usize,
    row: &[WeightEntry],
    tracks: &BoneTracks,
) -> f64 {
    let mut total = 0.0;
    for (f, frame) in tracks.frames().iter().enumerate() {
        total += (seq.frame(f)[vertex] - blend_vertex(&rest[vertex], row, frame)).norm_squared();
    }
    total
}

/// Sum of squared reconstruction errors. Accumulated vertex-by-vertex with
/// the same per-row arithmetic as [`row_objective`], so that per-row
/// comparisons in the weight solve translate exactly into comparisons of
/// this total.
fn total_objective(
    seq: &AnimSequence,
    rest: &[Vec3],
    rows: &[Vec<WeightEntry>],
    tracks: &BoneTracks,
) -> f64 {
    rows.iter()
        .enumerate()
        .map(|(i, row)| row_objective(seq, rest, i, row, tracks))
        .sum()
}

fn bone_mass(rows: &[Vec<WeightEntry>], bone_count: usize) -> Vec<f64> {
    let mut mass = vec![0.0; bone_count];
    for row in rows {
        for e in row {
            mass[e.bone as usize] += e.weight;
        }
    }
    mass
}

/// Clusters vertices into `bone_count` rigidly-moving groups.
///
/// Farthest-point seeding on per-vertex displacement signatures, then a few
/// rounds of rigid k-means: fit each cluster with per-frame Procrustes,
/// reassign every vertex to the cluster whose rigid track predicts its
/// trajectory best. Empty clusters are re-seeded from worst-fit vertices.
/// Fully deterministic; ties go to the lowest index.
pub fn ssdr_init(
    seq: &AnimSequence,
    bone_count: usize,
    iters: usize,
) -> Result<InitClustering, SkinningError> {
    let v = seq.vertex_count();
    let t = seq.frame_count();
    if t < 2 {
        return Err(SkinningError::TooFewFrames(t));
    }
    if bone_count == 0 {
        return Err(SkinningError::NoBones);
    }
    if bone_count > v {
        return Err(SkinningError::TooManyBones {
            bone_count,
            limit: v,
        });
    }
    let rest = seq.frame(0);

    // Displacement signatures: motion relative to the first frame, which
    // removes the rest-position offset and keeps the motion pattern.
    let sigs: Vec<Vec<Vec3>> = (0..v)
        .map(|i| (1..t).map(|f| seq.frame(f)[i] - rest[i]).collect())
        .collect();
    let sig_dist = |a: usize, b: usize| -> f64 {
        sigs[a]
            .iter()
            .zip(&sigs[b])
            .map(|(x, y)| (x - y).norm_squared())
            .sum()
    };

    let mut seeds = Vec::with_capacity(bone_count);
    let first_seed = (0..v)
        .max_by(|&a, &b| {
            let na: f64 = sigs[a].iter().map(|x| x.norm_squared()).sum();
            let nb: f64 = sigs[b].iter().map(|x| x.norm_squared()).sum();
            na.partial_cmp(&nb).unwrap().then(b.cmp(&a))
        })
        .unwrap_or(0);
    seeds.push(first_seed);
    let mut min_d: Vec<f64> = (0..v).map(|i| sig_dist(i, first_seed)).collect();
    while seeds.len() < bone_count {
        let mut next = 0;
        for i in 1..v {
            if min_d[i] > min_d[next] {
                next = i;
            }
        }
        seeds.push(next);
        for i in 0..v {
            let d = sig_dist(i, next);
            if d < min_d[i] {
                min_d[i] = d;
            }
        }
    }

    let mut assignments: Vec<usize> = (0..v)
        .map(|i| {
            let mut best = 0;
            let mut best_d = sig_dist(i, seeds[0]);
            for (c, &s) in seeds.iter().enumerate().skip(1) {
                let d = sig_dist(i, s);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect();
    let seed_costs: Vec<f64> = (0..v).map(|i| sig_dist(i, seeds[assignments[i]])).collect();
    fix_empty_clusters(&mut assignments, bone_count, &seed_costs);

    let mut tracks = fit_cluster_tracks(seq, rest, &assignments, bone_count)?;
    for _ in 0..iters {
        let (mut new_assign, costs) = assign_by_tracks(seq, rest, &tracks);
        fix_empty_clusters(&mut new_assign, bone_count, &costs);
        if new_assign == assignments {
            break;
        }
        assignments = new_assign;
        tracks = fit_cluster_tracks(seq, rest, &assignments, bone_count)?;
    }

    let fit_error = (0..v)
        .map(|i|

            row_objective(
                seq,
                rest,
                i,
                &[WeightEntry {
                    bone: assignments[i] as u16,
                    weight: 1.0,
                }],
                &tracks,
            )
        )
        .sum();
    Ok(InitClustering {
        assignments,
        tracks,
        fit_error,
    })
}

/// Rigid per-frame Procrustes fit of each cluster.
fn fit_cluster_tracks(
    seq: &AnimSequence,
    rest: &[Vec3],
    assignments: &[usize],
    bone_count: usize,
) -> Result<BoneTracks, SkinningError> {
    let t = seq.frame_count();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); bone_count];
    for (i, &c) in assignments.iter().enumerate() {
        members[c].push(i);
    }
    let mut frames = vec![vec![RigidTransform::identity(); bone_count]; t];
    for (c, mem) in members.iter().enumerate() {
        if mem.is_empty() {
            continue;
        }
        let pts: Vec<Vec3> = mem.iter().map(|&i| rest[i]).collect();
        let ones = vec![1.0; mem.len()];
        for (f, frame) in frames.iter_mut().enumerate() {
            let targets: Vec<Vec3> = mem.iter().map(|&i| seq.frame(f)[i]).collect();
            frame[c] = weighted_procrustes(&pts, &targets, &ones)?.transform;
        }
    }
    Ok(BoneTracks::from_frames_unchecked(frames))
}

/// Assigns each vertex to the cluster whose track fits it best; returns the
/// assignment and the chosen cost per vertex.
fn assign_by_tracks(
    seq: &AnimSequence,
    rest: &[Vec3],
    tracks: &BoneTracks,
) -> (Vec<usize>, Vec<f64>) {
    let v = rest.len();
    let b = tracks.bone_count();
    let mut assign = vec![0usize; v];
    let mut costs = vec![0.0f64; v];
    for i in 0..v {
        let mut best = 0;
        let mut best_cost = f64::INFINITY;
        for c in 0..b {
            let mut cost = 0.0;
            for (f, frame) in tracks.frames().iter().enumerate() {
                cost += (seq.frame(f)[i] - frame[c].apply(&rest[i])).norm_squared();
            }
            if cost < best_cost {
                best = c;
                best_cost = cost;
            }
        }
        assign[i] = best;
        costs[i] = best_cost;
    }
    (assign, costs)
}

/// Moves worst-fit vertices (from clusters that can spare them) into any
/// empty clusters so every bone keeps at least one member.
fn fix_empty_clusters(assign: &mut [usize], bone_count: usize, costs: &[f64]) {
    let mut counts = vec![0usize; bone_count];
    for &a in assign.iter() {
        counts[a] += 1;
    }
    let mut moved = vec![false; assign.len()];
    for c in 0..bone_count {
        if counts[c] > 0 {
            continue;
        }
        let mut pick: Option<usize> = None;
        for i in 0..assign.len() {
            if moved[i] || counts[assign[i]] <= 1 {
                continue;
            }
            if pick.map_or(true, |p| costs[i] > costs[p]) {
                pick = Some(i);
            }
        }
        if let Some(i) = pick {
            counts[assign[i]] -= 1;
            assign[i] = c;
            counts[c] = 1;
            moved[i] = true;
        }
    }
}

/// Per-vertex sparse weight solve against fixed bone tracks.
///
/// For each vertex independently: score every bone by its individual fit,
/// keep the `sparseness` best (ties to the lowest bone index), then solve a
/// nonnegative least squares over those candidates with a soft sum-to-one
/// row and renormalize exactly. A singular or washed-out system falls back
/// to the single best bone with weight 1.
///
/// When `previous` rows are given, each vertex keeps its old row if that
/// fits strictly better than the fresh solve — the guard that makes the
/// weights half-step non-increasing inside [`ssdr_decompose`].
pub fn ssdr_solve_weights(
    seq: &AnimSequence,
    tracks: &BoneTracks,
    rest_pose: &[Vec3],
    sparseness: usize,
    previous: Option<&[Vec<WeightEntry>]>,
) -> Result<Vec<Vec<WeightEntry>>, SkinningError> {
    let v = seq.vertex_count();
    let t = seq.frame_count();
    let b = tracks.bone_count();
    if rest_pose.len() != v {
        return Err(SkinningError::VertexCountMismatch {
            expected: v,
            got: rest_pose.len(),
        });
    }
    if tracks.frame_count() != t {
        return Err(SkinningError::FrameCountMismatch {
            expected: t,
            got: tracks.frame_count(),
        });
    }
    if b == 0 {
        return Err(SkinningError::NoBones);
    }
    if sparseness == 0 {
        return Err(SkinningError::ZeroSparseness);
    }
    if let Some(prev) = previous {
        if prev.len() != v {
            return Err(SkinningError::VertexCountMismatch {
                expected: v,
                got: prev.len(),
            });
        }
    }
    let k = sparseness.min(b);

    // Bone-transformed rest position per (bone, frame), reused between the
    // greedy scoring pass and the least-squares columns.
    let mut posed = vec![Vec3::zeros(); b * t];
    let mut errors = vec![0.0f64; b];
    let mut rows = Vec::with_capacity(v);

    for i in 0..v {
        let p = rest_pose[i];
        for j in 0..b {
            let mut e = 0.0;
            for (f, frame) in tracks.frames().iter().enumerate() {
                let x = frame[j].apply(&p);
                e += (seq.frame(f)[i] - x).norm_squared();
                posed[j * t + f] = x;
            }
            errors[j] = e;
        }

        // K smallest individual errors; ties keep the lowest bone index.
        let mut cand: Vec<usize> = Vec::with_capacity(k);
        for _ in 0..k {
            let mut best: Option<usize> = None;
            for j in 0..b {
                if cand.contains(&j) {
                    continue;
                }
                if best.map_or(true, |bj| errors[j] < errors[bj]) {
                    best = Some(j);
                }
            }
            cand.push(best.expect("k <= b"));
        }
        let best_single = cand[0];
        cand.sort_unstable();

        // Least squares rows: 3 per frame plus one soft sum-to-one row.
        let mut a = DMatrix::<f64>::zeros(3 * t + 1, k);
        let mut rhs = DVector::<f64>::zeros(3 * t + 1);
        for (col, &j) in cand.iter().enumerate() {
            for f in 0..t {
                let x = posed[j * t + f];
                a[(3 * f, col)] = x.x;
                a[(3 * f + 1, col)] = x.y;
                a[(3 * f + 2, col)] = x.z;
            }
            a[(3 * t, col)] = 1.0;
        }
        for f in 0..t {
            let q = seq.frame(f)[i];
            rhs[3 * f] = q.x;
            rhs[3 * f + 1] = q.y;
            rhs[3 * f + 2] = q.z;
        }
        rhs[3 * t] = 1.0;

        let fallback = || {
            vec![WeightEntry {
                bone: best_single as u16,
                weight: 1.0,
            }]
        };
        let new_row = match nnls(&a, &rhs) {
            Ok(w) => {
                let s: f64 = w.sum();
                if s > 1e-12 {
                    cand.iter()
                        .zip(w.iter())
                        .filter(|(_, &wv)| wv > 0.0)
                        .map(|(&j, &wv)| WeightEntry {
                            bone: j as u16,
                            weight: wv / s,
                        })
                        .collect()
                } else {
                    fallback()
                }
            }
            Err(SkinningError::Singular) => fallback(),
            Err(e) => return Err(e),
        };

        let row = match previous {
            Some(prev) => {
                let new_err = row_objective(seq, rest_pose, i, &new_row, tracks);
                let old_err = row_objective(seq, rest_pose, i, &prev[i], tracks);
                if old_err < new_err {
                    prev[i].clone()
                } else {
                    new_row
                }
            }
            None => new_row,
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Per-bone transform solve against fixed weights.
///
/// Sweeps bones in ascending index order once; for each bone and frame the
/// residual left by all *other* bones (later ones at their `current` value,
/// earlier ones freshly updated) is fit with a weighted Procrustes solve.
/// Bones whose total weight mass is below 1e-8 are dormant and keep their
/// current transforms.
pub fn ssdr_solve_transforms(
    seq: &AnimSequence,
    weights: &[Vec<WeightEntry>],
    rest_pose: &[Vec3],
    current: &BoneTracks,
) -> Result<BoneTracks, SkinningError> {
    let v = seq.vertex_count();
    let t = seq.frame_count();
    let b = current.bone_count();
    if weights.len() != v || rest_pose.len() != v {
        return Err(SkinningError::VertexCountMismatch {
            expected: v,
            got: weights.len().min(rest_pose.len()),
        });
    }
    if current.frame_count() != t {
        return Err(SkinningError::FrameCountMismatch {
            expected: t,
            got: current.frame_count(),
        });
    }
    if b == 0 {
        return Err(SkinningError::NoBones);
    }

    let mut members: Vec<Vec<(usize, f64)>> = vec![Vec::new(); b];
    for (i, row) in weights.iter().enumerate() {
        for e in row {
            members[e.bone as usize].push((i, e.weight));
        }
    }
    let mass = bone_mass(weights, b);

    let mut frames: Vec<Vec<RigidTransform>> = current.frames().to_vec();
    let mut pts = Vec::new();
    let mut targets = Vec::new();
    let mut ws = Vec::new();
    for j in 0..b {
        if mass[j] < 1e-8 {
            debug!("bone {j} dormant (weight mass {:.3e})", mass[j]);
            continue;
        }
        for (f, frame) in frames.iter_mut().enumerate() {
            pts.clear();
            targets.clear();
            ws.clear();
            for &(i, w) in &members[j] {
                let mut q = seq.frame(f)[i];
                for e in &weights[i] {
                    if e.bone as usize != j {
                        q -= e.weight * frame[e.bone as usize].apply(&rest_pose[i]);
                    }
                }
                pts.push(rest_pose[i]);
                targets.push(q);
                ws.push(w);
            }
            frame[j] = weighted_procrustes(&pts, &targets, &ws)?.transform;
        }
    }
    Ok(BoneTracks::from_frames_unchecked(frames))
}

/// Re-seeds bones that lost all weight: each gets a translation-following
/// track at one of the worst-reconstructed vertices. Only bones with
/// exactly zero mass are touched, so the objective is unchanged.
fn reseed_dead_bones(
    seq: &AnimSequence,
    rest: &[Vec3],
    rows: &[Vec<WeightEntry>],
    tracks: &mut BoneTracks,
) {
    let b = tracks.bone_count();
    let mass = bone_mass(rows, b);
    let dead: Vec<usize> = (0..b).filter(|&j| mass[j] == 0.0).collect();
    if dead.is_empty() {
        return;
    }
    let v = rest.len();
    let mut ranked: Vec<(usize, f64)> = (0..v)
        .map(|i| (i, row_objective(seq, rest, i, &rows[i], tracks)))
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (slot, &j) in dead.iter().enumerate() {
        let (vi, err) = ranked[slot % v];
        debug!("re-seeding dead bone {j} at vertex {vi} (residual {err:.3e})");
        for (f, frame) in tracks.frames_mut().iter_mut().enumerate() {
            frame[j] =
                RigidTransform::from_parts(Matrix3::identity(), seq.frame(f)[vi] - rest[vi]);
        }
    }
}

/// Full skinning decomposition of a sequence into `bone_count` bones.
///
/// Initializes with [`ssdr_init`], then alternates [`ssdr_solve_weights`]
/// and [`ssdr_solve_transforms`] until the relative objective improvement
/// drops below `config.tolerance` or `config.max_iters` is reached. The
/// objective is checked to be non-increasing across every half-step (1e-9
/// absolute slack); a violation aborts with [`SkinningError::Diverged`].
pub fn ssdr_decompose(
    seq: &AnimSequence,
    bone_count: usize,
    config: &SsdrConfig,
) -> Result<DecompositionResult, SkinningError> {
    let t = seq.frame_count();
    if t < 2 {
        return Err(SkinningError::TooFewFrames(t));
    }
    if config.rest_frame >= t {
        return Err(SkinningError::FrameCountMismatch {
            expected: t,
            got: config.rest_frame,
        });
    }
    let rest: Vec<Vec3> = seq.frame(config.rest_frame).to_vec();
    let init = ssdr_init(seq, bone_count, config.init_iters)?;
    let rows: Vec<Vec<WeightEntry>> = init
        .assignments
        .iter()
        .map(|&c| {
            vec![WeightEntry {
                bone: c as u16,
                weight: 1.0,
            }]
        })
        .collect();
    alternate(seq, &rest, rows, init.tracks, bone_count, config)
}

/// Continues a decomposition with more bones, warm-started from `previous`.
/// New bones start with zero weight and tracks seeded at the vertices the
/// previous result reconstructs worst, so the starting objective equals the
/// previous final objective and the residual cannot get worse.
pub fn ssdr_decompose_nested(
    seq: &AnimSequence,
    bone_counts: &[usize],
    config: &SsdrConfig,
) -> Result<Vec<DecompositionResult>, SkinningError> {
    let mut results: Vec<DecompositionResult> = Vec::with_capacity(bone_counts.len());
    for &bc in bone_counts {
        let result = match results.last() {
            None => ssdr_decompose(seq, bc, config)?,
            Some(prev) => {
                let prev_b = prev.skin_model.bone_count();
                if bc <= prev_b {
                    return Err(SkinningError::NestedNotLarger {
                        previous: prev_b,
                        requested: bc,
                    });
                }
                if bc > seq.vertex_count() {
                    return Err(SkinningError::TooManyBones {
                        bone_count: bc,
                        limit: seq.vertex_count(),
                    });
                }
                let rest: Vec<Vec3> = seq.frame(config.rest_frame).to_vec();
                let rows = prev.skin_model.weight_rows().to_vec();
                let v = rest.len();
                let mut ranked: Vec<(usize, f64)> = (0..v)
                    .map(|i| (i, row_objective(seq, &rest, i, &rows[i], &prev.tracks)))
                    .collect();
                ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                let mut frames: Vec<Vec<RigidTransform>> = prev.tracks.frames().to_vec();
                for (slot, _) in (prev_b..bc).enumerate() {
                    let (vi, _) = ranked[slot % v];
                    for (f, frame) in frames.iter_mut().enumerate() {
                        frame.push(RigidTransform::from_parts(
                            Matrix3::identity(),
                            seq.frame(f)[vi] - rest[vi],
                        ));
                    }
                }
                alternate(
                    seq,
                    &rest,
                    rows,
                    BoneTracks::from_frames_unchecked(frames),
                    bc,
                    config,
                )?
            }
        };
        results.push(result);
    }
    Ok(results)
}

fn alternate(
    seq: &AnimSequence,
    rest: &[Vec3],
    mut rows: Vec<Vec<WeightEntry>>,
    mut tracks: BoneTracks,
    bone_count: usize,
    config: &SsdrConfig,
) -> Result<DecompositionResult, SkinningError> {
    let mut objective = total_objective(seq, rest, &rows, &tracks);
    let mut iterations = 0;
    for iter in 0..config.max_iters {
        iterations = iter + 1;

        let new_rows =
            ssdr_solve_weights(seq, &tracks, rest, config.sparseness, Some(&rows))?;
        let after_weights = total_objective(seq, rest, &new_rows, &tracks);
        if after_weights > objective + 1e-9 {
            return Err(SkinningError::Diverged {
                iteration: iter,
                phase: "weights",
                previous: objective,
                current: after_weights,
            });
        }
        rows = new_rows;

        let new_tracks = ssdr_solve_transforms(seq, &rows, rest, &tracks)?;
        let after_transforms = total_objective(seq, rest, &rows, &new_tracks);
        if after_transforms > after_weights + 1e-9 {
            return Err(SkinningError::Diverged {
                iteration: iter,
                phase: "transforms",
                previous: after_weights,
                current: after_transforms,
            });
        }
        tracks = new_tracks;

        if (iter + 1) % 5 == 0 && iter + 1 < config.max_iters {
            reseed_dead_bones(seq, rest, &rows, &mut tracks);
        }

        let improvement = (objective - after_transforms) / objective.max(1e-300);
        objective = after_transforms;
        debug!(
            "iteration {iter}: objective {objective:.6e} (improvement {improvement:.3e})"
        );
        if improvement < config.tolerance {
            break;
        }
    }

    let skin_model = SkinModel::new(rest.to_vec(), rows, bone_count, config.sparseness)?;
    let denom = (seq.frame_count() * seq.vertex_count()) as f64;
    let residual_rmse = (objective.max(0.0) / denom).sqrt();
    let diagonal = seq.bounding_box_diagonal();
    let residual_relative = if diagonal > 0.0 {
        residual_rmse / diagonal
    } else {
        0.0
    };
    Ok(DecompositionResult {
        skin_model,
        tracks,
        residual_rmse,
        residual_relative,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;

    fn translation(t: Vec3) -> RigidTransform {
        RigidTransform::from_parts(Matrix3::identity(), t)
    }

    /// Flat grid of points in the xy-plane.
    fn grid_points(n: usize, spacing: f64) -> Vec<Vec3> {
        let mut pts = Vec::new();
        for y in 0..n {
            for x in 0..n {
                pts.push(Vec3::new(x as f64 * spacing, y as f64 * spacing, 0.0));
            }
        }
        pts
    }

    fn seq_from_frames(frames: Vec<Vec<Vec3>>) -> AnimSequence {
        AnimSequence::new(frames, 30.0).unwrap()
    }

    #[test]
    fn init_single_bone_recovers_translation() {
        let rest = grid_points(3, 0.5);
        let frames: Vec<Vec<Vec3>> = (0..5)
            .map(|f| {
                let t = Vec3::new(0.1, 0.2, -0.05) * f as f64;
                rest.iter().map(|p| p + t).collect()
            })
            .collect();
        let seq = seq_from_frames(frames);
        let init = ssdr_init(&seq, 1, 5).unwrap();
        assert!(init.assignments.iter().all(|&a| a == 0));
        assert!(init.fit_error < 1e-16);
        for f in 0..5 {
            let tr = &init.tracks.frame(f)[0];
            let expected = Vec3::new(0.1, 0.2, -0.05) * f as f64;
            assert!((tr.translation - expected).norm() < 1e-9);
            assert!((tr.rotation - Matrix3::identity()).norm() < 1e-6);
        }
    }

    #[test]
    fn init_separates_two_rigid_halves() {
        let left = grid_points(3, 0.3);
        let right: Vec<Vec3> = grid_points(3, 0.3)
            .into_iter()
            .map(|p| p + Vec3::new(3.0, 0.0, 0.0))
            .collect();
        let mut rest = left.clone();
        rest.extend(right.iter().copied());
        let frames: Vec<Vec<Vec3>> = (0..8)
            .map(|f| {
                let tl = Vec3::new(-0.1, 0.0, 0.0) * f as f64;
                let tr = Vec3::new(0.1, 0.05, 0.0) * f as f64;
                let mut frame: Vec<Vec3> = left.iter().map(|p| p + tl).collect();
                frame.extend(right.iter().map(|p| p + tr));
                frame
            })
            .collect();
        let seq = seq_from_frames(frames);
        let init = ssdr_init(&seq, 2, 10).unwrap();

        // Purity: per cluster, the fraction belonging to the majority half.
        let mut counts = [[0usize; 2]; 2];
        for (i, &c) in init.assignments.iter().enumerate() {
            let label = if i < left.len() { 0 } else { 1 };
            counts[c][label] += 1;
        }
        let majority: usize = counts.iter().map(|c| c[0].max(c[1])).sum();
        let purity = majority as f64 / rest.len() as f64;
        assert!(purity >= 0.95, "purity {purity}");
    }

    #[test]
    fn init_one_bone_per_vertex_fits_exactly() {
        let rest: Vec<Vec3> = (0..6).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let frames: Vec<Vec<Vec3>> = (0..4)
            .map(|f| {
                rest.iter()
                    .enumerate()
                    .map(|(i, p)| {
                        // Distinct per-vertex motion so signatures differ.
                        p + Vec3::new(0.0, 0.1 * i as f64 * f as f64, 0.02 * f as f64)
                    })
                    .collect()
            })
            .collect();
        let seq = seq_from_frames(frames);
        let init = ssdr_init(&seq, 6, 5).unwrap();
        let mut counts = vec![0usize; 6];
        for &a in &init.assignments {
            counts[a] += 1;
        }
        assert!(counts.iter().all(|&c| c == 1), "counts {counts:?}");
        assert!(init.fit_error < 1e-12);
    }

    #[test]
    fn weights_single_bone_is_all_ones() {
        let rest = grid_points(2, 1.0);
        let frames: Vec<Vec<Vec3>> = (0..3)
            .map(|f| rest.iter().map(|p| p + Vec3::new(0.1 * f as f64, 0.0, 0.0)).collect())
            .collect();
        let seq = seq_from_frames(frames);
        let tracks = BoneTracks::from_frames_unchecked(
            (0..3)
                .map(|f| vec![translation(Vec3::new(0.1 * f as f64, 0.0, 0.0))])
                .collect(),
        );
        let rows = ssdr_solve_weights(&seq, &tracks, &rest, 4, None).unwrap();
        for row in rows {
            assert_eq!(row.len(), 1);
            assert_eq!(row[0].bone, 0);
            assert!((row[0].weight - 1.0).abs() < 1e-12);
        }
    }

    /// Distinct smooth rigid tracks for synthetic rigs.
    fn synthetic_tracks(bones: usize, frames: usize) -> BoneTracks {
        let mut all = Vec::with_capacity(frames);
        for f in 0..frames {
            let time = f as f64 / frames as f64;
            let mut frame = Vec::with_capacity(bones);
            for j in 0..bones {
                let phase = j as f64 * 1.3;
                let rot = UnitQuaternion::from_euler_angles(
                    0.4 * (2.0 * time + phase).sin(),
                    0.3 * (3.0 * time + 0.5 * phase).cos(),
                    0.2 * (1.0 * time + phase).sin(),
                );
                let tr = Vec3::new(
                    0.5 * (2.5 * time + phase).sin(),
                    0.4 * (1.5 * time + phase).cos(),
                    0.3 * (2.0 * time + 0.7 * phase).sin(),
                );
                frame.push(RigidTransform::from_quaternion(&rot, tr));
            }
            all.push(frame);
        }
        BoneTracks::from_frames_unchecked(all)
    }

    #[test]
    fn weights_pick_out_the_bone_a_vertex_follows() {
        let bones = 5;
        let frames = 8;
        let tracks = synthetic_tracks(bones, frames);
        let rest: Vec<Vec3> = (0..bones)
            .map(|i| Vec3::new(0.3 * i as f64, 0.1, -0.2))
            .collect();
        let seq_frames: Vec<Vec<Vec3>> = (0..frames)
            .map(|f| {
                rest.iter()
                    .enumerate()
                    .map(|(i, p)| tracks.frame(f)[i].apply(p))
                    .collect()
            })
            .collect();
        let seq = seq_from_frames(seq_frames);
        let rows = ssdr_solve_weights(&seq, &tracks, &rest, 4, None).unwrap();
        for (i, row) in rows.iter().enumerate() {
            let w = row
                .iter()
                .find(|e| e.bone as usize == i)
                .map_or(0.0, |e| e.weight);
            assert!(w >= 0.99, "vertex {i} weight on own bone = {w}");
        }
    }

    #[test]
    fn weights_invert_a_known_blend() {
        let tracks = synthetic_tracks(2, 10);
        let rest = vec![Vec3::new(0.4, -0.3, 0.8)];
        let seq_frames: Vec<Vec<Vec3>> = (0..10)
            .map(|f| {
                let frame = tracks.frame(f);
                vec![0.3 * frame[0].apply(&rest[0]) + 0.7 * frame[1].apply(&rest[0])]
            })
            .collect();
        let seq = seq_from_frames(seq_frames);
        let rows = ssdr_solve_weights(&seq, &tracks, &rest, 4, None).unwrap();
        assert_eq!(rows[0].len(), 2);
        assert!((rows[0][0].weight - 0.3).abs() < 1e-3, "{:?}", rows[0]);
        assert!((rows[0][1].weight - 0.7).abs() < 1e-3, "{:?}", rows[0]);
    }

    #[test]
    fn weights_duplicate_tracks_collapse_to_lowest_bone() {
        let track: Vec<Vec<RigidTransform>> = (0..6)
            .map(|f| {
                let t = translation(Vec3::new(0.2 * f as f64, -0.1 * f as f64, 0.0));
                vec![t, t]
            })
            .collect();
        let tracks = BoneTracks::from_frames_unchecked(track);
        let rest = vec![Vec3::new(1.0, 2.0, 3.0)];
        let seq_frames: Vec<Vec<Vec3>> = (0..6)
            .map(|f| vec![tracks.frame(f)[0].apply(&rest[0])])
            .collect();
        let seq = seq_from_frames(seq_frames);
        let rows = ssdr_solve_weights(&seq, &tracks, &rest, 4, None).unwrap();
        assert_eq!(rows[0].len(), 1);
        assert_eq!(rows[0][0].bone, 0);
        assert!((rows[0][0].weight - 1.0).abs() < 1e-12);
    }

    fn non_coplanar_points() -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.6, 0.7, -0.4),
            Vec3::new(-0.3, 0.4, 0.9),
        ]
    }

    #[test]
    fn transforms_recover_known_rotations() {
        let rest = non_coplanar_points();
        let rotations: Vec<Matrix3<f64>> = (0..5)
            .map(|f| {
                *UnitQuaternion::from_euler_angles(0.2 * f as f64, -0.1 * f as f64, 0.3)
                    .to_rotation_matrix()
                    .matrix()
            })
            .collect();
        let seq_frames: Vec<Vec<Vec3>> = rotations
            .iter()
            .map(|r| rest.iter().map(|p| r * p).collect())
            .collect();
        let seq = seq_from_frames(seq_frames);
        let weights: Vec<Vec<WeightEntry>> = (0..rest.len())
            .map(|_| vec![WeightEntry { bone: 0, weight: 1.0 }])
            .collect();
        let current = BoneTracks::from_frames_unchecked(vec![
            vec![
                RigidTransform::identity()
            ];
            5
        ]);
        let solved = ssdr_solve_transforms(&seq, &weights, &rest, &current).unwrap();
        for (f, r) in rotations.iter().enumerate() {
            assert!((solved.frame(f)[0].rotation - r).norm() < 1e-6);
            assert!(solved.frame(f)[0].translation.norm() < 1e-6);
        }
    }

    #[test]
    fn transforms_recover_pure_translation() {
        let rest = non_coplanar_points();
        let seq_frames: Vec<Vec<Vec3>> = (0..4)
            .map(|f| {
                let t = Vec3::new(0.3 * f as f64, -0.2 * f as f64, 0.1);
                rest.iter().map(|p| p + t).collect()
            })
            .collect();
        let seq = seq_from_frames(seq_frames);
        let weights: Vec<Vec<WeightEntry>> = (0..rest.len())
            .map(|_| vec![WeightEntry { bone: 0, weight: 1.0 }])
            .collect();
        let current =
            BoneTracks::from_frames_unchecked(vec![vec![RigidTransform::identity()]; 4]);
        let solved = ssdr_solve_transforms(&seq, &weights, &rest, &current).unwrap();
        for f in 0..4 {
            let expected = Vec3::new(0.3 * f as f64, -0.2 * f as f64, 0.1);
            assert!((solved.frame(f)[0].rotation - Matrix3::identity()).norm() < 1e-9);
            assert!((solved.frame(f)[0].translation - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn transforms_recover_two_bone_rig_from_fixed_weights() {
        let truth = synthetic_tracks(2, 6);
        // Rest points spread across both bones' influence.
        let rest: Vec<Vec3> = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.1, -0.2),
            Vec3::new(0.2, 1.0, 0.3),
            Vec3::new(-0.5, 0.4, 1.0),
            Vec3::new(0.8, -0.6, 0.5),
            Vec3::new(-0.9, -0.2, -0.7),
            Vec3::new(0.4, 0.9, -0.9),
            Vec3::new(-0.1, -1.0, 0.6),
        ];
        let weights: Vec<Vec<WeightEntry>> = (0..rest.len())
            .map(|i| match i % 4 {
                0 => vec![WeightEntry { bone: 0, weight: 1.0 }],
                1 => vec![
                    WeightEntry { bone: 0, weight: 0.7 },
                    WeightEntry { bone: 1, weight: 0.3 },
                ],
                2 => vec![
                    WeightEntry { bone: 0, weight: 0.3 },
                    WeightEntry { bone: 1, weight: 0.7 },
                ],
                _ => vec![WeightEntry { bone: 1, weight: 1.0 }],
            })
            .collect();
        let seq_frames: Vec<Vec<Vec3>> = (0..6)
            .map(|f| {
                rest.iter()
                    .enumerate()
                    .map(|(i, p)| blend_vertex(p, &weights[i], truth.frame(f)))
                    .collect()
            })
            .collect();
        let seq = seq_from_frames(seq_frames);

        // Start with bone 0 wiped to identity; one Gauss-Seidel pass should
        // pull both bones onto the generating transforms.
        let mut start = truth.frames().to_vec();
        for frame in &mut start {
            frame[0] = RigidTransform::identity();
        }
        let solved = ssdr_solve_transforms(
            &seq,
            &weights,
            &rest,
            &BoneTracks::from_frames_unchecked(start),
        )
        .unwrap();
        for f in 0..6 {
            for j in 0..2 {
                let err = (solved.frame(f)[j].rotation - truth.frame(f)[j].rotation).norm();
                assert!(err < 1e-4, "frame {f} bone {j}: rotation error {err}");
            }
        }
    }

    #[test]
    fn transforms_keep_dormant_bones_untouched() {
        let rest = non_coplanar_points();
        let seq_frames: Vec<Vec<Vec3>> = (0..3)
            .map(|f| rest.iter().map(|p| p + Vec3::new(0.1 * f as f64, 0.0, 0.0)).collect())
            .collect();
        let seq = seq_from_frames(seq_frames);
        let weights: Vec<Vec<WeightEntry>> = (0..rest.len())
            .map(|_| vec![WeightEntry { bone: 0, weight: 1.0 }])
            .collect();
        let marker = translation(Vec3::new(9.0, 9.0, 9.0));
        let current = BoneTracks::from_frames_unchecked(vec![
            vec![
                RigidTransform::identity(),
                marker
            ];
            3
        ]);
        let solved = ssdr_solve_transforms(&seq, &weights, &rest, &current).unwrap();
        for f in 0..3 {
            assert_eq!(solved.frame(f)[1], marker);
        }
    }

    #[test]
    fn decompose_rigid_motion_with_one_bone_is_exact() {
        let rest = non_coplanar_points();
        let frames: Vec<Vec<Vec3>> = (0..5)
            .map(|f| {
                let rot = UnitQuaternion::from_euler_angles(0.15 * f as f64, 0.1, -0.05 * f as f64);
                let t = Vec3::new(0.2 * f as f64, 0.1 * f as f64, 0.0);
                rest.iter()
                    .map(|p| rot.to_rotation_matrix().matrix() * p + t)
                    .collect()
            })
            .collect();
        let seq = seq_from_frames(frames);
        let result = ssdr_decompose(&seq, 1, &SsdrConfig::default()).unwrap();
        assert!(result.residual_rmse <= 1e-6, "rmse {}", result.residual_rmse);
    }

    /// A grid skinned to a handful of synthetic bones by distance-falloff
    /// weights; the decomposition should recover it almost exactly.
    fn synthetic_rig_sequence(n: usize, bones: usize, frames: usize) -> AnimSequence {
        let rest = grid_points(n, 1.0 / (n - 1) as f64);
        let tracks = synthetic_tracks(bones, frames);
        // Bone anchor points spaced along the grid diagonal.
        let anchors: Vec<Vec3> = (0..bones)
            .map(|j| {
                let s = j as f64 / (bones - 1) as f64;
                Vec3::new(s, s, 0.0)
            })
            .collect();
        let rows: Vec<Vec<WeightEntry>> = rest
            .iter()
            .map(|p| {
                let mut scored: Vec<(usize, f64)> = anchors
                    .iter()
                    .enumerate()
                    .map(|(j, a)| {
                        let d2 = (p - a).norm_squared();
                        (j, (-8.0 * d2).exp())
                    })
                    .collect();
                scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                scored.truncate(4);
                scored.sort_by_key(|(j, _)| *j);
                let total: f64 = scored.iter().map(|(_, w)| w).sum();
                scored
                    .into_iter()
                    .map(|(j, w)| WeightEntry {
                        bone: j as u16,
                        weight: w / total,
                    })
                    .collect()
            })
            .collect();
        let seq_frames: Vec<Vec<Vec3>> = (0..frames)
            .map(|f| {
                rest.iter()
                    .enumerate()
                    .map(|(i, p)| blend_vertex(p, &rows[i], tracks.frame(f)))
                    .collect()
            })
            .collect();
        seq_from_frames(seq_frames)
    }

    #[test]
    fn decompose_recovers_synthetic_six_bone_rig() {
        let seq = synthetic_rig_sequence(13, 6, 30);
        let config = SsdrConfig {
            tolerance: 1e-7,
            ..SsdrConfig::default()
        };
        let result = ssdr_decompose(&seq, 6, &config).unwrap();
        assert!(
            result.residual_relative <= 0.01,
            "relative residual {} after {} iterations",
            result.residual_relative,
            result.iterations
        );
        assert!(result.iterations <= 30);
    }

    #[test]
    fn nested_decomposition_never_gets_worse() {
        let seq = synthetic_rig_sequence(9, 6, 16);
        let config = SsdrConfig {
            max_iters: 8,
            ..SsdrConfig::default()
        };
        let results = ssdr_decompose_nested(&seq, &[2, 4, 6], &config).unwrap();
        assert_eq!(results.len(), 3);
        for pair in results.windows(2) {
            assert!(
                pair[1].residual_rmse <= pair[0].residual_rmse + 1e-6,
                "{} then {}",
                pair[0].residual_rmse,
                pair[1].residual_rmse
            );
        }
    }

    #[test]
    fn decompose_validates_inputs() {
        let rest = non_coplanar_points();
        let single = seq_from_frames(vec![rest.clone()]);
        assert!(matches!(
            ssdr_decompose(&single, 2, &SsdrConfig::default()),
            Err(SkinningError::TooFewFrames(1))
        ));
        let seq = seq_from_frames(vec![rest.clone(), rest.clone()]);
        assert!(matches!(
            ssdr_decompose(&seq, 0, &SsdrConfig::default()),
            Err(SkinningError::NoBones)
        ));
        assert!(matches!(
            ssdr_decompose(&seq, 100, &SsdrConfig::default()),
            Err(SkinningError::TooManyBones { .. })
        ));
        let nested = ssdr_decompose_nested(&seq, &[2, 2], &SsdrConfig::default());
        assert!(matches!(
            nested,
            Err(SkinningError::NestedNotLarger { .. })
        ));
    }
}
