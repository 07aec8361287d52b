//! Position-based cloth solver. Each motion frame is integrated in fixed
//! substeps: symplectic Euler prediction, then Gauss–Seidel sweeps over
//! stretch (inextensible), dihedral bending (compliant), and capsule
//! collision constraints, with velocities recovered from positions.
//!
//! Pinned vertices are driven kinematically: they follow the attachment
//! joint's frame, interpolated per substep so fast body motion cannot
//! tunnel the waistband through the cloth.

use vb_mesh::{AnimSequence, Vec3};

use crate::body::{pose_skeleton, posed_capsules, rest_joint_poses, PosedCapsule};
use crate::template::{BendElement, GarmentTemplate};
use crate::{BodyMotion, SimError, SimParams};

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Substeps per motion frame; the solver step is `dt / substeps`.
    pub substeps: usize,
    /// Constraint sweeps per substep.
    pub iterations: usize,
    pub gravity: Vec3,
    /// Velocity damping coefficient, per second. Zero keeps the cloth lively.
    pub damping: f64,
    /// Extra clearance added to capsule radii during collision projection.
    pub collision_margin: f64,
    /// A free vertex exceeding this speed (m/s) aborts with an error
    /// instead of writing garbage frames.
    pub explosion_speed: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            substeps: 12,
            iterations: 1,
            gravity: Vec3::new(0.0, -9.81, 0.0),
            damping: 0.0,
            collision_margin: 0.003,
            explosion_speed: 50.0,
        }
    }
}

/// Runs the cloth simulation with default options and the given substep
/// count. Frame 0 of the output is the garment rigidly carried to the
/// frame-0 attachment pose; every later frame is solved dynamics.
pub fn simulate(
    template: &GarmentTemplate,
    motion: &BodyMotion,
    params: &SimParams,
    substeps: usize,
) -> Result<AnimSequence, SimError> {
    simulate_opts(
        template,
        motion,
        params,
        &SimOptions {
            substeps,
            ..SimOptions::default()
        },
    )
}

pub fn simulate_opts(
    template: &GarmentTemplate,
    motion: &BodyMotion,
    params: &SimParams,
    opts: &SimOptions,
) -> Result<AnimSequence, SimError> {
    params.validate()?;
    if opts.substeps == 0 || opts.iterations == 0 {
        return Err(SimError::BadParams(
            "substeps and iterations must be at least 1".into(),
        ));
    }

    let rest = template.mesh.rest_positions();
    let n = rest.len();

    // Lumped vertex masses: a third of each incident triangle's area times
    // the areal density.
    let mut inv_mass = vec![0.0f64; n];
    for face in template.mesh.faces() {
        let [a, b, c] = [face[0] as usize, face[1] as usize, face[2] as usize];
        let area = 0.5 * (rest[b] - rest[a]).cross(&(rest[c] - rest[a])).norm();
        let share = params.mass_density * area / 3.0;
        inv_mass[a] += share;
        inv_mass[b] += share;
        inv_mass[c] += share;
    }
    for (i, m) in inv_mass.iter_mut().enumerate() {
        if *m <= 0.0 {
            return Err(SimError::BadTemplate(format!(
                "vertex {i} has zero mass (no incident faces)"
            )));
        }
        *m = 1.0 / *m;
    }
    for &p in &template.pinned_vertices {
        inv_mass[p] = 0.0;
    }

    // Vertex coordinates in the attachment joint's rest frame (rest
    // rotations are identity, so these are plain offsets).
    let attach_rest = rest_joint_poses()[template.attachment_joint].position;
    let locals: Vec<Vec3> = rest.iter().map(|p| p - attach_rest).collect();

    let mut poses_cur = pose_skeleton(motion, 0)?;
    let attach0 = poses_cur[template.attachment_joint];
    let mut x: Vec<Vec3> = locals
        .iter()
        .map(|l| attach0.position + attach0.rotation * l)
        .collect();
    let mut vel = vec![Vec3::zeros(); n];
    let mut prev = vec![Vec3::zeros(); n];

    let mut frames = Vec::with_capacity(motion.frame_count());
    frames.push(x.clone());

    let dt = params.timescale / motion.frame_rate();
    let h = dt / opts.substeps as f64;
    let bending = params.bending_stiffness > 0.0;
    let alpha_bend = if bending {
        1.0 / (params.bending_stiffness * h * h)
    } else {
        0.0
    };
    let damp = (1.0 - opts.damping * h).max(0.0);

    for f in 1..motion.frame_count() {
        let poses_prev = poses_cur;
        poses_cur = pose_skeleton(motion, f)?;
        let ap = poses_prev[template.attachment_joint];
        let ac = poses_cur[template.attachment_joint];
        let caps_prev = posed_capsules(&poses_prev);
        let caps_cur = posed_capsules(&poses_cur);

        for s in 0..opts.substeps {
            let alpha = (s + 1) as f64 / opts.substeps as f64;
            let attach_pos = ap.position + (ac.position - ap.position) * alpha;
            let attach_rot = ap.rotation.slerp(&ac.rotation, alpha);
            let caps: Vec<PosedCapsule> = caps_prev
                .iter()
                .zip(&caps_cur)
                .map(|(p, c)| PosedCapsule {
                    a: p.a + (c.a - p.a) * alpha,
                    b: p.b + (c.b - p.b) * alpha,
                    radius: c.radius,
                })
                .collect();

            prev.copy_from_slice(&x);
            for i in 0..n {
                if inv_mass[i] > 0.0 {
                    vel[i] += opts.gravity * h;
                    x[i] += vel[i] * h;
                }
            }
            for &p in &template.pinned_vertices {
                x[p] = attach_pos + attach_rot * locals[p];
            }

            for _ in 0..opts.iterations {
                for (k, e) in template.edges.iter().enumerate() {
                    apply_stretch(&mut x, &inv_mass, e, template.rest_edge_lengths[k]);
                }
                if bending {
                    for be in &template.bend_elements {
                        apply_bend(&mut x, &inv_mass, be, alpha_bend);
                    }
                }
                for i in 0..n {
                    if inv_mass[i] > 0.0 {
                        project_capsules(&mut x[i], &caps, opts.collision_margin);
                    }
                }
            }

            for i in 0..n {
                vel[i] = (x[i] - prev[i]) / h;
                if inv_mass[i] > 0.0 {
                    vel[i] *= damp;
                }
            }
        }

        let mut speed = 0.0f64;
        for i in 0..n {
            let v = vel[i].norm();
            if !v.is_finite() {
                return Err(SimError::Explosion { frame: f, speed: v });
            }
            speed = speed.max(v);
        }
        if speed > opts.explosion_speed {
            return Err(SimError::Explosion { frame: f, speed });
        }
        frames.push(x.clone());
    }

    Ok(AnimSequence::new(frames, motion.frame_rate())?)
}

fn apply_stretch(x: &mut [Vec3], inv_mass: &[f64], edge: &[u32; 2], rest_len: f64) {
    let (i, j) = (edge[0] as usize, edge[1] as usize);
    let wsum = inv_mass[i] + inv_mass[j];
    if wsum <= 0.0 {
        return;
    }
    let d = x[i] - x[j];
    let len = d.norm();
    if len < 1e-12 {
        return;
    }
    let corr = d * ((len - rest_len) / (len * wsum));
    x[i] -= corr * inv_mass[i];
    x[j] += corr * inv_mass[j];
}

/// One compliant projection of a dihedral element. `alpha_tilde` is the
/// constraint compliance divided by h²; the 1/sin factor of the angle
/// gradient is folded into the update so flat configurations stay finite.
fn apply_bend(x: &mut [Vec3], inv_mass: &[f64], be: &BendElement, alpha_tilde: f64) {
    let idx = [
        be.edge[0] as usize,
        be.edge[1] as usize,
        be.opposite[0] as usize,
        be.opposite[1] as usize,
    ];
    let p2 = x[idx[1]] - x[idx[0]];
    let p3 = x[idx[2]] - x[idx[0]];
    let p4 = x[idx[3]] - x[idx[0]];
    let c23 = p2.cross(&p3);
    let c24 = p2.cross(&p4);
    let l23 = c23.norm();
    let l24 = c24.norm();
    if l23 < 1e-12 || l24 < 1e-12 {
        return;
    }
    let n1 = c23 / l23;
    let n2 = c24 / l24;
    let d = n1.dot(&n2).clamp(-1.0, 1.0);
    let c = d.acos() - be.rest_angle;
    let s = (1.0 - d * d).max(0.0).sqrt();

    let q3 = (p2.cross(&n2) + n1.cross(&p2) * d) / l23;
    let q4 = (p2.cross(&n1) + n2.cross(&p2) * d) / l24;
    let q2 =
        -(p3.cross(&n2) + n1.cross(&p3) * d) / l23 - (p4.cross(&n1) + n2.cross(&p4) * d) / l24;
    let q1 = -q2 - q3 - q4;
    let q = [q1, q2, q3, q4];

    let mut denom = s * s * alpha_tilde;
    for k in 0..4 {
        denom += inv_mass[idx[k]] * q[k].norm_squared();
    }
    if denom < 1e-12 {
        return;
    }
    let scale = -s * c / denom;
    for k in 0..4 {
        x[idx[k]] += q[k] * (inv_mass[idx[k]] * scale);
    }
}

fn closest_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    if len_sq < 1e-18 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    a + ab * t
}

/// Returns true if the point moved.
fn project_capsule(p: &mut Vec3, cap: &PosedCapsule, margin: f64) -> bool {
    let c = closest_on_segment(p, &cap.a, &cap.b);
    let d = *p - c;
    let dist = d.norm();
    let rr = cap.radius + margin;
    if dist >= rr {
        return false;
    }
    if dist > 1e-9 {
        *p = c + d * (rr / dist);
    } else {
        // On the axis: push along a fixed perpendicular.
        let ab = cap.b - cap.a;
        let axis = if ab.norm_squared() > 1e-18 {
            ab.normalize()
        } else {
            Vec3::y()
        };
        let pick = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::z() };
        *p = c + axis.cross(&pick).normalize() * rr;
    }
    true
}

/// Projects a point out of every capsule, re-sweeping until no capsule
/// moves it: leaving one capsule can push a vertex into a neighbor (the
/// thigh gap), and a single ordered pass would stop there.
fn project_capsules(p: &mut Vec3, caps: &[PosedCapsule], margin: f64) {
    for _ in 0..8 {
        let mut moved = false;
        for cap in caps {
            moved |= project_capsule(p, cap, margin);
        }
        if !moved {
            return;
        }
    }
}

/// Deepest capsule penetration (meters) over a simulated sequence, zero if
/// the cloth stays outside the body everywhere.
pub fn max_penetration(seq: &AnimSequence, motion: &BodyMotion) -> Result<f64, SimError> {
    let mut worst = 0.0f64;
    for f in 0..seq.frame_count() {
        let caps = posed_capsules(&pose_skeleton(motion, f)?);
        for p in seq.frame(f) {
            for cap in &caps {
                let dist = (p - closest_on_segment(p, &cap.a, &cap.b)).norm();
                worst = worst.max(cap.radius - dist);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::MotionFrame;
    use crate::template::{dihedral_angle, skirt_template};
    use crate::{generate_body_motion, MotionStyle, JOINT_COUNT};
    use nalgebra::UnitQuaternion;
    use vb_mesh::Mesh;

    fn identity_motion(frames: usize, rate: f64) -> BodyMotion {
        let frame = MotionFrame {
            root_translation: Vec3::zeros(),
            joint_rotations: vec![UnitQuaternion::identity(); JOINT_COUNT],
        };
        BodyMotion::new(vec![frame; frames], rate).unwrap()
    }

    /// Flat grid shifted 10 m along x so body capsules never touch it,
    /// optionally pinned along its top row.
    fn offset_grid(nx: usize, ny: usize, pin_top: bool) -> GarmentTemplate {
        let g = vb_mesh::shapes::grid(nx, ny, 0.05);
        let positions: Vec<Vec3> = g
            .rest_positions()
            .iter()
            .map(|p| p + Vec3::new(10.0, 0.0, 0.0))
            .collect();
        let mesh = Mesh::new(positions, g.faces().to_vec()).unwrap();
        let pinned = if pin_top {
            ((ny - 1) * nx..ny * nx).collect()
        } else {
            Vec::new()
        };
        GarmentTemplate::new(mesh, pinned, 0).unwrap()
    }

    fn stretch_only_params(density: f64, timescale: f64) -> SimParams {
        SimParams {
            bending_stiffness: 0.0,
            mass_density: density,
            timescale,
        }
    }

    fn max_frame_diff(a: &AnimSequence, b: &AnimSequence) -> f64 {
        assert_eq!(a.frame_count(), b.frame_count());
        let mut worst = 0.0f64;
        for f in 0..a.frame_count() {
            for (p, q) in a.frame(f).iter().zip(b.frame(f)) {
                worst = worst.max((p - q).norm());
            }
        }
        worst
    }

    #[test]
    fn zero_gravity_rest_state_does_not_drift() {
        let template = offset_grid(5, 5, true);
        let motion = identity_motion(10, 30.0);
        let opts = SimOptions {
            substeps: 4,
            gravity: Vec3::zeros(),
            ..SimOptions::default()
        };
        let seq =
            simulate_opts(&template, &motion, &stretch_only_params(0.04, 1.0), &opts).unwrap();
        let rest = template.mesh.rest_positions();
        for f in 0..seq.frame_count() {
            for (p, r) in seq.frame(f).iter().zip(rest) {
                assert!((p - r).norm() <= 1e-12, "drift at frame {f}");
            }
        }
    }

    #[test]
    fn ballistic_fall_matches_closed_form() {
        // Unpinned cloth in free fall: every vertex follows the substepped
        // Euler parabola, which converges to -g t^2 / 2 at O(1/substeps).
        let template = offset_grid(4, 4, false);
        let motion = identity_motion(31, 30.0);
        let opts = SimOptions {
            substeps: 8,
            ..SimOptions::default()
        };
        let seq =
            simulate_opts(&template, &motion, &stretch_only_params(0.04, 1.0), &opts).unwrap();
        let t = 1.0;
        let expected = -0.5 * 9.81 * t * t;
        for (p0, p1) in seq.frame(0).iter().zip(seq.frame(30)) {
            let dy = p1.y - p0.y;
            assert!(
                (dy - expected).abs() <= 0.02 * expected.abs(),
                "dy = {dy}, expected {expected}"
            );
            assert!((p1.x - p0.x).abs() <= 1e-9);
            assert!((p1.z - p0.z).abs() <= 1e-9);
        }
    }

    #[test]
    fn bend_projection_restores_rest_angle() {
        // A quad folded out of plane, rest angle flat: repeated stiff
        // projections must open it back toward pi.
        let be = BendElement {
            edge: [0, 1],
            opposite: [2, 3],
            rest_angle: std::f64::consts::PI,
        };
        let mut x = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 1.0, 0.0),
            Vec3::new(0.5, -0.8, 0.6),
        ];
        let w = vec![1.0; 4];
        let angle = |x: &[Vec3]| dihedral_angle(&x[0], &x[1], &x[2], &x[3]);
        let before = (angle(&x) - be.rest_angle).abs();
        apply_bend(&mut x, &w, &be, 0.0);
        let after_one = (angle(&x) - be.rest_angle).abs();
        assert!(after_one < before, "{after_one} vs {before}");
        for _ in 0..60 {
            apply_bend(&mut x, &w, &be, 0.0);
        }
        assert!((angle(&x) - be.rest_angle).abs() < 1e-3);
    }

    #[test]
    fn stiffer_cloth_holds_rest_dihedrals_closer() {
        let template = skirt_template(12, 8).unwrap();
        let motion = generate_body_motion(7, 40, 30.0, MotionStyle::Sway);
        let mean_dev = |stiffness: f64| {
            let params = SimParams {
                bending_stiffness: stiffness,
                ..SimParams::default()
            };
            let seq = simulate(&template, &motion, &params, 8).unwrap();
            let mut dev = 0.0;
            let mut count = 0usize;
            for f in 20..seq.frame_count() {
                let x = seq.frame(f);
                for be in &template.bend_elements {
                    let a = dihedral_angle(
                        &x[be.edge[0] as usize],
                        &x[be.edge[1] as usize],
                        &x[be.opposite[0] as usize],
                        &x[be.opposite[1] as usize],
                    );
                    dev += (a - be.rest_angle).abs();
                    count += 1;
                }
            }
            dev / count as f64
        };
        let soft = mean_dev(1e-7);
        let stiff = mean_dev(1e-5);
        assert!(
            stiff < soft,
            "stiff deviation {stiff} should beat soft {soft}"
        );
    }

    #[test]
    fn mass_density_scale_leaves_trajectory_unchanged() {
        // Uniform density only rescales all masses; constraint corrections
        // depend on inverse-mass ratios, so the trajectory is unchanged
        // (no bending, no contact).
        let template = offset_grid(5, 4, true);
        let motion = generate_body_motion(11, 20, 30.0, MotionStyle::Sway);
        let opts = SimOptions {
            substeps: 6,
            ..SimOptions::default()
        };
        let a = simulate_opts(&template, &motion, &stretch_only_params(0.04, 1.0), &opts).unwrap();
        let b = simulate_opts(&template, &motion, &stretch_only_params(0.08, 1.0), &opts).unwrap();
        assert!(max_frame_diff(&a, &b) <= 1e-6);
    }

    #[test]
    fn timescale_is_a_pure_clock_rescale() {
        // Halving the timescale at 30 fps must equal running the same
        // poses at 60 fps with timescale 1: identical solver steps.
        let template = skirt_template(12, 8).unwrap();
        let m30 = generate_body_motion(5, 30, 30.0, MotionStyle::Sway);
        let m60 = BodyMotion::new(m30.frames().to_vec(), 60.0).unwrap();
        let opts = SimOptions {
            substeps: 6,
            ..SimOptions::default()
        };
        let params = |ts| SimParams {
            bending_stiffness: 1e-6,
            mass_density: 0.04,
            timescale: ts,
        };
        let a = simulate_opts(&template, &m30, &params(0.5), &opts).unwrap();
        let b = simulate_opts(&template, &m60, &params(1.0), &opts).unwrap();
        assert!(max_frame_diff(&a, &b) <= 1e-6);
    }

    #[test]
    fn pinned_vertices_track_attachment_frame() {
        let template = skirt_template(12, 8).unwrap();
        let motion = generate_body_motion(2, 20, 30.0, MotionStyle::Sway);
        let seq = simulate(&template, &motion, &SimParams::default(), 6).unwrap();
        let attach_rest = rest_joint_poses()[template.attachment_joint].position;
        let rest = template.mesh.rest_positions();
        for f in 0..seq.frame_count() {
            let pose = pose_skeleton(&motion, f).unwrap()[template.attachment_joint];
            for &p in &template.pinned_vertices {
                let target = pose.position + pose.rotation * (rest[p] - attach_rest);
                assert!(
                    (seq.frame(f)[p] - target).norm() <= 1e-6,
                    "pinned vertex {p} off target at frame {f}"
                );
            }
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let template = skirt_template(12, 8).unwrap();
        let motion = generate_body_motion(9, 15, 30.0, MotionStyle::Sway);
        let a = simulate(&template, &motion, &SimParams::default(), 6).unwrap();
        let b = simulate(&template, &motion, &SimParams::default(), 6).unwrap();
        assert_eq!(max_frame_diff(&a, &b), 0.0);
    }

    #[test]
    fn walking_skirt_stays_outside_the_body() {
        let template = skirt_template(16, 12).unwrap();
        let motion = generate_body_motion(3, 60, 30.0, MotionStyle::Walk);
        let seq = simulate(&template, &motion, &SimParams::default(), 12).unwrap();
        assert_eq!(seq.frame_count(), 60);
        let pen = max_penetration(&seq, &motion).unwrap();
        assert!(pen <= 0.002, "max penetration {pen}");
        // The skirt actually moves with the walk.
        let drift = seq
            .frame(0)
            .iter()
            .zip(seq.frame(59))
            .map(|(p, q)| (p - q).norm())
            .fold(0.0f64, f64::max);
        assert!(drift > 0.05, "skirt barely moved: {drift}");
    }

    #[test]
    fn runaway_timescale_reports_explosion() {
        let template = offset_grid(4, 4, false);
        let motion = identity_motion(10, 30.0);
        let err = simulate(&template, &motion, &stretch_only_params(0.04, 80.0), 12).unwrap_err();
        match err {
            SimError::Explosion { frame, speed } => {
                assert!(frame <= 3, "frame {frame}");
                assert!(speed > 50.0);
            }
            other => panic!("expected explosion, got {other:?}"),
        }
    }
}
