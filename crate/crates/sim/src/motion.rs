//! Procedural body motion: smooth, bounded, seeded sinusoid superpositions
//! in three styles (sway, spin, walk).

use std::f64::consts::{PI, TAU};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use nalgebra::UnitQuaternion;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vb_mesh::Vec3;

use crate::body::{JOINT_COUNT, JOINT_NAMES};
use crate::SimError;

/// One frame of body motion: where the root is and how every joint is
/// rotated relative to its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionFrame {
    pub root_translation: Vec3,
    pub joint_rotations: Vec<UnitQuaternion<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyMotion {
    frames: Vec<MotionFrame>,
    frame_rate: f64,
}

impl BodyMotion {
    pub fn new(frames: Vec<MotionFrame>, frame_rate: f64) -> Result<Self, SimError> {
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(SimError::BadParams(format!("frame rate {frame_rate}")));
        }
        for (fi, frame) in frames.iter().enumerate() {
            if frame.joint_rotations.len() != JOINT_COUNT {
                return Err(SimError::JointCountMismatch {
                    frame: fi,
                    got: frame.joint_rotations.len(),
                    expected: JOINT_COUNT,
                });
            }
            for (ji, q) in frame.joint_rotations.iter().enumerate() {
                let norm = q.as_ref().norm();
                if (norm - 1.0).abs() > 1e-6 {
                    return Err(SimError::QuatNotUnit {
                        frame: fi,
                        joint: ji,
                        norm,
                    });
                }
            }
            let t = frame.root_translation;
            if !(t.x.is_finite() && t.y.is_finite() && t.z.is_finite()) {
                return Err(SimError::BadParams(format!(
                    "non-finite root translation at frame {fi}"
                )));
            }
        }
        Ok(BodyMotion { frames, frame_rate })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn frame(&self, index: usize) -> &MotionFrame {
        &self.frames[index]
    }

    pub fn frames(&self) -> &[MotionFrame] {
        &self.frames
    }

    pub fn slice(&self, start: usize, end: usize) -> BodyMotion {
        BodyMotion {
            frames: self.frames[start..end].to_vec(),
            frame_rate: self.frame_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionStyle {
    /// Standing in place, weight shifting, limbs drifting gently.
    Sway,
    /// Sway plus a steady monotone root yaw.
    Spin,
    /// Walking a circle: bounded translation, alternating leg swing,
    /// counter-swinging arms.
    Walk,
}

impl std::str::FromStr for MotionStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sway" => Ok(MotionStyle::Sway),
            "spin" => Ok(MotionStyle::Spin),
            "walk" => Ok(MotionStyle::Walk),
            other => Err(format!("unknown motion style '{other}'")),
        }
    }
}

impl std::fmt::Display for MotionStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MotionStyle::Sway => "sway",
            MotionStyle::Spin => "spin",
            MotionStyle::Walk => "walk",
        };
        f.write_str(s)
    }
}

/// A sum of sinusoids plus an optional linear ramp; C-infinity in time.
#[derive(Debug, Clone, Default)]
struct Channel {
    terms: Vec<(f64, f64, f64)>, // (amplitude, frequency hz, phase)
    ramp: f64,                   // rad/s or m/s
}

impl Channel {
    fn eval(&self, t: f64) -> f64 {
        self.ramp * t
            + self
                .terms
                .iter()
                .map(|&(a, f, p)| a * (TAU * f * t + p).sin())
                .sum::<f64>()
    }
}

fn random_terms(rng: &mut ChaCha8Rng, count: usize, amplitude: f64) -> Vec<(f64, f64, f64)> {
    (0..count)
        .map(|_| {
            (
                rng.random_range(0.3..1.0) * amplitude,
                rng.random_range(0.2..1.0),
                rng.random_range(0.0..TAU),
            )
        })
        .collect()
}

/// Generates a motion clip. Deterministic in `(seed, style)`; root
/// translation and joint angles stay bounded and C¹-smooth by construction
/// (everything is a sinusoid superposition, plus a circular path for walk).
pub fn generate_body_motion(
    seed: u64,
    frame_count: usize,
    frame_rate: f64,
    style: MotionStyle,
) -> BodyMotion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Baseline wobble amplitude per joint, radians.
    let joint_amp = [
        0.05, 0.06, 0.05, 0.08, 0.20, 0.12, 0.06, 0.20, 0.12, 0.06, 0.18, 0.14, 0.18, 0.14,
    ];
    let mut joint_channels: Vec<[Channel; 3]> = (0..JOINT_COUNT)
        .map(|j| {
            [0, 1, 2].map(|_| Channel {
                terms: random_terms(&mut rng, 2, joint_amp[j]),
                ramp: 0.0,
            })
        })
        .collect();
    let mut root_channels: [Channel; 3] = [0, 1, 2].map(|_| Channel {
        terms: random_terms(&mut rng, 2, 0.03),
        ramp: 0.0,
    });

    // Walk path parameters are drawn for every style to keep the RNG stream
    // aligned; only walk uses them.
    let path_phase = rng.random_range(0.0..TAU);
    let gait_hz = rng.random_range(1.2..1.6);
    let path_radius = 0.8;
    let path_period = 12.0;

    match style {
        MotionStyle::Sway => {}
        MotionStyle::Spin => {
            // Steady heading ramp with a wobble too small to stall it:
            // |d wobble/dt| <= 0.02 * 2π * 1.0 < 2π/8.
            joint_channels[0][1] = Channel {
                terms: vec![(0.02, 1.0, path_phase)],
                ramp: TAU / 8.0,
            };
        }
        MotionStyle::Walk => {
            let swing = 0.5;
            let knee = 0.25;
            let arm = 0.25;
            // Alternating legs: right hip half a cycle behind the left.
            joint_channels[4][0] = Channel {
                terms: vec![(swing, gait_hz, 0.0)],
                ramp: 0.0,
            };
            joint_channels[7][0] = Channel {
                terms: vec![(swing, gait_hz, PI)],
                ramp: 0.0,
            };
            joint_channels[5][0] = Channel {
                terms: vec![(knee, gait_hz, PI / 2.0)],
                ramp: 0.0,
            };
            joint_channels[8][0] = Channel {
                terms: vec![(knee, gait_hz, 3.0 * PI / 2.0)],
                ramp: 0.0,
            };
            // Arms counter-swing relative to their same-side leg.
            joint_channels[10][0] = Channel {
                terms: vec![(arm, gait_hz, PI)],
                ramp: 0.0,
            };
            joint_channels[12][0] = Channel {
                terms: vec![(arm, gait_hz, 0.0)],
                ramp: 0.0,
            };
            // Vertical bob at twice the gait frequency (each footfall).
            root_channels[1] = Channel {
                terms: vec![(0.015, 2.0 * gait_hz, 0.0)],
                ramp: 0.0,
            };
        }
    }

    let path_omega = TAU / path_period;
    let frames = (0..frame_count)
        .map(|f| {
            let t = f as f64 / frame_rate;
            let mut root_translation = Vec3::new(
                root_channels[0].eval(t),
                root_channels[1].eval(t),
                root_channels[2].eval(t),
            );
            let mut heading_extra = 0.0;
            if style == MotionStyle::Walk {
                let ang = path_omega * t + path_phase;
                root_translation += Vec3::new(
                    path_radius * (ang.cos() - path_phase.cos()),
                    0.0,
                    path_radius * (ang.sin() - path_phase.sin()),
                );
                // Face along the path tangent (-sin, 0, cos) direction.
                heading_extra = -ang;
            }
            let joint_rotations = (0..JOINT_COUNT)
                .map(|j| {
                    let extra = if j == 0 { heading_extra } else { 0.0 };
                    UnitQuaternion::from_euler_angles(
                        joint_channels[j][0].eval(t),
                        joint_channels[j][1].eval(t) + extra,
                        joint_channels[j][2].eval(t),
                    )
                })
                .collect();
            MotionFrame {
                root_translation,
                joint_rotations,
            }
        })
        .collect();
    BodyMotion::new(frames, frame_rate).expect("generated motion is valid by construction")
}

#[derive(Serialize, Deserialize)]
struct MotionJson {
    frame_rate: f64,
    joint_names: Vec<String>,
    frames: Vec<FrameJson>,
}

#[derive(Serialize, Deserialize)]
struct FrameJson {
    root_translation: [f64; 3],
    /// Quaternions as [w, x, y, z].
    joint_rotations: Vec<[f64; 4]>,
}

pub fn write_motion(path: &Path, motion: &BodyMotion) -> Result<(), SimError> {
    let doc = MotionJson {
        frame_rate: motion.frame_rate(),
        joint_names: JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
        frames: motion
            .frames()
            .iter()
            .map(|f| FrameJson {
                root_translation: [
                    f.root_translation.x,
                    f.root_translation.y,
                    f.root_translation.z,
                ],
                joint_rotations: f
                    .joint_rotations
                    .iter()
                    .map(|q| [q.w, q.i, q.j, q.k])
                    .collect(),
            })
            .collect(),
    };
    let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
    serde_json::to_writer(BufWriter::new(file), &doc).map_err(|e| SimError::json(path, e))
}

pub fn read_motion(path: &Path) -> Result<BodyMotion, SimError> {
    let file = std::fs::File::open(path).map_err(|e| SimError::io(path, e))?;
    let doc: MotionJson =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| SimError::json(path, e))?;
    let frames = doc
        .frames
        .into_iter()
        .map(|f| MotionFrame {
            root_translation: Vec3::new(
                f.root_translation[0],
                f.root_translation[1],
                f.root_translation[2],
            ),
            joint_rotations: f
                .joint_rotations
                .iter()
                .map(|q| {
                    // No renormalization: keeps round trips exact, and the
                    // constructor below still rejects non-unit values.
                    UnitQuaternion::new_unchecked(nalgebra::Quaternion::new(
                        q[0], q[1], q[2], q[3],
                    ))
                })
                .collect(),
        })
        .collect();
    BodyMotion::new(frames, doc.frame_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_motion() {
        let a = generate_body_motion(42, 50, 30.0, MotionStyle::Walk);
        let b = generate_body_motion(42, 50, 30.0, MotionStyle::Walk);
        assert_eq!(a, b);
        let c = generate_body_motion(43, 50, 30.0, MotionStyle::Walk);
        assert_ne!(a, c);
    }

    #[test]
    fn sway_root_moves_less_than_10cm_per_frame() {
        let motion = generate_body_motion(7, 300, 30.0, MotionStyle::Sway);
        for pair in motion.frames().windows(2) {
            let step = (pair[1].root_translation - pair[0].root_translation).norm();
            assert!(step < 0.1, "step {step}");
        }
    }

    #[test]
    fn spin_heading_is_monotone_over_a_revolution() {
        let motion = generate_body_motion(3, 300, 30.0, MotionStyle::Spin);
        let mut prev = f64::NEG_INFINITY;
        let mut unwrapped = 0.0;
        let mut last_raw: Option<f64> = None;
        for frame in motion.frames() {
            let h = frame.joint_rotations[0] * Vec3::z();
            let raw = h.x.atan2(h.z);
            if let Some(lr) = last_raw {
                let mut d = raw - lr;
                if d < -PI {
                    d += TAU;
                } else if d > PI {
                    d -= TAU;
                }
                unwrapped += d;
            }
            last_raw = Some(raw);
            assert!(unwrapped > prev - 1e-9, "heading went backwards");
            prev = unwrapped;
        }
        // 300 frames at 30 fps = 10 s; one revolution takes 8 s.
        assert!(unwrapped > TAU, "total heading {unwrapped}");
    }

    #[test]
    fn walk_translation_is_bounded_and_smooth() {
        let motion = generate_body_motion(11, 600, 30.0, MotionStyle::Walk);
        for frame in motion.frames() {
            assert!(frame.root_translation.norm() < 2.0);
        }
        for pair in motion.frames().windows(2) {
            let step = (pair[1].root_translation - pair[0].root_translation).norm();
            assert!(step < 0.1, "step {step}");
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("motion.json");
        let motion = generate_body_motion(5, 20, 24.0, MotionStyle::Sway);
        write_motion(&path, &motion).unwrap();
        let back = read_motion(&path).unwrap();
        assert_eq!(motion, back);
    }

    #[test]
    fn rejects_non_unit_quaternion() {
        let mut frame = MotionFrame {
            root_translation: Vec3::zeros(),
            joint_rotations: vec![UnitQuaternion::identity(); JOINT_COUNT],
        };
        // Punch through UnitQuaternion's normalization with a raw value.
        frame.joint_rotations[2] = UnitQuaternion::new_unchecked(nalgebra::Quaternion::new(
            1.1, 0.0, 0.0, 0.0,
        ));
        assert!(matches!(
            BodyMotion::new(vec![frame], 30.0),
            Err(SimError::QuatNotUnit { joint: 2, .. })
        ));
    }
}
