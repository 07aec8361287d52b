//! Binary rig container for a skin model plus its bone tracks.
//!
//! Layout (all little-endian): magic `VBRIG`, version `u32`, vertex count
//! `u32`, bone count `u32`, frame count `u32`, sparseness `u32`, weight
//! triplet count `u32`; rest pose as `f32` x/y/z per vertex; weight
//! triplets as (vertex `u32`, bone `u16`, weight `f32`); then frame-major
//! transforms, one row-major 3×4 `f32` matrix `[R|T]` per bone per frame.
//! Weight rows are renormalized on read to absorb `f32` quantization.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Matrix3;
use vb_mesh::Vec3;

use crate::{BoneTracks, RigidTransform, SkinModel, SkinningError, WeightEntry};

const MAGIC: &[u8; 5] = b"VBRIG";
const VERSION: u32 = 1;

pub fn write_rig(
    path: &Path,
    model: &SkinModel,
    tracks: &BoneTracks,
) -> Result<(), SkinningError> {
    if tracks.frame_count() > 0 && tracks.bone_count() != model.bone_count() {
        return Err(SkinningError::BoneCountMismatch {
            expected: model.bone_count(),
            got: tracks.bone_count(),
        });
    }
    let file = std::fs::File::create(path).map_err(|e| SkinningError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| SkinningError::io(path, e);

    let triplet_count: usize = model.weight_rows().iter().map(|r| r.len()).sum();
    out.write_all(MAGIC).map_err(io_err)?;
    out.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    out.write_all(&(model.vertex_count() as u32).to_le_bytes())
        .map_err(io_err)?;
    out.write_all(&(model.bone_count() as u32).to_le_bytes())
        .map_err(io_err)?;
    out.write_all(&(tracks.frame_count() as u32).to_le_bytes())
        .map_err(io_err)?;
    out.write_all(&(model.sparseness() as u32).to_le_bytes())
        .map_err(io_err)?;
    out.write_all(&(triplet_count as u32).to_le_bytes())
        .map_err(io_err)?;

    for p in &model.rest_pose {
        for k in 0..3 {
            out.write_all(&(p[k] as f32).to_le_bytes()).map_err(io_err)?;
        }
    }
    for (vi, row) in model.weight_rows().iter().enumerate() {
        for e in row {
            out.write_all(&(vi as u32).to_le_bytes()).map_err(io_err)?;
            out.write_all(&e.bone.to_le_bytes()).map_err(io_err)?;
            out.write_all(&(e.weight as f32).to_le_bytes())
                .map_err(io_err)?;
        }
    }
    for frame in tracks.frames() {
        for t in frame {
            for r in 0..3 {
                for c in 0..3 {
                    out.write_all(&(t.rotation[(r, c)] as f32).to_le_bytes())
                        .map_err(io_err)?;
                }
                out.write_all(&(t.translation[r] as f32).to_le_bytes())
                    .map_err(io_err)?;
            }
        }
    }
    out.flush().map_err(io_err)
}

pub fn read_rig(path: &Path) -> Result<(SkinModel, BoneTracks), SkinningError> {
    let file = std::fs::File::open(path).map_err(|e| SkinningError::io(path, e))?;
    let mut input = BufReader::new(file);
    let bad = |reason: &str| SkinningError::BadRigFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };

    let mut magic = [0u8; 5];
    input
        .read_exact(&mut magic)
        .map_err(|e| SkinningError::io(path, e))?;
    if &magic != MAGIC {
        return Err(bad("wrong magic bytes"));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |input: &mut BufReader<std::fs::File>| -> Result<u32, SkinningError> {
        input
            .read_exact(&mut u32buf)
            .map_err(|e| SkinningError::io(path, e))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let vertex_count = read_u32(&mut input)? as usize;
    let bone_count = read_u32(&mut input)? as usize;
    let frame_count = read_u32(&mut input)? as usize;
    let sparseness = read_u32(&mut input)? as usize;
    let triplet_count = read_u32(&mut input)? as usize;
    if bone_count == 0 || bone_count > u16::MAX as usize + 1 {
        return Err(bad(&format!("implausible bone count {bone_count}")));
    }
    if vertex_count > 100_000_000 || frame_count > 100_000_000 {
        return Err(bad("implausible counts"));
    }
    if triplet_count > vertex_count * sparseness.max(1) {
        return Err(bad("more weight triplets than sparseness allows"));
    }

    let mut payload =
        vec![0u8; vertex_count * 12 + triplet_count * 10 + frame_count * bone_count * 48];
    input
        .read_exact(&mut payload)
        .map_err(|e| SkinningError::io(path, e))?;
    let mut offset = 0;
    let take_f32 = |payload: &[u8], offset: &mut usize| -> f64 {
        let bytes: [u8; 4] = payload[*offset..*offset + 4].try_into().unwrap();
        *offset += 4;
        f32::from_le_bytes(bytes) as f64
    };

    let mut rest_pose = Vec::with_capacity(vertex_count);
    for _ in 0..vertex_count {
        let x = take_f32(&payload, &mut offset);
        let y = take_f32(&payload, &mut offset);
        let z = take_f32(&payload, &mut offset);
        rest_pose.push(Vec3::new(x, y, z));
    }

    let mut rows: Vec<Vec<WeightEntry>> = vec![Vec::new(); vertex_count];
    for _ in 0..triplet_count {
        let vi = u32::from_le_bytes(payload[offset..offset + 4].try_into().unwrap()) as usize;
        offset += 4;
        let bone = u16::from_le_bytes(payload[offset..offset + 2].try_into().unwrap());
        offset += 2;
        let weight = take_f32(&payload, &mut offset);
        if vi >= vertex_count {
            return Err(bad(&format!("triplet references vertex {vi}")));
        }
        if bone as usize >= bone_count {
            return Err(bad(&format!("triplet references bone {bone}")));
        }
        rows[vi].push(WeightEntry { bone, weight });
    }
    for (vi, row) in rows.iter_mut().enumerate() {
        let sum: f64 = row.iter().map(|e| e.weight).sum();
        if !(sum.is_finite() && sum > 0.5) {
            return Err(bad(&format!("vertex {vi} weights sum to {sum}")));
        }
        for e in row.iter_mut() {
            e.weight /= sum;
        }
    }

    let mut frames = Vec::with_capacity(frame_count);
    for _ in 0..frame_count {
        let mut frame = Vec::with_capacity(bone_count);
        for _ in 0..bone_count {
            let mut rotation = Matrix3::<f64>::zeros();
            let mut translation = Vec3::zeros();
            for r in 0..3 {
                for c in 0..3 {
                    rotation[(r, c)] = take_f32(&payload, &mut offset);
                }
                translation[r] = take_f32(&payload, &mut offset);
            }
            frame.push(RigidTransform::from_parts(rotation, translation));
        }
        frames.push(frame);
    }

    let model = SkinModel::new(rest_pose, rows, bone_count, sparseness)?;
    let tracks = BoneTracks::new(frames)?;
    Ok((model, tracks))
}
