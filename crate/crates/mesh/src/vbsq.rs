//! Binary animation-sequence container.
//!
//! Layout (all little-endian): magic `VBSQ`, version `u32`, frame count
//! `u32`, vertex count `u32`, frame rate `f32`, then frame-major `f32`
//! positions (x, y, z per vertex). Positions are `f64` in memory and `f32`
//! on disk.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{AnimSequence, MeshError, Vec3};

const MAGIC: &[u8; 4] = b"VBSQ";
const VERSION: u32 = 1;

pub fn write_sequence(path: &Path, seq: &AnimSequence) -> Result<(), MeshError> {
    let file = std::fs::File::create(path).map_err(|e| MeshError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| MeshError::io(path, e);
    out.write_all(MAGIC).map_err(io_err)?;
    out.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    out.write_all(&(seq.frame_count() as u32).to_le_bytes())
        .map_err(io_err)?;
    out.write_all(&(seq.vertex_count() as u32).to_le_bytes())
        .map_err(io_err)?;
    out.write_all(&(seq.frame_rate() as f32).to_le_bytes())
        .map_err(io_err)?;
    for frame in seq.frames() {
        for p in frame {
            for k in 0..3 {
                out.write_all(&(p[k] as f32).to_le_bytes()).map_err(io_err)?;
            }
        }
    }
    out.flush().map_err(io_err)
}

pub fn read_sequence(path: &Path) -> Result<AnimSequence, MeshError> {
    let file = std::fs::File::open(path).map_err(|e| MeshError::io(path, e))?;
    let mut input = BufReader::new(file);
    let bad = |message: &str| MeshError::BadSequenceFile {
        path: path.display().to_string(),
        message: message.to_string(),
    };
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(|e| MeshError::io(path, e))?;
    if &magic != MAGIC {
        return Err(bad("wrong magic bytes"));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |input: &mut BufReader<std::fs::File>| -> Result<u32, MeshError> {
        input
            .read_exact(&mut u32buf)
            .map_err(|e| MeshError::io(path, e))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let frame_count = read_u32(&mut input)? as usize;
    let vertex_count = read_u32(&mut input)? as usize;
    let mut f32buf = [0u8; 4];
    input
        .read_exact(&mut f32buf)
        .map_err(|e| MeshError::io(path, e))?;
    let frame_rate = f32::from_le_bytes(f32buf) as f64;

    let mut payload = vec![0u8; frame_count * vertex_count * 12];
    input
        .read_exact(&mut payload)
        .map_err(|e| MeshError::io(path, e))?;
    let mut frames = Vec::with_capacity(frame_count);
    let mut offset = 0;
    for _ in 0..frame_count {
        let mut frame = Vec::with_capacity(vertex_count);
        for _ in 0..vertex_count {
            let mut coords = [0.0f64; 3];
            for c in &mut coords {
                let bytes: [u8; 4] = payload[offset..offset + 4].try_into().unwrap();
                *c = f32::from_le_bytes(bytes) as f64;
                offset += 4;
            }
            frame.push(Vec3::new(coords[0], coords[1], coords[2]));
        }
        frames.push(frame);
    }
    AnimSequence::new(frames, frame_rate)
}
