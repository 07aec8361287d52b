//! Named parameter storage and the VBNN checkpoint format.
//!
//! Parameters live outside any tape. Each training step stages them into a
//! fresh graph with [`ParameterSet::stage_into`], runs forward + backward,
//! and writes updates back by name. Iteration order is insertion order
//! everywhere, which keeps checkpoints and optimizer sweeps deterministic.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexMap;

use crate::optim::AdamState;
use crate::{AutodiffError, Tape, Tensor, Var};

/// Tape handles for staged parameters, keyed by parameter name.
pub type VarMap = IndexMap<String, Var>;

#[derive(Debug, Clone)]
struct ParamEntry {
    tensor: Tensor,
    trainable: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ParameterSet {
    entries: IndexMap<String, ParamEntry>,
}

const MAGIC: &[u8; 4] = b"VBNN";
const VERSION: u32 = 1;

impl ParameterSet {
    pub fn new() -> Self {
        ParameterSet::default()
    }

    pub fn insert(
        &mut self,
        name: &str,
        tensor: Tensor,
        trainable: bool,
    ) -> Result<(), AutodiffError> {
        if self.entries.contains_key(name) {
            return Err(AutodiffError::DuplicateParam(name.to_string()));
        }
        self.entries
            .insert(name.to_string(), ParamEntry { tensor, trainable });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name).map(|e| &e.tensor)
    }

    pub fn is_trainable(&self, name: &str) -> Option<bool> {
        self.entries.get(name).map(|e| e.trainable)
    }

    /// Replaces a value; the shape is fixed at insert time.
    pub fn set(&mut self, name: &str, tensor: Tensor) -> Result<(), AutodiffError> {
        let entry = self
            .entries
            .get_mut(name)
            .ok_or_else(|| AutodiffError::MissingParam(name.to_string()))?;
        if entry.tensor.shape() != tensor.shape() {
            return Err(AutodiffError::ShapeChanged {
                name: name.to_string(),
                expected: entry.tensor.shape().to_vec(),
                got: tensor.shape().to_vec(),
            });
        }
        entry.tensor = tensor;
        Ok(())
    }

    /// In-place mutable access for optimizers.
    pub(crate) fn values_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        self.entries.get_mut(name).map(|e| e.tensor.data_mut())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor, bool)> {
        self.entries
            .iter()
            .map(|(k, e)| (k.as_str(), &e.tensor, e.trainable))
    }

    /// Total scalar count, for logging.
    pub fn scalar_count(&self) -> usize {
        self.entries.values().map(|e| e.tensor.len()).sum()
    }

    /// Copies every entry onto a tape: trainable ones as gradient-tracked
    /// inputs, the rest as constants.
    pub fn stage_into(&self, tape: &mut Tape) -> VarMap {
        let mut map = VarMap::new();
        for (name, entry) in &self.entries {
            let var = if entry.trainable {
                tape.param(entry.tensor.clone())
            } else {
                tape.constant(entry.tensor.clone())
            };
            map.insert(name.clone(), var);
        }
        map
    }

    /// Gradients of all trainable parameters after a backward pass, keyed
    /// by name, in insertion order.
    pub fn collect_grads(&self, tape: &Tape, vars: &VarMap) -> IndexMap<String, Tensor> {
        let mut grads = IndexMap::new();
        for (name, entry) in &self.entries {
            if entry.trainable {
                if let Some(&v) = vars.get(name) {
                    grads.insert(name.clone(), tape.grad(v));
                }
            }
        }
        grads
    }

    /// Writes a VBNN checkpoint: name/shape/trainable table, f64 payloads,
    /// then optional optimizer state aligned to the same parameter order.
    pub fn save(&self, path: &Path, optimizer: Option<&AdamState>) -> Result<(), AutodiffError> {
        let file = File::create(path).map_err(|e| AutodiffError::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| AutodiffError::io(path, e);

        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(self.entries.len() as u32).to_le_bytes())
            .map_err(io)?;
        for (name, entry) in &self.entries {
            w.write_all(&(name.len() as u32).to_le_bytes()).map_err(io)?;
            w.write_all(name.as_bytes()).map_err(io)?;
            w.write_all(&[entry.trainable as u8]).map_err(io)?;
            let shape = entry.tensor.shape();
            w.write_all(&(shape.len() as u32).to_le_bytes()).map_err(io)?;
            for &d in shape {
                w.write_all(&(d as u32).to_le_bytes()).map_err(io)?;
            }
        }
        for entry in self.entries.values() {
            for &v in entry.tensor.data() {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        match optimizer {
            None => w.write_all(&[0u8]).map_err(io)?,
            Some(state) => {
                w.write_all(&[1u8]).map_err(io)?;
                w.write_all(&state.t.to_le_bytes()).map_err(io)?;
                for (name, entry) in &self.entries {
                    let n = entry.tensor.len();
                    let zeros = vec![0.0; n];
                    let m = state.m.get(name).map(Vec::as_slice).unwrap_or(&zeros);
                    let v = state.v.get(name).map(Vec::as_slice).unwrap_or(&zeros);
                    for &x in m {
                        w.write_all(&x.to_le_bytes()).map_err(io)?;
                    }
                    for &x in v {
                        w.write_all(&x.to_le_bytes()).map_err(io)?;
                    }
                }
            }
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<(Self, Option<AdamState>), AutodiffError> {
        let file = File::open(path).map_err(|e| AutodiffError::io(path, e))?;
        let mut r = BufReader::new(file);
        let bad = |reason: String| AutodiffError::BadCheckpoint {
            path: path.to_path_buf(),
            reason,
        };

        let mut magic = [0u8; 4];
        read_exact(&mut r, path, &mut magic)?;
        if &magic != MAGIC {
            return Err(bad(format!("bad magic {magic:?}")));
        }
        let version = read_u32(&mut r, path)?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let count = read_u32(&mut r, path)? as usize;
        let mut names = Vec::with_capacity(count);
        let mut shapes = Vec::with_capacity(count);
        let mut trainables = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = read_u32(&mut r, path)? as usize;
            let mut buf = vec![0u8; name_len];
            read_exact(&mut r, path, &mut buf)?;
            let name =
                String::from_utf8(buf).map_err(|e| bad(format!("non-utf8 name: {e}")))?;
            let mut flag = [0u8; 1];
            read_exact(&mut r, path, &mut flag)?;
            let rank = read_u32(&mut r, path)? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(read_u32(&mut r, path)? as usize);
            }
            names.push(name);
            shapes.push(shape);
            trainables.push(flag[0] != 0);
        }
        let mut set = ParameterSet::new();
        for i in 0..count {
            let n: usize = shapes[i].iter().product();
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                data.push(read_f64(&mut r, path)?);
            }
            set.insert(&names[i], Tensor::from_vec(&shapes[i], data), trainables[i])?;
        }
        let mut flag = [0u8; 1];
        read_exact(&mut r, path, &mut flag)?;
        let state = match flag[0] {
            0 => None,
            1 => {
                let t = read_u64(&mut r, path)?;
                let mut m = IndexMap::new();
                let mut v = IndexMap::new();
                for i in 0..count {
                    let n: usize = shapes[i].iter().product();
                    let mut mv = Vec::with_capacity(n);
                    for _ in 0..n {
                        mv.push(read_f64(&mut r, path)?);
                    }
                    let mut vv = Vec::with_capacity(n);
                    for _ in 0..n {
                        vv.push(read_f64(&mut r, path)?);
                    }
                    m.insert(names[i].clone(), mv);
                    v.insert(names[i].clone(), vv);
                }
                Some(AdamState { t, m, v })
            }
            other => return Err(bad(format!("bad optimizer flag {other}"))),
        };
        Ok((set, state))
    }
}

fn read_exact(r: &mut impl Read, path: &Path, buf: &mut [u8]) -> Result<(), AutodiffError> {
    r.read_exact(buf).map_err(|e| AutodiffError::io(path, e))
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32, AutodiffError> {
    let mut b = [0u8; 4];
    read_exact(r, path, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64, AutodiffError> {
    let mut b = [0u8; 8];
    read_exact(r, path, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read, path: &Path) -> Result<f64, AutodiffError> {
    let mut b = [0u8; 8];
    read_exact(r, path, &mut b)?;
    Ok(f64::from_le_bytes(b))
}
