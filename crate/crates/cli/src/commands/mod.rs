pub mod decompose;
pub mod eval;
pub mod fit_kernel;
pub mod infer;
pub mod select_pivots;
pub mod simulate;
pub mod sweep_bones;
pub mod train_hf;
pub mod train_lf;

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use vb_mesh::{frequency_split, Adjacency, AnimSequence, SmoothingConfig};
use vb_sim::{DatasetManifest, SequenceRecord, SimParams};

use crate::error::CliError;
use crate::record::RunRecord;

/// File the simulator writes next to the sequences (see `vb_sim::generate_dataset`).
pub const DATASET_MANIFEST: &str = "manifest.json";
/// Shared decomposition rig, written by `decompose` under the models dir.
pub const RIG_FILE: &str = "rig.vbrig";
/// Decomposition report (residuals + per-sequence frame spans).
pub const DECOMPOSE_REPORT: &str = "decompose.json";
/// Pivot selection output.
pub const PIVOTS_FILE: &str = "pivots.json";
/// Calibrated pivot bank directory name under the models dir.
pub const BANK_DIR: &str = "bank";

pub fn require(path: &Path, prerequisite: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Missing {
            path: path.to_path_buf(),
            prerequisite: prerequisite.to_string(),
        })
    }
}

/// Filesystem-safe tag for a parameter point, used in bundle directory
/// names and run-record stems: `b1e-7_d4e-2_t1e0`.
pub fn params_tag(p: &SimParams) -> String {
    format!(
        "b{:e}_d{:e}_t{:e}",
        p.bending_stiffness, p.mass_density, p.timescale
    )
}

/// Human-readable `bending,density,timescale` triple for messages.
pub fn fmt_params(p: &SimParams) -> String {
    format!("{},{},{}", p.bending_stiffness, p.mass_density, p.timescale)
}

pub fn params_key(p: &SimParams) -> [u64; 3] {
    [
        p.bending_stiffness.to_bits(),
        p.mass_density.to_bits(),
        p.timescale.to_bits(),
    ]
}

pub fn bundle_dir(models_dir: &Path, p: &SimParams) -> PathBuf {
    models_dir.join(format!("bundle_{}", params_tag(p)))
}

/// Sequences of the manifest at exactly the given parameter point.
pub fn matching_records<'a>(
    manifest: &'a DatasetManifest,
    params: &SimParams,
) -> Result<Vec<&'a SequenceRecord>, CliError> {
    let key = params_key(params);
    let selected: Vec<&SequenceRecord> = manifest
        .sequences
        .iter()
        .filter(|r| params_key(&r.params) == key)
        .collect();
    if selected.is_empty() {
        let mut available: Vec<String> =
            distinct_params(manifest).iter().map(fmt_params).collect();
        available.dedup();
        return Err(CliError::Config(format!(
            "no sequences simulated at params {}; dataset has: {}",
            fmt_params(params),
            available.join(" | ")
        )));
    }
    Ok(selected)
}

/// Distinct parameter points in manifest order of first appearance.
pub fn distinct_params(manifest: &DatasetManifest) -> Vec<SimParams> {
    let mut seen: Vec<[u64; 3]> = Vec::new();
    let mut out = Vec::new();
    for r in &manifest.sequences {
        let key = params_key(&r.params);
        if !seen.contains(&key) {
            seen.push(key);
            out.push(r.params);
        }
    }
    out
}

/// Frame span of one source sequence inside a concatenated sequence.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct SourceSpan {
    pub sequence: String,
    pub start: usize,
    pub end: usize,
}

pub struct LfConcat {
    pub seq: AnimSequence,
    pub spans: Vec<SourceSpan>,
}

/// Reads the given sequences, splits off their low-frequency parts, and
/// concatenates those in record order, tracking frame spans so bone
/// tracks fitted on the concatenation can be sliced back per sequence.
pub fn lf_concat(
    dataset_dir: &Path,
    records: &[&SequenceRecord],
    adjacency: &Adjacency,
    smoothing: SmoothingConfig,
    record: &mut RunRecord,
) -> Result<LfConcat, CliError> {
    let mut parts: Vec<AnimSequence> = Vec::with_capacity(records.len());
    let mut spans = Vec::with_capacity(records.len());
    let mut offset = 0;
    for r in records {
        let path = dataset_dir.join(&r.sequence_path);
        record.input(&path)?;
        let seq = vb_mesh::read_sequence(&path)?;
        let split = frequency_split(&seq, adjacency, smoothing)?;
        spans.push(SourceSpan {
            sequence: r.sequence_path.clone(),
            start: offset,
            end: offset + seq.frame_count(),
        });
        offset += seq.frame_count();
        parts.push(split.low);
    }
    let refs: Vec<&AnimSequence> = parts.iter().collect();
    Ok(LfConcat {
        seq: AnimSequence::concat(&refs)?,
        spans,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("cannot encode {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
