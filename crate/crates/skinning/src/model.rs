use vb_mesh::Vec3;

use crate::SkinningError;

/// One (bone, weight) pair in a sparse skinning row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightEntry {
    pub bone: u16,
    pub weight: f64,
}

/// A skinning decomposition: rest pose, sparse per-vertex weights, and the
/// bone count / sparseness the weights were solved under.
///
/// Weight rows are kept sorted by bone index. Every row sums to one (within
/// 1e-6), has no negative entries, and has at most `sparseness` nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinModel {
    pub rest_pose: Vec<Vec3>,
    weights: Vec<Vec<WeightEntry>>,
    bone_count: usize,
    sparseness: usize,
}

impl SkinModel {
    pub fn new(
        rest_pose: Vec<Vec3>,
        weights: Vec<Vec<WeightEntry>>,
        bone_count: usize,
        sparseness: usize,
    ) -> Result<Self, SkinningError> {
        if bone_count == 0 {
            return Err(SkinningError::NoBones);
        }
        if bone_count > u16::MAX as usize + 1 {
            return Err(SkinningError::TooManyBones {
                bone_count,
                limit: u16::MAX as usize + 1,
            });
        }
        if sparseness == 0 {
            return Err(SkinningError::ZeroSparseness);
        }
        if rest_pose.len() != weights.len() {
            return Err(SkinningError::VertexCountMismatch {
                expected: rest_pose.len(),
                got: weights.len(),
            });
        }
        let mut weights = weights;
        for (vi, row) in weights.iter_mut().enumerate() {
            row.sort_by_key(|e| e.bone);
            if row.len() > sparseness {
                return Err(SkinningError::BadWeightRow {
                    vertex: vi,
                    reason: format!("{} entries exceeds sparseness {}", row.len(), sparseness),
                });
            }
            let mut sum = 0.0;
            for e in row.iter() {
                if (e.bone as usize) >= bone_count {
                    return Err(SkinningError::BadWeightRow {
                        vertex: vi,
                        reason: format!("bone {} out of range {}", e.bone, bone_count),
                    });
                }
                if !e.weight.is_finite() || e.weight < 0.0 {
                    return Err(SkinningError::BadWeightRow {
                        vertex: vi,
                        reason: format!("weight {} for bone {}", e.weight, e.bone),
                    });
                }
                sum += e.weight;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(SkinningError::BadWeightRow {
                    vertex: vi,
                    reason: format!("weights sum to {sum}"),
                });
            }
        }
        // Duplicate bone indices within a row collapse to nonsense; reject.
        for (vi, row) in weights.iter().enumerate() {
            for pair in row.windows(2) {
                if pair[0].bone == pair[1].bone {
                    return Err(SkinningError::BadWeightRow {
                        vertex: vi,
                        reason: format!("duplicate bone {}", pair[0].bone),
                    });
                }
            }
        }
        Ok(SkinModel {
            rest_pose,
            weights,
            bone_count,
            sparseness,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.rest_pose.len()
    }

    pub fn bone_count(&self) -> usize {
        self.bone_count
    }

    pub fn sparseness(&self) -> usize {
        self.sparseness
    }

    pub fn weights(&self, vertex: usize) -> &[WeightEntry] {
        &self.weights[vertex]
    }

    pub fn weight_rows(&self) -> &[Vec<WeightEntry>] {
        &self.weights
    }

    /// Dense row for one vertex, length `bone_count`.
    pub fn dense_row(&self, vertex: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.bone_count];
        for e in &self.weights[vertex] {
            row[e.bone as usize] = e.weight;
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(bone: u16, weight: f64) -> WeightEntry {
        WeightEntry { bone, weight }
    }

    #[test]
    fn accepts_valid_rows() {
        let model = SkinModel::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)],
            vec![
                vec![entry(0, 1.0)],
                vec![entry(1, 0.25), entry(0, 0.75)],
            ],
            2,
            4,
        )
        .unwrap();
        assert_eq!(model.vertex_count(), 2);
        // Rows come back sorted by bone index.
        assert_eq!(model.weights(1)[0].bone, 0);
        assert_eq!(model.dense_row(1), vec![0.75, 0.25]);
    }

    #[test]
    fn rejects_bad_sum() {
        let err = SkinModel::new(
            vec![Vec3::zeros()],
            vec![vec![entry(0, 0.9)]],
            1,
            4,
        );
        assert!(matches!(err, Err(SkinningError::BadWeightRow { .. })));
    }

    #[test]
    fn rejects_negative_weight() {
        let err = SkinModel::new(
            vec![Vec3::zeros()],
            vec![vec![entry(0, 1.5), entry(1, -0.5)]],
            2,
            4,
        );
        assert!(matches!(err, Err(SkinningError::BadWeightRow { .. })));
    }

    #[test]
    fn rejects_overfull_row() {
        let err = SkinModel::new(
            vec![Vec3::zeros()],
            vec![vec![entry(0, 0.5), entry(1, 0.3), entry(2, 0.2)]],
            3,
            2,
        );
        assert!(matches!(err, Err(SkinningError::BadWeightRow { .. })));
    }

    #[test]
    fn rejects_out_of_range_bone() {
        let err = SkinModel::new(vec![Vec3::zeros()], vec![vec![entry(5, 1.0)]], 2, 4);
        assert!(matches!(err, Err(SkinningError::BadWeightRow { .. })));
    }
}
