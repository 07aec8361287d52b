//! Dense 64-bit tensors. Row-major, rank 1 or 2 in practice; shapes are
//! carried as plain vectors so the tape can check compatibility.

use rand::Rng;
use vb_mesh::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    /// Panics if `data` does not fill `shape`; construction sites are
    /// static, so this is a programming error, not an input error.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {shape:?} does not fit {} values",
            data.len()
        );
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        Self::from_vec(&[rows, cols], data)
    }

    /// V×3 matrix from a point list; the standard bridge from mesh data.
    pub fn from_points(points: &[Vec3]) -> Self {
        let mut data = Vec::with_capacity(points.len() * 3);
        for p in points {
            data.extend_from_slice(&[p.x, p.y, p.z]);
        }
        Tensor {
            shape: vec![points.len(), 3],
            data,
        }
    }

    pub fn to_points(&self) -> Vec<Vec3> {
        assert_eq!(self.shape.len(), 2);
        assert_eq!(self.shape[1], 3);
        self.data
            .chunks_exact(3)
            .map(|c| Vec3::new(c[0], c[1], c[2]))
            .collect()
    }

    pub fn uniform(shape: &[usize], limit: f64, rng: &mut impl Rng) -> Self {
        let data = (0..shape.iter().product())
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rows(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "rows() on rank-{} tensor", self.shape.len());
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "cols() on rank-{} tensor", self.shape.len());
        self.shape[1]
    }

    pub fn item(&self) -> f64 {
        assert_eq!(self.len(), 1, "item() on tensor of {} values", self.len());
        self.data[0]
    }
}
