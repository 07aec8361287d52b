//! Reverse-mode automatic differentiation on an explicit tape.
//!
//! Every operation appends a node holding its forward value and enough
//! information to push gradients back to its inputs. Graphs are built per
//! evaluation (per frame or per training chunk) and discarded; parameters
//! live outside the tape in a [`crate::ParameterSet`] and are re-staged
//! each time. No fusion, no scheduling — the node list *is* the program,
//! evaluated eagerly in construction order and differentiated in reverse.

use std::rc::Rc;

use vb_skinning::SkinModel;

use crate::{AutodiffError, Tensor};

/// Additive guard inside [`Tape::sqrt_guarded`]: the op computes
/// `sqrt(x + SQRT_GUARD)`, keeping the derivative finite at zero (Euclidean
/// norms of coincident points during loss evaluation).
pub const SQRT_GUARD: f64 = 1e-12;

/// Regularizer added to the raw 6D rotation input before orthonormalization
/// so degenerate (zero or parallel) inputs still produce a rotation.
const ROT6D_EPS: f64 = 1e-6;

/// Handle to a tape node. Only meaningful for the tape that created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    MaxElem(Var, Var),
    Exp(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    SqrtGuarded(Var),
    ScalarMul(Var, f64),
    MatMul(Var, Var),
    MatVec(Var, Var),
    AddRow(Var, Var),
    BroadcastRows(Var),
    ConcatVec(Var, Var),
    ConcatCols(Var, Var),
    SliceVec(Var, usize),
    GatherRows(Var, Rc<Vec<usize>>),
    GatherElems(Var, Rc<Vec<usize>>),
    ScatterMaxRows { src: Var, winners: Rc<Vec<usize>> },
    RowSum(Var),
    Sum(Var),
    Mean(Var),
    ScaleBy(Var, Var),
    SparseMul(Rc<Sparse>, Var),
    Rot6d(Var),
    Lbs { model: Rc<SkinModel>, rot: Var, trans: Var },
}

struct Node {
    value: Tensor,
    grad: Option<Vec<f64>>,
    op: Op,
    needs: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Fixed-layout sparse matrix (CSR plus its transpose) for linear
/// operators with constant coefficients, e.g. mesh Laplacians.
pub struct Sparse {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    t_row_ptr: Vec<usize>,
    t_col_idx: Vec<usize>,
    t_vals: Vec<f64>,
}

impl Sparse {
    /// Duplicate (row, col) entries are summed; entries are applied in
    /// sorted order so results are deterministic.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let build = |nrows: usize, mut t: Vec<(usize, usize, f64)>| {
            t.sort_by_key(|&(r, c, _)| (r, c));
            let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
            for (r, c, v) in t {
                match merged.last_mut() {
                    Some(last) if last.0 == r && last.1 == c => last.2 += v,
                    _ => merged.push((r, c, v)),
                }
            }
            let mut row_ptr = vec![0usize; nrows + 1];
            for &(r, _, _) in &merged {
                row_ptr[r + 1] += 1;
            }
            for i in 0..nrows {
                row_ptr[i + 1] += row_ptr[i];
            }
            let col_idx = merged.iter().map(|&(_, c, _)| c).collect();
            let vals = merged.iter().map(|&(_, _, v)| v).collect();
            (row_ptr, col_idx, vals)
        };

        for &(r, c, _) in triplets {
            assert!(r < rows && c < cols, "triplet ({r},{c}) out of {rows}x{cols}");
        }
        let (row_ptr, col_idx, vals) = build(rows, triplets.to_vec());
        let transposed: Vec<(usize, usize, f64)> =
            triplets.iter().map(|&(r, c, v)| (c, r, v)).collect();
        let (t_row_ptr, t_col_idx, t_vals) = build(cols, transposed);
        Sparse {
            rows,
            cols,
            row_ptr,
            col_idx,
            vals,
            t_row_ptr,
            t_col_idx,
            t_vals,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// y = M x for x of shape [cols, width].
    fn apply(&self, x: &[f64], width: usize, out: &mut [f64]) {
        for r in 0..self.rows {
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (c, v) = (self.col_idx[e], self.vals[e]);
                for w in 0..width {
                    out[r * width + w] += v * x[c * width + w];
                }
            }
        }
    }

    fn apply_transpose(&self, y: &[f64], width: usize, out: &mut [f64]) {
        for r in 0..self.cols {
            for e in self.t_row_ptr[r]..self.t_row_ptr[r + 1] {
                let (c, v) = (self.t_col_idx[e], self.t_vals[e]);
                for w in 0..width {
                    out[r * width + w] += v * y[c * width + w];
                }
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Constant input: gradients stop here.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Differentiable input: [`Tape::grad`] is meaningful after backward.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Accumulated gradient of the last backward pass; zeros if the node
    /// was not reached or does not require gradients.
    pub fn grad(&self, v: Var) -> Tensor {
        let node = &self.nodes[v.0];
        match &node.grad {
            Some(g) => Tensor::from_vec(node.value.shape(), g.clone()),
            None => Tensor::zeros(node.value.shape()),
        }
    }

    fn push(&mut self, value: Tensor, op: Op, needs: bool) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            op,
            needs,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs
    }

    fn same_shape(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
    ) -> Result<(), AutodiffError> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(AutodiffError::shape(
                op,
                format!("{:?} vs {:?}", self.value(a).shape(), self.value(b).shape()),
            ));
        }
        Ok(())
    }

    fn binary(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
        op: Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var, AutodiffError> {
        self.same_shape(op_name, a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.value(a).shape().to_vec();
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::from_vec(&shape, data), op, needs))
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let data = self.value(a).data().iter().map(|&x| f(x)).collect();
        let shape = self.value(a).shape().to_vec();
        let needs = self.needs(a);
        self.push(Tensor::from_vec(&shape, data), op, needs)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("div", a, b, Op::Div(a, b), |x, y| x / y)
    }

    /// Elementwise max; on ties the first argument wins the gradient.
    pub fn max_elem(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("max_elem", a, b, Op::MaxElem(a, b), |x, y| {
            if x >= y {
                x
            } else {
                y
            }
        })
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), f64::exp)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), |x| 1.0 / (1.0 + (-x).exp()))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| x.max(0.0))
    }

    /// `sqrt(x + SQRT_GUARD)`: a smooth stand-in for the Euclidean norm's
    /// square root whose derivative stays finite at zero.
    pub fn sqrt_guarded(&mut self, a: Var) -> Var {
        self.unary(a, Op::SqrtGuarded(a), |x| (x + SQRT_GUARD).sqrt())
    }

    pub fn scalar_mul(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::ScalarMul(a, c), |x| c * x)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(AutodiffError::shape(
                "matmul",
                format!("{sa:?} x {sb:?}"),
            ));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let x = av[i * k + p];
                if x == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += x * bv[p * n + j];
                }
            }
        }
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::matrix(m, n, out), Op::MatMul(a, b), needs))
    }

    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var, AutodiffError> {
        let (sw, sx) = (self.value(w).shape(), self.value(x).shape());
        if sw.len() != 2 || sx.len() != 1 || sw[1] != sx[0] {
            return Err(AutodiffError::shape(
                "matvec",
                format!("{sw:?} x {sx:?}"),
            ));
        }
        let (m, k) = (sw[0], sw[1]);
        let (wv, xv) = (self.value(w).data(), self.value(x).data());
        let mut out = vec![0.0; m];
        for i in 0..m {
            let row = &wv[i * k..(i + 1) * k];
            out[i] = row.iter().zip(xv).map(|(a, b)| a * b).sum();
        }
        let needs = self.needs(w) || self.needs(x);
        Ok(self.push(Tensor::vector(out), Op::MatVec(w, x), needs))
    }

    /// mat[r, c] + vec[c] broadcast over rows (bias addition).
    pub fn add_row(&mut self, mat: Var, vec: Var) -> Result<Var, AutodiffError> {
        let (sm, sv) = (self.value(mat).shape(), self.value(vec).shape());
        if sm.len() != 2 || sv.len() != 1 || sm[1] != sv[0] {
            return Err(AutodiffError::shape(
                "add_row",
                format!("{sm:?} + {sv:?}"),
            ));
        }
        let (r, c) = (sm[0], sm[1]);
        let (mv, vv) = (self.value(mat).data(), self.value(vec).data());
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(mv[i * c + j] + vv[j]);
            }
        }
        let needs = self.needs(mat) || self.needs(vec);
        Ok(self.push(Tensor::matrix(r, c, out), Op::AddRow(mat, vec), needs))
    }

    /// vec[c] replicated into [rows, c].
    pub fn broadcast_rows(&mut self, vec: Var, rows: usize) -> Result<Var, AutodiffError> {
        let sv = self.value(vec).shape();
        if sv.len() != 1 {
            return Err(AutodiffError::shape(
                "broadcast_rows",
                format!("{sv:?} is not a vector"),
            ));
        }
        let c = sv[0];
        let vv = self.value(vec).data();
        let mut out = Vec::with_capacity(rows * c);
        for _ in 0..rows {
            out.extend_from_slice(vv);
        }
        let needs = self.needs(vec);
        Ok(self.push(Tensor::matrix(rows, c, out), Op::BroadcastRows(vec), needs))
    }

    pub fn concat_vec(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa.len() != 1 || sb.len() != 1 {
            return Err(AutodiffError::shape(
                "concat_vec",
                format!("{sa:?} ++ {sb:?}"),
            ));
        }
        let mut out = self.value(a).data().to_vec();
        out.extend_from_slice(self.value(b).data());
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::vector(out), Op::ConcatVec(a, b), needs))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa.len() != 2 || sb.len() != 2 || sa[0] != sb[0] {
            return Err(AutodiffError::shape(
                "concat_cols",
                format!("{sa:?} ++ {sb:?}"),
            ));
        }
        let (r, ca, cb) = (sa[0], sa[1], sb[1]);
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(r * (ca + cb));
        for i in 0..r {
            out.extend_from_slice(&av[i * ca..(i + 1) * ca]);
            out.extend_from_slice(&bv[i * cb..(i + 1) * cb]);
        }
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(
            Tensor::matrix(r, ca + cb, out),
            Op::ConcatCols(a, b),
            needs,
        ))
    }

    pub fn slice_vec(&mut self, a: Var, start: usize, len: usize) -> Result<Var, AutodiffError> {
        let sa = self.value(a).shape();
        if sa.len() != 1 || start + len > sa[0] {
            return Err(AutodiffError::shape(
                "slice_vec",
                format!("[{start}..{}] of {sa:?}", start + len),
            ));
        }
        let out = self.value(a).data()[start..start + len].to_vec();
        let needs = self.needs(a);
        Ok(self.push(Tensor::vector(out), Op::SliceVec(a, start), needs))
    }

    pub fn gather_rows(&mut self, a: Var, idx: Rc<Vec<usize>>) -> Result<Var, AutodiffError> {
        let sa = self.value(a).shape();
        if sa.len() != 2 {
            return Err(AutodiffError::shape(
                "gather_rows",
                format!("{sa:?} is not a matrix"),
            ));
        }
        let (r, c) = (sa[0], sa[1]);
        if let Some(&bad) = idx.iter().find(|&&i| i >= r) {
            return Err(AutodiffError::shape(
                "gather_rows",
                format!("row {bad} out of {r}"),
            ));
        }
        let av = self.value(a).data();
        let mut out = Vec::with_capacity(idx.len() * c);
        for &i in idx.iter() {
            out.extend_from_slice(&av[i * c..(i + 1) * c]);
        }
        let needs = self.needs(a);
        Ok(self.push(
            Tensor::matrix(idx.len(), c, out),
            Op::GatherRows(a, idx),
            needs,
        ))
    }

    /// Flat-index gather into an arbitrary output shape (also serves as
    /// reshape/permute for vector-valued heads).
    pub fn gather_elems(
        &mut self,
        a: Var,
        idx: Rc<Vec<usize>>,
        out_shape: &[usize],
    ) -> Result<Var, AutodiffError> {
        let n = self.value(a).len();
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(AutodiffError::shape(
                "gather_elems",
                format!("element {bad} out of {n}"),
            ));
        }
        if out_shape.iter().product::<usize>() != idx.len() {
            return Err(AutodiffError::shape(
                "gather_elems",
                format!("{out_shape:?} does not fit {} indices", idx.len()),
            ));
        }
        let av = self.value(a).data();
        let out = idx.iter().map(|&i| av[i]).collect();
        let needs = self.needs(a);
        Ok(self.push(
            Tensor::from_vec(out_shape, out),
            Op::GatherElems(a, idx),
            needs,
        ))
    }

    /// Matrix transpose, expressed as a flat gather so it reuses that
    /// backward rule.
    pub fn transpose(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let sa = self.value(a).shape();
        if sa.len() != 2 {
            return Err(AutodiffError::shape(
                "transpose",
                format!("{sa:?} is not a matrix"),
            ));
        }
        let (r, c) = (sa[0], sa[1]);
        let mut idx = Vec::with_capacity(r * c);
        for j in 0..c {
            for i in 0..r {
                idx.push(i * c + j);
            }
        }
        self.gather_elems(a, Rc::new(idx), &[c, r])
    }

    /// Row-wise scatter-max: out[dst[k]] = max over k of src[k], per
    /// column. Ties keep the earliest source row; rows receiving nothing
    /// are zero and get no gradient.
    pub fn scatter_max_rows(
        &mut self,
        src: Var,
        dst: &[usize],
        rows: usize,
    ) -> Result<Var, AutodiffError> {
        let ss = self.value(src).shape();
        if ss.len() != 2 || dst.len() != ss[0] {
            return Err(AutodiffError::shape(
                "scatter_max_rows",
                format!("{ss:?} with {} destinations", dst.len()),
            ));
        }
        if let Some(&bad) = dst.iter().find(|&&i| i >= rows) {
            return Err(AutodiffError::shape(
                "scatter_max_rows",
                format!("destination {bad} out of {rows}"),
            ));
        }
        let c = ss[1];
        let sv = self.value(src).data();
        let mut out = vec![0.0; rows * c];
        let mut winners = vec![usize::MAX; rows * c];
        for (k, &d) in dst.iter().enumerate() {
            for j in 0..c {
                let cell = d * c + j;
                let v = sv[k * c + j];
                if winners[cell] == usize::MAX || v > out[cell] {
                    out[cell] = v;
                    winners[cell] = k;
                }
            }
        }
        let needs = self.needs(src);
        Ok(self.push(
            Tensor::matrix(rows, c, out),
            Op::ScatterMaxRows {
                src,
                winners: Rc::new(winners),
            },
            needs,
        ))
    }

    pub fn row_sum(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let sa = self.value(a).shape();
        if sa.len() != 2 {
            return Err(AutodiffError::shape(
                "row_sum",
                format!("{sa:?} is not a matrix"),
            ));
        }
        let (r, c) = (sa[0], sa[1]);
        let av = self.value(a).data();
        let out = (0..r)
            .map(|i| av[i * c..(i + 1) * c].iter().sum())
            .collect();
        let needs = self.needs(a);
        Ok(self.push(Tensor::vector(out), Op::RowSum(a), needs))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        let needs = self.needs(a);
        self.push(Tensor::scalar(s), Op::Sum(a), needs)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len().max(1);
        let s: f64 = self.value(a).data().iter().sum();
        let needs = self.needs(a);
        self.push(Tensor::scalar(s / n as f64), Op::Mean(a), needs)
    }

    /// Multiply a tensor by a scalar *variable* (shape [1]).
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var, AutodiffError> {
        if self.value(s).len() != 1 {
            return Err(AutodiffError::shape(
                "scale_by",
                format!("scale has shape {:?}", self.value(s).shape()),
            ));
        }
        let c = self.value(s).data()[0];
        let data = self.value(a).data().iter().map(|&x| c * x).collect();
        let shape = self.value(a).shape().to_vec();
        let needs = self.needs(a) || self.needs(s);
        Ok(self.push(Tensor::from_vec(&shape, data), Op::ScaleBy(a, s), needs))
    }

    /// y = M x for a constant sparse matrix and x of shape [cols, w].
    pub fn sparse_mul(&mut self, m: &Rc<Sparse>, x: Var) -> Result<Var, AutodiffError> {
        let sx = self.value(x).shape();
        if sx.len() != 2 || sx[0] != m.cols {
            return Err(AutodiffError::shape(
                "sparse_mul",
                format!("{}x{} applied to {sx:?}", m.rows, m.cols),
            ));
        }
        let w = sx[1];
        let mut out = vec![0.0; m.rows * w];
        m.apply(self.value(x).data(), w, &mut out);
        let needs = self.needs(x);
        Ok(self.push(
            Tensor::matrix(m.rows, w, out),
            Op::SparseMul(Rc::clone(m), x),
            needs,
        ))
    }

    /// Maps rows of 6 scalars to row-major 3x3 rotation matrices:
    /// Gram-Schmidt on the two (regularized) 3-vectors, third column by
    /// cross product. Always orthonormal with det +1.
    pub fn rot6d(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let sa = self.value(a).shape();
        if sa.len() != 2 || sa[1] != 6 {
            return Err(AutodiffError::shape(
                "rot6d",
                format!("{sa:?}, want [*, 6]"),
            ));
        }
        let b = sa[0];
        let av = self.value(a).data();
        let mut out = vec![0.0; b * 9];
        for k in 0..b {
            let v = &av[k * 6..(k + 1) * 6];
            let (r1, r2, r3) = rot6d_forward(v);
            // Columns r1, r2, r3 in row-major storage.
            let o = &mut out[k * 9..(k + 1) * 9];
            for i in 0..3 {
                o[3 * i] = r1[i];
                o[3 * i + 1] = r2[i];
                o[3 * i + 2] = r3[i];
            }
        }
        let needs = self.needs(a);
        Ok(self.push(Tensor::matrix(b, 9, out), Op::Rot6d(a), needs))
    }

    /// Differentiable linear blend skinning: rotations as [B, 9] row-major
    /// matrices, translations [B, 3], output [V, 3]. The skin model is a
    /// fixed constant; gradients flow to the transforms only.
    pub fn lbs(
        &mut self,
        model: &Rc<SkinModel>,
        rot: Var,
        trans: Var,
    ) -> Result<Var, AutodiffError> {
        let (sr, st) = (self.value(rot).shape(), self.value(trans).shape());
        let b = model.bone_count();
        if sr != [b, 9] || st != [b, 3] {
            return Err(AutodiffError::shape(
                "lbs",
                format!("rot {sr:?}, trans {st:?}, want [{b}, 9] and [{b}, 3]"),
            ));
        }
        let (rv, tv) = (self.value(rot).data(), self.value(trans).data());
        let v_count = model.vertex_count();
        let mut out = vec![0.0; v_count * 3];
        for i in 0..v_count {
            let p = model.rest_pose[i];
            for e in model.weights(i) {
                let j = e.bone as usize;
                let r = &rv[j * 9..(j + 1) * 9];
                let t = &tv[j * 3..(j + 1) * 3];
                for row in 0..3 {
                    out[i * 3 + row] += e.weight
                        * (r[3 * row] * p.x + r[3 * row + 1] * p.y + r[3 * row + 2] * p.z
                            + t[row]);
                }
            }
        }
        let needs = self.needs(rot) || self.needs(trans);
        Ok(self.push(
            Tensor::matrix(v_count, 3, out),
            Op::Lbs {
                model: Rc::clone(model),
                rot,
                trans,
            },
            needs,
        ))
    }

    /// Accumulates `delta`, elementwise scaled by `scale`, into `v`'s
    /// gradient if that node participates.
    fn acc(&mut self, v: Var, delta: &[f64], scale: f64) {
        if let Some(g) = self.nodes[v.0].grad.as_mut() {
            for (gi, di) in g.iter_mut().zip(delta) {
                *gi += scale * di;
            }
        }
    }

    fn acc_at(&mut self, v: Var, offset: usize, delta: &[f64]) {
        if let Some(g) = self.nodes[v.0].grad.as_mut() {
            for (gi, di) in g[offset..offset + delta.len()].iter_mut().zip(delta) {
                *gi += di;
            }
        }
    }

    /// Reverse pass from a scalar loss. Gradients of earlier backward
    /// calls on the same tape are discarded first.
    pub fn backward(&mut self, loss: Var) -> Result<(), AutodiffError> {
        if self.value(loss).len() != 1 {
            return Err(AutodiffError::NonScalarLoss(
                self.value(loss).shape().to_vec(),
            ));
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        if !self.nodes[loss.0].needs {
            return Ok(());
        }
        for n in self.nodes[..=loss.0].iter_mut() {
            if n.needs {
                n.grad = Some(vec![0.0; n.value.len()]);
            }
        }
        self.nodes[loss.0].grad.as_mut().unwrap()[0] = 1.0;

        for i in (0..=loss.0).rev() {
            if self.nodes[i].grad.is_none() {
                continue;
            }
            let g = self.nodes[i].grad.take().unwrap();
            let op = self.nodes[i].op.clone();
            self.backward_op(&op, &g);
            self.nodes[i].grad = Some(g);
        }
        Ok(())
    }

    fn backward_op(&mut self, op: &Op, g: &[f64]) {
        match *op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.acc(a, g, 1.0);
                self.acc(b, g, 1.0);
            }
            Op::Sub(a, b) => {
                self.acc(a, g, 1.0);
                self.acc(b, g, -1.0);
            }
            Op::Mul(a, b) => {
                let da: Vec<f64> = g.iter().zip(self.value(b).data()).map(|(x, y)| x * y).collect();
                let db: Vec<f64> = g.iter().zip(self.value(a).data()).map(|(x, y)| x * y).collect();
                self.acc(a, &da, 1.0);
                self.acc(b, &db, 1.0);
            }
            Op::Div(a, b) => {
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                let da: Vec<f64> = g.iter().zip(bv).map(|(x, y)| x / y).collect();
                let db: Vec<f64> = g
                    .iter()
                    .zip(av.iter().zip(bv))
                    .map(|(x, (p, q))| -x * p / (q * q))
                    .collect();
                self.acc(a, &da, 1.0);
                self.acc(b, &db, 1.0);
            }
            Op::MaxElem(a, b) => {
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                let da: Vec<f64> = g
                    .iter()
                    .zip(av.iter().zip(bv))
                    .map(|(x, (p, q))| if p >= q { *x } else { 0.0 })
                    .collect();
                let db: Vec<f64> = g
                    .iter()
                    .zip(av.iter().zip(bv))
                    .map(|(x, (p, q))| if p >= q { 0.0 } else { *x })
                    .collect();
                self.acc(a, &da, 1.0);
                self.acc(b, &db, 1.0);
            }
            Op::Exp(a) => {
                // Output index is the node being processed; recompute from
                // the input to avoid carrying it.
                let da: Vec<f64> = g
                    .iter()
                    .zip(self.value(a).data())
                    .map(|(x, v)| x * v.exp())
                    .collect();
                self.acc(a, &da, 1.0);
            }
            Op::Tanh(a) => {
                let da: Vec<f64> = g
                    .iter()
                    .zip(self.value(a).data())
                    .map(|(x, v)| {
                        let t = v.tanh();
                        x * (1.0 - t * t)
                    })
                    .collect();
                self.acc(a, &da, 1.0);
            }
            Op::Sigmoid(a) => {
                let da: Vec<f64> = g
                    .iter()
                    .zip(self.value(a).data())
                    .map(|(x, v)| {
                        let s = 1.0 / (1.0 + (-v).exp());
                        x * s * (1.0 - s)
                    })
                    .collect();
                self.acc(a, &da, 1.0);
            }
            Op::Relu(a) => {
                let da: Vec<f64> = g
                    .iter()
                    .zip(self.value(a).data())
                    .map(|(x, v)| if *v > 0.0 { *x } else { 0.0 })
                    .collect();
                self.acc(a, &da, 1.0);
            }
            Op::SqrtGuarded(a) => {
                let da: Vec<f64> = g
                    .iter()
                    .zip(self.value(a).data())
                    .map(|(x, v)| x * 0.5 / (v + SQRT_GUARD).sqrt())
                    .collect();
                self.acc(a, &da, 1.0);
            }
            Op::ScalarMul(a, c) => {
                self.acc(a, g, c);
            }
            Op::MatMul(a, b) => {
                let (m, k) = (self.value(a).rows(), self.value(a).cols());
                let n = self.value(b).cols();
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                let mut da = vec![0.0; m * k];
                let mut db = vec![0.0; k * n];
                for i in 0..m {
                    for j in 0..n {
                        let gv = g[i * n + j];
                        if gv == 0.0 {
                            continue;
                        }
                        for p in 0..k {
                            da[i * k + p] += gv * bv[p * n + j];
                            db[p * n + j] += gv * av[i * k + p];
                        }
                    }
                }
                self.acc(a, &da, 1.0);
                self.acc(b, &db, 1.0);
            }
            Op::MatVec(w, x) => {
                let (m, k) = (self.value(w).rows(), self.value(w).cols());
                let (wv, xv) = (self.value(w).data(), self.value(x).data());
                let mut dw = vec![0.0; m * k];
                let mut dx = vec![0.0; k];
                for i in 0..m {
                    let gv = g[i];
                    if gv == 0.0 {
                        continue;
                    }
                    for p in 0..k {
                        dw[i * k + p] += gv * xv[p];
                        dx[p] += gv * wv[i * k + p];
                    }
                }
                self.acc(w, &dw, 1.0);
                self.acc(x, &dx, 1.0);
            }
            Op::AddRow(mat, vec) => {
                let c = self.value(vec).len();
                self.acc(mat, g, 1.0);
                let mut dv = vec![0.0; c];
                for (cell, gv) in g.iter().enumerate() {
                    dv[cell % c] += gv;
                }
                self.acc(vec, &dv, 1.0);
            }
            Op::BroadcastRows(vec) => {
                let c = self.value(vec).len();
                let mut dv = vec![0.0; c];
                for (cell, gv) in g.iter().enumerate() {
                    dv[cell % c] += gv;
                }
                self.acc(vec, &dv, 1.0);
            }
            Op::ConcatVec(a, b) => {
                let la = self.value(a).len();
                self.acc(a, &g[..la], 1.0);
                self.acc(b, &g[la..], 1.0);
            }
            Op::ConcatCols(a, b) => {
                let (r, ca) = (self.value(a).rows(), self.value(a).cols());
                let cb = self.value(b).cols();
                let mut da = vec![0.0; r * ca];
                let mut db = vec![0.0; r * cb];
                for i in 0..r {
                    let row = &g[i * (ca + cb)..(i + 1) * (ca + cb)];
                    da[i * ca..(i + 1) * ca].copy_from_slice(&row[..ca]);
                    db[i * cb..(i + 1) * cb].copy_from_slice(&row[ca..]);
                }
                self.acc(a, &da, 1.0);
                self.acc(b, &db, 1.0);
            }
            Op::SliceVec(a, start) => {
                self.acc_at(a, start, g);
            }
            Op::GatherRows(a, ref idx) => {
                let c = self.value(a).cols();
                if self.nodes[a.0].grad.is_some() {
                    let idx = Rc::clone(idx);
                    let ga = self.nodes[a.0].grad.as_mut().unwrap();
                    for (k, &row) in idx.iter().enumerate() {
                        for j in 0..c {
                            ga[row * c + j] += g[k * c + j];
                        }
                    }
                }
            }
            Op::GatherElems(a, ref idx) => {
                if self.nodes[a.0].grad.is_some() {
                    let idx = Rc::clone(idx);
                    let ga = self.nodes[a.0].grad.as_mut().unwrap();
                    for (k, &e) in idx.iter().enumerate() {
                        ga[e] += g[k];
                    }
                }
            }
            Op::ScatterMaxRows { src, ref winners } => {
                let c = self.value(src).cols();
                if self.nodes[src.0].grad.is_some() {
                    let winners = Rc::clone(winners);
                    let gs = self.nodes[src.0].grad.as_mut().unwrap();
                    for (cell, &w) in winners.iter().enumerate() {
                        if w != usize::MAX {
                            gs[w * c + cell % c] += g[cell];
                        }
                    }
                }
            }
            Op::RowSum(a) => {
                let (r, c) = (self.value(a).rows(), self.value(a).cols());
                let mut da = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        da[i * c + j] = g[i];
                    }
                }
                self.acc(a, &da, 1.0);
            }
            Op::Sum(a) => {
                let n = self.value(a).len();
                self.acc(a, &vec![g[0]; n], 1.0);
            }
            Op::Mean(a) => {
                let n = self.value(a).len().max(1);
                self.acc(a, &vec![g[0] / n as f64; n], 1.0);
            }
            Op::ScaleBy(a, s) => {
                let c = self.value(s).data()[0];
                self.acc(a, g, c);
                let ds: f64 = g.iter().zip(self.value(a).data()).map(|(x, y)| x * y).sum();
                self.acc(s, &[ds], 1.0);
            }
            Op::SparseMul(ref m, x) => {
                let w = self.value(x).cols();
                let mut dx = vec![0.0; self.value(x).len()];
                m.apply_transpose(g, w, &mut dx);
                self.acc(x, &dx, 1.0);
            }
            Op::Rot6d(a) => {
                let b = self.value(a).rows();
                let av = self.value(a).data();
                let mut da = vec![0.0; b * 6];
                for k in 0..b {
                    let v = &av[k * 6..(k + 1) * 6];
                    let go = &g[k * 9..(k + 1) * 9];
                    // Column gradients from the row-major layout.
                    let dr1 = [go[0], go[3], go[6]];
                    let dr2 = [go[1], go[4], go[7]];
                    let dr3 = [go[2], go[5], go[8]];
                    let dv = rot6d_backward(v, dr1, dr2, dr3);
                    for (slot, d) in da[k * 6..(k + 1) * 6].iter_mut().zip(dv) {
                        *slot += d;
                    }
                }
                self.acc(a, &da, 1.0);
            }
            Op::Lbs {
                ref model,
                rot,
                trans,
            } => {
                let b = model.bone_count();
                let mut dr = vec![0.0; b * 9];
                let mut dt = vec![0.0; b * 3];
                for i in 0..model.vertex_count() {
                    let p = model.rest_pose[i];
                    let pc = [p.x, p.y, p.z];
                    let gi = &g[i * 3..(i + 1) * 3];
                    for e in model.weights(i) {
                        let j = e.bone as usize;
                        for row in 0..3 {
                            let wg = e.weight * gi[row];
                            dt[j * 3 + row] += wg;
                            for col in 0..3 {
                                dr[j * 9 + 3 * row + col] += wg * pc[col];
                            }
                        }
                    }
                }
                self.acc(rot, &dr, 1.0);
                self.acc(trans, &dt, 1.0);
            }
        }
    }
}

type V3 = [f64; 3];

fn norm(v: V3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn axpy(a: V3, s: f64, b: V3) -> V3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Shared forward: regularized inputs, their intermediate vectors, and the
/// three orthonormal columns.
fn rot6d_parts(v: &[f64]) -> (V3, V3, V3, f64, f64, V3, V3, V3) {
    let a = [v[0] + ROT6D_EPS, v[1], v[2]];
    let bb = [v[3], v[4] + ROT6D_EPS, v[5]];
    let na = norm(a);
    let r1 = scale(a, 1.0 / na);
    let u = axpy(bb, -dot(r1, bb), r1);
    let nu = norm(u);
    let r2 = scale(u, 1.0 / nu);
    let r3 = cross(r1, r2);
    (a, bb, u, na, nu, r1, r2, r3)
}

fn rot6d_forward(v: &[f64]) -> (V3, V3, V3) {
    let (_, _, _, _, _, r1, r2, r3) = rot6d_parts(v);
    (r1, r2, r3)
}

fn rot6d_backward(v: &[f64], dr1: V3, dr2: V3, dr3: V3) -> [f64; 6] {
    let (_a, bb, _u, na, nu, r1, r2, _r3) = rot6d_parts(v);
    // r3 = r1 x r2 routes its gradient to both factors.
    let g2 = axpy_v(dr2, cross(dr3, r1));
    let g1_cross = cross(r2, dr3);
    // Through r2 = u / |u|.
    let du = scale(axpy(g2, -dot(r2, g2), r2), 1.0 / nu);
    // Through u = bb - (r1 . bb) r1.
    let dbb = axpy(du, -dot(r1, du), r1);
    let dr1_proj = axpy(scale(bb, -dot(r1, du)), -dot(r1, bb), du);
    let g1 = axpy_v(axpy_v(dr1, g1_cross), dr1_proj);
    // Through r1 = a / |a|.
    let da = scale(axpy(g1, -dot(r1, g1), r1), 1.0 / na);
    [da[0], da[1], da[2], dbb[0], dbb[1], dbb[2]]
}

fn axpy_v(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use vb_mesh::Vec3;
    use vb_skinning::WeightEntry;

    fn eye(n: usize) -> Tensor {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 1.0;
        }
        Tensor::matrix(n, n, d)
    }

    #[test]
    fn matmul_identity_is_identity_map() {
        let mut t = Tape::new();
        let i = t.constant(eye(3));
        let a = t.constant(Tensor::matrix(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let y = t.matmul(i, a).unwrap();
        assert_eq!(t.value(y), t.value(a));
    }

    #[test]
    fn tanh_gradient_at_zero_is_one() {
        let mut t = Tape::new();
        let x = t.param(Tensor::vector(vec![0.0; 4]));
        let y = t.tanh(x);
        let s = t.sum(y);
        t.backward(s).unwrap();
        for &g in t.grad(x).data() {
            assert!((g - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn diamond_accumulation_matches_hand_derivative() {
        // z = sum((x + x)^2) => dz/dx = 8x.
        let mut t = Tape::new();
        let x = t.param(Tensor::vector(vec![0.5, -1.5, 2.0]));
        let y = t.add(x, x).unwrap();
        let sq = t.mul(y, y).unwrap();
        let z = t.sum(sq);
        t.backward(z).unwrap();
        let g = t.grad(x);
        for (gi, xi) in g.data().iter().zip([0.5, -1.5, 2.0]) {
            assert!((gi - 8.0 * xi).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_names_the_op() {
        let mut t = Tape::new();
        let a = t.constant(Tensor::vector(vec![1.0, 2.0]));
        let b = t.constant(Tensor::vector(vec![1.0, 2.0, 3.0]));
        let err = t.add(a, b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("add"), "{msg}");
        assert!(msg.contains('2') && msg.contains('3'), "{msg}");
    }

    #[test]
    fn max_and_scatter_ties_prefer_first() {
        let mut t = Tape::new();
        let a = t.param(Tensor::vector(vec![1.0, 5.0]));
        let b = t.param(Tensor::vector(vec![1.0, 2.0]));
        let m = t.max_elem(a, b).unwrap();
        let s = t.sum(m);
        t.backward(s).unwrap();
        assert_eq!(t.grad(a).data(), &[1.0, 1.0]);
        assert_eq!(t.grad(b).data(), &[0.0, 0.0]);

        // Two identical source rows scattered to the same output row: the
        // first one wins the gradient.
        let mut t = Tape::new();
        let src = t.param(Tensor::matrix(2, 2, vec![3.0, 4.0, 3.0, 4.0]));
        let out = t.scatter_max_rows(src, &[0, 0], 1).unwrap();
        assert_eq!(t.value(out).data(), &[3.0, 4.0]);
        let s = t.sum(out);
        t.backward(s).unwrap();
        assert_eq!(t.grad(src).data(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn scatter_max_empty_rows_are_zero() {
        let mut t = Tape::new();
        let src = t.constant(Tensor::matrix(1, 2, vec![-5.0, -6.0]));
        let out = t.scatter_max_rows(src, &[2], 3).unwrap();
        assert_eq!(t.value(out).data(), &[0.0, 0.0, 0.0, 0.0, -5.0, -6.0]);
    }

    #[test]
    fn sparse_transpose_is_adjoint() {
        // <Mx, y> == <x, M^T y> for random-ish fixed data.
        let m = Rc::new(Sparse::from_triplets(
            3,
            4,
            &[
                (0, 0, 2.0),
                (0, 3, -1.0),
                (1, 1, 0.5),
                (2, 0, 1.0),
                (2, 2, 4.0),
                (2, 2, 1.0), // duplicate merges to 5.0
            ],
        ));
        let x: Vec<f64> = (0..4).map(|i| 0.3 * i as f64 - 0.4).collect();
        let y: Vec<f64> = (0..3).map(|i| 1.0 - 0.7 * i as f64).collect();
        let mut mx = vec![0.0; 3];
        m.apply(&x, 1, &mut mx);
        let mut mty = vec![0.0; 4];
        m.apply_transpose(&y, 1, &mut mty);
        let lhs: f64 = mx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&mty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn rot6d_canonical_input_gives_identity() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::matrix(1, 6, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]));
        let r = t.rot6d(x).unwrap();
        let expected = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in t.value(r).data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rot6d_outputs_are_orthonormal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut t = Tape::new();
        let n = 1000;
        let data: Vec<f64> = (0..n * 6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = t.constant(Tensor::matrix(n, 6, data));
        let r = t.rot6d(x).unwrap();
        for k in 0..n {
            let m = &t.value(r).data()[k * 9..(k + 1) * 9];
            let rm = nalgebra::Matrix3::from_row_slice(m);
            let err = (rm.transpose() * rm - nalgebra::Matrix3::identity()).abs().max();
            assert!(err <= 1e-9, "row {k}: orthonormality error {err}");
            assert!(rm.determinant() > 0.9, "row {k}: det {}", rm.determinant());
        }
    }

    fn two_bone_model() -> Rc<SkinModel> {
        let rest = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.5, 0.0),
            Vec3::new(3.0, 0.0, 1.0),
        ];
        let w = |pairs: &[(u16, f64)]| {
            pairs
                .iter()
                .map(|&(bone, weight)| WeightEntry { bone, weight })
                .collect::<Vec<_>>()
        };
        let weights = vec![
            w(&[(0, 1.0)]),
            w(&[(0, 0.75), (1, 0.25)]),
            w(&[(0, 0.5), (1, 0.5)]),
            w(&[(1, 1.0)]),
        ];
        Rc::new(SkinModel::new(rest, weights, 2, 4).unwrap())
    }

    fn identity_rot_rows(b: usize) -> Tensor {
        let mut d = vec![0.0; b * 9];
        for k in 0..b {
            d[k * 9] = 1.0;
            d[k * 9 + 4] = 1.0;
            d[k * 9 + 8] = 1.0;
        }
        Tensor::matrix(b, 9, d)
    }

    #[test]
    fn lbs_identity_reproduces_rest_pose() {
        let model = two_bone_model();
        let mut t = Tape::new();
        let rot = t.constant(identity_rot_rows(2));
        let trans = t.constant(Tensor::matrix(2, 3, vec![0.0; 6]));
        let out = t.lbs(&model, rot, trans).unwrap();
        let pts = t.value(out).to_points();
        for (p, r) in pts.iter().zip(&model.rest_pose) {
            assert!((p - r).norm() < 1e-12);
        }
    }

    #[test]
    fn lbs_translation_gradient_is_twice_vertex_sum() {
        // Single bone, all weights 1: d/dT sum(|v|^2) = 2 sum(v).
        let rest = vec![Vec3::new(0.5, -1.0, 2.0), Vec3::new(1.5, 0.25, -0.75)];
        let weights = vec![
            vec![WeightEntry { bone: 0, weight: 1.0 }],
            vec![WeightEntry { bone: 0, weight: 1.0 }],
        ];
        let model = Rc::new(SkinModel::new(rest.clone(), weights, 1, 4).unwrap());
        let mut t = Tape::new();
        let rot = t.constant(identity_rot_rows(1));
        let trans = t.param(Tensor::matrix(1, 3, vec![0.0; 3]));
        let v = t.lbs(&model, rot, trans).unwrap();
        let sq = t.mul(v, v).unwrap();
        let loss = t.sum(sq);
        t.backward(loss).unwrap();
        let g = t.grad(trans);
        let expect = 2.0 * (rest[0] + rest[1]);
        for (a, b) in g.data().iter().zip([expect.x, expect.y, expect.z]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lbs_unused_bone_gets_zero_gradient() {
        let model = two_bone_model();
        // Rebuild with vertex weights that never touch bone 1... simplest:
        // weights already include bone 1; instead check a 3-bone model where
        // bone 2 is unused.
        let rest = model.rest_pose.clone();
        let weights: Vec<Vec<WeightEntry>> = (0..rest.len())
            .map(|_| vec![WeightEntry { bone: 0, weight: 1.0 }])
            .collect();
        let model3 = Rc::new(SkinModel::new(rest, weights, 3, 4).unwrap());
        let mut t = Tape::new();
        let rot = t.param(identity_rot_rows(3));
        let trans = t.param(Tensor::matrix(3, 3, vec![0.1; 9]));
        let v = t.lbs(&model3, rot, trans).unwrap();
        let loss = t.sum(v);
        t.backward(loss).unwrap();
        let gr = t.grad(rot);
        let gt = t.grad(trans);
        assert!(gr.data()[9..27].iter().all(|&x| x == 0.0));
        assert!(gt.data()[3..9].iter().all(|&x| x == 0.0));
        assert!(gt.data()[..3].iter().any(|&x| x != 0.0));
    }

    #[test]
    fn backward_twice_gives_identical_gradients() {
        let mut t = Tape::new();
        let x = t.param(Tensor::vector(vec![0.3, -0.8, 1.2]));
        let y = t.tanh(x);
        let z = t.mul(y, y).unwrap();
        let s = t.sum(z);
        t.backward(s).unwrap();
        let g1 = t.grad(x);
        t.backward(s).unwrap();
        let g2 = t.grad(x);
        assert_eq!(g1.data(), g2.data());
    }
}
