//! Neural building blocks on top of the tape: dense layers, shared-weight
//! MLPs, a GRU cell, and EdgeConv graph convolution.
//!
//! Layers own no tensors — they are *views* into a [`ParameterSet`] by name
//! prefix, so the same layer object drives both freshly initialized and
//! checkpoint-loaded parameters.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{AutodiffError, ParameterSet, Tape, Tensor, Var, VarMap};

/// Uniform in ±sqrt(1/fan_in).
pub fn scaled_uniform(rows: usize, cols: usize, fan_in: usize, rng: &mut impl Rng) -> Tensor {
    let limit = (1.0 / fan_in as f64).sqrt();
    Tensor::uniform(&[rows, cols], limit, rng)
}

/// Random orthogonal matrix: QR of a standard-normal draw with column signs
/// fixed so the factorization is unique (diagonal of R nonnegative).
pub fn orthogonal(n: usize, rng: &mut impl Rng) -> Tensor {
    let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    let mut data = vec![0.0; n * n];
    for j in 0..n {
        let sign = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            data[i * n + j] = sign * q[(i, j)];
        }
    }
    Tensor::matrix(n, n, data)
}

fn lookup(vars: &VarMap, name: &str) -> Result<Var, AutodiffError> {
    vars.get(name)
        .copied()
        .ok_or_else(|| AutodiffError::MissingParam(name.to_string()))
}

/// Fully connected layer `y = W x + b` with `W: [out, in]`.
pub struct Dense {
    prefix: String,
    pub in_size: usize,
    pub out_size: usize,
}

impl Dense {
    pub fn init(
        params: &mut ParameterSet,
        prefix: &str,
        in_size: usize,
        out_size: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, AutodiffError> {
        params.insert(
            &format!("{prefix}.w"),
            scaled_uniform(out_size, in_size, in_size, rng),
            true,
        )?;
        params.insert(&format!("{prefix}.b"), Tensor::zeros(&[out_size]), true)?;
        Ok(Dense::expect(prefix, in_size, out_size))
    }

    /// Binds to already-present parameters (e.g. after checkpoint load).
    pub fn expect(prefix: &str, in_size: usize, out_size: usize) -> Self {
        Dense {
            prefix: prefix.to_string(),
            in_size,
            out_size,
        }
    }

    pub fn forward_vec(
        &self,
        tape: &mut Tape,
        vars: &VarMap,
        x: Var,
    ) -> Result<Var, AutodiffError> {
        let w = lookup(vars, &format!("{}.w", self.prefix))?;
        let b = lookup(vars, &format!("{}.b", self.prefix))?;
        let wx = tape.matvec(w, x)?;
        tape.add(wx, b)
    }

    /// Batched over rows: x [n, in] -> [n, out].
    pub fn forward_rows(
        &self,
        tape: &mut Tape,
        vars: &VarMap,
        x: Var,
    ) -> Result<Var, AutodiffError> {
        let w = lookup(vars, &format!("{}.w", self.prefix))?;
        let b = lookup(vars, &format!("{}.b", self.prefix))?;
        let wt = tape.transpose(w)?;
        let xw = tape.matmul(x, wt)?;
        tape.add_row(xw, b)
    }
}

/// Stack of dense layers with ReLU between them; the last layer is linear.
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `sizes` = [in, hidden..., out]; layer k is named `{prefix}.{k}`.
    pub fn init(
        params: &mut ParameterSet,
        prefix: &str,
        sizes: &[usize],
        rng: &mut impl Rng,
    ) -> Result<Self, AutodiffError> {
        assert!(sizes.len() >= 2, "an MLP needs at least one layer");
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for k in 0..sizes.len() - 1 {
            layers.push(Dense::init(
                params,
                &format!("{prefix}.{k}"),
                sizes[k],
                sizes[k + 1],
                rng,
            )?);
        }
        Ok(Mlp { layers })
    }

    pub fn expect(prefix: &str, sizes: &[usize]) -> Self {
        let layers = (0..sizes.len() - 1)
            .map(|k| Dense::expect(&format!("{prefix}.{k}"), sizes[k], sizes[k + 1]))
            .collect();
        Mlp { layers }
    }

    pub fn in_size(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_size)
    }

    pub fn out_size(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_size)
    }

    pub fn forward_rows(
        &self,
        tape: &mut Tape,
        vars: &VarMap,
        mut x: Var,
    ) -> Result<Var, AutodiffError> {
        for (k, layer) in self.layers.iter().enumerate() {
            x = layer.forward_rows(tape, vars, x)?;
            if k + 1 < self.layers.len() {
                x = tape.relu(x);
            }
        }
        Ok(x)
    }

    pub fn forward_vec(
        &self,
        tape: &mut Tape,
        vars: &VarMap,
        mut x: Var,
    ) -> Result<Var, AutodiffError> {
        for (k, layer) in self.layers.iter().enumerate() {
            x = layer.forward_vec(tape, vars, x)?;
            if k + 1 < self.layers.len() {
                x = tape.relu(x);
            }
        }
        Ok(x)
    }
}

/// Gated recurrent unit. Gate matrices are [hidden, input+hidden]: the
/// input block is scaled-uniform, the recurrent block orthogonal, biases
/// zero.
pub struct GruCell {
    prefix: String,
    pub input_size: usize,
    pub hidden_size: usize,
}

impl GruCell {
    pub fn init(
        params: &mut ParameterSet,
        prefix: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, AutodiffError> {
        for gate in ["z", "r", "h"] {
            let w = gate_matrix(hidden_size, input_size, rng);
            params.insert(&format!("{prefix}.w_{gate}"), w, true)?;
            params.insert(
                &format!("{prefix}.b_{gate}"),
                Tensor::zeros(&[hidden_size]),
                true,
            )?;
        }
        Ok(GruCell::expect(prefix, input_size, hidden_size))
    }

    pub fn expect(prefix: &str, input_size: usize, hidden_size: usize) -> Self {
        GruCell {
            prefix: prefix.to_string(),
            input_size,
            hidden_size,
        }
    }

    pub fn zero_state(&self) -> Tensor {
        Tensor::zeros(&[self.hidden_size])
    }

    /// z = σ(W_z[x,h]+b_z), r = σ(W_r[x,h]+b_r),
    /// h̃ = tanh(W_h[x, r⊙h]+b_h), h' = (1−z)⊙h + z⊙h̃.
    pub fn forward(
        &self,
        tape: &mut Tape,
        vars: &VarMap,
        x: Var,
        h: Var,
    ) -> Result<Var, AutodiffError> {
        let gate = |name: &str| -> Result<(Var, Var), AutodiffError> {
            Ok((
                lookup(vars, &format!("{}.w_{name}", self.prefix))?,
                lookup(vars, &format!("{}.b_{name}", self.prefix))?,
            ))
        };
        let xh = tape.concat_vec(x, h)?;
        let (wz, bz) = gate("z")?;
        let (wr, br) = gate("r")?;
        let (wh, bh) = gate("h")?;

        let z_pre = tape.matvec(wz, xh)?;
        let z_pre = tape.add(z_pre, bz)?;
        let z = tape.sigmoid(z_pre);

        let r_pre = tape.matvec(wr, xh)?;
        let r_pre = tape.add(r_pre, br)?;
        let r = tape.sigmoid(r_pre);

        let rh = tape.mul(r, h)?;
        let xrh = tape.concat_vec(x, rh)?;
        let c_pre = tape.matvec(wh, xrh)?;
        let c_pre = tape.add(c_pre, bh)?;
        let c = tape.tanh(c_pre);

        let zh = tape.mul(z, h)?;
        let keep = tape.sub(h, zh)?;
        let zc = tape.mul(z, c)?;
        tape.add(keep, zc)
    }
}

fn gate_matrix(hidden: usize, input: usize, rng: &mut impl Rng) -> Tensor {
    let fan_in = input + hidden;
    let left = Tensor::uniform(&[hidden, input], (1.0 / fan_in as f64).sqrt(), rng);
    let right = orthogonal(hidden, rng);
    let mut data = Vec::with_capacity(hidden * fan_in);
    for i in 0..hidden {
        data.extend_from_slice(&left.data()[i * input..(i + 1) * input]);
        data.extend_from_slice(&right.data()[i * hidden..(i + 1) * hidden]);
    }
    Tensor::matrix(hidden, fan_in, data)
}

/// Directed edge structure for EdgeConv over a fixed mesh.
///
/// Undirected input edges expand to both directions; nodes without any
/// incident edge get a self-edge, which makes the aggregation fall back to
/// MLP(x ‖ 0) there. Edges are sorted by (center, neighbor) so max-tie
/// resolution ("first occurrence") is well defined.
pub struct EdgeIndex {
    pub node_count: usize,
    centers: Vec<usize>,
    neighbors: Vec<usize>,
}

impl EdgeIndex {
    pub fn new(node_count: usize, undirected: &[(u32, u32)]) -> Self {
        let mut pairs = Vec::with_capacity(undirected.len() * 2);
        for &(a, b) in undirected {
            let (a, b) = (a as usize, b as usize);
            assert!(a < node_count && b < node_count, "edge ({a},{b}) out of range");
            pairs.push((a, b));
            pairs.push((b, a));
        }
        let mut has_edge = vec![false; node_count];
        for &(c, _) in &pairs {
            has_edge[c] = true;
        }
        for (i, seen) in has_edge.into_iter().enumerate() {
            if !seen {
                pairs.push((i, i));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        EdgeIndex {
            node_count,
            centers: pairs.iter().map(|p| p.0).collect(),
            neighbors: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.centers.len()
    }
}

/// EdgeConv: h'_i = max over j ∈ N(i) of MLP(x_i ‖ (x_j − x_i)),
/// max taken per output channel.
pub fn edge_conv(
    tape: &mut Tape,
    vars: &VarMap,
    mlp: &Mlp,
    index: &EdgeIndex,
    x: Var,
) -> Result<Var, AutodiffError> {
    let shape = tape.value(x).shape();
    if shape.len() != 2 || shape[0] != index.node_count {
        return Err(AutodiffError::shape(
            "edge_conv",
            format!("{shape:?} for {} nodes", index.node_count),
        ));
    }
    let centers = std::rc::Rc::new(index.centers.clone());
    let neighbors = std::rc::Rc::new(index.neighbors.clone());
    let xc = tape.gather_rows(x, centers)?;
    let xn = tape.gather_rows(x, neighbors)?;
    let diff = tape.sub(xn, xc)?;
    let feat = tape.concat_cols(xc, diff)?;
    let per_edge = mlp.forward_rows(tape, vars, feat)?;
    tape.scatter_max_rows(per_edge, &index.centers, index.node_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_matrix_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = orthogonal(8, &mut rng);
        let m = nalgebra::DMatrix::from_row_slice(8, 8, q.data());
        let err = (&m * m.transpose() - nalgebra::DMatrix::identity(8, 8))
            .abs()
            .max();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn gru_zero_weights_halve_unit_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = ParameterSet::new();
        let cell = GruCell::init(&mut params, "gru", 3, 4, &mut rng).unwrap();
        for gate in ["z", "r", "h"] {
            let shape = [4usize, 7];
            params
                .set(&format!("gru.w_{gate}"), Tensor::zeros(&shape))
                .unwrap();
        }
        let mut tape = Tape::new();
        let vars = params.stage_into(&mut tape);
        let x = tape.constant(Tensor::vector(vec![0.3, -0.7, 0.1]));
        let h = tape.constant(Tensor::vector(vec![1.0; 4]));
        let h2 = cell.forward(&mut tape, &vars, x, h).unwrap();
        for &v in tape.value(h2).data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn gru_ignores_input_when_input_columns_are_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut params = ParameterSet::new();
        let cell = GruCell::init(&mut params, "gru", 3, 4, &mut rng).unwrap();
        // Zero the input block of each gate, keep the recurrent block.
        for gate in ["z", "r", "h"] {
            let name = format!("gru.w_{gate}");
            let mut w = params.get(&name).unwrap().clone();
            for i in 0..4 {
                for j in 0..3 {
                    w.data_mut()[i * 7 + j] = 0.0;
                }
            }
            params.set(&name, w).unwrap();
        }
        let h0 = Tensor::vector(vec![0.2, -0.4, 0.6, -0.8]);
        let run = |x_val: Vec<f64>| {
            let mut tape = Tape::new();
            let vars = params.stage_into(&mut tape);
            let x = tape.constant(Tensor::vector(x_val));
            let h = tape.constant(h0.clone());
            let h2 = cell.forward(&mut tape, &vars, x, h).unwrap();
            tape.value(h2).data().to_vec()
        };
        assert_eq!(run(vec![0.0; 3]), run(vec![5.0, -2.0, 11.0]));
    }

    #[test]
    fn edge_conv_uniform_features_give_uniform_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = ParameterSet::new();
        let mlp = Mlp::init(&mut params, "ec", &[4, 5], &mut rng).unwrap();
        let index = EdgeIndex::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let mut tape = Tape::new();
        let vars = params.stage_into(&mut tape);
        let x = tape.constant(Tensor::matrix(4, 2, vec![[0.7, -0.2]; 4].concat()));
        let y = edge_conv(&mut tape, &vars, &mlp, &index, x).unwrap();
        let out = tape.value(y).data();
        for i in 1..4 {
            assert_eq!(out[..5], out[i * 5..(i + 1) * 5]);
        }
    }

    #[test]
    fn edge_conv_isolated_node_uses_zero_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut params = ParameterSet::new();
        let mlp = Mlp::init(&mut params, "ec", &[2, 3], &mut rng).unwrap();
        // Single node, no edges: declared fallback MLP(x ‖ 0).
        let index = EdgeIndex::new(1, &[]);
        assert_eq!(index.edge_count(), 1);
        let mut tape = Tape::new();
        let vars = params.stage_into(&mut tape);
        let x = tape.constant(Tensor::matrix(1, 1, vec![0.9]));
        let y = edge_conv(&mut tape, &vars, &mlp, &index, x).unwrap();

        let expect_in = tape.constant(Tensor::matrix(1, 2, vec![0.9, 0.0]));
        let expect = mlp.forward_rows(&mut tape, &vars, expect_in).unwrap();
        assert_eq!(tape.value(y).data(), tape.value(expect).data());
    }

    #[test]
    fn edge_conv_path_graph_matches_hand_result() {
        // Identity-like MLP keeps (x_i, x_j - x_i); features 1, 2, 4 on a
        // path 0-1-2. Max over neighbors per channel:
        //   node 0: (1, 1)   node 1: (2, 2)   node 2: (4, -2)
        let mut params = ParameterSet::new();
        params
            .insert(
                "ec.0.w",
                Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]),
                true,
            )
            .unwrap();
        params.insert("ec.0.b", Tensor::zeros(&[2]), true).unwrap();
        let mlp = Mlp::expect("ec", &[2, 2]);
        let index = EdgeIndex::new(3, &[(0, 1), (1, 2)]);
        let mut tape = Tape::new();
        let vars = params.stage_into(&mut tape);
        let x = tape.constant(Tensor::matrix(3, 1, vec![1.0, 2.0, 4.0]));
        let y = edge_conv(&mut tape, &vars, &mlp, &index, x).unwrap();
        let expected = [1.0, 1.0, 2.0, 2.0, 4.0, -2.0];
        assert_eq!(tape.value(y).data(), &expected);
    }

    #[test]
    fn dense_rows_and_vec_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut params = ParameterSet::new();
        let layer = Dense::init(&mut params, "d", 3, 2, &mut rng).unwrap();
        let mut tape = Tape::new();
        let vars = params.stage_into(&mut tape);
        let xv = tape.constant(Tensor::vector(vec![0.1, 0.2, 0.3]));
        let xm = tape.constant(Tensor::matrix(1, 3, vec![0.1, 0.2, 0.3]));
        let yv = layer.forward_vec(&mut tape, &vars, xv).unwrap();
        let ym = layer.forward_rows(&mut tape, &vars, xm).unwrap();
        for (a, b) in tape.value(yv).data().iter().zip(tape.value(ym).data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
