//! Central finite-difference gradient verification.

use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vb_mesh::Vec3;
use vb_skinning::{SkinModel, WeightEntry};

use crate::{AutodiffError, Sparse, Tape, Tensor, Var};

/// Default perturbation for [`gradient_check`].
pub const DEFAULT_STEP: f64 = 1e-5;

/// Compares analytic gradients against central finite differences.
///
/// `build` reconstructs the scalar loss from the given inputs on a fresh
/// tape; it runs once for the analytic pass and twice per input scalar for
/// the numeric one. Returns the worst relative error
/// |a − n| / (|a| + |n| + 1e-8) over every input element.
pub fn gradient_check<F>(inputs: &[Tensor], build: F, h: f64) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let loss = build(&mut tape, &vars)?;
    tape.backward(loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| tape.grad(v)).collect();

    let eval = |which: usize, elem: usize, delta: f64| -> Result<f64, AutodiffError> {
        let mut t = Tape::new();
        let vars: Vec<Var> = inputs
            .iter()
            .enumerate()
            .map(|(j, tensor)| {
                let mut tensor = tensor.clone();
                if j == which {
                    tensor.data_mut()[elem] += delta;
                }
                t.constant(tensor)
            })
            .collect();
        let l = build(&mut t, &vars)?;
        Ok(t.value(l).item())
    };

    let mut worst = 0.0_f64;
    for (i, input) in inputs.iter().enumerate() {
        for k in 0..input.len() {
            let numeric = (eval(i, k, h)? - eval(i, k, -h)?) / (2.0 * h);
            let a = analytic[i].data()[k];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

/// A named check case — `(op, inputs, scalar-loss builder)` — in the form
/// accepted by [`gradient_check`].
pub type OpCheck = (
    &'static str,
    Vec<Tensor>,
    Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>>,
);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One entry per differentiable core op. Inputs are chosen away from
/// the non-smooth sets (relu/max kinks, division near zero) so central
/// differences converge. Harnesses elsewhere in the workspace sweep this
/// list to re-verify the tape after any change.
pub fn op_check_cases() -> Vec<OpCheck> {
    let mut r = rng(77);
    let v4 = |r: &mut ChaCha8Rng| Tensor::uniform(&[4], 1.5, r);
    let m34 = |r: &mut ChaCha8Rng| Tensor::uniform(&[3, 4], 1.0, r);
    let mut checks: Vec<OpCheck> = Vec::new();

    checks.push((
        "add",
        vec![v4(&mut r), v4(&mut r)],
        Box::new(|t, v| {
            let y = t.add(v[0], v[1])?;
            Ok(t.sum(y))
        }),
    ));
    checks.push((
        "sub",
        vec![v4(&mut r), v4(&mut r)],
        Box::new(|t, v| {
            let y = t.sub(v[0], v[1])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "mul",
        vec![v4(&mut r), v4(&mut r)],
        Box::new(|t, v| {
            let y = t.mul(v[0], v[1])?;
            Ok(t.sum(y))
        }),
    ));
    checks.push((
        "div",
        vec![v4(&mut r), Tensor::vector(vec![1.3, -1.7, 2.1, 1.1])],
        Box::new(|t, v| {
            let y = t.div(v[0], v[1])?;
            Ok(t.sum(y))
        }),
    ));
    checks.push((
        "max_elem",
        vec![
            Tensor::vector(vec![0.4, -0.9, 1.2, 0.1]),
            Tensor::vector(vec![-0.3, 0.8, 0.7, 0.6]),
        ],
        Box::new(|t, v| {
            let y = t.max_elem(v[0], v[1])?;
            Ok(t.sum(y))
        }),
    ));
    checks.push((
        "exp",
        vec![v4(&mut r)],
        Box::new(|t, v| {
            let y = t.exp(v[0]);
            Ok(t.sum(y))
        }),
    ));
    checks.push((
        "tanh",
        vec![v4(&mut r)],
        Box::new(|t, v| {
            let y = t.tanh(v[0]);
            Ok(t.sum(y))
        }),
    ));
    checks.push((
        "sigmoid",
        vec![v4(&mut r)],
        Box::new(|t, v| {
            let y = t.sigmoid(v[0]);
            Ok(t.sum(y))
        }),
    ));
    checks.push((
        "relu",
        vec![Tensor::vector(vec![0.6, -0.8, 1.4, -0.2])],
        Box::new(|t, v| {
            let y = t.relu(v[0]);
            Ok(t.sum(y))
        }),
    ));
    checks.push((
        "sqrt_guarded",
        vec![Tensor::vector(vec![0.5, 1.2, 0.04, 2.5])],
        Box::new(|t, v| {
            let y = t.sqrt_guarded(v[0]);
            Ok(t.sum(y))
        }),
    ));
    checks.push((
        "scalar_mul",
        vec![v4(&mut r)],
        Box::new(|t, v| {
            let y = t.scalar_mul(v[0], -2.5);
            Ok(t.sum(y))
        }),
    ));
    checks.push((
        "matmul",
        vec![m34(&mut r), Tensor::uniform(&[4, 2], 1.0, &mut r)],
        Box::new(|t, v| {
            let y = t.matmul(v[0], v[1])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "matvec",
        vec![m34(&mut r), v4(&mut r)],
        Box::new(|t, v| {
            let y = t.matvec(v[0], v[1])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "add_row",
        vec![m34(&mut r), v4(&mut r)],
        Box::new(|t, v| {
            let y = t.add_row(v[0], v[1])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "broadcast_rows",
        vec![v4(&mut r)],
        Box::new(|t, v| {
            let y = t.broadcast_rows(v[0], 3)?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "concat_vec",
        vec![v4(&mut r), v4(&mut r)],
        Box::new(|t, v| {
            let y = t.concat_vec(v[0], v[1])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "concat_cols",
        vec![m34(&mut r), Tensor::uniform(&[3, 2], 1.0, &mut r)],
        Box::new(|t, v| {
            let y = t.concat_cols(v[0], v[1])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "slice_vec",
        vec![v4(&mut r)],
        Box::new(|t, v| {
            let y = t.slice_vec(v[0], 1, 2)?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "transpose",
        vec![m34(&mut r)],
        Box::new(|t, v| {
            let y = t.transpose(v[0])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "gather_rows",
        vec![m34(&mut r)],
        Box::new(|t, v| {
            let y = t.gather_rows(v[0], Rc::new(vec![2, 0, 2]))?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "gather_elems",
        vec![v4(&mut r)],
        Box::new(|t, v| {
            let y = t.gather_elems(v[0], Rc::new(vec![3, 3, 1, 0]), &[2, 2])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "scatter_max_rows",
        // Distinct values so the winners are stable under ±h.
        vec![Tensor::matrix(
            4,
            2,
            vec![0.9, -0.4, 0.1, 0.7, -0.6, 0.2, 0.5, -0.1],
        )],
        Box::new(|t, v| {
            let y = t.scatter_max_rows(v[0], &[0, 1, 0, 1], 2)?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "row_sum",
        vec![m34(&mut r)],
        Box::new(|t, v| {
            let y = t.row_sum(v[0])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push(("sum", vec![v4(&mut r)], Box::new(|t, v| Ok(t.sum(v[0])))));
    checks.push((
        "mean",
        vec![m34(&mut r)],
        Box::new(|t, v| {
            let sq = t.mul(v[0], v[0])?;
            Ok(t.mean(sq))
        }),
    ));
    checks.push((
        "scale_by",
        vec![v4(&mut r), Tensor::scalar(0.7)],
        Box::new(|t, v| {
            let y = t.scale_by(v[0], v[1])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "sparse_mul",
        vec![Tensor::uniform(&[3, 2], 1.0, &mut r)],
        Box::new(|t, v| {
            let lap = Rc::new(Sparse::from_triplets(
                3,
                3,
                &[
                    (0, 0, -1.0),
                    (0, 1, 1.0),
                    (1, 0, 0.5),
                    (1, 1, -1.0),
                    (1, 2, 0.5),
                    (2, 1, 1.0),
                    (2, 2, -1.0),
                ],
            ));
            let y = t.sparse_mul(&lap, v[0])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks.push((
        "rot6d",
        vec![Tensor::matrix(
            2,
            6,
            vec![
                0.9, 0.2, -0.3, 0.1, 1.1, 0.4, -0.5, 0.8, 0.3, 0.7, -0.2, 0.9,
            ],
        )],
        Box::new(|t, v| {
            let y = t.rot6d(v[0])?;
            let w = t.constant(Tensor::uniform(&[2, 9], 1.0, &mut rng(13)));
            let p = t.mul(y, w)?;
            Ok(t.sum(p))
        }),
    ));
    checks.push((
        "lbs",
        vec![
            Tensor::uniform(&[2, 9], 1.0, &mut r),
            Tensor::uniform(&[2, 3], 1.0, &mut r),
        ],
        Box::new(|t, v| {
            let model = four_vertex_rig();
            let y = t.lbs(&model, v[0], v[1])?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq))
        }),
    ));
    checks
}

fn four_vertex_rig() -> Rc<SkinModel> {
    let rest = vec![
        Vec3::new(0.0, 0.1, 0.0),
        Vec3::new(1.0, -0.2, 0.3),
        Vec3::new(2.0, 0.5, -0.4),
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
        w(&[(0, 0.7), (1, 0.3)]),
        w(&[(0, 0.4), (1, 0.6)]),
        w(&[(1, 1.0)]),
    ];
    Rc::new(SkinModel::new(rest, weights, 2, 4).unwrap())
}
