use nalgebra::{DMatrix, DVector};

use crate::SkinningError;

/// Solves `min ‖Ax − b‖²` subject to `x ≥ 0` with the Lawson–Hanson
/// active-set method, operating on the normal equations `AᵀA x = Aᵀb`.
///
/// Intended for the small, well-conditioned systems that per-vertex skin
/// weight solves produce (a handful of columns). Returns
/// [`SkinningError::Singular`] if a passive-set system cannot be factored
/// even with a small ridge — callers decide the fallback.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, SkinningError> {
    assert_eq!(a.nrows(), b.len(), "row count of A must match b");
    let n = a.ncols();
    let gram = a.transpose() * a;
    let rhs = a.transpose() * b;

    let tol = 1e-10 * (1.0 + rhs.amax());
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];

    // Each outer step adds one variable to the passive set; the inner loop
    // only removes variables, so 3n outer steps is a generous bound.
    for _ in 0..(3 * n + 3) {
        let w = &rhs - &gram * &x;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if !passive[i] && w[i] > tol && best.map_or(true, |(_, bw)| w[i] > bw) {
                best = Some((i, w[i]));
            }
        }
        let Some((j, _)) = best else { break };
        passive[j] = true;

        for _ in 0..=n {
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let z_p = solve_passive(&gram, &rhs, &idx)?;

            if z_p.iter().all(|&z| z > 0.0) {
                x.fill(0.0);
                for (k, &i) in idx.iter().enumerate() {
                    x[i] = z_p[k];
                }
                break;
            }

            // Step from x toward z until the first passive variable hits zero.
            let mut alpha = 1.0f64;
            let mut blocker = None;
            for (k, &i) in idx.iter().enumerate() {
                if z_p[k] <= 0.0 {
                    let denom = x[i] - z_p[k];
                    let step = if denom > 0.0 { x[i] / denom } else { 0.0 };
                    if step < alpha {
                        alpha = step;
                        blocker = Some(i);
                    }
                }
            }
            for (k, &i) in idx.iter().enumerate() {
                x[i] += alpha * (z_p[k] - x[i]);
                if x[i] < 1e-14 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if let Some(i) = blocker {
                x[i] = 0.0;
                passive[i] = false;
            }
        }
    }
    Ok(x)
}

/// Solves the normal system restricted to the passive columns `idx`.
fn solve_passive(
    gram: &DMatrix<f64>,
    rhs: &DVector<f64>,
    idx: &[usize],
) -> Result<DVector<f64>, SkinningError> {
    let m = idx.len();
    let mut g = DMatrix::<f64>::zeros(m, m);
    let mut c = DVector::<f64>::zeros(m);
    for (r, &i) in idx.iter().enumerate() {
        c[r] = rhs[i];
        for (s, &j) in idx.iter().enumerate() {
            g[(r, s)] = gram[(i, j)];
        }
    }
    // Cholesky doubles as the singularity check: a failed factorization
    // means genuinely dependent passive columns.
    g.cholesky()
        .map(|chol| chol.solve(&c))
        .ok_or(SkinningError::Singular)
}
