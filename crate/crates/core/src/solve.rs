//! Sparse symmetric positive (semi)definite solves for the Newton step.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering of a symmetric pattern given as adjacency
/// lists. Keeps the Cholesky factor banded on mesh Laplacians.
fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (adjacency[v].len(), v));
    for &start in &by_degree {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| (adjacency[w].len(), w));
            for w in next {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Solves `A x = b` for a symmetric matrix given by (row, col, value)
/// triplets; duplicates are summed.
///
/// With `singular_constant` the matrix is assumed to have the constant
/// vector as its null space (closed-mesh Laplacian); one unknown is grounded
/// and the returned solution is shifted to zero mean.
pub(crate) fn solve_symmetric(
    n: usize,
    triplets: &[(usize, usize, f64)],
    rhs: &[f64],
    singular_constant: bool,
) -> Result<Vec<f64>> {
    assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut adjacency = vec![Vec::new(); n];
    for &(i, j, _) in triplets {
        if i != j {
            adjacency[i].push(j);
        }
    }
    for a in &mut adjacency {
        a.sort_unstable();
        a.dedup();
    }
    let mut order = reverse_cuthill_mckee(&adjacency);
    // the grounded unknown is dropped from the end of the ordering
    if singular_constant {
        order.pop();
    }
    let m = order.len();
    let mut position = vec![usize::MAX; n];
    for (p, &v) in order.iter().enumerate() {
        position[v] = p;
    }

    let mut coo = CooMatrix::new(m, m);
    for &(i, j, value) in triplets {
        let (pi, pj) = (position[i], position[j]);
        if pi != usize::MAX && pj != usize::MAX {
            coo.push(pi, pj, value);
        }
    }
    let csc = CscMatrix::from(&coo);
    let factor = CscCholesky::factor(&csc)
        .map_err(|e| Error::SolveFailed(format!("cholesky factorization: {e}")))?;
    let b = DMatrix::from_iterator(m, 1, order.iter().map(|&v| rhs[v]));
    let x = factor.solve(&b);

    let mut out = vec![0.0; n];
    for (p, &v) in order.iter().enumerate() {
        out[v] = x[(p, 0)];
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolveFailed("non-finite solution".into()));
    }
    if singular_constant {
        let mean = out.iter().sum::<f64>() / n as f64;
        for v in &mut out {
            *v -= mean;
        }
    }
    Ok(out)
}
