//! Minimum-cost perfect matching by the shortest-augmenting-path Hungarian
//! method with row/column potentials, O(d³).

use crate::error::{check_dim, EcrmError, Result};
use crate::linalg::Matrix;

/// Returns `assignment[j] = k`, the column matched to row `j`.
pub fn solve_assignment(costs: &Matrix) -> Result<Vec<usize>> {
    let n = costs.nrows();
    check_dim(n, costs.ncols())?;
    if costs.as_slice().iter().any(|c| !c.is_finite()) {
        return Err(EcrmError::InvalidParameter("assignment costs must be finite".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // 1-based indexing; column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        matched_row[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let i0 = matched_row[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = costs[(i0 - 1, col - 1)] - u[i0] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[matched_row[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if matched_row[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            matched_row[col0] = matched_row[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for col in 1..=n {
        assignment[matched_row[col] - 1] = col - 1;
    }
    Ok(assignment)
}

/// `sum_j costs[j, assignment[j]]`.
pub fn assignment_cost(costs: &Matrix, assignment: &[usize]) -> f64 {
    assignment.iter().enumerate().map(|(j, &k)| costs[(j, k)]).sum()
}
