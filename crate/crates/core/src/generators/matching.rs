use crate::error::{Error, Result};
use crate::geometry::Point;

/// Minimum-cost perfect matching between two equal-size point sets under
/// exact Euclidean cost.
///
/// Returns `assign` with `a[i]` matched to `b[assign[i]]`, and the total cost.
/// Uses the O(n³) shortest-augmenting-path form of the Hungarian method.
pub fn min_cost_matching(a: &[Point], b: &[Point]) -> Result<(Vec<usize>, f64)> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "matching needs equal set sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let cost = |i: usize, j: usize| a[i].euclid(&b[j]);

    // 1-based potentials; column 0 is a virtual start
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[row_of[j] - 1] = j - 1;
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
    Ok((assign, total))
}
