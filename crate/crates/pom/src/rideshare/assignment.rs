//! Exact maximum-utility assignment via shortest augmenting paths
//! (Jonker-Volgenant style, O(n^2 m) with n rows <= m columns).

/// Solves the max-total-utility one-to-one assignment for a dense
/// `rows x cols` utility matrix (row-major). Returns, for every row, the
/// assigned column, assigning all rows when `rows <= cols` and all columns
/// otherwise.
pub fn optimal_assignment(utilities: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    assert_eq!(utilities.len(), rows * cols, "matrix shape mismatch");
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows <= cols {
        let pairs = min_cost_rows(&to_cost(utilities), rows, cols);
        pairs.into_iter().enumerate().map(|(r, c)| (r, c)).collect()
    } else {
        // Transpose so the augmenting loop runs over the smaller side.
        let mut transposed = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                transposed[c * rows + r] = utilities[r * cols + c];
            }
        }
        let pairs = min_cost_rows(&to_cost(&transposed), cols, rows);
        let mut out: Vec<(usize, usize)> =
            pairs.into_iter().enumerate().map(|(c, r)| (r, c)).collect();
        out.sort_unstable();
        out
    }
}

/// Maximization becomes minimization against the matrix maximum.
fn to_cost(utilities: &[f64]) -> Vec<f64> {
    let max = utilities.iter().cloned().fold(0.0_f64, f64::max);
    utilities.iter().map(|&u| max - u).collect()
}

/// Column assigned to each row, minimizing total cost. Requires
/// `rows <= cols`; every cost must be finite.
fn min_cost_rows(cost: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    debug_assert!(rows <= cols);
    let at = |r: usize, c: usize| cost[r * cols + c];

    // Potentials for rows/columns; `owner[c]` is the row holding column c,
    // with a virtual column `cols` used as the augmenting start.
    let mut row_potential = vec![0.0_f64; rows];
    let mut col_potential = vec![0.0_f64; cols + 1];
    let mut owner = vec![usize::MAX; cols + 1];
    let mut parent = vec![0usize; cols + 1];

    for row in 0..rows {
        owner[cols] = row;
        let mut current = cols;
        let mut min_slack = vec![f64::INFINITY; cols];
        let mut visited = vec![false; cols + 1];

        // Dijkstra over reduced costs until a free column is reached.
        loop {
            visited[current] = true;
            let active_row = owner[current];
            let mut delta = f64::INFINITY;
            let mut next = cols;
            for c in 0..cols {
                if visited[c] {
                    continue;
                }
                let reduced = at(active_row, c) - row_potential[active_row] - col_potential[c];
                if reduced < min_slack[c] {
                    min_slack[c] = reduced;
                    parent[c] = current;
                }
                if min_slack[c] < delta {
                    delta = min_slack[c];
                    next = c;
                }
            }
            debug_assert!(delta.is_finite(), "costs must be finite");
            for c in 0..=cols {
                if visited[c] {
                    if owner[c] != usize::MAX {
                        row_potential[owner[c]] += delta;
                    }
                    col_potential[c] -= delta;
                } else {
                    min_slack[c] -= delta;
                }
            }
            current = next;
            if owner[current] == usize::MAX {
                break;
            }
        }

        // Augment along the recorded path.
        while current != cols {
            let prev = parent[current];
            owner[current] = owner[prev];
            current = prev;
        }
    }

    let mut assigned = vec![usize::MAX; rows];
    for c in 0..cols {
        if owner[c] != usize::MAX {
            assigned[owner[c]] = c;
        }
    }
    debug_assert!(assigned.iter().all(|&c| c != usize::MAX));
    assigned
}
