//! Exact linear assignment (Hungarian algorithm with potentials, `O(k^3)`).

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignmentError {
    #[error("cost matrix must be nonempty")]
    Empty,
    #[error("cost matrix must be square: row {row} has {found} entries, expected {expected}")]
    NotSquare {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("cost entry ({0}, {1}) is negative or not finite")]
    BadEntry(usize, usize),
}

/// Square matrix of finite, nonnegative costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    k: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, AssignmentError> {
        let k = rows.len();
        if k == 0 {
            return Err(AssignmentError::Empty);
        }
        let mut data = Vec::with_capacity(k * k);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(AssignmentError::NotSquare {
                    row: i,
                    expected: k,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Self::from_row_major(k, data)
    }

    pub fn from_row_major(k: usize, data: Vec<f64>) -> Result<Self, AssignmentError> {
        if k == 0 {
            return Err(AssignmentError::Empty);
        }
        assert_eq!(data.len(), k * k, "row-major buffer has wrong length");
        if let Some(idx) = data.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(AssignmentError::BadEntry(idx / k, idx % k));
        }
        Ok(Self { k, data })
    }

    /// Builds `k x k` costs from a function of `(row, col)`.
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, AssignmentError> {
        let data = (0..k * k).map(|idx| f(idx / k, idx % k)).collect();
        Self::from_row_major(k, data)
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    /// Cost of `perm`, summed in row order.
    pub fn cost_of(&self, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }
}

/// Optimal assignment: `perm[i]` is the column given to row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub value: f64,
    pub perm: Vec<usize>,
}

struct Solution {
    perm: Vec<usize>,
    row_pot: Vec<f64>,
    col_pot: Vec<f64>,
}

// Shortest augmenting path form of the Hungarian method. Potentials keep
// `c(i, j) - row_pot[i] - col_pot[j] >= 0`, with equality on matched pairs.
fn hungarian(c: &CostMatrix) -> Solution {
    let k = c.k;
    let inf = f64::INFINITY;
    // 1-based with a virtual column 0, as in the classic formulation.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut row_of_col = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = c.get(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; k];
    for j in 1..=k {
        perm[row_of_col[j] - 1] = j - 1;
    }
    Solution {
        perm,
        row_pot: u[1..].to_vec(),
        col_pot: v[1..].to_vec(),
    }
}

/// Optimal assignment value only; the fast path used by the tree distance.
pub fn assignment_value(c: &CostMatrix) -> f64 {
    if c.k == 1 {
        return c.data[0];
    }
    c.cost_of(&hungarian(c).perm)
}

/// Minimum-cost assignment. Among optimal permutations the lexicographically
/// smallest is returned: with optimal potentials fixed, a permutation is
/// optimal iff it only uses zero-reduced-cost pairs, so rows are matched
/// greedily to their smallest tight column that still leaves a perfect
/// matching on the tight pairs.
pub fn assignment_min_cost(c: &CostMatrix) -> Assignment {
    let k = c.k;
    let sol = hungarian(c);
    let scale = c.data.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let tol = 1e-11 * scale;
    let tight: Vec<Vec<bool>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| c.get(i, j) - sol.row_pot[i] - sol.col_pot[j] <= tol)
                .collect()
        })
        .collect();

    let mut perm = vec![usize::MAX; k];
    let mut col_used = vec![false; k];
    for i in 0..k {
        let chosen = (0..k).find(|&j| {
            if col_used[j] || !tight[i][j] {
                return false;
            }
            col_used[j] = true;
            let ok = has_perfect_matching(&tight, i + 1, &col_used);
            col_used[j] = false;
            ok
        });
        // The Hungarian matching itself is tight, so a choice always exists;
        // fall back to it if rounding ever says otherwise.
        let Some(j) = chosen else {
            return Assignment {
                value: c.cost_of(&sol.perm),
                perm: sol.perm,
            };
        };
        perm[i] = j;
        col_used[j] = true;
    }
    Assignment {
        value: c.cost_of(&perm),
        perm,
    }
}

// Kuhn's augmenting paths on rows `first_row..k` against unused columns.
fn has_perfect_matching(tight: &[Vec<bool>], first_row: usize, col_used: &[bool]) -> bool {
    let k = tight.len();
    let mut match_col: Vec<Option<usize>> = vec![None; k];
    fn augment(
        row: usize,
        tight: &[Vec<bool>],
        col_used: &[bool],
        seen: &mut [bool],
        match_col: &mut [Option<usize>],
    ) -> bool {
        for j in 0..tight.len() {
            if tight[row][j] && !col_used[j] && !seen[j] {
                seen[j] = true;
                if match_col[j].is_none_or(|r| augment(r, tight, col_used, seen, match_col)) {
                    match_col[j] = Some(row);
                    return true;
                }
            }
        }
        false
    }
    (first_row..k).all(|row| {
        let mut seen = vec![false; k];
        augment(row, tight, col_used, &mut seen, &mut match_col)
    })
}
