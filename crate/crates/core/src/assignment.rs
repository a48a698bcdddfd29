//! Minimum-cost bipartite matching on rectangular cost matrices.

use crate::error::{Error, Result};

/// Largest `min(rows, cols)` the exhaustive solver accepts.
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Dense row-major matrix of finite, non-negative costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::CostShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidCost {
                row: i / cols,
                col: i % cols,
                value: data[i],
            });
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CostMatrix::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn transposed(&self) -> CostMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        CostMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    fn check_non_empty(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::EmptyCostMatrix {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    /// `(row, col)` pairs sorted by row; exactly `min(rows, cols)` of them.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl AssignmentResult {
    fn from_pairs(costs: &CostMatrix, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        let total_cost = pairs.iter().map(|&(r, c)| costs.get(r, c)).sum();
        AssignmentResult { pairs, total_cost }
    }
}

/// Optimal assignment via shortest augmenting paths with dual potentials
/// (Hungarian method, O(k² · max(rows, cols)) for k = min(rows, cols)).
///
/// Ties between optimal matchings are broken arbitrarily.
pub fn solve_assignment(costs: &CostMatrix) -> Result<AssignmentResult> {
    costs.check_non_empty()?;
    if costs.rows > costs.cols {
        let t = solve_assignment(&costs.transposed())?;
        let pairs = t.pairs.into_iter().map(|(r, c)| (c, r)).collect();
        return Ok(AssignmentResult::from_pairs(costs, pairs));
    }

    let (n, m) = (costs.rows, costs.cols);
    // 1-based indexing; column 0 is the virtual source of each augmentation.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut min_slack = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        min_slack.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let base = (i0 - 1) * m;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let slack = costs.data[base + j - 1] - u[i0] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            if j1 == 0 {
                return Err(Error::Internal("assignment failed to augment".into()));
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let pairs = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .collect();
    Ok(AssignmentResult::from_pairs(costs, pairs))
}

/// Exhaustive minimum over all injections of the smaller side into the larger.
/// Intended as a test oracle.
pub fn brute_force_assignment(costs: &CostMatrix) -> Result<AssignmentResult> {
    costs.check_non_empty()?;
    let k = costs.rows.min(costs.cols);
    if k > BRUTE_FORCE_LIMIT {
        return Err(Error::AssignmentTooLarge {
            size: k,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if costs.rows > costs.cols {
        let t = brute_force_assignment(&costs.transposed())?;
        let pairs = t.pairs.into_iter().map(|(r, c)| (c, r)).collect();
        return Ok(AssignmentResult::from_pairs(costs, pairs));
    }

    struct Search<'a> {
        costs: &'a CostMatrix,
        used: Vec<bool>,
        current: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn run(&mut self, row: usize, partial: f64) {
            if row == self.costs.rows {
                if self.best.as_ref().map_or(true, |(b, _)| partial < *b) {
                    self.best = Some((partial, self.current.clone()));
                }
                return;
            }
            for col in 0..self.costs.cols {
                if self.used[col] {
                    continue;
                }
                self.used[col] = true;
                self.current.push(col);
                self.run(row + 1, partial + self.costs.get(row, col));
                self.current.pop();
                self.used[col] = false;
            }
        }
    }

    let mut search = Search {
        costs,
        used: vec![false; costs.cols],
        current: Vec::with_capacity(costs.rows),
        best: None,
    };
    search.run(0, 0.0);
    let (_, cols) = search
        .best
        .ok_or_else(|| Error::Internal("no assignment enumerated".into()))?;
    let pairs = cols.into_iter().enumerate().collect();
    Ok(AssignmentResult::from_pairs(costs, pairs))
}
