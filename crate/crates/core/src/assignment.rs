//! Gated min-cost linear assignment.
//!
//! Pairs with `cost > gate` are infeasible edges. Among all one-to-one partial
//! matchings over feasible edges, [`solve`] returns one with the largest
//! number of pairs and, among those, the smallest total cost.
//!
//! The solver runs the shortest-augmenting-path Hungarian method on an
//! `R x (C + R)` matrix: each row gets a private "unmatched" column of cost
//! zero. Costs are lexicographic pairs `(penalty, cost)` where a feasible edge
//! carries penalty -1, so cardinality always dominates cost.

use std::cmp::Ordering;
use std::ops::{Add, Sub};

use crate::error::{Error, Result};

const BRUTEFORCE_LIMIT: usize = 8;

/// Dense row-major cost matrix. Keeps its shape even when one side is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::RaggedCostMatrix {
                    row,
                    found: r.len(),
                    expected: cols,
                });
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFiniteCost {
                row: i / self.cols,
                col: i % self.cols,
            }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssignmentResult {
    /// `(row, col)` pairs in increasing row order.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl AssignmentResult {
    fn from_row_assignment(rows: usize, cols: usize, row_to_col: &[Option<usize>]) -> Self {
        let mut col_used = vec![false; cols];
        let mut out = Self::default();
        for (r, assigned) in row_to_col.iter().enumerate().take(rows) {
            match assigned {
                Some(c) => {
                    col_used[*c] = true;
                    out.matches.push((r, *c));
                }
                None => out.unmatched_rows.push(r),
            }
        }
        out.unmatched_cols = (0..cols).filter(|c| !col_used[*c]).collect();
        out
    }

    /// Sum of matched costs, accumulated in row order.
    pub fn total_cost(&self, cost: &CostMatrix) -> f64 {
        self.matches.iter().map(|&(r, c)| cost.get(r, c)).sum()
    }
}

/// Objective value: penalty first, cost second.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Lex {
    penalty: i64,
    cost: f64,
}

impl Lex {
    const ZERO: Lex = Lex {
        penalty: 0,
        cost: 0.0,
    };
    const INF: Lex = Lex {
        penalty: i64::MAX / 4,
        cost: 0.0,
    };
}

impl Add for Lex {
    type Output = Lex;
    fn add(self, o: Lex) -> Lex {
        Lex {
            penalty: self.penalty + o.penalty,
            cost: self.cost + o.cost,
        }
    }
}

impl Sub for Lex {
    type Output = Lex;
    fn sub(self, o: Lex) -> Lex {
        Lex {
            penalty: self.penalty - o.penalty,
            cost: self.cost - o.cost,
        }
    }
}

impl PartialOrd for Lex {
    fn partial_cmp(&self, o: &Lex) -> Option<Ordering> {
        match self.penalty.cmp(&o.penalty) {
            Ordering::Equal => self.cost.partial_cmp(&o.cost),
            ord => Some(ord),
        }
    }
}

/// Gated assignment maximizing cardinality, then minimizing total cost.
pub fn solve(cost: &CostMatrix, gate: f64) -> Result<AssignmentResult> {
    cost.check_finite()?;
    let (rows, cols) = (cost.rows, cost.cols);
    if rows == 0 || cols == 0 || gate.is_nan() {
        return Ok(AssignmentResult::from_row_assignment(
            rows,
            cols,
            &vec![None; rows],
        ));
    }

    // Infeasible edges cost more than any set of feasible matches can save.
    let forbidden = Lex {
        penalty: rows as i64 + 1,
        cost: 0.0,
    };
    let width = cols + rows;
    let entry = |r: usize, c: usize| -> Lex {
        if c < cols {
            let v = cost.get(r, c);
            if v <= gate {
                Lex {
                    penalty: -1,
                    cost: v,
                }
            } else {
                forbidden
            }
        } else if c - cols == r {
            Lex::ZERO
        } else {
            forbidden
        }
    };

    let col_owner = hungarian(rows, width, entry);
    let mut row_to_col = vec![None; rows];
    for (c, owner) in col_owner.iter().enumerate().take(cols) {
        if let Some(r) = owner {
            row_to_col[*r] = Some(c);
        }
    }
    Ok(AssignmentResult::from_row_assignment(rows, cols, &row_to_col))
}

/// Shortest augmenting path Hungarian method for `rows <= width`. Every row
/// gets assigned; returns the owning row of each column.
fn hungarian(rows: usize, width: usize, entry: impl Fn(usize, usize) -> Lex) -> Vec<Option<usize>> {
    // 1-based indices; slot 0 is the virtual source column/row.
    let mut u = vec![Lex::ZERO; rows + 1];
    let mut v = vec![Lex::ZERO; width + 1];
    let mut owner = vec![0usize; width + 1];
    let mut way = vec![0usize; width + 1];
    let mut minv = vec![Lex::INF; width + 1];
    let mut used = vec![false; width + 1];

    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0usize;
        minv.fill(Lex::INF);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = Lex::INF;
            let mut j1 = 0usize;
            for j in 1..=width {
                if used[j] {
                    continue;
                }
                let cur = entry(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=width {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
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

    owner[1..]
        .iter()
        .map(|&r| if r == 0 { None } else { Some(r - 1) })
        .collect()
}

/// Exhaustive enumeration of gated partial matchings (test oracle).
///
/// Optimality: most pairs, then least total cost (summed in row order), then
/// the lexicographically smallest sorted pair list.
pub fn solve_bruteforce(cost: &CostMatrix, gate: f64) -> Result<AssignmentResult> {
    if cost.rows > BRUTEFORCE_LIMIT || cost.cols > BRUTEFORCE_LIMIT {
        return Err(Error::SizeLimit {
            rows: cost.rows,
            cols: cost.cols,
        });
    }
    cost.check_finite()?;

    struct Search<'a> {
        cost: &'a CostMatrix,
        gate: f64,
        current: Vec<Option<usize>>,
        col_used: Vec<bool>,
        best: Option<(usize, f64, Vec<Option<usize>>)>,
    }

    impl Search<'_> {
        fn better(&self, count: usize, total: f64) -> bool {
            let Some((bc, bt, bm)) = &self.best else {
                return true;
            };
            match count.cmp(bc) {
                Ordering::Greater => return true,
                Ordering::Less => return false,
                Ordering::Equal => {}
            }
            if total != *bt {
                return total < *bt;
            }
            // Compare sorted pair lists; pairs are generated in row order already.
            let pairs = |m: &[Option<usize>]| -> Vec<(usize, usize)> {
                m.iter()
                    .enumerate()
                    .filter_map(|(r, c)| c.map(|c| (r, c)))
                    .collect()
            };
            pairs(&self.current) < pairs(bm)
        }

        fn visit(&mut self, row: usize) {
            if row == self.cost.rows {
                let count = self.current.iter().flatten().count();
                let total: f64 = self
                    .current
                    .iter()
                    .enumerate()
                    .filter_map(|(r, c)| c.map(|c| self.cost.get(r, c)))
                    .sum();
                if self.better(count, total) {
                    self.best = Some((count, total, self.current.clone()));
                }
                return;
            }
            for c in 0..self.cost.cols {
                if !self.col_used[c] && self.cost.get(row, c) <= self.gate {
                    self.col_used[c] = true;
                    self.current[row] = Some(c);
                    self.visit(row + 1);
                    self.current[row] = None;
                    self.col_used[c] = false;
                }
            }
            self.visit(row + 1);
        }
    }

    let mut search = Search {
        cost,
        gate,
        current: vec![None; cost.rows],
        col_used: vec![false; cost.cols],
        best: None,
    };
    search.visit(0);
    let best = search.best.map(|b| b.2).unwrap_or_default();
    Ok(AssignmentResult::from_row_assignment(
        cost.rows,
        cost.cols,
        &best,
    ))
}
