//! Binary matrices with fixed margins and the checkerboard swap chain.
//!
//! Text form: a `rows cols` header line followed by one line of `0`/`1`
//! digits per row.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{Direction, Kernel};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
}

impl BinaryMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(p) = data.iter().position(|&v| v > 1) {
            return Err(Error::Argument(format!("entry ({}, {}) is {}", p / cols, p % cols, data[p])));
        }
        let mut m = Self {
            rows,
            cols,
            data,
            row_sums: vec![0; rows],
            col_sums: vec![0; cols],
        };
        m.row_sums = m.recompute_row_sums();
        m.col_sums = m.recompute_col_sums();
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0; rows * cols]).expect("valid shape")
    }

    /// A matrix with the given margins, built greedily: each row, largest
    /// first, fills the columns with the most remaining demand. Succeeds
    /// whenever the margins are feasible.
    pub fn with_margins(row_sums: &[usize], col_sums: &[usize]) -> Result<Self> {
        let (rows, cols) = (row_sums.len(), col_sums.len());
        let infeasible = || Error::Argument("infeasible margins".into());
        if row_sums.iter().sum::<usize>() != col_sums.iter().sum::<usize>() || row_sums.iter().any(|&r| r > cols) {
            return Err(infeasible());
        }
        let mut remaining = col_sums.to_vec();
        let mut data = vec![0u8; rows * cols];
        let mut order: Vec<usize> = (0..rows).collect();
        order.sort_by_key(|&r| std::cmp::Reverse(row_sums[r]));
        for r in order {
            let mut by_demand: Vec<usize> = (0..cols).collect();
            by_demand.sort_by_key(|&c| (std::cmp::Reverse(remaining[c]), c));
            for &c in by_demand.iter().take(row_sums[r]) {
                if remaining[c] == 0 {
                    return Err(infeasible());
                }
                remaining[c] -= 1;
                data[r * cols + c] = 1;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn row_sums(&self) -> &[usize] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[usize] {
        &self.col_sums
    }

    pub fn recompute_row_sums(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) as usize).sum())
            .collect()
    }

    pub fn recompute_col_sums(&self) -> Vec<usize> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c) as usize).sum())
            .collect()
    }

    /// Cached margins agree with the entries.
    pub fn margins_consistent(&self) -> bool {
        self.row_sums == self.recompute_row_sums() && self.col_sums == self.recompute_col_sums()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.rows, self.cols).unwrap();
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(if self.get(r, c) == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Reads the text form; whitespace between digits is ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing `rows cols` header".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: hline + 1,
                message: format!("bad header `{header}`"),
            })?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse {
                line: hline + 1,
                message: "header needs exactly `rows cols`".into(),
            });
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (i, line) in lines {
            let err = |message: String| Error::Parse { line: i + 1, message };
            if seen == rows {
                return Err(err("more rows than declared".into()));
            }
            let row: Vec<u8> = line
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => Err(err(format!("unexpected character `{other}`"))),
                })
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(err(format!("{} entries, expected {cols}", row.len())));
            }
            data.extend(row);
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("{seen} rows, expected {rows}"),
            });
        }
        Self::new(rows, cols, data)
    }

    /// Shared-one counts `s_{jk}` for all column pairs `j < k`.
    pub fn column_pair_overlaps(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cols * self.cols.saturating_sub(1) / 2);
        for j in 0..self.cols {
            for k in j + 1..self.cols {
                out.push((0..self.rows).filter(|&r| self.get(r, j) == 1 && self.get(r, k) == 1).count());
            }
        }
        out
    }
}

/// One checkerboard move: pick two distinct rows and two distinct columns
/// uniformly; if the 2×2 submatrix is `[[1,0],[0,1]]` or `[[0,1],[1,0]]`,
/// swap it to the other pattern, else stay. Margins never change.
pub fn checkerboard_swap_step<R: Rng + ?Sized>(m: &mut BinaryMatrix, rng: &mut R) {
    if m.rows < 2 || m.cols < 2 {
        return;
    }
    let (r1, r2) = distinct_pair(m.rows, rng);
    let (c1, c2) = distinct_pair(m.cols, rng);
    let (a, b) = (r1 * m.cols, r2 * m.cols);
    let (x11, x12, x21, x22) = (m.data[a + c1], m.data[a + c2], m.data[b + c1], m.data[b + c2]);
    if x11 == x22 && x12 == x21 && x11 != x12 {
        m.data[a + c1] ^= 1;
        m.data[a + c2] ^= 1;
        m.data[b + c1] ^= 1;
        m.data[b + c2] ^= 1;
    }
}

#[inline]
fn distinct_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// The checkerboard chain. Its proposal is symmetric, so it is reversible
/// with respect to the uniform law on the margin fiber.
#[derive(Debug, Clone, Copy, Default)]
pub struct SwapChain;

impl Kernel for SwapChain {
    type State = BinaryMatrix;

    #[inline]
    fn step<R: Rng + ?Sized>(&self, state: &mut BinaryMatrix, _direction: Direction, rng: &mut R) {
        checkerboard_swap_step(state, rng);
    }

    fn is_reversible(&self) -> bool {
        true
    }
}

/// `Σ_{j<k} s_{jk}`: pairs of ones sharing a row, summed over column pairs.
/// Equals `Σ_r C(r_r, 2)`, so it is constant on a margin fiber.
pub fn cooccurrence_statistic(m: &BinaryMatrix) -> f64 {
    m.column_pair_overlaps().iter().sum::<usize>() as f64
}

/// `Σ_{j<k} s_{jk}²`: sensitive to column pairs that co-occur more than the
/// margins imply.
pub fn cooccurrence_sum_of_squares(m: &BinaryMatrix) -> f64 {
    m.column_pair_overlaps().iter().map(|&s| (s * s) as f64).sum()
}
