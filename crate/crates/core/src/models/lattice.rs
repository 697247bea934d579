use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nearest-neighbour graph of a rectangular lattice.
///
/// Site `(r, c)` has index `r * cols + c`. Edges are stored as `(min, max)`
/// pairs in ascending order. When a periodic dimension has length 2 the
/// forward and wraparound bonds join the same pair of sites; they are merged
/// into a single edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGraph {
    pub rows: usize,
    pub cols: usize,
    pub periodic: bool,
    edges: Vec<(usize, usize)>,
}

impl LatticeGraph {
    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }
}

pub fn build_lattice(rows: usize, cols: usize, periodic: bool) -> Result<LatticeGraph> {
    if rows < 2 || cols < 2 {
        return Err(Error::domain(format!(
            "lattice {rows}x{cols} too small; both dimensions must be at least 2"
        )));
    }
    let mut edges = BTreeSet::new();
    let site = |r: usize, c: usize| r * cols + c;
    for r in 0..rows {
        for c in 0..cols {
            let here = site(r, c);
            let right = if c + 1 < cols {
                Some(site(r, c + 1))
            } else if periodic {
                Some(site(r, 0))
            } else {
                None
            };
            let down = if r + 1 < rows {
                Some(site(r + 1, c))
            } else if periodic {
                Some(site(0, c))
            } else {
                None
            };
            for other in [right, down].into_iter().flatten() {
                edges.insert((here.min(other), here.max(other)));
            }
        }
    }
    Ok(LatticeGraph {
        rows,
        cols,
        periodic,
        edges: edges.into_iter().collect(),
    })
}
