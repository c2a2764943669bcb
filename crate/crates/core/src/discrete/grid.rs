use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Smallest admissible node count in either direction.
pub const MIN_NODES: usize = 4;

/// Treatment of the two x-ends of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XBoundary {
    /// One period `[0, L)` with periodic wrap.
    Periodic,
    /// A window of several periods with reflecting (homogeneous Neumann) ends.
    Neumann,
}

/// Finite-difference grid on the strip `[0, X) × [0, R]`.
///
/// Unknowns are ordered road first (`i = 0..nx`), then the field row by
/// row (`j` outer, `i` inner) for `j = 0..ny`. The row `j = ny` carries the
/// Dirichlet value and is not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct StripGrid {
    /// Number of x-nodes in the whole grid.
    pub nx: usize,
    /// Number of y-intervals across `[0, R]`.
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Period `L` of the medium.
    pub period: f64,
    /// Strip width `R`.
    pub width: f64,
    /// Number of periods spanned by the grid.
    pub copies: usize,
    pub boundary: XBoundary,
}

/// One period with periodic wrap: `dx = L/nx`, `dy = R/ny`.
pub fn build_grid(params: &ModelParams, nx: usize, ny: usize) -> Result<StripGrid> {
    params.validate()?;
    check_counts(nx, ny)?;
    Ok(StripGrid {
        nx,
        ny,
        dx: params.period / nx as f64,
        dy: params.width / ny as f64,
        period: params.period,
        width: params.width,
        copies: 1,
        boundary: XBoundary::Periodic,
    })
}

fn check_counts(nx: usize, ny: usize) -> Result<()> {
    if nx < MIN_NODES || ny < MIN_NODES {
        return Err(Error::Config(format!(
            "grid needs nx >= {MIN_NODES} and ny >= {MIN_NODES} (got nx={nx}, ny={ny})"
        )));
    }
    Ok(())
}

impl StripGrid {
    /// A window of `copies` periods with Neumann ends and `nx_period` nodes
    /// per period. Nodes sit at `x_i = i·dx`, so the window is
    /// `[0, (copies·nx_period − 1)·dx]`.
    pub fn window(params: &ModelParams, nx_period: usize, ny: usize, copies: usize) -> Result<Self> {
        params.validate()?;
        check_counts(nx_period, ny)?;
        if copies == 0 {
            return Err(Error::Config("domain_copies must be >= 1".into()));
        }
        Ok(Self {
            nx: nx_period * copies,
            ny,
            dx: params.period / nx_period as f64,
            dy: params.width / ny as f64,
            period: params.period,
            width: params.width,
            copies,
            boundary: XBoundary::Neumann,
        })
    }

    /// One period with `ny` chosen so that `dy` is as close to `dy` as possible.
    pub fn with_spacing(params: &ModelParams, nx: usize, dy: f64) -> Result<Self> {
        if !(dy.is_finite() && dy > 0.0) {
            return Err(Error::Config(format!("dy must be > 0 (got {dy})")));
        }
        let ny = (params.width / dy).round().max(1.0) as usize;
        build_grid(params, nx, ny)
    }

    /// Nodes per period.
    pub fn nx_period(&self) -> usize {
        self.nx / self.copies
    }

    /// Total unknown count `nx + nx·ny`.
    pub fn dim(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn road(&self, i: usize) -> usize {
        i
    }

    /// Index of the field node `(i, j)`, `j < ny`.
    pub fn field(&self, i: usize, j: usize) -> usize {
        self.nx + j * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    /// Length of the x-range covered by the nodes (period or window).
    pub fn length(&self) -> f64 {
        match self.boundary {
            XBoundary::Periodic => self.period * self.copies as f64,
            XBoundary::Neumann => (self.nx - 1) as f64 * self.dx,
        }
    }

    /// Left and right x-neighbours of node `i`.
    pub fn x_neighbors(&self, i: usize) -> (usize, usize) {
        let n = self.nx;
        match self.boundary {
            XBoundary::Periodic => ((i + n - 1) % n, (i + 1) % n),
            XBoundary::Neumann => {
                let left = if i == 0 { 1 } else { i - 1 };
                let right = if i == n - 1 { n - 2 } else { i + 1 };
                (left, right)
            }
        }
    }

    /// Orderings considered by the banded factorization, as maps from the
    /// canonical index to the factorization position.
    pub(crate) fn candidate_orderings(&self) -> Vec<Vec<usize>> {
        let natural: Vec<usize> = (0..self.dim()).collect();
        let columns: Vec<usize> = match self.boundary {
            XBoundary::Neumann => (0..self.nx).collect(),
            // Fold the ring 0, n-1, 1, n-2, ... so wrap neighbours stay close.
            XBoundary::Periodic => {
                let mut seq = Vec::with_capacity(self.nx);
                let (mut lo, mut hi) = (0, self.nx - 1);
                while lo <= hi {
                    seq.push(lo);
                    if lo != hi {
                        seq.push(hi);
                    }
                    lo += 1;
                    hi -= 1;
                }
                seq
            }
        };
        let stride = self.ny + 1;
        let mut by_column = vec![0; self.dim()];
        for (k, &i) in columns.iter().enumerate() {
            by_column[self.road(i)] = k * stride;
            for j in 0..self.ny {
                by_column[self.field(i, j)] = k * stride + 1 + j;
            }
        }
        vec![natural, by_column]
    }
}
