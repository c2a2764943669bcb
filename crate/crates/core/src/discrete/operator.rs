use std::io::Write;

use super::grid::StripGrid;
use crate::model::{ModelParams, ReactionSpec};

/// Largest `|α|·dx` for which advection is discretized with centered differences.
pub const PECLET_LIMIT: f64 = 0.5;

/// How the first-order `2Dα∂_x`, `2dα∂_x` terms were discretized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdvectionRegime {
    Centered,
    Upwind,
}

impl AdvectionRegime {
    pub fn for_alpha(alpha: f64, dx: f64) -> Self {
        if alpha.abs() * dx <= PECLET_LIMIT {
            Self::Centered
        } else {
            Self::Upwind
        }
    }
}

/// Sparse operator in compressed-row form, columns sorted within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteOperator {
    pub dim: usize,
    pub alpha: f64,
    pub shift_applied: Option<f64>,
    pub regime: AdvectionRegime,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag_pos: Vec<usize>,
}

struct Builder {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Builder {
    fn new(dim: usize) -> Self {
        Self {
            rows: vec![Vec::with_capacity(6); dim],
        }
    }

    fn add(&mut self, row: usize, col: usize, value: f64) {
        self.rows[row].push((col, value));
    }

    fn finish(self, alpha: f64, regime: AdvectionRegime) -> DiscreteOperator {
        let dim = self.rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag_pos = Vec::with_capacity(dim);
        row_ptr.push(0);
        for (r, mut row) in self.rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            let start = cols.len();
            for (c, v) in row {
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            let d = cols[start..].iter().position(|&c| c == r).map(|k| start + k);
            diag_pos.push(d.expect("every row carries a diagonal entry"));
            row_ptr.push(cols.len());
        }
        DiscreteOperator {
            dim,
            alpha,
            shift_applied: None,
            regime,
            row_ptr,
            cols,
            vals,
            diag_pos,
        }
    }
}

/// Second-difference plus advection stencil along x for `−k∂_xx + b∂_x`,
/// returned as (left, centre, right) coefficients.
fn x_stencil(k: f64, b: f64, dx: f64, regime: AdvectionRegime) -> (f64, f64, f64) {
    let diff = match regime {
        AdvectionRegime::Centered => k,
        // Upwinding equals centered advection plus diffusion |b|·dx/2.
        AdvectionRegime::Upwind => k + 0.5 * b.abs() * dx,
    };
    let h2 = dx * dx;
    let adv = b / (2.0 * dx);
    (-diff / h2 - adv, 2.0 * diff / h2, -diff / h2 + adv)
}

fn assemble(
    params: &ModelParams,
    reaction: Option<&ReactionSpec>,
    grid: &StripGrid,
    alpha: f64,
) -> DiscreteOperator {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx, grid.dy);
    let (big_d, d) = (params.d_road, params.d_field);
    let (mu, nu) = (params.mu, params.nu);
    let regime = AdvectionRegime::for_alpha(alpha, dx);
    let mut b = Builder::new(grid.dim());

    let (rl, rc, rr) = x_stencil(big_d, 2.0 * big_d * alpha, dx, regime);
    let (fl, fc, fr) = x_stencil(d, 2.0 * d * alpha, dx, regime);
    let dy2 = dy * dy;

    for i in 0..nx {
        let (left, right) = grid.x_neighbors(i);
        let r = grid.road(i);
        b.add(r, grid.road(left), rl);
        b.add(r, r, rc - big_d * alpha * alpha + mu);
        b.add(r, grid.road(right), rr);
        b.add(r, grid.field(i, 0), -nu);

        let zeta = reaction.map_or(0.0, |s| s.fv0(grid.x(i)));
        for j in 0..ny {
            let k = grid.field(i, j);
            b.add(k, grid.field(left, j), fl);
            b.add(k, grid.field(right, j), fr);
            let mut diag = fc - d * alpha * alpha - zeta + 2.0 * d / dy2;
            if j == 0 {
                // Ghost node from −d∂_y q + νq − μp = 0 at y = 0.
                diag += 2.0 * nu / dy;
                b.add(k, grid.field(i, 1), -2.0 * d / dy2);
                b.add(k, r, -2.0 * mu / dy);
            } else {
                b.add(k, grid.field(i, j - 1), -d / dy2);
                if j + 1 < ny {
                    b.add(k, grid.field(i, j + 1), -d / dy2);
                }
            }
            b.add(k, k, diag);
        }
    }
    b.finish(alpha, regime)
}

/// Operator `A` of the α-twisted periodic eigenvalue problem, `A·(p, q) = σ·(p, q)`.
pub fn assemble_eigen_operator(
    params: &ModelParams,
    spec: &ReactionSpec,
    grid: &StripGrid,
    alpha: f64,
) -> DiscreteOperator {
    assemble(params, Some(spec), grid, alpha)
}

/// Linear part of the evolution system: diffusion, exchange and Dirichlet cap.
pub fn assemble_evolution_operator(params: &ModelParams, grid: &StripGrid) -> DiscreteOperator {
    assemble(params, None, grid, 0.0)
}

impl DiscreteOperator {
    /// `(row, col, value)` triples in row order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn diagonal(&self, r: usize) -> f64 {
        self.vals[self.diag_pos[r]]
    }

    /// `y = A·x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *out = self.cols[s..e]
                .iter()
                .zip(&self.vals[s..e])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    /// `A + ΛI`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for &k in &out.diag_pos {
            out.vals[k] += shift;
        }
        out.shift_applied = Some(self.shift_applied.unwrap_or(0.0) + shift);
        out
    }

    /// First entry breaking the M-matrix sign pattern (positive diagonal,
    /// nonpositive off-diagonal), if any.
    pub fn sign_violation(&self) -> Option<(usize, usize, f64)> {
        self.entries()
            .find(|&(r, c, v)| if r == c { !(v > 0.0) } else { !(v <= 0.0) })
    }

    /// Row-major dense copy; intended for small grids.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        for (r, c, v) in self.entries() {
            out[r * self.dim + c] = v;
        }
        out
    }

    /// Coordinate-format dump, one `row col value` triple per line.
    pub fn write_coo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (r, c, v) in self.entries() {
            writeln!(out, "{r} {c} {v:.16e}")?;
        }
        Ok(())
    }

    /// Largest distance `|pos[r] − pos[c]|` over the nonzero pattern.
    pub(crate) fn bandwidth_under(&self, pos: &[usize]) -> usize {
        self.entries()
            .map(|(r, c, _)| pos[r].abs_diff(pos[c]))
            .max()
            .unwrap_or(0)
    }
}
