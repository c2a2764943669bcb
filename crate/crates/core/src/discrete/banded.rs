use super::grid::StripGrid;
use super::operator::DiscreteOperator;
use crate::error::{Error, Result};

/// LU factorization of `scale·A + shift·I` in band storage, without pivoting.
///
/// Only meant for nonsingular M-matrices: elimination then keeps every
/// pivot positive and every multiplier nonpositive, so solving with a
/// nonnegative right-hand side gives a nonnegative result in floating point.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    bw: usize,
    /// Canonical index -> factorization position.
    pos: Vec<usize>,
    /// Row-major band, row `r` holds columns `r-bw ..= r+bw`.
    band: Vec<f64>,
    work: Vec<f64>,
}

impl BandedLu {
    pub fn factor(grid: &StripGrid, op: &DiscreteOperator, scale: f64, shift: f64) -> Result<Self> {
        assert_eq!(grid.dim(), op.dim, "operator does not match grid");
        let (pos, bw) = grid
            .candidate_orderings()
            .into_iter()
            .map(|p| {
                let bw = op.bandwidth_under(&p);
                (p, bw)
            })
            .min_by_key(|(_, bw)| *bw)
            .expect("at least one ordering");
        let n = op.dim;
        let w = 2 * bw + 1;
        let mut band = vec![0.0; n * w];
        for (r, c, v) in op.entries() {
            let (pr, pc) = (pos[r], pos[c]);
            band[pr * w + pc + bw - pr] += scale * v;
        }
        for r in 0..n {
            band[r * w + bw] += shift;
        }
        eliminate(&mut band, n, bw)?;
        Ok(Self {
            n,
            bw,
            pos,
            band,
            work: vec![0.0; n],
        })
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves in place: `x` holds the right-hand side on entry.
    pub fn solve_in_place(&mut self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let (n, bw) = (self.n, self.bw);
        let w = 2 * bw + 1;
        let y = &mut self.work;
        for (r, &v) in x.iter().enumerate() {
            y[self.pos[r]] = v;
        }
        for r in 0..n {
            let lo = r.saturating_sub(bw);
            let row = &self.band[r * w..(r + 1) * w];
            let s: f64 = row[lo + bw - r..bw].iter().zip(&y[lo..r]).map(|(l, v)| l * v).sum();
            y[r] -= s;
        }
        for r in (0..n).rev() {
            let hi = (r + bw).min(n - 1);
            let row = &self.band[r * w..(r + 1) * w];
            let s: f64 = row[bw + 1..=hi + bw - r]
                .iter()
                .zip(&y[r + 1..=hi])
                .map(|(u, v)| u * v)
                .sum();
            y[r] = (y[r] - s) / row[bw];
        }
        for (r, v) in x.iter_mut().enumerate() {
            *v = y[self.pos[r]];
        }
    }
}

fn eliminate(band: &mut [f64], n: usize, bw: usize) -> Result<()> {
    let w = 2 * bw + 1;
    for k in 0..n {
        let pivot = band[k * w + bw];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::Numerical(format!(
                "nonpositive pivot {pivot:e} at position {k} of {n}"
            )));
        }
        let reach = bw.min(n - 1 - k);
        let (head, tail) = band.split_at_mut((k + 1) * w);
        let urow = &head[k * w + bw + 1..k * w + bw + 1 + reach];
        for off in 1..=reach {
            let row = &mut tail[(off - 1) * w..off * w];
            let lpos = bw - off;
            let l = row[lpos] / pivot;
            row[lpos] = l;
            if l != 0.0 {
                for (a, &u) in row[lpos + 1..lpos + 1 + reach].iter_mut().zip(urow) {
                    *a -= l * u;
                }
            }
        }
    }
    Ok(())
}
