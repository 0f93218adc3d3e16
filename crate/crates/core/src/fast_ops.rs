//! Matrix-free trajectory-matrix products via FFT.
//!
//! The trajectory matrix `X` of an embedding plan is never formed. Both
//! `X v` and `X^T u` are circular correlations of the data grid with a
//! sparse vector scattered onto the grid, and the rank-one unembedding
//! used during reconstruction is a circular convolution of the two
//! singular vectors followed by division by the fiber weights. All three
//! reduce to a pair of 2D FFTs over a grid whose size is the period on
//! circular axes and the (padded) region extent on infinite axes; with
//! that grid choice no spurious wrap-around can occur, because every sum
//! `l (+) k` of a window cell and an origin lands inside the region.
//!
//! A matrix-vector product costs `O(G log G)` for `G` grid cells, which is
//! what makes windows of tens of thousands of cells practical.

use std::sync::Arc;

use num_complex::Complex64;

use crate::array::ShapedArray;
use crate::embedding::{scatter_values, EmbeddingPlan};
use crate::error::{Error, Result};
use crate::fft2::Fft2;
use crate::grid::EmbedGrid;
use crate::shape::Shape;

pub struct CirculantOperator {
    plan: Arc<EmbeddingPlan>,
    grid: EmbedGrid,
    fft: Fft2,
    /// Forward FFT of the data scattered onto the grid.
    spectrum: Vec<Complex64>,
    window_pos: Vec<usize>,
    origin_pos: Vec<usize>,
    covered_pos: Vec<usize>,
    inv_weight: Vec<f64>,
}

impl std::fmt::Debug for CirculantOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantOperator")
            .field("nrows", &self.nrows())
            .field("ncols", &self.ncols())
            .field("grid", &self.grid)
            .finish()
    }
}

impl CirculantOperator {
    /// Builds the operator for an array on the plan's region or covered
    /// shape.
    pub fn build(arr: &ShapedArray, plan: &Arc<EmbeddingPlan>) -> Result<Self> {
        let grid = plan.working_grid(true)?;
        let fft = Fft2::new(grid.nx, grid.ny);
        let mut spectrum: Vec<Complex64> = scatter_values(arr, plan, &grid)?
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect();
        fft.forward(&mut spectrum);

        let positions = |s: &Shape| s.points().iter().map(|&p| grid.pos(p)).collect::<Vec<_>>();
        let window_pos = positions(plan.window());
        let origin_pos = positions(plan.origins());
        let covered_pos = positions(plan.covered());
        let inv_weight = plan.weight().values().iter().map(|&w| 1.0 / w).collect();

        Ok(CirculantOperator {
            plan: Arc::clone(plan),
            grid,
            fft,
            spectrum,
            window_pos,
            origin_pos,
            covered_pos,
            inv_weight,
        })
    }

    pub fn plan(&self) -> &Arc<EmbeddingPlan> {
        &self.plan
    }

    pub fn nrows(&self) -> usize {
        self.window_pos.len()
    }

    pub fn ncols(&self) -> usize {
        self.origin_pos.len()
    }

    /// `y = X v`: scatter `v` over the origins, correlate with the data,
    /// gather at the window cells.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.correlate(v, &self.origin_pos, &self.window_pos)
    }

    /// `z = X^T u`: the same correlation with the roles of window and
    /// origins swapped.
    pub fn rmatvec(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.correlate(u, &self.window_pos, &self.origin_pos)
    }

    fn correlate(&self, v: &[f64], scatter: &[usize], gather: &[usize]) -> Result<Vec<f64>> {
        if v.len() != scatter.len() {
            return Err(Error::LengthMismatch {
                expected: scatter.len(),
                got: v.len(),
            });
        }
        let mut buf = vec![Complex64::default(); self.grid.len()];
        for (&pos, &x) in scatter.iter().zip(v) {
            buf[pos] = Complex64::new(x, 0.0);
        }
        self.fft.forward(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b = s * b.conj();
        }
        self.fft.inverse(&mut buf);
        Ok(gather.iter().map(|&pos| buf[pos].re).collect())
    }

    /// The array whose embedding is the quasi-Hankel projection of
    /// `sigma * u * v^T`: circular convolution of the two vectors divided
    /// by the fiber weights. Lives on the covered shape.
    pub fn rank_one_unembed(&self, sigma: f64, u: &ShapedArray, v: &ShapedArray) -> Result<ShapedArray> {
        if u.shape() != self.plan.window().as_ref() {
            return Err(Error::ShapeMismatch {
                context: "left factor must live on the window shape",
            });
        }
        if v.shape() != self.plan.origins().as_ref() {
            return Err(Error::ShapeMismatch {
                context: "right factor must live on the origin shape",
            });
        }
        let values = self.rank_sum_unembed(&[(sigma, u.values(), v.values())])?;
        ShapedArray::new(Arc::clone(self.plan.covered()), values)
    }

    /// Unembeds a sum of scaled rank-one terms in one pass; the spectra of
    /// the terms accumulate before the single inverse FFT.
    pub(crate) fn rank_sum_unembed(&self, terms: &[(f64, &[f64], &[f64])]) -> Result<Vec<f64>> {
        let mut acc = vec![Complex64::default(); self.grid.len()];
        let mut bu = vec![Complex64::default(); self.grid.len()];
        let mut bv = vec![Complex64::default(); self.grid.len()];
        for &(sigma, u, v) in terms {
            if u.len() != self.nrows() {
                return Err(Error::LengthMismatch {
                    expected: self.nrows(),
                    got: u.len(),
                });
            }
            if v.len() != self.ncols() {
                return Err(Error::LengthMismatch {
                    expected: self.ncols(),
                    got: v.len(),
                });
            }
            bu.iter_mut().for_each(|c| *c = Complex64::default());
            bv.iter_mut().for_each(|c| *c = Complex64::default());
            for (&pos, &x) in self.window_pos.iter().zip(u) {
                bu[pos] = Complex64::new(x, 0.0);
            }
            for (&pos, &x) in self.origin_pos.iter().zip(v) {
                bv[pos] = Complex64::new(x, 0.0);
            }
            self.fft.forward(&mut bu);
            self.fft.forward(&mut bv);
            for ((a, x), y) in acc.iter_mut().zip(&bu).zip(&bv) {
                *a += sigma * x * y;
            }
        }
        self.fft.inverse(&mut acc);
        Ok(self
            .covered_pos
            .iter()
            .zip(&self.inv_weight)
            .map(|(&pos, &w)| acc[pos].re * w)
            .collect())
    }
}

/// Fiber weights computed through the FFT route regardless of problem
/// size. The planner counts fibers directly below a pair-count threshold,
/// so comparing this against [`EmbeddingPlan::weight`] cross-checks the
/// two implementations.
pub fn weights_via_convolution(plan: &EmbeddingPlan) -> Result<ShapedArray> {
    let (cells, counts) = crate::grid::conv_counts_fft(plan.window(), plan.origins())?;
    if cells != plan.covered().points() {
        return Err(Error::NumericalFailure(
            "FFT weight support differs from the planned covered shape".into(),
        ));
    }
    ShapedArray::new(
        Arc::clone(plan.covered()),
        counts.into_iter().map(|c| c as f64).collect(),
    )
}
