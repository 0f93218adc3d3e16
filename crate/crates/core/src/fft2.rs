//! Minimal 2D FFT over row-major complex buffers, built on rustfft.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub(crate) struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_row: Arc<dyn Fft<f64>>,
    inv_row: Arc<dyn Fft<f64>>,
    fwd_col: Arc<dyn Fft<f64>>,
    inv_col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    /// Plans transforms for an `nx` by `ny` grid stored row-major
    /// (x-major: `buf[x0 * ny + y0]`).
    pub(crate) fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            fwd_row: planner.plan_fft_forward(ny),
            inv_row: planner.plan_fft_inverse(ny),
            fwd_col: planner.plan_fft_forward(nx),
            inv_col: planner.plan_fft_inverse(nx),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.nx * self.ny
    }

    /// Unnormalized forward DFT of both axes, in place.
    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.apply(buf, &self.fwd_row, &self.fwd_col);
    }

    /// Inverse DFT of both axes including the `1/(nx*ny)` factor, in place.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.apply(buf, &self.inv_row, &self.inv_col);
        let scale = 1.0 / self.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn apply(&self, buf: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        assert_eq!(buf.len(), self.len());
        let mut scratch = vec![Complex64::default(); row.get_inplace_scratch_len()];
        row.process_with_scratch(buf, &mut scratch);
        let mut t = vec![Complex64::default(); buf.len()];
        transpose(buf, &mut t, self.nx, self.ny);
        scratch.resize(col.get_inplace_scratch_len(), Complex64::default());
        col.process_with_scratch(&mut t, &mut scratch);
        transpose(&t, buf, self.ny, self.nx);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// Smallest 5-smooth number (factors 2, 3, 5 only) that is `>= n`. Used to
/// pad infinite axes to FFT-friendly sizes; finite axes are never padded.
pub(crate) fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for f in [2, 3, 5] {
            while k % f == 0 {
                k /= f;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}
