//! Quasi-Hankel embedding of shaped arrays.
//!
//! Given a region shape and a window shape, the embedding plan works out
//! where the window may be placed: the origin set holds every region cell
//! `k` whose translate of the whole window stays inside the region. The
//! trajectory matrix then has one column per origin `k` and one row per
//! window cell `l`, with entry `x(l (+) k)`. Entries therefore depend on
//! the cell `l (+) k` only, which is the quasi-Hankel structure; the set of
//! matrix positions mapping to one cell is that cell's fiber, and the fiber
//! sizes are the reconstruction weights.
//!
//! If the placed windows do not reach every region cell the embedding only
//! sees the covered sub-shape; the plan records which cells were dropped,
//! and all downstream operations act on the covered shape.
//!
//! The dense operations here materialize the trajectory matrix and its
//! fibers directly. They serve as the reference implementation for the FFT
//! route in [`crate::fast_ops`] and are guarded by a size limit.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::array::ShapedArray;
use crate::error::{Error, Result};
use crate::grid::{conv_counts, erosion_origins, EmbedGrid};
use crate::shape::Shape;
use crate::topology::{Period, Topology};

/// Upper bound on `window cells * origin cells` for the dense routines.
pub const DENSE_ENTRY_LIMIT: u128 = 25_000_000;

/// Entries of one fiber must agree to this relative tolerance for a matrix
/// to count as quasi-Hankel in [`unembed`].
pub const UNEMBED_REL_TOL: f64 = 1e-12;

#[derive(Debug)]
pub struct EmbeddingPlan {
    topology: Topology,
    region: Arc<Shape>,
    window: Arc<Shape>,
    origins: Arc<Shape>,
    covered: Arc<Shape>,
    weight: ShapedArray,
    dropped: Vec<crate::topology::IndexPair>,
    fibers: OnceLock<Fibers>,
}

/// For each covered cell, the trajectory matrix positions `(row, column)`
/// whose entry reads that cell.
#[derive(Debug)]
pub(crate) struct Fibers {
    pub lists: Vec<Vec<(u32, u32)>>,
}

impl EmbeddingPlan {
    /// Plans the embedding of `window` into `region`. Fails if the shapes
    /// live on different topologies, the window is not inside the region,
    /// or no translate of the window fits.
    pub fn new(region: &Shape, window: &Shape) -> Result<Self> {
        if region.topology() != window.topology() {
            return Err(Error::TopologyMismatch);
        }
        if !window.is_subset_of(region) {
            return Err(Error::WindowNotInRegion);
        }
        let topology = region.topology();

        let origin_cells = erosion_origins(region, window)?;
        if origin_cells.is_empty() {
            return Err(Error::WindowTooLarge);
        }
        let origins = Shape::from_sorted_unchecked(topology, origin_cells);

        let (cells, counts) = conv_counts(window, &origins)?;
        let covered = Arc::new(Shape::from_sorted_unchecked(topology, cells));
        let weight =
            ShapedArray::new(Arc::clone(&covered), counts.iter().map(|&c| c as f64).collect())?;
        debug_assert!(covered.is_subset_of(region));
        let dropped = region.difference(&covered);

        Ok(EmbeddingPlan {
            topology,
            region: Arc::new(region.clone()),
            window: Arc::new(window.clone()),
            origins: Arc::new(origins),
            covered,
            weight,
            dropped,
            fibers: OnceLock::new(),
        })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn region(&self) -> &Arc<Shape> {
        &self.region
    }

    pub fn window(&self) -> &Arc<Shape> {
        &self.window
    }

    /// All admissible window placements, in x-major order.
    pub fn origins(&self) -> &Arc<Shape> {
        &self.origins
    }

    /// The sub-shape actually reached by placed windows.
    pub fn covered(&self) -> &Arc<Shape> {
        &self.covered
    }

    /// Fiber sizes per covered cell; always a positive integer.
    pub fn weight(&self) -> &ShapedArray {
        &self.weight
    }

    /// Region cells no window placement reaches. Empty iff the embedding
    /// is injective (loses no information).
    pub fn dropped(&self) -> &[crate::topology::IndexPair] {
        &self.dropped
    }

    pub fn is_injective(&self) -> bool {
        self.dropped.is_empty()
    }

    /// Rows of the trajectory matrix (window cells).
    pub fn nrows(&self) -> usize {
        self.window.len()
    }

    /// Columns of the trajectory matrix (origin cells).
    pub fn ncols(&self) -> usize {
        self.origins.len()
    }

    /// Grid covering the region with wrap-around matching the topology.
    pub(crate) fn working_grid(&self, pad: bool) -> Result<EmbedGrid> {
        EmbedGrid::with_extent(
            self.topology,
            self.region.max_x() as u64,
            self.region.max_y() as u64,
            pad,
        )
    }

    /// 0-based grid coordinates of the shape's cells, for sum arithmetic.
    fn coords0(shape: &Shape) -> Vec<(usize, usize)> {
        shape
            .points()
            .iter()
            .map(|p| (p.x as usize - 1, p.y as usize - 1))
            .collect()
    }

    fn check_dense_size(&self) -> Result<()> {
        let entries = self.nrows() as u128 * self.ncols() as u128;
        if entries > DENSE_ENTRY_LIMIT {
            return Err(Error::DenseTooLarge {
                entries,
                limit: DENSE_ENTRY_LIMIT,
            });
        }
        Ok(())
    }

    pub(crate) fn fibers(&self) -> Result<&Fibers> {
        self.check_dense_size()?;
        Ok(self.fibers.get_or_init(|| {
            // Infallible after the size check: the grid covering the region
            // was already built during planning.
            let grid = self.working_grid(false).expect("region grid");
            let mut cell_of = vec![u32::MAX; grid.len()];
            for (i, &c) in self.covered.points().iter().enumerate() {
                cell_of[grid.pos(c)] = i as u32;
            }
            let mut lists = vec![Vec::new(); self.covered.len()];
            let windows = Self::coords0(&self.window);
            let origins = Self::coords0(&self.origins);
            let (wrap_x, wrap_y) = wrap_sizes(self.topology);
            for (j, &(kx, ky)) in origins.iter().enumerate() {
                for (i, &(lx, ly)) in windows.iter().enumerate() {
                    let x = wrap_sum(lx, kx, wrap_x);
                    let y = wrap_sum(ly, ky, wrap_y);
                    let cell = cell_of[x * grid.ny + y];
                    debug_assert_ne!(cell, u32::MAX);
                    lists[cell as usize].push((i as u32, j as u32));
                }
            }
            Fibers { lists }
        }))
    }
}

fn wrap_sizes(topology: Topology) -> (Option<usize>, Option<usize>) {
    let w = |p: Period| p.get().map(|t| t as usize);
    (w(topology.t_x()), w(topology.t_y()))
}

#[inline]
fn wrap_sum(a: usize, b: usize, wrap: Option<usize>) -> usize {
    match wrap {
        Some(t) => (a + b) % t,
        None => a + b,
    }
}

/// Materializes the trajectory matrix: row `i` is window cell `i`, column
/// `j` is origin `j`, entry `x(l_i (+) k_j)`. The array must live on the
/// plan's region or on its covered sub-shape.
pub fn embed_dense(arr: &ShapedArray, plan: &EmbeddingPlan) -> Result<DMatrix<f64>> {
    plan.check_dense_size()?;
    let grid = plan.working_grid(false)?;
    let values = scatter_values(arr, plan, &grid)?;
    let windows = EmbeddingPlan::coords0(&plan.window);
    let origins = EmbeddingPlan::coords0(&plan.origins);
    let (wrap_x, wrap_y) = wrap_sizes(plan.topology);
    let mut m = DMatrix::zeros(plan.nrows(), plan.ncols());
    for (j, &(kx, ky)) in origins.iter().enumerate() {
        for (i, &(lx, ly)) in windows.iter().enumerate() {
            let x = wrap_sum(lx, kx, wrap_x);
            let y = wrap_sum(ly, ky, wrap_y);
            m[(i, j)] = values[x * grid.ny + y];
        }
    }
    Ok(m)
}

pub(crate) fn scatter_values(
    arr: &ShapedArray,
    plan: &EmbeddingPlan,
    grid: &EmbedGrid,
) -> Result<Vec<f64>> {
    if arr.shape() != plan.region.as_ref() && arr.shape() != plan.covered.as_ref() {
        return Err(Error::ShapeMismatch {
            context: "array must live on the plan's region or covered shape",
        });
    }
    let mut values = vec![0.0; grid.len()];
    for (&p, &v) in arr.shape().points().iter().zip(arr.values()) {
        values[grid.pos(p)] = v;
    }
    Ok(values)
}

/// Orthogonal projection of an arbitrary matrix onto the space of
/// quasi-Hankel matrices of the plan: every fiber is replaced by its mean.
pub fn project_quasi_hankel(m: &DMatrix<f64>, plan: &EmbeddingPlan) -> Result<DMatrix<f64>> {
    check_dims(m, plan)?;
    let fibers = plan.fibers()?;
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for list in &fibers.lists {
        let mean = list
            .iter()
            .map(|&(i, j)| m[(i as usize, j as usize)])
            .sum::<f64>()
            / list.len() as f64;
        for &(i, j) in list {
            out[(i as usize, j as usize)] = mean;
        }
    }
    Ok(out)
}

/// Maps an exactly quasi-Hankel matrix back to the array it embeds.
/// Entries of one fiber must agree to [`UNEMBED_REL_TOL`] relative
/// tolerance; the result lives on the covered shape.
pub fn unembed(m: &DMatrix<f64>, plan: &EmbeddingPlan) -> Result<ShapedArray> {
    check_dims(m, plan)?;
    let fibers = plan.fibers()?;
    let mut values = Vec::with_capacity(fibers.lists.len());
    let mut worst = 0.0f64;
    for list in &fibers.lists {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &(i, j) in list {
            let v = m[(i as usize, j as usize)];
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        let scale = lo.abs().max(hi.abs());
        if scale > 0.0 {
            worst = worst.max((hi - lo) / scale);
        }
        values.push(sum / list.len() as f64);
    }
    if worst > UNEMBED_REL_TOL {
        return Err(Error::StructureViolation {
            spread: worst,
            tol: UNEMBED_REL_TOL,
        });
    }
    ShapedArray::new(Arc::clone(&plan.covered), values)
}

fn check_dims(m: &DMatrix<f64>, plan: &EmbeddingPlan) -> Result<()> {
    if m.nrows() != plan.nrows() || m.ncols() != plan.ncols() {
        return Err(Error::ShapeMismatch {
            context: "matrix dimensions do not match the plan",
        });
    }
    Ok(())
}
