//! Rectangular working grids for indicator convolutions.
//!
//! Shapes on circular axes embed into a grid whose size equals the period,
//! so that index wrap-around coincides with DFT periodicity. Infinite axes
//! get a grid just large enough that no genuine sum of indices can alias,
//! optionally padded to an FFT-friendly length. Counting problems (Minkowski
//! sums, origin-set erosion, fiber weights) run either by direct integer
//! enumeration or through FFTs of indicator arrays, depending on the number
//! of index pairs involved; both routes produce identical integer counts.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft2::{next_smooth, Fft2};
use crate::shape::Shape;
use crate::topology::{cyclic_add, IndexPair, Period, Topology};

/// Pair count beyond which counting switches to the FFT route.
pub(crate) const DIRECT_PAIR_LIMIT: u128 = 1_000_000;

/// FFT count cells must land within this distance of an integer.
pub(crate) const COUNT_ROUND_TOL: f64 = 0.25;

/// Hard cap on grid cells so indicator buffers stay within memory.
const GRID_CELL_LIMIT: usize = 1 << 26;

#[derive(Clone, Debug)]
pub(crate) struct EmbedGrid {
    pub nx: usize,
    pub ny: usize,
}

impl EmbedGrid {
    /// A grid with at least the requested extent per axis. Finite axes use
    /// exactly the period (the extent must fit); infinite axes use the
    /// requested extent, rounded up to a 5-smooth size when `pad` is set.
    pub(crate) fn with_extent(topology: Topology, need_x: u64, need_y: u64, pad: bool) -> Result<Self> {
        let nx = axis_size(topology.t_x(), need_x, pad)?;
        let ny = axis_size(topology.t_y(), need_y, pad)?;
        if nx
            .checked_mul(ny)
            .map(|n| n > GRID_CELL_LIMIT)
            .unwrap_or(true)
        {
            return Err(Error::InvalidParameter(format!(
                "working grid {nx} x {ny} exceeds the cell limit {GRID_CELL_LIMIT}"
            )));
        }
        Ok(EmbedGrid { nx, ny })
    }

    pub(crate) fn len(&self) -> usize {
        self.nx * self.ny
    }

    /// Linear position of a 1-based index pair; row-major in x.
    pub(crate) fn pos(&self, p: IndexPair) -> usize {
        debug_assert!(p.x as usize <= self.nx && p.y as usize <= self.ny);
        (p.x as usize - 1) * self.ny + (p.y as usize - 1)
    }

    pub(crate) fn pair_at(&self, pos: usize) -> IndexPair {
        IndexPair::new((pos / self.ny) as u32 + 1, (pos % self.ny) as u32 + 1)
    }

    /// Scatters the indicator of a shape onto the grid.
    pub(crate) fn indicator(&self, shape: &Shape) -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); self.len()];
        for &p in shape.points() {
            buf[self.pos(p)] = Complex64::new(1.0, 0.0);
        }
        buf
    }
}

fn axis_size(period: Period, need: u64, pad: bool) -> Result<usize> {
    match period {
        Period::Finite(t) => {
            debug_assert!(need <= t as u64);
            Ok(t as usize)
        }
        Period::Infinite => {
            if need > crate::topology::MAX_COORD as u64 {
                return Err(Error::InvalidParameter(format!(
                    "grid extent {need} exceeds the coordinate limit"
                )));
            }
            let n = need.max(1) as usize;
            Ok(if pad { next_smooth(n) } else { n })
        }
    }
}

/// Extent one axis of `a (+) b` can reach: the period on finite axes, the
/// sum of maxima minus one on infinite axes.
fn sum_extent(period: Period, max_a: u32, max_b: u32) -> u64 {
    match period {
        Period::Finite(t) => t as u64,
        Period::Infinite => max_a as u64 + max_b as u64 - 1,
    }
}

/// All cells of the Minkowski sum `a (+) b` together with the number of
/// pairs landing on each cell, in x-major cell order.
pub(crate) fn conv_counts(a: &Shape, b: &Shape) -> Result<(Vec<IndexPair>, Vec<u64>)> {
    if a.topology() != b.topology() {
        return Err(Error::TopologyMismatch);
    }
    let pairs = a.len() as u128 * b.len() as u128;
    if pairs <= DIRECT_PAIR_LIMIT {
        conv_counts_direct(a, b)
    } else {
        conv_counts_fft(a, b)
    }
}

pub(crate) fn conv_counts_direct(a: &Shape, b: &Shape) -> Result<(Vec<IndexPair>, Vec<u64>)> {
    let topology = a.topology();
    let mut counts: BTreeMap<IndexPair, u64> = BTreeMap::new();
    for &p in a.points() {
        for &q in b.points() {
            *counts.entry(cyclic_add(p, q, topology)?).or_insert(0) += 1;
        }
    }
    Ok(counts.into_iter().unzip())
}

pub(crate) fn conv_counts_fft(a: &Shape, b: &Shape) -> Result<(Vec<IndexPair>, Vec<u64>)> {
    let topology = a.topology();
    let grid = EmbedGrid::with_extent(
        topology,
        sum_extent(topology.t_x(), a.max_x(), b.max_x()),
        sum_extent(topology.t_y(), a.max_y(), b.max_y()),
        true,
    )?;
    let fft = Fft2::new(grid.nx, grid.ny);
    let mut fa = grid.indicator(a);
    let mut fb = grid.indicator(b);
    fft.forward(&mut fa);
    fft.forward(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft.inverse(&mut fa);

    let mut cells = Vec::new();
    let mut counts = Vec::new();
    for (pos, v) in fa.iter().enumerate() {
        let c = round_count(*v)?;
        if c > 0 {
            cells.push(grid.pair_at(pos));
            counts.push(c);
        }
    }
    Ok((cells, counts))
}

/// The origin set: cells `k` of the region such that every window cell
/// translated by `k` stays inside the region. Returned in x-major order.
pub(crate) fn erosion_origins(region: &Shape, window: &Shape) -> Result<Vec<IndexPair>> {
    let pairs = region.len() as u128 * window.len() as u128;
    if pairs <= DIRECT_PAIR_LIMIT {
        erosion_origins_direct(region, window)
    } else {
        erosion_origins_fft(region, window)
    }
}

pub(crate) fn erosion_origins_direct(region: &Shape, window: &Shape) -> Result<Vec<IndexPair>> {
    let topology = region.topology();
    let mut origins = Vec::new();
    for &k in region.points() {
        let fits = window.points().iter().all(|&l| {
            cyclic_add(l, k, topology)
                .map(|c| region.contains(c))
                .unwrap_or(false)
        });
        if fits {
            origins.push(k);
        }
    }
    Ok(origins)
}

pub(crate) fn erosion_origins_fft(region: &Shape, window: &Shape) -> Result<Vec<IndexPair>> {
    let topology = region.topology();
    // The correlation probes sums l (+) k for arbitrary region cells k, so
    // the grid must be wide enough that out-of-region sums cannot wrap
    // around and hit a region cell on an infinite axis.
    let grid = EmbedGrid::with_extent(
        topology,
        sum_extent(topology.t_x(), region.max_x(), window.max_x()),
        sum_extent(topology.t_y(), region.max_y(), window.max_y()),
        true,
    )?;
    let fft = Fft2::new(grid.nx, grid.ny);
    let mut fr = grid.indicator(region);
    let mut fw = grid.indicator(window);
    fft.forward(&mut fr);
    fft.forward(&mut fw);
    for (x, y) in fr.iter_mut().zip(&fw) {
        *x *= y.conj();
    }
    fft.inverse(&mut fr);

    let want = window.len() as u64;
    let mut origins = Vec::new();
    for &k in region.points() {
        if round_count(fr[grid.pos(k)])? == want {
            origins.push(k);
        }
    }
    Ok(origins)
}

fn round_count(v: Complex64) -> Result<u64> {
    let rounded = v.re.round();
    if (v.re - rounded).abs() > COUNT_ROUND_TOL || v.im.abs() > COUNT_ROUND_TOL || rounded < -0.5 {
        return Err(Error::NumericalFailure(format!(
            "indicator FFT produced a non-integer count ({} + {}i)",
            v.re, v.im
        )));
    }
    Ok(rounded.max(0.0) as u64)
}
