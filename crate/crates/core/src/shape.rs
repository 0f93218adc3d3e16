//! Finite index sets over a topology.
//!
//! A [`Shape`] is a finite, non-empty set of 1-based grid indices together
//! with the topology they live on. Regions, windows and origin sets are all
//! shapes; none of them has to be rectangular or even connected. Points are
//! stored sorted in x-major lexicographic order, which fixes the cell order
//! used when shapes are vectorized.

use crate::error::{Error, Result};
use crate::topology::{cyclic_add, IndexPair, Period, Topology};

/// Pair count above which [`Shape::minkowski_sum`] switches from direct
/// enumeration to FFT-based indicator convolution.
const DIRECT_PAIR_LIMIT: u128 = 1_000_000;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Shape {
    topology: Topology,
    points: Vec<IndexPair>,
}

impl Shape {
    /// Builds a shape from arbitrary points. Points are validated against
    /// the topology, sorted and deduplicated; the set must be non-empty.
    pub fn from_points(
        topology: Topology,
        points: impl IntoIterator<Item = IndexPair>,
    ) -> Result<Self> {
        let mut pts: Vec<IndexPair> = points.into_iter().collect();
        for p in &pts {
            topology.validate_pair(*p)?;
        }
        pts.sort_unstable();
        pts.dedup();
        if pts.is_empty() {
            return Err(Error::EmptyShape);
        }
        Ok(Shape {
            topology,
            points: pts,
        })
    }

    /// Already sorted, deduplicated, validated points. Internal shortcut.
    pub(crate) fn from_sorted_unchecked(topology: Topology, points: Vec<IndexPair>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(!points.is_empty());
        Shape { topology, points }
    }

    /// An `n_x` by `n_y` rectangle with its lower corner at `origin`.
    /// The rectangle must fit without wrapping; on a circular axis the
    /// extent may equal the period, which yields a full band.
    pub fn rect_at(topology: Topology, origin: IndexPair, n_x: u32, n_y: u32) -> Result<Self> {
        if n_x == 0 || n_y == 0 {
            return Err(Error::EmptyShape);
        }
        topology.validate_pair(origin)?;
        let far = IndexPair::new(
            checked_far('x', origin.x, n_x, topology.t_x())?,
            checked_far('y', origin.y, n_y, topology.t_y())?,
        );
        let mut points = Vec::with_capacity(n_x as usize * n_y as usize);
        for x in origin.x..=far.x {
            for y in origin.y..=far.y {
                points.push(IndexPair::new(x, y));
            }
        }
        Ok(Shape { topology, points })
    }

    /// An `n_x` by `n_y` rectangle anchored at `(1, 1)`.
    pub fn rect(topology: Topology, n_x: u32, n_y: u32) -> Result<Self> {
        Shape::rect_at(topology, IndexPair::origin(), n_x, n_y)
    }

    /// The 1D segment `{1..=n} x {1}`.
    pub fn segment(topology: Topology, n: u32) -> Result<Self> {
        Shape::rect(topology, n, 1)
    }

    /// A 1D segment `{1..=n} x {1}` with the listed x positions removed,
    /// for series with missing observations.
    pub fn segment_with_gaps(topology: Topology, n: u32, gaps: &[u32]) -> Result<Self> {
        for &g in gaps {
            if g == 0 || g > n {
                return Err(Error::InvalidParameter(format!(
                    "gap position {g} is outside 1..={n}"
                )));
            }
        }
        Shape::from_points(
            topology,
            (1..=n)
                .filter(|x| !gaps.contains(x))
                .map(|x| IndexPair::new(x, 1)),
        )
    }

    /// Several 1D series stacked as rows: series `j` (1-based) occupies
    /// `{1..=lengths[j-1]} x {j}`. Zero lengths leave empty rows.
    pub fn stacked_series(topology: Topology, lengths: &[u32]) -> Result<Self> {
        let mut points = Vec::new();
        for (row, &len) in lengths.iter().enumerate() {
            let y = row as u32 + 1;
            for x in 1..=len {
                points.push(IndexPair::new(x, y));
            }
        }
        Shape::from_points(topology, points)
    }

    /// A Euclidean disc of the given radius around `center`. Cells whose
    /// integer offset `(dx, dy)` from the center satisfies
    /// `dx^2 + dy^2 <= radius^2` belong to the disc. The disc wraps on
    /// circular axes and is clipped at the boundary of an infinite axis.
    pub fn disc(topology: Topology, center: IndexPair, radius: f64) -> Result<Self> {
        topology.validate_pair(center)?;
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "disc radius {radius} must be finite and non-negative"
            )));
        }
        let r = radius.floor() as i64;
        let r2 = radius * radius;
        let mut points = Vec::new();
        for dx in -r..=r {
            for dy in -r..=r {
                if (dx * dx + dy * dy) as f64 > r2 {
                    continue;
                }
                let x = match offset_coord('x', center.x, dx, topology.t_x())? {
                    Some(x) => x,
                    None => continue,
                };
                let y = match offset_coord('y', center.y, dy, topology.t_y())? {
                    Some(y) => y,
                    None => continue,
                };
                points.push(IndexPair::new(x, y));
            }
        }
        Shape::from_points(topology, points)
    }

    /// Builds a shape from a boolean mask: row `i` (0-based) maps to
    /// `x = i + 1`, column `j` to `y = j + 1`, and `true` cells are kept.
    pub fn from_mask_rows(topology: Topology, rows: &[Vec<bool>]) -> Result<Self> {
        let mut points = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &on) in row.iter().enumerate() {
                if on {
                    points.push(IndexPair::new(i as u32 + 1, j as u32 + 1));
                }
            }
        }
        Shape::from_points(topology, points)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        // Shapes are non-empty by construction.
        false
    }

    /// The points in x-major lexicographic order.
    pub fn points(&self) -> &[IndexPair] {
        &self.points
    }

    pub fn contains(&self, p: IndexPair) -> bool {
        self.points.binary_search(&p).is_ok()
    }

    /// Position of `p` in the canonical cell order, if present.
    pub fn position(&self, p: IndexPair) -> Option<usize> {
        self.points.binary_search(&p).ok()
    }

    pub fn is_subset_of(&self, other: &Shape) -> bool {
        self.topology == other.topology && self.points.iter().all(|p| other.contains(*p))
    }

    /// Points of `self` that are not in `other`.
    pub fn difference(&self, other: &Shape) -> Vec<IndexPair> {
        self.points
            .iter()
            .copied()
            .filter(|p| !other.contains(*p))
            .collect()
    }

    pub fn min_x(&self) -> u32 {
        self.points.iter().map(|p| p.x).min().unwrap()
    }

    pub fn max_x(&self) -> u32 {
        self.points.iter().map(|p| p.x).max().unwrap()
    }

    pub fn min_y(&self) -> u32 {
        self.points.iter().map(|p| p.y).min().unwrap()
    }

    pub fn max_y(&self) -> u32 {
        self.points.iter().map(|p| p.y).max().unwrap()
    }

    /// Element-wise sum of the two point sets under the shared topology.
    /// Falls back to indicator convolution when the pair count is large.
    pub fn minkowski_sum(&self, other: &Shape) -> Result<Shape> {
        if self.topology != other.topology {
            return Err(Error::TopologyMismatch);
        }
        let pairs = self.len() as u128 * other.len() as u128;
        if pairs <= DIRECT_PAIR_LIMIT {
            let mut points = Vec::new();
            for &a in &self.points {
                for &b in &other.points {
                    points.push(cyclic_add(a, b, self.topology)?);
                }
            }
            points.sort_unstable();
            points.dedup();
            Ok(Shape::from_sorted_unchecked(self.topology, points))
        } else {
            let (cells, _) = crate::grid::conv_counts(self, other)?;
            Ok(Shape::from_sorted_unchecked(self.topology, cells))
        }
    }

    /// Translates every point by `delta` (the Minkowski sum with a
    /// singleton).
    pub fn shift(&self, delta: IndexPair) -> Result<Shape> {
        let mut points = Vec::with_capacity(self.len());
        for &p in &self.points {
            points.push(cyclic_add(p, delta, self.topology)?);
        }
        points.sort_unstable();
        Ok(Shape::from_sorted_unchecked(self.topology, points))
    }

    /// Whether some translate of the `size` by `size` square lies entirely
    /// inside the shape.
    pub fn contains_square(&self, size: u32) -> bool {
        if size == 0 {
            return true;
        }
        if size as usize * size as usize > self.len() {
            return false;
        }
        'anchor: for &a in &self.points {
            for dx in 0..size {
                for dy in 0..size {
                    match cyclic_add(a, IndexPair::new(dx + 1, dy + 1), self.topology) {
                        Ok(q) if self.contains(q) => {}
                        _ => continue 'anchor,
                    }
                }
            }
            return true;
        }
        false
    }
}

fn checked_far(axis: char, origin: u32, n: u32, period: Period) -> Result<u32> {
    let far = origin as u64 + n as u64 - 1;
    let max = period.max_coord() as u64;
    if far > max {
        return Err(Error::InvalidCoordinate {
            axis,
            value: far,
            max,
        });
    }
    Ok(far as u32)
}

/// Applies a signed offset to one coordinate: wraps on circular axes,
/// clips (returns `None`) below 1 on infinite axes, errors above the
/// coordinate limit.
fn offset_coord(axis: char, base: u32, delta: i64, period: Period) -> Result<Option<u32>> {
    let v = base as i64 + delta;
    match period {
        Period::Finite(t) => {
            let t = t as i64;
            Ok(Some(((v - 1).rem_euclid(t) + 1) as u32))
        }
        Period::Infinite => {
            if v < 1 {
                Ok(None)
            } else if v > crate::topology::MAX_COORD as i64 {
                Err(Error::InvalidCoordinate {
                    axis,
                    value: v as u64,
                    max: crate::topology::MAX_COORD as u64,
                })
            } else {
                Ok(Some(v as u32))
            }
        }
    }
}

/// Parses a 0/1 mask in CSV form into mask rows for
/// [`Shape::from_mask_rows`]. Blank lines are skipped; anything other
/// than `0` or `1` in a cell is an error naming the offending line.
pub fn parse_mask_csv(text: &str) -> Result<Vec<Vec<bool>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            match cell.trim() {
                "0" => row.push(false),
                "1" => row.push(true),
                other => {
                    return Err(Error::Format {
                        line: i + 1,
                        message: format!("mask cell must be 0 or 1, got {other:?}"),
                    })
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: u32, y: u32) -> IndexPair {
        IndexPair::new(x, y)
    }

    #[test]
    fn rect_points_come_out_in_x_major_order() {
        let s = Shape::rect(Topology::planar(), 3, 2).unwrap();
        assert_eq!(
            s.points(),
            &[p(1, 1), p(1, 2), p(2, 1), p(2, 2), p(3, 1), p(3, 2)]
        );
    }

    #[test]
    fn rect_may_fill_a_circular_axis_but_not_exceed_it() {
        let t = Topology::cylindrical_x(6).unwrap();
        assert_eq!(Shape::rect(t, 6, 3).unwrap().len(), 18);
        assert!(matches!(
            Shape::rect(t, 7, 1),
            Err(Error::InvalidCoordinate { axis: 'x', .. })
        ));
    }

    #[test]
    fn from_points_sorts_dedups_and_validates() {
        let t = Topology::planar();
        let s = Shape::from_points(t, [p(2, 1), p(1, 3), p(2, 1), p(1, 2)]).unwrap();
        assert_eq!(s.points(), &[p(1, 2), p(1, 3), p(2, 1)]);
        assert!(matches!(
            Shape::from_points(t, [p(0, 1)]),
            Err(Error::InvalidCoordinate { .. })
        ));
        assert!(matches!(
            Shape::from_points(t, std::iter::empty()),
            Err(Error::EmptyShape)
        ));
    }

    #[test]
    fn segment_with_gaps_drops_listed_positions() {
        let s = Shape::segment_with_gaps(Topology::planar(), 5, &[3]).unwrap();
        assert_eq!(s.points(), &[p(1, 1), p(2, 1), p(4, 1), p(5, 1)]);
        assert!(Shape::segment_with_gaps(Topology::planar(), 5, &[6]).is_err());
    }

    #[test]
    fn stacked_series_places_each_series_in_its_own_row() {
        let s = Shape::stacked_series(Topology::planar(), &[2, 0, 3]).unwrap();
        assert_eq!(
            s.points(),
            &[p(1, 1), p(1, 3), p(2, 1), p(2, 3), p(3, 3)]
        );
    }

    #[test]
    fn unit_disc_is_the_euclidean_cross() {
        let s = Shape::disc(Topology::planar(), p(2, 2), 1.0).unwrap();
        assert_eq!(s.points(), &[p(1, 2), p(2, 1), p(2, 2), p(2, 3), p(3, 2)]);
        // Diagonal neighbours enter only once the radius passes sqrt(2).
        let s = Shape::disc(Topology::planar(), p(2, 2), 1.4).unwrap();
        assert_eq!(s.len(), 5);
        let s = Shape::disc(Topology::planar(), p(2, 2), 1.5).unwrap();
        assert_eq!(s.len(), 9);
    }

    #[test]
    fn disc_clips_at_planar_boundaries_and_wraps_on_tori() {
        let s = Shape::disc(Topology::planar(), p(1, 1), 1.0).unwrap();
        assert_eq!(s.points(), &[p(1, 1), p(1, 2), p(2, 1)]);
        let t = Topology::toroidal(4, 4).unwrap();
        let s = Shape::disc(t, p(1, 1), 1.0).unwrap();
        assert_eq!(s.points(), &[p(1, 1), p(1, 2), p(1, 4), p(2, 1), p(4, 1)]);
    }

    #[test]
    fn minkowski_sum_on_a_cylinder_merges_wrapped_cells() {
        let t = Topology::cylindrical_x(4).unwrap();
        let a = Shape::from_points(t, [p(1, 1), p(4, 1)]).unwrap();
        let b = Shape::from_points(t, [p(1, 1), p(2, 1)]).unwrap();
        let sum = a.minkowski_sum(&b).unwrap();
        assert_eq!(sum.points(), &[p(1, 1), p(2, 1), p(4, 1)]);
    }

    #[test]
    fn minkowski_sum_of_planar_segments_is_a_longer_segment() {
        let t = Topology::planar();
        let a = Shape::segment(t, 3).unwrap();
        let sum = a.minkowski_sum(&a).unwrap();
        assert_eq!(sum.points(), Shape::segment(t, 5).unwrap().points());
    }

    #[test]
    fn shift_translates_and_wraps() {
        let t = Topology::toroidal(4, 4).unwrap();
        let s = Shape::from_points(t, [p(3, 1), p(4, 1)]).unwrap();
        let shifted = s.shift(p(2, 1)).unwrap();
        assert_eq!(shifted.points(), &[p(1, 1), p(4, 1)]);
    }

    #[test]
    fn subset_and_position_queries() {
        let s = Shape::rect(Topology::planar(), 2, 2).unwrap();
        let sub = Shape::from_points(Topology::planar(), [p(2, 1)]).unwrap();
        assert!(sub.is_subset_of(&s));
        assert!(!s.is_subset_of(&sub));
        assert_eq!(s.position(p(2, 1)), Some(2));
        assert_eq!(s.position(p(3, 3)), None);
        assert_eq!(s.difference(&sub), vec![p(1, 1), p(1, 2), p(2, 2)]);
    }

    #[test]
    fn contains_square_checks_all_translates() {
        let s = Shape::rect(Topology::planar(), 3, 2).unwrap();
        assert!(s.contains_square(2));
        assert!(!s.contains_square(3));
        // An L of width 2 still holds a 2x2 square.
        let l = Shape::from_points(
            Topology::planar(),
            Shape::rect(Topology::planar(), 3, 3)
                .unwrap()
                .points()
                .iter()
                .copied()
                .filter(|q| *q != p(3, 3)),
        )
        .unwrap();
        assert!(l.contains_square(2));
        assert!(!l.contains_square(3));
    }

    #[test]
    fn mask_csv_round_trip() {
        let rows = parse_mask_csv("1,0,1\n0,1,0\n").unwrap();
        let s = Shape::from_mask_rows(Topology::planar(), &rows).unwrap();
        assert_eq!(s.points(), &[p(1, 1), p(1, 3), p(2, 2)]);
        assert!(matches!(
            parse_mask_csv("1,2\n"),
            Err(Error::Format { line: 1, .. })
        ));
    }
}
