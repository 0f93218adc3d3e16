//! Grid topologies and cyclic index arithmetic.
//!
//! Every axis is either infinite (ordinary integer indexing) or circular
//! with a finite period `T`, giving planar, cylindrical and toroidal grids.
//! Indices are 1-based on both axes. Addition of two index pairs is
//! component-wise and wraps on circular axes:
//!
//! ```text
//! a (+) b = ((a_x + b_x - 2) mod T_x + 1, (a_y + b_y - 2) mod T_y + 1)
//! ```
//!
//! with `v mod inf = v` on infinite axes, so `(1, 1)` is the identity.

use std::fmt;

use crate::error::{Error, Result};

/// Largest admissible coordinate and finite period.
pub const MAX_COORD: u32 = i32::MAX as u32;

/// Extent of one axis: circular with a finite period, or unbounded.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Period {
    Finite(u32),
    Infinite,
}

impl Period {
    pub fn is_finite(self) -> bool {
        matches!(self, Period::Finite(_))
    }

    /// The period as a number, or `None` on an infinite axis.
    pub fn get(self) -> Option<u32> {
        match self {
            Period::Finite(t) => Some(t),
            Period::Infinite => None,
        }
    }

    /// Largest coordinate an index may take on this axis.
    pub fn max_coord(self) -> u32 {
        match self {
            Period::Finite(t) => t,
            Period::Infinite => MAX_COORD,
        }
    }

    fn validate(self) -> Result<()> {
        if let Period::Finite(t) = self {
            if t == 0 || t > MAX_COORD {
                return Err(Error::InvalidPeriod {
                    value: t as u64,
                    max: MAX_COORD as u64,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Finite(t) => write!(f, "{t}"),
            Period::Infinite => write!(f, "inf"),
        }
    }
}

/// Periods of the two axes. Both infinite: planar. One finite: cylindrical.
/// Both finite: toroidal.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Topology {
    t_x: Period,
    t_y: Period,
}

/// Coarse classification of a [`Topology`] by how many axes are circular.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum TopologyClass {
    Planar,
    Cylindrical,
    Toroidal,
}

impl Topology {
    pub fn new(t_x: Period, t_y: Period) -> Result<Self> {
        t_x.validate()?;
        t_y.validate()?;
        Ok(Topology { t_x, t_y })
    }

    pub fn planar() -> Self {
        Topology {
            t_x: Period::Infinite,
            t_y: Period::Infinite,
        }
    }

    /// Circular along x with period `t_x`, infinite along y.
    pub fn cylindrical_x(t_x: u32) -> Result<Self> {
        Topology::new(Period::Finite(t_x), Period::Infinite)
    }

    /// Circular along y with period `t_y`, infinite along x.
    pub fn cylindrical_y(t_y: u32) -> Result<Self> {
        Topology::new(Period::Infinite, Period::Finite(t_y))
    }

    pub fn toroidal(t_x: u32, t_y: u32) -> Result<Self> {
        Topology::new(Period::Finite(t_x), Period::Finite(t_y))
    }

    pub fn t_x(&self) -> Period {
        self.t_x
    }

    pub fn t_y(&self) -> Period {
        self.t_y
    }

    pub fn class(&self) -> TopologyClass {
        match (self.t_x.is_finite(), self.t_y.is_finite()) {
            (false, false) => TopologyClass::Planar,
            (true, true) => TopologyClass::Toroidal,
            _ => TopologyClass::Cylindrical,
        }
    }

    /// Checks that `p` is a valid index under this topology: both
    /// coordinates at least 1 and at most the period on circular axes.
    pub fn validate_pair(&self, p: IndexPair) -> Result<()> {
        check_coord('x', p.x, self.t_x)?;
        check_coord('y', p.y, self.t_y)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.t_x, self.t_y)
    }
}

fn check_coord(axis: char, value: u32, period: Period) -> Result<()> {
    let max = period.max_coord();
    if value == 0 || value > max {
        return Err(Error::InvalidCoordinate {
            axis,
            value: value as u64,
            max: max as u64,
        });
    }
    Ok(())
}

/// A 1-based grid index. The derived ordering is lexicographic with the
/// x coordinate taking priority, which is the canonical cell order used
/// for vectorization throughout the crate.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct IndexPair {
    pub x: u32,
    pub y: u32,
}

impl IndexPair {
    pub const fn new(x: u32, y: u32) -> Self {
        IndexPair { x, y }
    }

    /// The additive identity `(1, 1)`.
    pub const fn origin() -> Self {
        IndexPair { x: 1, y: 1 }
    }
}

impl fmt::Display for IndexPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Adds two index pairs under the given topology, wrapping on circular
/// axes. Errors if either input is invalid for the topology or if the sum
/// leaves `1..=MAX_COORD` on an infinite axis.
pub fn cyclic_add(a: IndexPair, b: IndexPair, topology: Topology) -> Result<IndexPair> {
    topology.validate_pair(a)?;
    topology.validate_pair(b)?;
    Ok(IndexPair {
        x: add_axis('x', a.x, b.x, topology.t_x)?,
        y: add_axis('y', a.y, b.y, topology.t_y)?,
    })
}

fn add_axis(axis: char, a: u32, b: u32, period: Period) -> Result<u32> {
    let sum = a as u64 + b as u64 - 1;
    match period {
        Period::Finite(t) => Ok(((sum - 1) % t as u64) as u32 + 1),
        Period::Infinite => {
            if sum > MAX_COORD as u64 {
                Err(Error::CoordinateOverflow {
                    axis,
                    a: a as u64,
                    b: b as u64,
                })
            } else {
                Ok(sum as u32)
            }
        }
    }
}
