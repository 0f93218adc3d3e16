//! Randomized problem instances for test suites and benchmarks.
//!
//! Everything here is deterministic given the RNG, so failures reproduce
//! from the seed alone. The generator favors awkward cases: circular axes
//! that actually wrap, regions with holes, windows that are connected but
//! not rectangular.

use std::sync::Arc;

use rand::Rng;

use crate::array::ShapedArray;
use crate::embedding::EmbeddingPlan;
use crate::shape::Shape;
use crate::topology::{cyclic_add, IndexPair, Period, Topology};

/// A region, a window admissible for it, data on the region, and the
/// resulting embedding plan.
pub struct Instance {
    pub region: Arc<Shape>,
    pub window: Shape,
    pub data: ShapedArray,
    pub plan: Arc<EmbeddingPlan>,
}

/// Uniformly picks one of the four topology classes with small periods,
/// between 4 and 9 cells per circular axis.
pub fn random_topology<R: Rng>(rng: &mut R) -> Topology {
    let period = |rng: &mut R| Period::Finite(rng.gen_range(4..=9));
    match rng.gen_range(0..4) {
        0 => Topology::planar(),
        1 => Topology::new(period(rng), Period::Infinite).unwrap(),
        2 => Topology::new(Period::Infinite, period(rng)).unwrap(),
        _ => Topology::new(period(rng), period(rng)).unwrap(),
    }
}

/// A random region: a rectangle thinned by an independent keep/drop draw
/// per cell. Circular axes span their full period so wrap-around arithmetic
/// is exercised; infinite axes get 4 to 10 cells. Returns `None` when the
/// thinning left nothing (the caller retries).
pub fn random_region<R: Rng>(rng: &mut R, topology: Topology) -> Option<Shape> {
    let extent = |p: Period, rng: &mut R| match p {
        Period::Finite(t) => t,
        Period::Infinite => rng.gen_range(4..=10),
    };
    let nx = extent(topology.t_x(), rng);
    let ny = extent(topology.t_y(), rng);
    let density = rng.gen_range(0.55..0.9);
    let mut points = Vec::new();
    for x in 1..=nx {
        for y in 1..=ny {
            if rng.gen_bool(density) {
                points.push(IndexPair::new(x, y));
            }
        }
    }
    if points.is_empty() {
        return None;
    }
    Shape::from_points(topology, points).ok()
}

/// Grows a connected window inside the region from a random seed cell,
/// adding random in-region neighbors until the target size is reached or
/// the frontier dies out.
pub fn random_window<R: Rng>(rng: &mut R, region: &Shape) -> Shape {
    let topology = region.topology();
    let target = rng.gen_range(2..=7).min(region.len());
    let start = region.points()[rng.gen_range(0..region.len())];
    let mut cells = vec![start];
    let mut frontier = vec![start];
    let steps = [
        IndexPair::new(2, 1),
        IndexPair::new(1, 2),
        IndexPair::new(topology.t_x().max_coord(), 1),
        IndexPair::new(1, topology.t_y().max_coord()),
    ];
    while cells.len() < target && !frontier.is_empty() {
        let at = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        for &s in &steps {
            // A step of `max_coord` on an infinite axis overflows instead
            // of acting as -1; those directions simply don't expand.
            let Ok(q) = cyclic_add(at, s, topology) else {
                continue;
            };
            if region.contains(q) && !cells.contains(&q) && rng.gen_bool(0.8) {
                cells.push(q);
                frontier.push(q);
                if cells.len() == target {
                    break;
                }
            }
        }
    }
    Shape::from_points(topology, cells).unwrap()
}

/// Fills a shape with independent uniform values in `[-1, 1)`.
pub fn fill_random<R: Rng>(shape: &Arc<Shape>, rng: &mut R) -> ShapedArray {
    let values = (0..shape.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ShapedArray::new(shape.clone(), values).unwrap()
}

/// Draws instances until one yields an embedding plan with a trajectory
/// matrix of at least 2 x 2, falling back to a fixed planar rectangle if
/// 200 draws all fail (practically unreachable, but keeps the function
/// total).
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    for _ in 0..200 {
        let topology = random_topology(rng);
        let Some(region) = random_region(rng, topology) else {
            continue;
        };
        let region = Arc::new(region);
        let window = random_window(rng, &region);
        let Ok(plan) = EmbeddingPlan::new(&region, &window) else {
            continue;
        };
        if plan.nrows() < 2 || plan.ncols() < 2 {
            continue;
        }
        let data = fill_random(&region, rng);
        return Instance {
            region,
            window,
            data,
            plan: Arc::new(plan),
        };
    }
    let region = Arc::new(Shape::rect(Topology::planar(), 6, 5).unwrap());
    let window = Shape::rect(Topology::planar(), 2, 2).unwrap();
    let plan = Arc::new(EmbeddingPlan::new(&region, &window).unwrap());
    let data = fill_random(&region, rng);
    Instance {
        region,
        window,
        data,
        plan,
    }
}
