//! Property tests for the algebraic invariants the whole pipeline rests
//! on: the cyclic index arithmetic forms a commutative monoid, shapes
//! behave like sets under it, and dense embedding / projection /
//! unembedding compose to the identity.
//!
//! Random inputs are derived from a seed so that every failure reproduces
//! from the printed seed alone.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shssa::embedding::{embed_dense, project_quasi_hankel, unembed};
use shssa::testkit::{fill_random, random_instance, random_topology};
use shssa::{cyclic_add, IndexPair, Period, Shape, Topology};

fn random_pair<R: Rng>(rng: &mut R, t: Topology) -> IndexPair {
    let coord = |p: Period, rng: &mut R| match p {
        Period::Finite(n) => rng.gen_range(1..=n),
        Period::Infinite => rng.gen_range(1..=1000),
    };
    IndexPair::new(coord(t.t_x(), rng), coord(t.t_y(), rng))
}

proptest! {
    #[test]
    fn cyclic_addition_is_associative_and_commutative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_topology(&mut rng);
        let (a, b, c) = (
            random_pair(&mut rng, t),
            random_pair(&mut rng, t),
            random_pair(&mut rng, t),
        );
        let ab_c = cyclic_add(cyclic_add(a, b, t).unwrap(), c, t).unwrap();
        let a_bc = cyclic_add(a, cyclic_add(b, c, t).unwrap(), t).unwrap();
        prop_assert_eq!(ab_c, a_bc);
        prop_assert_eq!(
            cyclic_add(a, b, t).unwrap(),
            cyclic_add(b, a, t).unwrap()
        );
        prop_assert_eq!(cyclic_add(a, IndexPair::origin(), t).unwrap(), a);
    }

    #[test]
    fn toroidal_translation_permutes_the_grid(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tx = rng.gen_range(2..=7u32);
        let ty = rng.gen_range(2..=7u32);
        let t = Topology::toroidal(tx, ty).unwrap();
        let delta = random_pair(&mut rng, t);
        let grid = Shape::rect(t, tx, ty).unwrap();
        let mut image: Vec<IndexPair> = grid
            .points()
            .iter()
            .map(|&p| cyclic_add(p, delta, t).unwrap())
            .collect();
        image.sort();
        image.dedup();
        prop_assert_eq!(image.as_slice(), grid.points());
    }

    #[test]
    fn minkowski_sum_is_the_set_of_pairwise_sums(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_topology(&mut rng);
        let draw = |rng: &mut ChaCha8Rng| {
            let n = rng.gen_range(1..=6);
            let pts: Vec<IndexPair> = (0..n).map(|_| random_pair(rng, t)).collect();
            Shape::from_points(t, pts).unwrap()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let sum = a.minkowski_sum(&b).unwrap();
        prop_assert!(sum.len() <= a.len() * b.len());
        for &pa in a.points() {
            for &pb in b.points() {
                prop_assert!(sum.contains(cyclic_add(pa, pb, t).unwrap()));
            }
        }
        // And nothing else.
        let mut expected: Vec<IndexPair> = a
            .points()
            .iter()
            .flat_map(|&pa| {
                b.points()
                    .iter()
                    .map(move |&pb| cyclic_add(pa, pb, t).unwrap())
            })
            .collect();
        expected.sort();
        expected.dedup();
        prop_assert_eq!(expected.as_slice(), sum.points());
    }

    #[test]
    fn vectorization_round_trips_cell_values(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        for (i, &p) in inst.region.points().iter().enumerate() {
            prop_assert_eq!(inst.data.get(p), Some(inst.data.values()[i]));
            prop_assert_eq!(inst.region.position(p), Some(i));
        }
        prop_assert_eq!(inst.data.get(IndexPair::new(2000, 2000)), None);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weights_count_every_window_origin_pair(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let total: f64 = inst.plan.weight().values().iter().sum();
        let pairs = (inst.plan.nrows() * inst.plan.ncols()) as f64;
        prop_assert_eq!(total, pairs);
        prop_assert!(inst
            .plan
            .weight()
            .values()
            .iter()
            .all(|&w| w >= 1.0 && w.fract() == 0.0));
    }

    #[test]
    fn dense_embedding_is_linear(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let other = fill_random(&inst.region, &mut rng);
        let (alpha, beta) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let combo = inst.data.scaled(alpha).plus(&other.scaled(beta)).unwrap();
        let lhs = embed_dense(&combo, &inst.plan).unwrap();
        let rhs = embed_dense(&inst.data, &inst.plan).unwrap() * alpha
            + embed_dense(&other, &inst.plan).unwrap() * beta;
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn quasi_hankel_projection_is_an_orthogonal_projection(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let (l, k) = (inst.plan.nrows(), inst.plan.ncols());
        let a = DMatrix::from_fn(l, k, |_, _| rng.gen_range(-1.0..1.0));
        let b = DMatrix::from_fn(l, k, |_, _| rng.gen_range(-1.0..1.0));
        let pa = project_quasi_hankel(&a, &inst.plan).unwrap();
        let pb = project_quasi_hankel(&b, &inst.plan).unwrap();
        // Idempotent.
        let ppa = project_quasi_hankel(&pa, &inst.plan).unwrap();
        prop_assert!((&ppa - &pa).norm() <= 1e-12 * (1.0 + pa.norm()));
        // Self-adjoint in the Frobenius inner product.
        let ip = |x: &DMatrix<f64>, y: &DMatrix<f64>| x.dot(y);
        let scale = 1.0 + a.norm() * b.norm();
        prop_assert!((ip(&pa, &b) - ip(&a, &pb)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn unembed_inverts_embedding_on_the_covered_region(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let x = embed_dense(&inst.data, &inst.plan).unwrap();
        // Trajectory matrices are quasi-Hankel already, so the projection
        // must not move them.
        let px = project_quasi_hankel(&x, &inst.plan).unwrap();
        prop_assert!((&px - &x).norm() <= 1e-12 * (1.0 + x.norm()));
        let back = unembed(&x, &inst.plan).unwrap();
        let expected = inst.data.restrict(inst.plan.covered()).unwrap();
        let diff = back.minus(&expected).unwrap().max_abs();
        prop_assert!(diff <= 1e-12 * (1.0 + expected.max_abs()));
    }
}
