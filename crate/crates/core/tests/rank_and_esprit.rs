//! Round trips between the exponential-sum generator, the shaped rank of
//! the generated arrays, and the frequency estimates recovered from them.
//! All signals here are noiseless, so recovery is exact up to solver
//! precision and everything is checked against the known generators.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shssa::esprit::{
    esprit, pair_and_extract, shift_sets, shifted_matrices, solve_shift_matrix, EspritMethod,
    EspritOptions,
};
use shssa::rank_model::{
    cosine_pair, dft_components, generate, shaped_rank, ExponentialComponent, PolyTerm,
};
use shssa::{decompose, DecomposeOptions, Error, IndexPair, Shape, ShapedArray, Topology};

fn planar_region(nx: u32, ny: u32) -> Shape {
    Shape::rect(Topology::planar(), nx, ny).unwrap()
}

/// Greedy one-to-one matching of estimated root pairs to generator root
/// pairs; panics if any estimate has no generator within `tol`.
fn assert_pairs_match(
    est: &[(Complex64, Complex64)],
    truth: &[(Complex64, Complex64)],
    tol: f64,
) {
    assert_eq!(
        est.len(),
        truth.len(),
        "estimated {} pairs, expected {}",
        est.len(),
        truth.len()
    );
    let mut used = vec![false; truth.len()];
    for e in est {
        let hit = truth
            .iter()
            .enumerate()
            .position(|(j, t)| !used[j] && (e.0 - t.0).norm() + (e.1 - t.1).norm() <= tol);
        match hit {
            Some(j) => used[j] = true,
            None => panic!("estimate ({}, {}) matches no generator within {tol:.1e}", e.0, e.1),
        }
    }
}

/// Two damped planar cosines and the window set used across the recovery
/// tests; rank 4, both x frequencies positive.
fn two_cosine_signal() -> (ShapedArray, Vec<(Complex64, Complex64)>) {
    let region = planar_region(30, 30);
    let a = cosine_pair(0.10, 0.07, 1.0, 0.3, -0.010, -0.005);
    let b = cosine_pair(0.22, 0.15, 0.7, -1.1, 0.008, 0.0);
    let arr = generate(&[a[0].clone(), a[1].clone(), b[0].clone(), b[1].clone()], &region).unwrap();
    let truth = vec![(a[0].mu, a[0].nu), (b[0].mu, b[0].nu)];
    (arr, truth)
}

// ---------------------------------------------------------------- rank --

#[test]
fn three_distinct_products_have_rank_three() {
    let region = planar_region(10, 10);
    let c = |mx: f64, my: f64, ax| {
        ExponentialComponent::constant(
            Complex64::new(mx, 0.0),
            Complex64::new(my, 0.0),
            Complex64::new(ax, 0.0),
        )
    };
    let comps = [c(0.95, 1.02, 1.0), c(0.80, 0.90, 0.5), c(1.05, 0.70, 0.25)];
    let arr = generate(&comps, &region).unwrap();
    let window = Shape::rect(Topology::planar(), 4, 4).unwrap();
    assert_eq!(shaped_rank(&arr, &window).unwrap(), 3);
}

#[test]
fn polynomial_modulation_on_a_cylinder_doubles_the_component_rank() {
    // One conjugate pair with a degree-1 polynomial in the non-circular
    // coordinate: each member contributes rank 2, total 4. The x root is
    // pinned to a 6th root of unity by the topology.
    let t = Topology::cylindrical_x(6).unwrap();
    let region = Shape::rect(t, 6, 12).unwrap();
    let mu = Complex64::from_polar(1.0, TAU / 6.0);
    let nu = Complex64::new(0.9, 0.0);
    let poly = vec![
        PolyTerm {
            dx: 0,
            dy: 0,
            coeff: Complex64::new(0.4, 0.1),
        },
        PolyTerm {
            dx: 0,
            dy: 1,
            coeff: Complex64::new(1.0, -0.2),
        },
    ];
    let c = ExponentialComponent::with_poly(mu, nu, poly);
    let arr = generate(&[c.clone(), c.conjugate()], &region).unwrap();

    let window = Shape::rect(t, 4, 4).unwrap();
    assert_eq!(shaped_rank(&arr, &window).unwrap(), 4);

    // The decomposition agrees: sigma_5 / sigma_1 is negligible.
    let dec = decompose(&arr, &window, &DecomposeOptions::new(5)).unwrap();
    let s = dec.sigmas();
    assert!(s[4] / s[0] < 1e-8, "sigma_5/sigma_1 = {:.3e}", s[4] / s[0]);
    assert!(s[3] / s[0] > 1e-6, "rank collapsed below 4");
}

#[test]
fn toroidal_component_count_equals_the_shaped_rank() {
    let t = Topology::toroidal(8, 6).unwrap();
    let region = Shape::rect(t, 8, 6).unwrap();
    let pair = cosine_pair(0.25, 0.0, 2.0, 0.4, 0.0, 0.0);
    let constant = ExponentialComponent::constant(
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(3.0, 0.0),
    );
    let arr = generate(&[pair[0].clone(), pair[1].clone(), constant], &region).unwrap();

    let bins = dft_components(&arr).unwrap();
    assert_eq!(bins.len(), 3);

    let window = Shape::rect(t, 4, 3).unwrap();
    assert_eq!(shaped_rank(&arr, &window).unwrap(), 3);

    // The bins regenerate the array.
    let back = generate(&bins, &region).unwrap();
    assert!(back.minus(&arr).unwrap().max_abs() <= 1e-10 * (1.0 + arr.max_abs()));
}

#[test]
fn rank_is_stable_across_qualifying_windows() {
    let region = planar_region(14, 14);
    let pair = cosine_pair(0.18, 0.11, 1.0, 0.0, -0.02, 0.01);
    let arr = generate(&pair, &region).unwrap();
    let t = Topology::planar();
    let windows = [
        Shape::rect(t, 3, 3).unwrap(),
        Shape::rect(t, 5, 4).unwrap(),
        Shape::disc(t, IndexPair::new(4, 4), 2.0).unwrap(),
    ];
    for w in &windows {
        assert_eq!(shaped_rank(&arr, w).unwrap(), 2);
    }
}

// -------------------------------------------------------------- esprit --

#[test]
fn planar_damped_cosines_are_recovered_exactly() {
    let (arr, truth) = two_cosine_signal();
    let window = Shape::rect(Topology::planar(), 8, 8).unwrap();
    let out = esprit(&arr, &window, &EspritOptions::new(4)).unwrap();
    assert!(out.diagnostics.window_square_ok);
    assert!(out.diagnostics.origin_square_ok);
    assert!(!out.diagnostics.degenerate);
    let est: Vec<(Complex64, Complex64)> =
        out.components.iter().map(|c| (c.mu, c.nu)).collect();
    assert_pairs_match(&est, &truth, 1e-6);
}

#[test]
fn the_shift_relation_is_satisfied_to_working_precision() {
    let (arr, _) = two_cosine_signal();
    let window = Shape::rect(Topology::planar(), 8, 8).unwrap();
    let dec = decompose(&arr, &window, &DecomposeOptions::new(4)).unwrap();
    let sets = shift_sets(&window).unwrap();
    let basis: Vec<&ShapedArray> = dec.triples.iter().map(|t| &t.u).collect();
    let sm = shifted_matrices(&basis, &sets).unwrap();

    for (p, q) in [(&sm.p_x, &sm.q_x), (&sm.p_y, &sm.q_y)] {
        let m = solve_shift_matrix(p, q, EspritMethod::LeastSquares).unwrap();
        let residual = (p * &m - q).norm();
        assert!(
            residual <= 1e-10 * (1.0 + q.norm()),
            "shift relation residual {residual:.3e}"
        );
    }
}

#[test]
fn ls_and_tls_agree_on_noiseless_data() {
    let (arr, truth) = two_cosine_signal();
    let window = Shape::rect(Topology::planar(), 8, 8).unwrap();
    let mut opts = EspritOptions::new(4);
    let ls = esprit(&arr, &window, &opts).unwrap();
    opts.method = EspritMethod::TotalLeastSquares;
    let tls = esprit(&arr, &window, &opts).unwrap();
    let to_vec = |o: &shssa::EspritOutput| -> Vec<(Complex64, Complex64)> {
        o.pairs.clone()
    };
    assert_pairs_match(&to_vec(&ls), &to_vec(&tls), 1e-8);
    let est: Vec<(Complex64, Complex64)> =
        tls.components.iter().map(|c| (c.mu, c.nu)).collect();
    assert_pairs_match(&est, &truth, 1e-6);
}

#[test]
fn root_estimates_survive_basis_mixing() {
    let (arr, _) = two_cosine_signal();
    let window = Shape::rect(Topology::planar(), 8, 8).unwrap();
    let dec = decompose(&arr, &window, &DecomposeOptions::new(4)).unwrap();
    let sets = shift_sets(&window).unwrap();

    let chain = |basis: &[ShapedArray]| {
        let refs: Vec<&ShapedArray> = basis.iter().collect();
        let sm = shifted_matrices(&refs, &sets).unwrap();
        let m_x = solve_shift_matrix(&sm.p_x, &sm.q_x, EspritMethod::LeastSquares).unwrap();
        let m_y = solve_shift_matrix(&sm.p_y, &sm.q_y, EspritMethod::LeastSquares).unwrap();
        pair_and_extract(&m_x, &m_y).unwrap().pairs
    };

    let plain: Vec<ShapedArray> = dec.triples.iter().map(|t| t.u.clone()).collect();
    let reference = chain(&plain);

    // A deterministic well-conditioned mixing matrix: orthogonal factor
    // times a mild diagonal stretch.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let raw = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
    let qr = raw.qr();
    let stretch = [1.0, 1.4, 0.8, 1.1];
    let g = qr.q() * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&stretch));

    let mixed: Vec<ShapedArray> = (0..4)
        .map(|k| {
            let mut vals = vec![0.0; plain[0].values().len()];
            for j in 0..4 {
                for (dst, &src) in vals.iter_mut().zip(plain[j].values()) {
                    *dst += g[(j, k)] * src;
                }
            }
            ShapedArray::new(plain[0].shape_arc().clone(), vals).unwrap()
        })
        .collect();
    let remixed = chain(&mixed);

    assert_pairs_match(&remixed, &reference, 1e-8);
}

#[test]
fn disc_and_l_shaped_windows_recover_the_same_roots() {
    let (arr, truth) = two_cosine_signal();
    let t = Topology::planar();

    // Disc of radius 3 contains the required 5x5 square for r = 4.
    let disc = Shape::disc(t, IndexPair::new(5, 5), 3.0).unwrap();
    let out = esprit(&arr, &disc, &EspritOptions::new(4)).unwrap();
    assert!(out.diagnostics.window_square_ok);
    let est: Vec<(Complex64, Complex64)> =
        out.components.iter().map(|c| (c.mu, c.nu)).collect();
    assert_pairs_match(&est, &truth, 1e-6);

    // L: a 6x6 block with a 6x3 arm.
    let block = Shape::rect(t, 6, 6).unwrap();
    let arm: Vec<IndexPair> = (7..=12)
        .flat_map(|x| (1..=3).map(move |y| IndexPair::new(x, y)))
        .collect();
    let l_window =
        Shape::from_points(t, block.points().iter().copied().chain(arm)).unwrap();
    let out = esprit(&arr, &l_window, &EspritOptions::new(4)).unwrap();
    assert!(out.diagnostics.window_square_ok);
    let est: Vec<(Complex64, Complex64)> =
        out.components.iter().map(|c| (c.mu, c.nu)).collect();
    assert_pairs_match(&est, &truth, 1e-6);
}

#[test]
fn circular_roots_of_unity_are_recovered_through_the_wrap() {
    let t = Topology::cylindrical_x(12).unwrap();
    let region = Shape::rect(t, 12, 20).unwrap();
    let pair = cosine_pair(1.0 / 12.0, 0.09, 1.0, 0.7, 0.0, -0.01);
    let arr = generate(&pair, &region).unwrap();

    // Full circular band: every window cell keeps its x neighbor.
    let window = Shape::rect(t, 12, 5).unwrap();
    let sets = shift_sets(&window).unwrap();
    assert_eq!(sets.m_x().len(), window.len());

    let out = esprit(&arr, &window, &EspritOptions::new(2)).unwrap();
    assert_eq!(out.components.len(), 1);
    let c = &out.components[0];
    assert!((c.mu - pair[0].mu).norm() < 1e-6);
    assert!((c.nu - pair[0].nu).norm() < 1e-6);
    assert!((c.mu.norm() - 1.0).abs() < 1e-9, "circular root must stay on the unit circle");
    assert!((c.period_x.unwrap() - 12.0).abs() < 1e-6);
}

#[test]
fn row_space_chain_finds_the_same_roots() {
    // Factor vectors live on the origin set and satisfy the same shift
    // relations with the same roots; running the chain on them must give
    // the same pair multiset.
    let (arr, truth) = two_cosine_signal();
    let window = Shape::rect(Topology::planar(), 8, 8).unwrap();
    let dec = decompose(&arr, &window, &DecomposeOptions::new(4)).unwrap();

    let origin_sets = shift_sets(dec.plan().origins()).unwrap();
    let basis: Vec<&ShapedArray> = dec.triples.iter().map(|t| &t.v).collect();
    let sm = shifted_matrices(&basis, &origin_sets).unwrap();
    let m_x = solve_shift_matrix(&sm.p_x, &sm.q_x, EspritMethod::LeastSquares).unwrap();
    let m_y = solve_shift_matrix(&sm.p_y, &sm.q_y, EspritMethod::LeastSquares).unwrap();
    let roots = pair_and_extract(&m_x, &m_y).unwrap();

    let collapsed = shssa::esprit::estimate_parameters(&roots.pairs);
    let est: Vec<(Complex64, Complex64)> = collapsed.iter().map(|c| (c.mu, c.nu)).collect();
    assert_pairs_match(&est, &truth, 1e-6);
}

#[test]
fn colliding_x_roots_are_reported_degenerate() {
    // Two cosines sharing the x frequency but not the y frequency: the
    // x shift matrix has doubled eigenvalues.
    let region = planar_region(26, 26);
    let a = cosine_pair(0.2, 0.10, 1.0, 0.1, 0.0, 0.0);
    let b = cosine_pair(0.2, 0.31, 0.8, 0.9, 0.0, 0.0);
    let arr = generate(&[a[0].clone(), a[1].clone(), b[0].clone(), b[1].clone()], &region)
        .unwrap();
    let window = Shape::rect(Topology::planar(), 7, 7).unwrap();
    let out = esprit(&arr, &window, &EspritOptions::new(4)).unwrap();
    assert!(out.diagnostics.degenerate);
    assert!(out
        .diagnostics
        .warnings
        .iter()
        .any(|w| w.contains("gap")));
    // The x roots themselves are still right.
    for (mu, _) in &out.pairs {
        assert!((mu.norm() - 1.0).abs() < 1e-6);
        assert!((mu.arg().abs() - TAU * 0.2).abs() < 1e-6);
    }
}

#[test]
fn windows_too_small_for_the_rank_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let region = Arc::new(planar_region(10, 10));
    let arr = shssa::testkit::fill_random(&region, &mut rng);
    let window = Shape::rect(Topology::planar(), 2, 2).unwrap();
    assert!(matches!(
        esprit(&arr, &window, &EspritOptions::new(3)),
        Err(Error::RankDeficient { .. })
    ));
}

#[test]
fn full_toroidal_grids_warn_but_still_recover() {
    let t = Topology::toroidal(8, 6).unwrap();
    let region = Shape::rect(t, 8, 6).unwrap();
    let pair = cosine_pair(0.25, 1.0 / 6.0, 1.0, 0.2, 0.0, 0.0);
    let arr = generate(&pair, &region).unwrap();
    let window = Shape::rect(t, 4, 3).unwrap();
    let out = esprit(&arr, &window, &EspritOptions::new(2)).unwrap();
    assert!(out.diagnostics.toroidal_full_grid);
    assert!(out.diagnostics.warnings.iter().any(|w| w.contains("DFT")));
    let est: Vec<(Complex64, Complex64)> =
        out.components.iter().map(|c| (c.mu, c.nu)).collect();
    assert_pairs_match(&est, &[(pair[0].mu, pair[0].nu)], 1e-6);
}

#[test]
fn wrap_shift_equals_planar_unrolling_on_periodic_signals() {
    // The same periodic signal seen on a cylinder and on a plane holding
    // two unrolled periods must yield the same root estimates.
    let pair = cosine_pair(1.0 / 8.0, 0.13, 1.0, 0.5, 0.0, -0.02);
    let truth = vec![(pair[0].mu, pair[0].nu)];

    let tc = Topology::cylindrical_x(8).unwrap();
    let cyl_region = Shape::rect(tc, 8, 15).unwrap();
    let cyl_arr = generate(&pair, &cyl_region).unwrap();
    let cyl_window = Shape::rect(tc, 8, 4).unwrap();
    let cyl = esprit(&cyl_arr, &cyl_window, &EspritOptions::new(2)).unwrap();

    let tp = Topology::planar();
    let flat_region = Shape::rect(tp, 16, 15).unwrap();
    let flat_arr = generate(&pair, &flat_region).unwrap();
    let flat_window = Shape::rect(tp, 8, 4).unwrap();
    let flat = esprit(&flat_arr, &flat_window, &EspritOptions::new(2)).unwrap();

    let as_pairs = |o: &shssa::EspritOutput| -> Vec<(Complex64, Complex64)> {
        o.components.iter().map(|c| (c.mu, c.nu)).collect()
    };
    assert_pairs_match(&as_pairs(&cyl), &truth, 1e-8);
    assert_pairs_match(&as_pairs(&flat), &truth, 1e-8);
    assert_pairs_match(&as_pairs(&cyl), &as_pairs(&flat), 1e-8);
}
