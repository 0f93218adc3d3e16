//! Frequency estimation on shaped windows (2D ESPRIT).
//!
//! For a signal that is a sum of products of complex exponentials along
//! the two axes, the column space of the trajectory matrix is spanned by
//! the window restrictions of those exponentials. Shifting the window one
//! step along an axis multiplies each exponential by its root, so the
//! singular-vector basis `U` satisfies a shift-invariance equation: with
//! `P` the rows of `U` at window cells whose x-neighbor is still in the
//! window, and `Q` the rows at those neighbors, `P M_x = Q` for some
//! `r x r` matrix whose eigenvalues are the x-axis roots `mu_k`.
//!
//! Rows of `Q` are aligned by correspondence: row `i` of `Q` is the basis
//! row at `l_i (+) (2, 1)`, the neighbor of row `i` of `P`. On circular
//! axes the neighbor may wrap; correspondence alignment keeps the relation
//! exact there because the wrapped value differs by exactly `mu^T = 1`.
//!
//! The two axes are then paired through a joint eigenbasis: `M_x` is
//! diagonalized, and the y-axis roots are read off the diagonal of
//! `T^-1 M_y T` in the same eigenvector order, so each `mu_k` comes with
//! its `nu_k` without any combinatorial matching step.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::ShapedArray;
use crate::error::{Error, Result};
use crate::shape::Shape;
use crate::ssa::{decompose, DecomposeOptions, Decomposition};
use crate::topology::{cyclic_add, IndexPair, TopologyClass};

/// Relative singular-value threshold below which the basis restriction
/// counts as rank deficient.
pub const SHIFT_RANK_REL_TOL: f64 = 1e-10;

/// Eigenvector-basis condition number above which pairing is refused.
pub const PAIRING_COND_LIMIT: f64 = 1e8;

/// Minimal eigenvalue separation before the pairing is flagged as
/// degenerate.
pub const EIGEN_GAP_TOL: f64 = 1e-6;

/// Tolerance used when matching conjugate root pairs for reporting.
pub const CONJUGATE_MATCH_TOL: f64 = 1e-6;

/// Frequencies below this magnitude report an infinite period.
pub const ZERO_FREQ_TOL: f64 = 1e-9;

/// Window cells whose one-step neighbor along each axis stays inside the
/// window, together with the row correspondences into the window's cell
/// order.
#[derive(Clone, Debug)]
pub struct ShiftSets {
    window: Shape,
    m_x: Shape,
    m_y: Shape,
    x_pairs: Vec<(usize, usize)>,
    y_pairs: Vec<(usize, usize)>,
}

impl ShiftSets {
    pub fn window(&self) -> &Shape {
        &self.window
    }

    /// Cells `l` with `l (+) (2, 1)` still in the window.
    pub fn m_x(&self) -> &Shape {
        &self.m_x
    }

    /// Cells `l` with `l (+) (1, 2)` still in the window.
    pub fn m_y(&self) -> &Shape {
        &self.m_y
    }
}

/// Computes both shift sets of a window. Errors if either set is empty,
/// since the axis relation then has no rows at all.
pub fn shift_sets(window: &Shape) -> Result<ShiftSets> {
    let build = |axis: char, step: IndexPair| -> Result<(Shape, Vec<(usize, usize)>)> {
        let mut cells = Vec::new();
        let mut pairs = Vec::new();
        for &l in window.points() {
            let Ok(q) = cyclic_add(l, step, window.topology()) else {
                continue;
            };
            if let Some(dst) = window.position(q) {
                cells.push(l);
                pairs.push((window.position(l).unwrap(), dst));
            }
        }
        if cells.is_empty() {
            return Err(Error::DegenerateWindow { axis });
        }
        Ok((
            Shape::from_sorted_unchecked(window.topology(), cells),
            pairs,
        ))
    };
    let (m_x, x_pairs) = build('x', IndexPair::new(2, 1))?;
    let (m_y, y_pairs) = build('y', IndexPair::new(1, 2))?;
    Ok(ShiftSets {
        window: window.clone(),
        m_x,
        m_y,
        x_pairs,
        y_pairs,
    })
}

/// The four restricted basis matrices: `p_x` holds basis rows on the
/// x-shift set, `q_x` the corresponding shifted rows, and likewise for y.
#[derive(Clone, Debug)]
pub struct ShiftedMatrices {
    pub p_x: DMatrix<f64>,
    pub q_x: DMatrix<f64>,
    pub p_y: DMatrix<f64>,
    pub q_y: DMatrix<f64>,
}

/// Restricts a basis of window arrays to the shift sets. All basis arrays
/// must live on the window the shift sets were built from.
pub fn shifted_matrices(basis: &[&ShapedArray], sets: &ShiftSets) -> Result<ShiftedMatrices> {
    if basis.is_empty() {
        return Err(Error::InvalidParameter("basis must not be empty".into()));
    }
    for b in basis {
        if b.shape() != &sets.window {
            return Err(Error::ShapeMismatch {
                context: "basis array does not live on the shift sets' window",
            });
        }
    }
    let take = |pairs: &[(usize, usize)], side: usize| {
        DMatrix::from_fn(pairs.len(), basis.len(), |i, k| {
            let (src, dst) = pairs[i];
            basis[k].values()[if side == 0 { src } else { dst }]
        })
    };
    Ok(ShiftedMatrices {
        p_x: take(&sets.x_pairs, 0),
        q_x: take(&sets.x_pairs, 1),
        p_y: take(&sets.y_pairs, 0),
        q_y: take(&sets.y_pairs, 1),
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EspritMethod {
    LeastSquares,
    TotalLeastSquares,
}

/// Solves `P M = Q` for the `r x r` shift matrix, by the SVD pseudoinverse
/// (least squares) or the small-singular-subspace construction (total
/// least squares). Refuses rank-deficient `P`.
pub fn solve_shift_matrix(
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    method: EspritMethod,
) -> Result<DMatrix<f64>> {
    let (m, r) = (p.nrows(), p.ncols());
    if q.nrows() != m || q.ncols() != r {
        return Err(Error::ShapeMismatch {
            context: "shifted matrices must have identical dimensions",
        });
    }
    if m < r {
        return Err(Error::RankDeficient { r, ratio: 0.0 });
    }
    let mut svd = p.clone().svd(true, true);
    svd.sort_by_singular_values();
    let s1 = svd.singular_values[0];
    let sr = svd.singular_values[r - 1];
    if s1 == 0.0 || sr <= SHIFT_RANK_REL_TOL * s1 {
        return Err(Error::RankDeficient {
            r,
            ratio: if s1 == 0.0 { 0.0 } else { sr / s1 },
        });
    }
    match method {
        EspritMethod::LeastSquares => {
            let u = svd.u.as_ref().unwrap();
            let vt = svd.v_t.as_ref().unwrap();
            // M = V S^-1 U^T Q.
            let mut ut_q = u.transpose() * q;
            for i in 0..r {
                let inv = 1.0 / svd.singular_values[i];
                ut_q.row_mut(i).scale_mut(inv);
            }
            Ok(vt.transpose() * ut_q)
        }
        EspritMethod::TotalLeastSquares => {
            let mut stacked = DMatrix::zeros(m, 2 * r);
            stacked.view_mut((0, 0), (m, r)).copy_from(p);
            stacked.view_mut((0, r), (m, r)).copy_from(q);
            let v = right_singular_vectors(stacked);
            let v12 = v.view((0, r), (r, r)).into_owned();
            let v22 = v.view((r, r), (r, r)).into_owned();
            let v22_inv = v22.try_inverse().ok_or_else(|| {
                Error::NumericalFailure(
                    "total least squares small-singular subspace is degenerate".into(),
                )
            })?;
            Ok(-(v12 * v22_inv))
        }
    }
}

/// Full set of right singular vectors of `m`, columns ordered by
/// descending singular value. Falls back to the eigendecomposition of the
/// Gram matrix when there are fewer rows than columns (the thin SVD would
/// not span the full right space there).
fn right_singular_vectors(m: DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    if m.nrows() >= cols {
        let mut svd = m.svd(false, true);
        svd.sort_by_singular_values();
        svd.v_t.unwrap().transpose()
    } else {
        let gram = m.transpose() * &m;
        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        DMatrix::from_fn(cols, cols, |i, j| eig.eigenvectors[(i, order[j])])
    }
}

/// Roots of both axes in a joint eigenvector order.
#[derive(Clone, Debug)]
pub struct PairedRoots {
    /// `(mu_k, nu_k)`, ordered by descending `|mu|`, ties by phase.
    pub pairs: Vec<(Complex64, Complex64)>,
    /// Condition number of the eigenvector basis of `M_x`.
    pub condition: f64,
    /// Smallest pairwise distance between eigenvalues of `M_x`.
    pub eigen_gap: f64,
    /// Whether the gap falls below [`EIGEN_GAP_TOL`].
    pub degenerate: bool,
}

/// Diagonalizes `M_x` and conjugates `M_y` with the same eigenvectors.
pub fn pair_and_extract(m_x: &DMatrix<f64>, m_y: &DMatrix<f64>) -> Result<PairedRoots> {
    let r = m_x.nrows();
    if m_x.ncols() != r || m_y.nrows() != r || m_y.ncols() != r {
        return Err(Error::ShapeMismatch {
            context: "shift matrices must be square and equal-sized",
        });
    }
    let mut lambdas: Vec<Complex64> = m_x.complex_eigenvalues().iter().copied().collect();
    if lambdas.iter().any(|l| !l.re.is_finite() || !l.im.is_finite()) {
        return Err(Error::NumericalFailure(
            "eigenvalue computation returned non-finite roots".into(),
        ));
    }
    lambdas.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(a.arg().total_cmp(&b.arg()))
    });

    let mx_c = to_complex(m_x);
    let my_c = to_complex(m_y);
    let mut t = DMatrix::<Complex64>::zeros(r, r);
    // Eigenvalues are processed in clusters of numerically equal values;
    // a cluster of size s gets s orthonormal null-space directions, so a
    // repeated root does not produce repeated (hence singular) columns.
    let cluster_tol = 1e-9 * (1.0 + lambdas[0].norm());
    let mut k = 0;
    while k < r {
        let mut end = k + 1;
        while end < r && (lambdas[end] - lambdas[k]).norm() <= cluster_tol {
            end += 1;
        }
        let dirs = null_directions(&mx_c, lambdas[k], end - k);
        for (off, dir) in dirs.iter().enumerate() {
            t.set_column(k + off, dir);
        }
        k = end;
    }

    let mut tsvd = t.clone().svd(false, false);
    tsvd.sort_by_singular_values();
    let smax = tsvd.singular_values[0];
    let smin = tsvd.singular_values[r - 1];
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > PAIRING_COND_LIMIT {
        return Err(Error::PairingUnreliable { cond: condition });
    }

    let rhs = &my_c * &t;
    let d = t
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::PairingUnreliable { cond: condition })?;

    let mut eigen_gap = f64::INFINITY;
    for i in 0..r {
        for j in (i + 1)..r {
            eigen_gap = eigen_gap.min((lambdas[i] - lambdas[j]).norm());
        }
    }

    let pairs = lambdas
        .iter()
        .enumerate()
        .map(|(k, &mu)| (mu, d[(k, k)]))
        .collect();
    Ok(PairedRoots {
        pairs,
        condition,
        eigen_gap,
        degenerate: eigen_gap < EIGEN_GAP_TOL,
    })
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// `count` orthonormal vectors spanning the (numerical) null space of
/// `m - lambda I`, taken from the smallest right singular directions,
/// each with its phase fixed so the largest entry is real positive.
fn null_directions(m: &DMatrix<Complex64>, lambda: Complex64, count: usize) -> Vec<DVector<Complex64>> {
    let r = m.nrows();
    let mut shifted = m.clone();
    for i in 0..r {
        shifted[(i, i)] -= lambda;
    }
    let mut svd = shifted.svd(false, true);
    svd.sort_by_singular_values();
    let vt = svd.v_t.unwrap();
    (0..count)
        .map(|c| {
            let row = r - 1 - c;
            let mut vec = DVector::from_fn(r, |i, _| vt[(row, i)].conj());
            let mut best = 0;
            for i in 1..r {
                if vec[i].norm() > vec[best].norm() {
                    best = i;
                }
            }
            let mag = vec[best].norm();
            if mag > 0.0 {
                let correction = vec[best].conj() / mag;
                for x in vec.iter_mut() {
                    *x *= correction;
                }
            }
            vec
        })
        .collect()
}

/// Per-component parameters derived from a root pair.
#[derive(Clone, Debug)]
pub struct ComponentEstimate {
    pub mu: Complex64,
    pub nu: Complex64,
    /// Frequencies in cycles per step, in `(-1/2, 1/2]`.
    pub freq_x: f64,
    pub freq_y: f64,
    /// Exponential damping rates `ln |mu|`, `ln |nu|`.
    pub rate_x: f64,
    pub rate_y: f64,
    /// Periods `1 / |freq|`; `None` means an infinite period.
    pub period_x: Option<f64>,
    pub period_y: Option<f64>,
    /// Orientation of the plane wave in degrees and its wavelength across
    /// the wavefront; `None` when both periods are infinite.
    pub angle_deg: Option<f64>,
    pub width: Option<f64>,
}

/// Parameters of a single root pair.
pub fn component_estimate(mu: Complex64, nu: Complex64) -> ComponentEstimate {
    let freq_x = mu.arg() / TAU;
    let freq_y = nu.arg() / TAU;
    let period = |f: f64| (f.abs() > ZERO_FREQ_TOL).then(|| 1.0 / f.abs());
    let period_x = period(freq_x);
    let period_y = period(freq_y);
    let (angle_deg, width) = match (period_x, period_y) {
        (Some(tx), Some(ty)) => (
            Some((tx / ty).atan().to_degrees()),
            Some(tx * ty / (tx * tx + ty * ty).sqrt()),
        ),
        (Some(tx), None) => (Some(0.0), Some(tx)),
        (None, Some(ty)) => (Some(90.0), Some(ty)),
        (None, None) => (None, None),
    };
    ComponentEstimate {
        mu,
        nu,
        freq_x,
        freq_y,
        rate_x: mu.norm().ln(),
        rate_y: nu.norm().ln(),
        period_x,
        period_y,
        angle_deg,
        width,
    }
}

/// Merges conjugate root pairs, keeping the representative with positive
/// x frequency (positive y frequency when the x frequency is zero). Roots
/// without a conjugate partner pass through unchanged.
pub fn collapse_conjugates(pairs: &[(Complex64, Complex64)]) -> Vec<(Complex64, Complex64)> {
    let mut used = vec![false; pairs.len()];
    let mut out = Vec::new();
    for i in 0..pairs.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let (mu, nu) = pairs[i];
        let tol = CONJUGATE_MATCH_TOL * (1.0 + mu.norm() + nu.norm());
        let partner = (i + 1..pairs.len()).find(|&j| {
            !used[j]
                && (pairs[j].0 - mu.conj()).norm() + (pairs[j].1 - nu.conj()).norm() <= tol
        });
        match partner {
            Some(j) => {
                used[j] = true;
                let self_conjugate =
                    (mu - mu.conj()).norm() + (nu - nu.conj()).norm() <= tol;
                if self_conjugate {
                    // A real pair matched itself in all but index; keep one.
                    out.push(pairs[i]);
                } else {
                    out.push(pick_representative(pairs[i], pairs[j]));
                }
            }
            None => out.push(pairs[i]),
        }
    }
    out
}

fn pick_representative(
    a: (Complex64, Complex64),
    b: (Complex64, Complex64),
) -> (Complex64, Complex64) {
    let score = |(mu, nu): &(Complex64, Complex64)| {
        let fx = mu.arg() / TAU;
        let fy = nu.arg() / TAU;
        if fx > ZERO_FREQ_TOL {
            2
        } else if fx.abs() <= ZERO_FREQ_TOL && fy >= -ZERO_FREQ_TOL {
            1
        } else {
            0
        }
    };
    if score(&b) > score(&a) {
        b
    } else {
        a
    }
}

/// Collapses conjugates and converts every kept pair to parameters.
pub fn estimate_parameters(pairs: &[(Complex64, Complex64)]) -> Vec<ComponentEstimate> {
    collapse_conjugates(pairs)
        .into_iter()
        .map(|(mu, nu)| component_estimate(mu, nu))
        .collect()
}

#[derive(Clone, Debug)]
pub struct EspritOptions {
    /// Assumed signal-subspace dimension.
    pub rank: usize,
    pub method: EspritMethod,
    /// 1-based singular-triple indices spanning the subspace; defaults to
    /// the leading `rank` triples.
    pub basis: Option<Vec<usize>>,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl EspritOptions {
    pub fn new(rank: usize) -> Self {
        EspritOptions {
            rank,
            method: EspritMethod::LeastSquares,
            basis: None,
            tol: 1e-9,
            max_iter: 300,
            seed: 1,
        }
    }
}

/// Checks that cannot fail the run but gauge how trustworthy it is.
#[derive(Clone, Debug)]
pub struct EspritDiagnostics {
    /// Window holds an `(r+1) x (r+1)` square (sufficient condition for
    /// the basis restriction to keep full rank).
    pub window_square_ok: bool,
    /// Origin set holds an `r x r` square.
    pub origin_square_ok: bool,
    pub condition: f64,
    pub eigen_gap: f64,
    pub degenerate: bool,
    /// Both axes circular and the region is the full grid; the DFT is the
    /// natural tool there.
    pub toroidal_full_grid: bool,
    pub warnings: Vec<String>,
}

/// The frequency-estimation results without the decomposition they came
/// from.
pub struct EspritAnalysis {
    /// Collapsed, parameterized components.
    pub components: Vec<ComponentEstimate>,
    /// Raw root pairs before conjugate collapsing.
    pub pairs: Vec<(Complex64, Complex64)>,
    pub diagnostics: EspritDiagnostics,
}

pub struct EspritOutput {
    /// Collapsed, parameterized components.
    pub components: Vec<ComponentEstimate>,
    /// Raw root pairs before conjugate collapsing.
    pub pairs: Vec<(Complex64, Complex64)>,
    pub diagnostics: EspritDiagnostics,
    pub decomposition: Decomposition,
}

/// Runs the shift chain on an existing decomposition. The basis indices
/// (default `1..=rank`) must refer to triples the decomposition holds.
pub fn analyze(decomposition: &Decomposition, opts: &EspritOptions) -> Result<EspritAnalysis> {
    if opts.rank == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    let basis_idx: Vec<usize> = match &opts.basis {
        Some(b) => b.clone(),
        None => (1..=opts.rank).collect(),
    };
    if basis_idx.len() != opts.rank {
        return Err(Error::InvalidParameter(format!(
            "basis lists {} triples but rank is {}",
            basis_idx.len(),
            opts.rank
        )));
    }
    let mut sorted = basis_idx.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != basis_idx.len() || sorted[0] == 0 {
        return Err(Error::InvalidParameter(
            "basis indices must be distinct and at least 1".into(),
        ));
    }
    if *sorted.last().unwrap() > decomposition.triples.len() {
        return Err(Error::InvalidParameter(format!(
            "basis index {} exceeds the {} available triples",
            sorted.last().unwrap(),
            decomposition.triples.len()
        )));
    }

    let plan = decomposition.plan();
    let window: &Shape = plan.window();
    let sets = shift_sets(window)?;
    let basis: Vec<&ShapedArray> = basis_idx
        .iter()
        .map(|&i| &decomposition.triples[i - 1].u)
        .collect();
    let sm = shifted_matrices(&basis, &sets)?;
    let m_x = solve_shift_matrix(&sm.p_x, &sm.q_x, opts.method)?;
    let m_y = solve_shift_matrix(&sm.p_y, &sm.q_y, opts.method)?;
    let roots = pair_and_extract(&m_x, &m_y)?;
    let components = estimate_parameters(&roots.pairs);
    let square = |s: &Shape, n: usize| u32::try_from(n).map(|n| s.contains_square(n)).unwrap_or(false);
    let window_square_ok = square(window, opts.rank + 1);
    let origin_square_ok = square(plan.origins(), opts.rank);
    let region = plan.region();
    let toroidal_full_grid = region.topology().class() == TopologyClass::Toroidal && {
        let tx = region.topology().t_x().get().unwrap() as usize;
        let ty = region.topology().t_y().get().unwrap() as usize;
        region.len() == tx * ty
    };

    let mut warnings = Vec::new();
    if !window_square_ok {
        warnings.push(format!(
            "window contains no {0} x {0} square; the shifted basis may lose rank",
            opts.rank + 1
        ));
    }
    if !origin_square_ok {
        warnings.push(format!(
            "origin set contains no {0} x {0} square; the subspace may not determine the roots",
            opts.rank
        ));
    }
    if roots.degenerate {
        warnings.push(format!(
            "eigenvalue gap {:.3e} is below {EIGEN_GAP_TOL:.0e}; paired roots may be mixed",
            roots.eigen_gap
        ));
    }
    if toroidal_full_grid {
        warnings.push(
            "region is a full toroidal grid; the DFT gives these roots exactly".into(),
        );
    }

    let diagnostics = EspritDiagnostics {
        window_square_ok,
        origin_square_ok,
        condition: roots.condition,
        eigen_gap: roots.eigen_gap,
        degenerate: roots.degenerate,
        toroidal_full_grid,
        warnings,
    };
    Ok(EspritAnalysis {
        components,
        pairs: roots.pairs,
        diagnostics,
    })
}

/// Runs the full chain: decomposition, shift-invariance solves on both
/// axes, root pairing and parameter conversion.
pub fn esprit(arr: &ShapedArray, window: &Shape, opts: &EspritOptions) -> Result<EspritOutput> {
    let neig = match &opts.basis {
        Some(b) => *b.iter().max().ok_or_else(|| {
            Error::InvalidParameter("basis must not be empty".into())
        })?,
        None => opts.rank.max(1),
    };
    let mut dopts = DecomposeOptions::new(neig);
    dopts.tol = opts.tol;
    dopts.max_iter = opts.max_iter;
    dopts.seed = opts.seed;
    let decomposition = decompose(arr, window, &dopts)?;
    let analysis = analyze(&decomposition, opts)?;
    Ok(EspritOutput {
        components: analysis.components,
        pairs: analysis.pairs,
        diagnostics: analysis.diagnostics,
        decomposition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Topology;

    #[test]
    fn shift_sets_of_a_rectangle_drop_one_border() {
        let w = Shape::rect(Topology::planar(), 3, 4).unwrap();
        let sets = shift_sets(&w).unwrap();
        assert_eq!(sets.m_x().len(), 8); // rows 1..2 stay, row 3 drops
        assert_eq!(sets.m_y().len(), 9); // columns 1..3 stay
        assert!(sets.m_x().points().iter().all(|q| q.x <= 2));
        assert!(sets.m_y().points().iter().all(|q| q.y <= 3));
    }

    #[test]
    fn shift_sets_wrap_on_circular_axes() {
        let t = Topology::cylindrical_x(4).unwrap();
        let w = Shape::rect(t, 4, 2).unwrap();
        let sets = shift_sets(&w).unwrap();
        // Every cell keeps its x-neighbor thanks to the wrap.
        assert_eq!(sets.m_x().len(), 8);
        assert_eq!(sets.m_y().len(), 4);
    }

    #[test]
    fn one_column_windows_have_no_x_shift() {
        let w = Shape::rect(Topology::planar(), 1, 5).unwrap();
        assert!(matches!(
            shift_sets(&w),
            Err(Error::DegenerateWindow { axis: 'x' })
        ));
    }

    #[test]
    fn ls_and_tls_agree_on_exact_data() {
        // Exact relation: Q = P M with a known M, tall P of full rank.
        let p_mat = DMatrix::from_fn(9, 2, |i, j| ((i * 3 + j + 1) as f64 * 0.37).sin());
        let m_true = DMatrix::from_row_slice(2, 2, &[0.8, -0.3, 0.25, 1.1]);
        let q_mat = &p_mat * &m_true;
        let ls = solve_shift_matrix(&p_mat, &q_mat, EspritMethod::LeastSquares).unwrap();
        let tls = solve_shift_matrix(&p_mat, &q_mat, EspritMethod::TotalLeastSquares).unwrap();
        assert!((&ls - &m_true).norm() < 1e-10);
        assert!((&tls - &m_true).norm() < 1e-10);
    }

    #[test]
    fn rank_deficient_p_is_refused() {
        let p_mat = DMatrix::from_fn(6, 2, |i, _| i as f64); // both columns equal
        let q_mat = p_mat.clone();
        assert!(matches!(
            solve_shift_matrix(&p_mat, &q_mat, EspritMethod::LeastSquares),
            Err(Error::RankDeficient { r: 2, .. })
        ));
    }

    #[test]
    fn pairing_reads_matched_diagonals() {
        // M_x and M_y share eigenvectors; the pairing must match each
        // mu to the nu of the same eigenvector.
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.5, -1.0]);
        let t_inv = t.clone().try_inverse().unwrap();
        let dx = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, -0.4]);
        let dy = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.7]);
        let m_x = &t * &dx * &t_inv;
        let m_y = &t * &dy * &t_inv;
        let roots = pair_and_extract(&m_x, &m_y).unwrap();
        // mu sorted by modulus: 0.9 first, then -0.4.
        assert!((roots.pairs[0].0 - Complex64::new(0.9, 0.0)).norm() < 1e-10);
        assert!((roots.pairs[0].1 - Complex64::new(0.2, 0.0)).norm() < 1e-10);
        assert!((roots.pairs[1].0 - Complex64::new(-0.4, 0.0)).norm() < 1e-10);
        assert!((roots.pairs[1].1 - Complex64::new(0.7, 0.0)).norm() < 1e-10);
        assert!(!roots.degenerate);
    }

    #[test]
    fn repeated_x_roots_are_flagged_degenerate_not_fatal() {
        // M_x = 0.7 I has a double eigenvalue; any basis diagonalizes it,
        // so the nu values cannot be attributed reliably. The call must
        // still succeed, set the flag, and preserve the trace of M_y on
        // the reported diagonal.
        let m_x = DMatrix::from_row_slice(2, 2, &[0.7, 0.0, 0.0, 0.7]);
        let m_y = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.5]);
        let roots = pair_and_extract(&m_x, &m_y).unwrap();
        assert!(roots.degenerate);
        assert!(roots.eigen_gap < EIGEN_GAP_TOL);
        let nu_sum: Complex64 = roots.pairs.iter().map(|p| p.1).sum();
        assert!((nu_sum - Complex64::new(0.7, 0.0)).norm() < 1e-10);
        for (mu, _) in &roots.pairs {
            assert!((mu - Complex64::new(0.7, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn conjugate_pairs_collapse_to_positive_frequency() {
        let mu = Complex64::from_polar(0.98, TAU * 0.12);
        let nu = Complex64::from_polar(1.01, -TAU * 0.07);
        let pairs = vec![(mu.conj(), nu.conj()), (mu, nu)];
        let collapsed = collapse_conjugates(&pairs);
        assert_eq!(collapsed.len(), 1);
        assert!((collapsed[0].0 - mu).norm() < 1e-12);
        let est = component_estimate(collapsed[0].0, collapsed[0].1);
        assert!((est.freq_x - 0.12).abs() < 1e-12);
        assert!((est.freq_y + 0.07).abs() < 1e-12);
        assert!((est.rate_x - 0.98f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn parameter_limits_follow_the_axis_frequencies() {
        // Pure x oscillation: angle 90 degrees would mean pure y; check
        // the conventions.
        let est = component_estimate(Complex64::from_polar(1.0, TAU * 0.1), Complex64::new(1.0, 0.0));
        assert_eq!(est.period_y, None);
        assert!((est.period_x.unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(est.angle_deg, Some(0.0));
        assert!((est.width.unwrap() - 10.0).abs() < 1e-9);

        let est = component_estimate(Complex64::new(0.9, 0.0), Complex64::from_polar(1.0, TAU * 0.25));
        assert_eq!(est.period_x, None);
        assert_eq!(est.angle_deg, Some(90.0));
        assert!((est.width.unwrap() - 4.0).abs() < 1e-9);

        let est = component_estimate(Complex64::new(0.9, 0.0), Complex64::new(1.1, 0.0));
        assert_eq!(est.angle_deg, None);
        assert_eq!(est.width, None);

        let est = component_estimate(
            Complex64::from_polar(1.0, TAU / 8.1),
            Complex64::from_polar(1.0, TAU / 6.9),
        );
        let a = est.angle_deg.unwrap();
        let w = est.width.unwrap();
        assert!((a - (8.1f64 / 6.9).atan().to_degrees()).abs() < 1e-9);
        assert!((w - 8.1 * 6.9 / (8.1f64 * 8.1 + 6.9 * 6.9).sqrt()).abs() < 1e-9);
    }
}
