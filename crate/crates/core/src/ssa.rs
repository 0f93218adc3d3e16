//! Decomposition and reconstruction of shaped arrays.
//!
//! [`decompose`] runs the embedding and a truncated SVD of the trajectory
//! matrix; [`Decomposition::reconstruct`] turns groups of singular triples
//! back into arrays on the covered shape. Small problems use a dense SVD,
//! larger ones the matrix-free Lanczos solver over FFT products; both
//! paths emit identically structured, deterministically signed triples.

use std::sync::Arc;

use crate::array::ShapedArray;
use crate::embedding::{embed_dense, EmbeddingPlan, DENSE_ENTRY_LIMIT};
use crate::error::{Error, Result};
use crate::fast_ops::CirculantOperator;
use crate::lanczos::{bidiag_svd, canonical_sign, LanczosOptions, RawTriple};
use crate::shape::Shape;

/// Problems with `min(rows, cols)` at or below this go through the dense
/// SVD, provided the matrix also fits the dense entry limit.
pub const DENSE_MIN_DIM: usize = 64;

#[derive(Clone, Debug)]
pub struct DecomposeOptions {
    /// Number of leading singular triples to compute.
    pub neig: usize,
    /// Relative residual tolerance for convergence.
    pub tol: f64,
    /// Cap on Lanczos basis growth.
    pub max_iter: usize,
    /// Seed for the iterative solver's start vector.
    pub seed: u64,
}

impl DecomposeOptions {
    pub fn new(neig: usize) -> Self {
        DecomposeOptions {
            neig,
            tol: 1e-9,
            max_iter: 300,
            seed: 1,
        }
    }
}

/// One singular triple of the trajectory matrix. `u` lives on the window
/// shape, `v` on the origin shape; both are unit vectors with the sign
/// normalized so the largest-magnitude entry of `u` is positive.
#[derive(Clone, Debug)]
pub struct Eigentriple {
    /// 1-based position in the decomposition.
    pub index: usize,
    pub sigma: f64,
    pub u: ShapedArray,
    pub v: ShapedArray,
    /// Estimated residual of the triple at termination.
    pub residual: f64,
    pub converged: bool,
}

pub struct Decomposition {
    operator: Arc<CirculantOperator>,
    pub triples: Vec<Eigentriple>,
    /// Lanczos steps taken (equals `neig` when the dense path ran).
    pub iterations: usize,
    pub seed: u64,
    pub used_dense: bool,
    norm_sq: f64,
}

impl std::fmt::Debug for Decomposition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Decomposition")
            .field("sigmas", &self.sigmas())
            .field("iterations", &self.iterations)
            .field("used_dense", &self.used_dense)
            .finish()
    }
}

impl Decomposition {
    pub fn plan(&self) -> &Arc<EmbeddingPlan> {
        self.operator.plan()
    }

    pub fn operator(&self) -> &Arc<CirculantOperator> {
        &self.operator
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.triples.iter().map(|t| t.sigma).collect()
    }

    /// Share of the squared Frobenius norm of the trajectory matrix
    /// captured by each triple; non-increasing.
    pub fn contributions(&self) -> Vec<f64> {
        self.triples
            .iter()
            .map(|t| {
                if self.norm_sq > 0.0 {
                    t.sigma * t.sigma / self.norm_sq
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Reconstructs one array per group of 1-based triple indices, on the
    /// covered shape. Groups must be non-empty, within range and pairwise
    /// disjoint.
    pub fn reconstruct(&self, groups: &[Vec<usize>]) -> Result<Vec<ShapedArray>> {
        self.validate_groups(groups)?;
        groups.iter().map(|g| self.reconstruct_validated(g)).collect()
    }

    /// Reconstructs the sum of the listed triples (1-based indices).
    pub fn reconstruct_group(&self, indices: &[usize]) -> Result<ShapedArray> {
        self.validate_groups(std::slice::from_ref(&indices.to_vec()))?;
        self.reconstruct_validated(indices)
    }

    fn reconstruct_validated(&self, indices: &[usize]) -> Result<ShapedArray> {
        let terms: Vec<(f64, &[f64], &[f64])> = indices
            .iter()
            .map(|&i| {
                let t = &self.triples[i - 1];
                (t.sigma, t.u.values(), t.v.values())
            })
            .collect();
        let values = self.operator.rank_sum_unembed(&terms)?;
        ShapedArray::new(Arc::clone(self.plan().covered()), values)
    }

    fn validate_groups(&self, groups: &[Vec<usize>]) -> Result<()> {
        let neig = self.triples.len();
        let mut seen = vec![false; neig];
        for group in groups {
            if group.is_empty() {
                return Err(Error::InvalidGroups("a group is empty".into()));
            }
            for &i in group {
                if i == 0 || i > neig {
                    return Err(Error::InvalidGroups(format!(
                        "triple index {i} is outside 1..={neig}"
                    )));
                }
                if seen[i - 1] {
                    return Err(Error::InvalidGroups(format!(
                        "triple index {i} appears in more than one group"
                    )));
                }
                seen[i - 1] = true;
            }
        }
        Ok(())
    }
}

/// Embeds the array with the given window and computes the `neig` leading
/// singular triples of the trajectory matrix.
pub fn decompose(arr: &ShapedArray, window: &Shape, opts: &DecomposeOptions) -> Result<Decomposition> {
    let plan = Arc::new(EmbeddingPlan::new(arr.shape(), window)?);
    let restricted = arr.restrict(plan.covered())?;

    let (nrows, ncols) = (plan.nrows(), plan.ncols());
    let min_dim = nrows.min(ncols);
    if opts.neig == 0 || opts.neig > min_dim {
        return Err(Error::InvalidParameter(format!(
            "neig must be in 1..={min_dim} for this embedding, got {}",
            opts.neig
        )));
    }

    // ||X||_F^2 equals the weighted sum of squares over covered cells.
    let norm_sq = restricted
        .values()
        .iter()
        .zip(plan.weight().values())
        .map(|(&x, &w)| w * x * x)
        .sum::<f64>();

    let operator = Arc::new(CirculantOperator::build(&restricted, &plan)?);

    let use_dense =
        min_dim <= DENSE_MIN_DIM && (nrows as u128 * ncols as u128) <= DENSE_ENTRY_LIMIT;
    let (raw, iterations) = if use_dense {
        (dense_triples(&restricted, &plan, opts.neig)?, opts.neig)
    } else {
        let lo = LanczosOptions {
            neig: opts.neig,
            tol: opts.tol,
            max_iter: opts.max_iter,
            seed: opts.seed,
        };
        let out = bidiag_svd(
            nrows,
            ncols,
            |v| operator.matvec(v),
            |u| operator.rmatvec(u),
            &lo,
        )?;
        (out.triples, out.iterations)
    };

    let triples: Vec<Eigentriple> = raw
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            Ok(Eigentriple {
                index: i + 1,
                sigma: t.sigma,
                u: ShapedArray::new(Arc::clone(plan.window()), t.u)?,
                v: ShapedArray::new(Arc::clone(plan.origins()), t.v)?,
                residual: t.residual,
                converged: t.converged,
            })
        })
        .collect::<Result<_>>()?;

    let converged = triples.iter().filter(|t| t.converged).count();
    let requested = opts.neig;
    let decomposition = Decomposition {
        operator,
        triples,
        iterations,
        seed: opts.seed,
        used_dense: use_dense,
        norm_sq,
    };
    if converged < requested {
        return Err(Error::NonConvergence {
            requested,
            converged,
            iterations: decomposition.iterations,
            partial: Box::new(decomposition),
        });
    }
    Ok(decomposition)
}

fn dense_triples(
    arr: &ShapedArray,
    plan: &EmbeddingPlan,
    neig: usize,
) -> Result<Vec<RawTriple>> {
    let x = embed_dense(arr, plan)?;
    let mut svd = x.clone().svd(true, true);
    svd.sort_by_singular_values();
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut out = Vec::with_capacity(neig);
    for i in 0..neig {
        let sigma = svd.singular_values[i];
        let mut uv: Vec<f64> = u.column(i).iter().copied().collect();
        let mut vv: Vec<f64> = vt.row(i).iter().copied().collect();
        canonical_sign(&mut uv, &mut vv);
        let un = nalgebra::DVector::from_column_slice(&uv);
        let vn = nalgebra::DVector::from_column_slice(&vv);
        let residual = (x.transpose() * &un - sigma * &vn).norm();
        out.push(RawTriple {
            sigma,
            u: uv,
            v: vv,
            residual,
            converged: true,
        });
    }
    Ok(out)
}
