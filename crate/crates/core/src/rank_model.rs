//! Arrays of finite rank: sums of polynomially modulated exponentials.
//!
//! A component contributes `P(l, n) * mu^l * nu^n` at cell `(l, n)`. On a
//! circular axis the corresponding root must be a root of unity of the
//! period (otherwise the values would not be well defined under wrap) and
//! the polynomial may not depend on that coordinate. Sums of such
//! components have low-rank quasi-Hankel embeddings, which is what makes
//! them the natural test signals: their rank is known in closed form.
//!
//! [`shaped_rank`] measures the rank of an embedding numerically through a
//! dense SVD, independent of any rank formula. [`dft_components`] inverts
//! a full toroidal grid exactly: on a torus every array is a finite sum of
//! the DFT exponentials, and the rank equals the number of non-zero bins.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::array::ShapedArray;
use crate::embedding::EmbeddingPlan;
use crate::error::{Error, Result};
use crate::fft2::Fft2;
use crate::shape::Shape;
use crate::topology::{Period, TopologyClass};

/// Highest supported total degree of the modulating polynomial.
pub const MAX_POLY_DEGREE: u32 = 4;

/// Relative cut-off deciding which singular values count towards the
/// numerical rank.
pub const RANK_REL_TOL: f64 = 1e-8;

/// How far `mu^T` may sit from 1 on a circular axis of period `T`.
pub const ROOT_OF_UNITY_TOL: f64 = 1e-10;

/// Allowed relative imaginary residue when a conjugate-closed component
/// sum is converted to a real array.
pub const IMAG_REL_TOL: f64 = 1e-10;

/// Relative threshold below which a DFT bin counts as zero.
pub const DFT_BIN_REL_TOL: f64 = 1e-10;

/// One monomial `coeff * l^dx * n^dy` of a modulating polynomial.
#[derive(Clone, Copy, Debug)]
pub struct PolyTerm {
    pub dx: u32,
    pub dy: u32,
    pub coeff: Complex64,
}

#[derive(Clone, Debug)]
pub struct ExponentialComponent {
    pub mu: Complex64,
    pub nu: Complex64,
    pub poly: Vec<PolyTerm>,
}

impl ExponentialComponent {
    /// A plain exponential `amp * mu^l * nu^n`.
    pub fn constant(mu: Complex64, nu: Complex64, amp: Complex64) -> Self {
        ExponentialComponent {
            mu,
            nu,
            poly: vec![PolyTerm {
                dx: 0,
                dy: 0,
                coeff: amp,
            }],
        }
    }

    pub fn with_poly(mu: Complex64, nu: Complex64, poly: Vec<PolyTerm>) -> Self {
        ExponentialComponent { mu, nu, poly }
    }

    /// The component with conjugated roots and coefficients; adding it
    /// makes the pair sum real.
    pub fn conjugate(&self) -> Self {
        ExponentialComponent {
            mu: self.mu.conj(),
            nu: self.nu.conj(),
            poly: self
                .poly
                .iter()
                .map(|t| PolyTerm {
                    dx: t.dx,
                    dy: t.dy,
                    coeff: t.coeff.conj(),
                })
                .collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.poly.iter().map(|t| t.dx + t.dy).max().unwrap_or(0)
    }
}

/// The conjugate pair generating
/// `amp * e^(rate_x*l + rate_y*n) * cos(2*pi*(f_x*l + f_y*n) + phase)`.
pub fn cosine_pair(
    f_x: f64,
    f_y: f64,
    amp: f64,
    phase: f64,
    rate_x: f64,
    rate_y: f64,
) -> [ExponentialComponent; 2] {
    let mu = Complex64::from_polar(rate_x.exp(), TAU * f_x);
    let nu = Complex64::from_polar(rate_y.exp(), TAU * f_y);
    let half = Complex64::from_polar(amp / 2.0, phase);
    let c = ExponentialComponent::constant(mu, nu, half);
    let conj = c.conjugate();
    [c, conj]
}

fn validate_component(c: &ExponentialComponent, region: &Shape) -> Result<()> {
    if c.degree() > MAX_POLY_DEGREE {
        return Err(Error::PolynomialDegree {
            degree: c.degree(),
            max: MAX_POLY_DEGREE,
        });
    }
    let topology = region.topology();
    for (axis, period, root, poly_dep) in [
        ('x', topology.t_x(), c.mu, c.poly.iter().any(|t| t.dx > 0)),
        ('y', topology.t_y(), c.nu, c.poly.iter().any(|t| t.dy > 0)),
    ] {
        if let Period::Finite(t) = period {
            let drift = (root.powu(t) - Complex64::new(1.0, 0.0)).norm();
            if drift > ROOT_OF_UNITY_TOL {
                return Err(Error::TopologyViolation(format!(
                    "root on the {axis} axis must satisfy root^{t} = 1 (defect {drift:.3e})"
                )));
            }
            if poly_dep {
                return Err(Error::TopologyViolation(format!(
                    "polynomial must not depend on the circular {axis} coordinate"
                )));
            }
        }
    }
    Ok(())
}

/// Complex-valued sum of the components over the region's cells.
pub fn generate_complex(
    components: &[ExponentialComponent],
    region: &Shape,
) -> Result<Vec<Complex64>> {
    for c in components {
        validate_component(c, region)?;
    }
    let mut out = vec![Complex64::default(); region.len()];
    for c in components {
        for (value, &p) in out.iter_mut().zip(region.points()) {
            let mut poly = Complex64::default();
            for t in &c.poly {
                poly += t.coeff
                    * (p.x as f64).powi(t.dx as i32)
                    * (p.y as f64).powi(t.dy as i32);
            }
            *value += poly * c.mu.powu(p.x) * c.nu.powu(p.y);
        }
    }
    Ok(out)
}

/// Real-valued sum of the components. The imaginary parts must cancel to
/// [`IMAG_REL_TOL`] (relative to the value scale), which holds whenever
/// the component list is closed under conjugation.
pub fn generate(components: &[ExponentialComponent], region: &Shape) -> Result<ShapedArray> {
    let values = generate_complex(components, region)?;
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.norm()));
    let max_imag = values.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    if max_imag > IMAG_REL_TOL * scale {
        return Err(Error::NonRealResult { max_imag });
    }
    ShapedArray::new(region.clone(), values.into_iter().map(|v| v.re).collect())
}

/// Numerical rank of the quasi-Hankel embedding of `arr` with the given
/// window: the number of singular values above `RANK_REL_TOL` times the
/// largest. Materializes the trajectory matrix, so it is subject to the
/// dense size limit.
pub fn shaped_rank(arr: &ShapedArray, window: &Shape) -> Result<usize> {
    let plan = EmbeddingPlan::new(arr.shape(), window)?;
    let restricted = arr.restrict(plan.covered())?;
    let x = crate::embedding::embed_dense(&restricted, &plan)?;
    let mut sv: Vec<f64> = x.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    match sv.first() {
        Some(&s1) if s1 > 0.0 => Ok(sv.iter().filter(|&&s| s > RANK_REL_TOL * s1).count()),
        _ => Ok(0),
    }
}

/// Exact finite-rank decomposition of a full toroidal grid: one component
/// per non-negligible DFT bin, with `mu`, `nu` the unit roots of the bin
/// and the amplitude scaled so the component reads
/// `amp * mu^l * nu^n` in 1-based coordinates. Components are ordered by
/// descending amplitude magnitude, ties by bin index. The number of
/// components is the rank of the array's full-grid embedding.
pub fn dft_components(arr: &ShapedArray) -> Result<Vec<ExponentialComponent>> {
    let region = arr.shape();
    let topology = region.topology();
    if topology.class() != TopologyClass::Toroidal {
        return Err(Error::NotToroidalFullGrid);
    }
    let (t_x, t_y) = (
        topology.t_x().get().unwrap() as usize,
        topology.t_y().get().unwrap() as usize,
    );
    if region.len() != t_x * t_y {
        return Err(Error::NotToroidalFullGrid);
    }

    // A full grid in cell order is exactly the row-major layout.
    let mut buf: Vec<Complex64> = arr
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let fft = Fft2::new(t_x, t_y);
    fft.forward(&mut buf);
    let scale = 1.0 / (t_x * t_y) as f64;

    let max_mag = buf.iter().fold(0.0f64, |m, v| m.max(v.norm() * scale));
    if max_mag == 0.0 {
        return Ok(Vec::new());
    }
    let mut bins: Vec<(usize, usize, Complex64)> = Vec::new();
    for kx in 0..t_x {
        for ky in 0..t_y {
            let c = buf[kx * t_y + ky] * scale;
            if c.norm() > DFT_BIN_REL_TOL * max_mag {
                bins.push((kx, ky, c));
            }
        }
    }
    bins.sort_by(|a, b| {
        b.2.norm()
            .partial_cmp(&a.2.norm())
            .unwrap()
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    Ok(bins
        .into_iter()
        .map(|(kx, ky, c)| {
            let mu = Complex64::from_polar(1.0, TAU * kx as f64 / t_x as f64);
            let nu = Complex64::from_polar(1.0, TAU * ky as f64 / t_y as f64);
            // c carries the 0-based DFT phase; shift to 1-based powers.
            ExponentialComponent::constant(mu, nu, c * mu.conj() * nu.conj())
        })
        .collect())
}
