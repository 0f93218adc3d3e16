//! Fixture generation: a JSON manifest describing a sum of (possibly
//! polynomially modulated) complex exponentials plus optional Gaussian
//! noise, rendered deterministically to a grid CSV.
//!
//! The manifest is echoed next to the grid so a fixture directory is
//! self-describing and bit-exactly regenerable.

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use shssa::rank_model::{cosine_pair, generate, ExponentialComponent, PolyTerm};
use shssa::{Period, Shape, ShapedArray};

use crate::config::TopologySpec;
use crate::error::{CliError, Result};
use crate::grid_io;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExtentSpec {
    pub n_x: Option<u32>,
    pub n_y: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ComponentSpec {
    /// `amp * e^(rate_x*l + rate_y*n) * cos(2*pi*(f_x*l + f_y*n) + phase)`
    /// as a conjugate pair of exponentials.
    Cosine {
        f_x: f64,
        f_y: f64,
        amp: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        rate_x: f64,
        #[serde(default)]
        rate_y: f64,
    },
    /// A single complex exponential with an optional modulating
    /// polynomial (omit `poly` for a plain amplitude of 1).
    Exponential {
        mu_re: f64,
        mu_im: f64,
        nu_re: f64,
        nu_im: f64,
        poly: Option<Vec<PolySpec>>,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PolySpec {
    pub dx: u32,
    pub dy: u32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub topology: TopologySpec,
    /// Grid extent; required on infinite axes, defaults to the period on
    /// finite ones.
    pub extent: Option<ExtentSpec>,
    pub components: Vec<ComponentSpec>,
    /// Standard deviation of additive white Gaussian noise; 0 disables.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    1
}

fn to_components(specs: &[ComponentSpec]) -> Vec<ExponentialComponent> {
    let mut out = Vec::new();
    for s in specs {
        match s {
            ComponentSpec::Cosine {
                f_x,
                f_y,
                amp,
                phase,
                rate_x,
                rate_y,
            } => out.extend(cosine_pair(*f_x, *f_y, *amp, *phase, *rate_x, *rate_y)),
            ComponentSpec::Exponential {
                mu_re,
                mu_im,
                nu_re,
                nu_im,
                poly,
            } => {
                let mu = Complex64::new(*mu_re, *mu_im);
                let nu = Complex64::new(*nu_re, *nu_im);
                let c = match poly {
                    None => ExponentialComponent::constant(mu, nu, Complex64::new(1.0, 0.0)),
                    Some(terms) => ExponentialComponent::with_poly(
                        mu,
                        nu,
                        terms
                            .iter()
                            .map(|t| PolyTerm {
                                dx: t.dx,
                                dy: t.dy,
                                coeff: Complex64::new(t.re, t.im),
                            })
                            .collect(),
                    ),
                };
                out.push(c);
            }
        }
    }
    out
}

fn axis_extent(name: char, period: Period, given: Option<u32>) -> Result<u32> {
    match (period, given) {
        (Period::Finite(t), None) => Ok(t),
        (Period::Finite(t), Some(n)) if n == t => Ok(t),
        (Period::Finite(t), Some(n)) => Err(CliError::config(format!(
            "extent n_{name} = {n} must equal the finite period {t}"
        ))),
        (Period::Infinite, Some(n)) if n > 0 => Ok(n),
        (Period::Infinite, _) => Err(CliError::config(format!(
            "extent n_{name} is required on an infinite axis"
        ))),
    }
}

/// Renders the manifest to an array.
pub fn realize(manifest: &Manifest) -> Result<ShapedArray> {
    let topology = manifest.topology.to_topology()?;
    let extent = manifest.extent.unwrap_or(ExtentSpec {
        n_x: None,
        n_y: None,
    });
    let nx = axis_extent('x', topology.t_x(), extent.n_x)?;
    let ny = axis_extent('y', topology.t_y(), extent.n_y)?;
    let region = Shape::rect(topology, nx, ny)
        .map_err(|e| CliError::from_stage("building region", e))?;
    if manifest.components.is_empty() {
        return Err(CliError::config("manifest lists no components"));
    }
    let comps = to_components(&manifest.components);
    let mut arr =
        generate(&comps, &region).map_err(|e| CliError::from_stage("generating components", e))?;
    if manifest.noise_sigma != 0.0 {
        if !(manifest.noise_sigma > 0.0 && manifest.noise_sigma.is_finite()) {
            return Err(CliError::config("noise_sigma must be finite and non-negative"));
        }
        let normal = Normal::new(0.0, manifest.noise_sigma)
            .map_err(|e| CliError::config(format!("noise: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(manifest.seed);
        for v in arr.values_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(arr)
}

/// Loads a manifest, renders it, and writes `grid.csv` plus a normalized
/// `manifest.json` echo into `out_dir`.
pub fn run_gen(manifest_path: &Path, out_dir: &Path) -> Result<()> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| {
        CliError::input("reading manifest", format!("{}: {e}", manifest_path.display()))
    })?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", manifest_path.display())))?;
    let arr = realize(&manifest)?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::input("creating output dir", format!("{}: {e}", out_dir.display())))?;
    let shape = arr.shape();
    let (nx, ny) = grid_io::grid_extent(shape);
    grid_io::write_grid(&out_dir.join("grid.csv"), &arr, shape, nx, ny)?;
    let echo = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    grid_io::write_atomic(&out_dir.join("manifest.json"), echo.as_bytes())?;
    Ok(())
}
