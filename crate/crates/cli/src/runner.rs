//! Executes a resolved job: load, decompose, write artifacts.
//!
//! Artifact layout under the output directory:
//!
//! - `eigentriples.json`: spectrum, contributions, convergence report.
//! - `group_NN.csv`: per-group reconstructions in the input grid layout,
//!   `NaN` on region cells the window placements cannot reach.
//! - `esprit.json` / `esprit_table.txt`: component parameters.
//! - `*.png` heatmaps when plots are enabled.
//!
//! All writes go through a temp-file-and-rename so a crashed run never
//! leaves a half-written artifact.

use std::path::Path;

use serde::Serialize;
use shssa::embedding::EmbeddingPlan;
use shssa::esprit::{analyze, ComponentEstimate, EspritAnalysis, EspritOptions};
use shssa::shape::parse_mask_csv;
use shssa::{decompose, DecomposeOptions, Decomposition, IndexPair, Shape, ShapedArray, Topology};

use crate::config::{ResolvedJob, WindowSpec};
use crate::error::{CliError, Result};
use crate::grid_io::{self, write_atomic, write_grid};
use crate::plots;

/// Trajectory sizes above this have no business in the dense rank probe.
const RANK_SIZE_LIMIT: u128 = 1_000_000;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Task {
    Decompose,
    Reconstruct,
    Esprit,
    Rank,
}

pub fn run_job(task: Task, job: &ResolvedJob) -> Result<()> {
    let arr = grid_io::load_grid(&job.input, job.topology, job.mask.as_deref())?;
    let window = build_window(&job.window, job.topology)?;

    if task == Task::Rank {
        return run_rank(&arr, &window);
    }

    let plan = EmbeddingPlan::new(arr.shape(), &window)
        .map_err(|e| CliError::from_stage("planning embedding", e))?;
    let min_dim = plan.nrows().min(plan.ncols());
    let mut neig = job.neig.unwrap_or_else(|| min_dim.min(10));
    if let Some(e) = &job.esprit {
        let needed = e.basis.as_ref().and_then(|b| b.iter().max().copied()).unwrap_or(e.rank);
        neig = neig.max(needed);
    }

    let mut opts = DecomposeOptions::new(neig);
    opts.seed = job.seed;
    let dec = decompose(&arr, &window, &opts)
        .map_err(|e| CliError::from_stage("decomposition", e))?;

    std::fs::create_dir_all(&job.output_dir).map_err(|e| {
        CliError::input(
            "creating output dir",
            format!("{}: {e}", job.output_dir.display()),
        )
    })?;
    write_eigentriples(&job.output_dir.join("eigentriples.json"), &dec, neig)?;

    let (nx, ny) = grid_io::grid_extent(arr.shape());
    if job.plots {
        plots::save_heatmap(&job.output_dir.join("input.png"), &arr, nx, ny)?;
        for t in dec.triples.iter().take(4) {
            plots::save_heatmap(
                &job.output_dir.join(format!("eigenarray_{:02}.png", t.index)),
                &t.u,
                window.max_x(),
                window.max_y(),
            )?;
        }
    }

    let groups: Option<Vec<Vec<usize>>> = match (&job.groups, task) {
        (Some(g), _) => Some(g.clone()),
        (None, Task::Reconstruct) => Some((1..=neig).map(|i| vec![i]).collect()),
        (None, _) => None,
    };
    if let Some(groups) = &groups {
        let parts = reconstruct_parallel(&dec, groups)?;
        let region = arr.shape();
        let mut total: Option<ShapedArray> = None;
        for (i, part) in parts.iter().enumerate() {
            write_grid(
                &job.output_dir.join(format!("group_{:02}.csv", i + 1)),
                part,
                region,
                nx,
                ny,
            )?;
            if job.plots {
                plots::save_heatmap(
                    &job.output_dir.join(format!("group_{:02}.png", i + 1)),
                    part,
                    nx,
                    ny,
                )?;
            }
            total = Some(match total {
                None => part.clone(),
                Some(t) => t.plus(part).map_err(|e| CliError::from_stage("summing groups", e))?,
            });
        }
        if job.plots {
            if let Some(total) = &total {
                let covered = arr
                    .restrict(dec.plan().covered())
                    .map_err(|e| CliError::from_stage("restricting input", e))?;
                let residual = covered
                    .minus(total)
                    .map_err(|e| CliError::from_stage("computing residual", e))?;
                plots::save_heatmap(&job.output_dir.join("residual.png"), &residual, nx, ny)?;
            }
        }
    }

    if let Some(espr) = &job.esprit {
        let mut eopts = EspritOptions::new(espr.rank);
        eopts.method = espr.method.to_method();
        eopts.basis = espr.basis.clone();
        eopts.seed = job.seed;
        let analysis =
            analyze(&dec, &eopts).map_err(|e| CliError::from_stage("esprit", e))?;
        write_esprit(&job.output_dir, &analysis)?;
        for w in &analysis.diagnostics.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(())
}

fn run_rank(arr: &ShapedArray, window: &Shape) -> Result<()> {
    let plan = EmbeddingPlan::new(arr.shape(), window)
        .map_err(|e| CliError::from_stage("planning embedding", e))?;
    let entries = plan.nrows() as u128 * plan.ncols() as u128;
    if entries > RANK_SIZE_LIMIT {
        return Err(CliError::config(format!(
            "rank probe needs a dense {} x {} matrix ({entries} entries, limit {RANK_SIZE_LIMIT}); use a smaller window or region",
            plan.nrows(),
            plan.ncols()
        )));
    }
    let r = shssa::rank_model::shaped_rank(arr, window)
        .map_err(|e| CliError::from_stage("rank", e))?;
    println!("shaped rank: {r}");
    Ok(())
}

/// Builds the window shape. Circle windows are centered so the disc fits
/// the positive quadrant: center (ceil(r)+1, ceil(r)+1).
fn build_window(spec: &WindowSpec, topology: Topology) -> Result<Shape> {
    let out = match spec {
        WindowSpec::Rect { l_x, l_y } => Shape::rect(topology, *l_x, *l_y),
        WindowSpec::Circle { radius } => {
            let c = radius.ceil() as u32 + 1;
            Shape::disc(topology, IndexPair::new(c, c), *radius)
        }
        WindowSpec::Mask { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::input("reading window mask", format!("{}: {e}", path.display()))
            })?;
            let rows =
                parse_mask_csv(&text).map_err(|e| CliError::input("parsing window mask", e))?;
            return Shape::from_mask_rows(topology, &rows)
                .map_err(|e| CliError::from_stage("window mask", e));
        }
    };
    out.map_err(|e| CliError::from_stage("building window", e))
}

/// Number of worker threads: `SHSSA_THREADS` if set, else the machine's
/// parallelism, never more than there are groups.
fn thread_count(groups: usize) -> Result<usize> {
    let n = match std::env::var("SHSSA_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                CliError::config(format!("SHSSA_THREADS must be a positive integer, got {v:?}"))
            })?,
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    Ok(n.min(groups).max(1))
}

/// Reconstructs all groups, farming them out over up to
/// [`thread_count`] scoped threads. Output order follows input order, so
/// the result does not depend on scheduling.
fn reconstruct_parallel(dec: &Decomposition, groups: &[Vec<usize>]) -> Result<Vec<ShapedArray>> {
    let threads = thread_count(groups.len())?;
    let run = |g: &Vec<usize>| {
        dec.reconstruct_group(g)
            .map_err(|e| CliError::from_stage("reconstruction", e))
    };
    if threads <= 1 {
        return groups.iter().map(run).collect();
    }
    let mut results: Vec<Option<Result<ShapedArray>>> = Vec::new();
    results.resize_with(groups.len(), || None);
    std::thread::scope(|scope| {
        let mut slots: Vec<&mut [Option<Result<ShapedArray>>]> = Vec::new();
        let mut rest = results.as_mut_slice();
        // Stride partition: thread t gets groups t, t+threads, ...
        // realized by chunking into single slots and round-robining.
        for _ in 0..groups.len() {
            let (head, tail) = rest.split_at_mut(1);
            slots.push(head);
            rest = tail;
        }
        let mut work: Vec<Vec<(usize, &mut Option<Result<ShapedArray>>)>> =
            (0..threads).map(|_| Vec::new()).collect();
        for (i, slot) in slots.into_iter().enumerate() {
            work[i % threads].push((i, &mut slot[0]));
        }
        for batch in work {
            scope.spawn(move || {
                for (i, slot) in batch {
                    *slot = Some(run(&groups[i]));
                }
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("every slot was filled"))
        .collect()
}

#[derive(Serialize)]
struct TriplesJson {
    neig: usize,
    iterations: usize,
    used_dense: bool,
    seed: u64,
    sigmas: Vec<f64>,
    contributions: Vec<f64>,
    residuals: Vec<f64>,
    converged: Vec<bool>,
    covered_cells: usize,
    dropped_cells: usize,
}

fn write_eigentriples(path: &Path, dec: &Decomposition, neig: usize) -> Result<()> {
    let doc = TriplesJson {
        neig,
        iterations: dec.iterations,
        used_dense: dec.used_dense,
        seed: dec.seed,
        sigmas: dec.sigmas(),
        contributions: dec.contributions(),
        residuals: dec.triples.iter().map(|t| t.residual).collect(),
        converged: dec.triples.iter().map(|t| t.converged).collect(),
        covered_cells: dec.plan().covered().len(),
        dropped_cells: dec.plan().dropped().len(),
    };
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    write_atomic(path, text.as_bytes())
}

#[derive(Serialize)]
struct ComponentJson {
    mu_re: f64,
    mu_im: f64,
    nu_re: f64,
    nu_im: f64,
    period_x: Option<f64>,
    period_y: Option<f64>,
    rate_x: f64,
    rate_y: f64,
    angle_deg: Option<f64>,
    width: Option<f64>,
}

impl From<&ComponentEstimate> for ComponentJson {
    fn from(c: &ComponentEstimate) -> Self {
        ComponentJson {
            mu_re: c.mu.re,
            mu_im: c.mu.im,
            nu_re: c.nu.re,
            nu_im: c.nu.im,
            period_x: c.period_x,
            period_y: c.period_y,
            rate_x: c.rate_x,
            rate_y: c.rate_y,
            angle_deg: c.angle_deg,
            width: c.width,
        }
    }
}

fn write_esprit(dir: &Path, analysis: &EspritAnalysis) -> Result<()> {
    let doc: Vec<ComponentJson> = analysis.components.iter().map(ComponentJson::from).collect();
    let text = serde_json::to_string_pretty(&doc).expect("components serialize");
    write_atomic(&dir.join("esprit.json"), text.as_bytes())?;
    write_atomic(
        &dir.join("esprit_table.txt"),
        format_table(analysis).as_bytes(),
    )
}

fn format_table(analysis: &EspritAnalysis) -> String {
    let mut out = String::new();
    out.push_str("component      T_x      T_y    width    angle   rate_x   rate_y\n");
    let num = |v: Option<f64>| match v {
        Some(v) => format!("{v:8.2}"),
        None => format!("{:>8}", "inf"),
    };
    let ang = |v: Option<f64>| match v {
        Some(v) => format!("{v:8.1}"),
        None => format!("{:>8}", "-"),
    };
    for (i, c) in analysis.components.iter().enumerate() {
        out.push_str(&format!(
            "{:9} {} {} {} {} {:8.4} {:8.4}\n",
            i + 1,
            num(c.period_x),
            num(c.period_y),
            num(c.width),
            ang(c.angle_deg),
            c.rate_x,
            c.rate_y,
        ));
    }
    if analysis.diagnostics.degenerate {
        out.push_str("note: close x-axis roots; component pairing may be unreliable\n");
    }
    for w in &analysis.diagnostics.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}
