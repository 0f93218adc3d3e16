//! Grid file formats.
//!
//! The native format is CSV with rows along the x axis (row i holds
//! x = i+1) and columns along the y axis. A cell is either a decimal
//! number, the literal `NaN`, or empty; the latter two mark points
//! outside the array's shape. Values are written in the shortest decimal
//! form that parses back to the same double, so a write/read cycle is
//! bit-exact.
//!
//! 8-bit PGM images (binary or ASCII) are accepted as input grids; each
//! pixel becomes one cell with its gray level as the value.

use std::path::Path;
use std::sync::Arc;

use shssa::shape::parse_mask_csv;
use shssa::{IndexPair, Period, Shape, ShapedArray, Topology};

use crate::error::{CliError, Result};

/// Parsed but not yet shaped grid content: `values[i][j]` is the cell at
/// x = i+1, y = j+1, `None` when missing.
struct RawGrid {
    values: Vec<Vec<Option<f64>>>,
    ny: usize,
}

fn read_csv_grid(path: &Path) -> Result<RawGrid> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input("reading grid", format!("{}: {e}", path.display())))?;
    let mut values: Vec<Vec<Option<f64>>> = Vec::new();
    let mut ny = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            let cell = cell.trim();
            if cell.is_empty() || cell == "NaN" {
                row.push(None);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    CliError::input(
                        "parsing grid",
                        format!("{}:{}: not a number: {cell:?}", path.display(), lineno + 1),
                    )
                })?;
                row.push(if v.is_nan() { None } else { Some(v) });
            }
        }
        if *ny.get_or_insert(row.len()) != row.len() {
            return Err(CliError::input(
                "parsing grid",
                format!(
                    "{}:{}: row has {} cells, expected {}",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    ny.unwrap()
                ),
            ));
        }
        values.push(row);
    }
    let ny = ny.unwrap_or(0);
    if values.is_empty() || ny == 0 {
        return Err(CliError::input("parsing grid", format!("{}: grid is empty", path.display())));
    }
    Ok(RawGrid { values, ny })
}

fn read_pgm_grid(path: &Path) -> Result<RawGrid> {
    let img = image::open(path)
        .map_err(|e| CliError::input("reading image", format!("{}: {e}", path.display())))?
        .to_luma8();
    let (width, height) = img.dimensions();
    if width == 0 || height == 0 {
        return Err(CliError::input("reading image", "image is empty"));
    }
    let values = (0..height)
        .map(|row| {
            (0..width)
                .map(|col| Some(img.get_pixel(col, row).0[0] as f64))
                .collect()
        })
        .collect();
    Ok(RawGrid {
        values,
        ny: width as usize,
    })
}

fn check_axis(name: char, period: Period, extent: usize) -> Result<()> {
    if let Period::Finite(t) = period {
        if t as usize != extent {
            return Err(CliError::config(format!(
                "finite period {name} = {t} does not match the grid extent {extent} on that axis"
            )));
        }
    }
    Ok(())
}

/// Loads a grid (CSV, or PGM by file extension), applies the optional
/// 0/1 mask, and shapes it under the topology. Finite periods must equal
/// the grid extent on their axis.
pub fn load_grid(
    path: &Path,
    topology: Topology,
    mask_path: Option<&Path>,
) -> Result<ShapedArray> {
    let is_pgm = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("pgm"))
        .unwrap_or(false);
    let raw = if is_pgm {
        read_pgm_grid(path)?
    } else {
        read_csv_grid(path)?
    };

    check_axis('x', topology.t_x(), raw.values.len())?;
    check_axis('y', topology.t_y(), raw.ny)?;

    let mask = match mask_path {
        None => None,
        Some(mp) => {
            let text = std::fs::read_to_string(mp)
                .map_err(|e| CliError::input("reading mask", format!("{}: {e}", mp.display())))?;
            let rows = parse_mask_csv(&text).map_err(|e| CliError::input("parsing mask", e))?;
            if rows.len() != raw.values.len() || rows.iter().any(|r| r.len() != raw.ny) {
                return Err(CliError::input(
                    "parsing mask",
                    format!("{}: mask dimensions do not match the grid", mp.display()),
                ));
            }
            Some(rows)
        }
    };

    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, row) in raw.values.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            let masked_in = mask.as_ref().map(|m| m[i][j]).unwrap_or(true);
            if let (Some(v), true) = (cell, masked_in) {
                points.push(IndexPair::new(i as u32 + 1, j as u32 + 1));
                values.push(*v);
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::input("shaping grid", "no cells remain after masking"));
    }
    let shape = Shape::from_points(topology, points)
        .map_err(|e| CliError::from_stage("shaping grid", e))?;
    ShapedArray::new(Arc::new(shape), values).map_err(|e| CliError::from_stage("shaping grid", e))
}

/// Writes `bytes` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = match path.file_name() {
        Some(name) => {
            let mut n = name.to_os_string();
            n.push(".tmp");
            path.with_file_name(n)
        }
        None => return Err(CliError::input("writing file", "path has no file name")),
    };
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::input("writing file", format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::input("writing file", format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Renders an array as grid CSV over a `nx` by `ny` layout. Cells carried
/// by `arr` print their value; cells of `domain` not carried by `arr`
/// print `NaN`; cells outside `domain` stay empty.
pub fn format_grid(arr: &ShapedArray, domain: &Shape, nx: u32, ny: u32) -> String {
    let mut out = String::new();
    for x in 1..=nx {
        for y in 1..=ny {
            if y > 1 {
                out.push(',');
            }
            let p = IndexPair::new(x, y);
            match arr.get(p) {
                Some(v) => out.push_str(&format!("{v}")),
                None if domain.contains(p) => out.push_str("NaN"),
                None => {}
            }
        }
        out.push('\n');
    }
    out
}

/// Writes an array as grid CSV (see [`format_grid`]) atomically.
pub fn write_grid(path: &Path, arr: &ShapedArray, domain: &Shape, nx: u32, ny: u32) -> Result<()> {
    write_atomic(path, format_grid(arr, domain, nx, ny).as_bytes())
}

/// The row/column extent of a shape, i.e. the smallest grid that holds it.
pub fn grid_extent(shape: &Shape) -> (u32, u32) {
    (shape.max_x(), shape.max_y())
}

#[cfg(test)]
mod tests {
    use super::*;
    use shssa::Topology;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tmpdir();
        let path = dir.path().join("g.csv");
        let t = Topology::planar();
        let shape = Arc::new(Shape::rect(t, 2, 3).unwrap());
        let values = vec![1.0, 0.1, -2.5e-17, std::f64::consts::PI, 4.0, 1.0 / 3.0];
        let arr = ShapedArray::new(shape.clone(), values.clone()).unwrap();
        write_grid(&path, &arr, &shape, 2, 3).unwrap();
        let back = load_grid(&path, t, None).unwrap();
        assert_eq!(back.shape().points(), shape.points());
        for (a, b) in back.values().iter().zip(&values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn nan_and_empty_cells_are_out_of_shape() {
        let dir = tmpdir();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "1.5,NaN\n,2.5\n").unwrap();
        let arr = load_grid(&path, Topology::planar(), None).unwrap();
        assert_eq!(arr.shape().len(), 2);
        assert_eq!(arr.get(IndexPair::new(1, 1)), Some(1.5));
        assert_eq!(arr.get(IndexPair::new(2, 2)), Some(2.5));
        assert_eq!(arr.get(IndexPair::new(1, 2)), None);
    }

    #[test]
    fn ragged_rows_name_the_line() {
        let dir = tmpdir();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "1,2\n3\n").unwrap();
        let err = load_grid(&path, Topology::planar(), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains(":2"), "message was {err}");
    }

    #[test]
    fn masks_intersect_with_present_cells() {
        let dir = tmpdir();
        let grid = dir.path().join("g.csv");
        let mask = dir.path().join("m.csv");
        std::fs::write(&grid, "1,2\n3,NaN\n").unwrap();
        std::fs::write(&mask, "1,0\n1,1\n").unwrap();
        let arr = load_grid(&grid, Topology::planar(), Some(&mask)).unwrap();
        // (1,2) is masked out, (2,2) is NaN: two cells remain.
        assert_eq!(arr.shape().len(), 2);
        assert_eq!(arr.get(IndexPair::new(1, 1)), Some(1.0));
        assert_eq!(arr.get(IndexPair::new(2, 1)), Some(3.0));
    }

    #[test]
    fn finite_periods_must_match_grid_extent() {
        let dir = tmpdir();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "1,2\n3,4\n").unwrap();
        let t = Topology::cylindrical_x(3).unwrap();
        let err = load_grid(&path, t, None).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn pgm_images_load_as_full_grids() {
        let dir = tmpdir();
        let path = dir.path().join("g.pgm");
        // 3 wide, 2 tall ASCII PGM.
        std::fs::write(&path, "P2\n3 2\n255\n0 10 20\n30 40 50\n").unwrap();
        let arr = load_grid(&path, Topology::planar(), None).unwrap();
        assert_eq!(arr.shape().len(), 6);
        // Rows map to x, columns to y.
        assert_eq!(arr.get(IndexPair::new(1, 3)), Some(20.0));
        assert_eq!(arr.get(IndexPair::new(2, 1)), Some(30.0));
    }
}
