//! Optional PNG heatmaps. Purely informational: value range mapped to a
//! grayscale ramp, cells outside the array's shape in a dim blue so holes
//! and mask boundaries stay visible.

use std::path::Path;

use image::{Rgb, RgbImage};
use shssa::{IndexPair, ShapedArray};

use crate::error::{CliError, Result};

const OUTSIDE: Rgb<u8> = Rgb([24, 28, 60]);

/// Writes `arr` as a PNG spanning a `nx` by `ny` grid, one pixel per
/// cell, x running top to bottom.
pub fn save_heatmap(path: &Path, arr: &ShapedArray, nx: u32, ny: u32) -> Result<()> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in arr.values() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut img = RgbImage::new(ny, nx);
    for x in 1..=nx {
        for y in 1..=ny {
            let pixel = match arr.get(IndexPair::new(x, y)) {
                Some(v) => {
                    let g = (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8;
                    Rgb([g, g, g])
                }
                None => OUTSIDE,
            };
            img.put_pixel(y - 1, x - 1, pixel);
        }
    }
    img.save(path)
        .map_err(|e| CliError::input("writing plot", format!("{}: {e}", path.display())))
}
