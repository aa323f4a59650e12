//! PNG rendering of numeric matrices with a pinned colour map.
//!
//! The image is a convenience view. The CSV it was drawn from stays the
//! reference for every check.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_at, CliError, CliResult};

/// Five stops of the viridis map, dark to light.
pub const COLOR_STOPS: [[u8; 3]; 5] = [
    [0x44, 0x01, 0x54],
    [0x3b, 0x52, 0x8b],
    [0x21, 0x91, 0x8c],
    [0x5e, 0xc9, 0x62],
    [0xfd, 0xe7, 0x25],
];

/// Side length in pixels of the square drawn for one matrix entry.
pub const CELL_PIXELS: u32 = 16;

/// How matrix values map onto `[0, 1]` before colouring.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ColorScale {
    /// Stretch the matrix's own range. A constant matrix maps to the first stop.
    #[default]
    MinMax,
    /// Clamp to a fixed interval.
    Fixed { min: f64, max: f64 },
}

/// Colour of a position `t` in `[0, 1]`, linearly interpolated between stops.
pub fn color_at(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (COLOR_STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(COLOR_STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (COLOR_STOPS[i], COLOR_STOPS[i + 1]);
    std::array::from_fn(|k| (a[k] as f64 + f * (b[k] as f64 - a[k] as f64)).round() as u8)
}

fn check_rectangular(matrix: &[Vec<f64>]) -> CliResult<(usize, usize)> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(CliError::Format("empty matrix".into()));
    }
    if let Some(i) = matrix.iter().position(|r| r.len() != cols) {
        return Err(CliError::Format(format!(
            "ragged matrix: row {i} has {} entries, row 0 has {cols}",
            matrix[i].len()
        )));
    }
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Format("matrix has non-finite entries".into()));
    }
    Ok((rows, cols))
}

/// Per-entry colours of a rectangular matrix.
pub fn colorize(matrix: &[Vec<f64>], scale: ColorScale) -> CliResult<Vec<Vec<[u8; 3]>>> {
    check_rectangular(matrix)?;
    let (lo, hi) = match scale {
        ColorScale::MinMax => matrix.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        }),
        ColorScale::Fixed { min, max } => {
            if !(min < max) {
                return Err(CliError::Config(format!("colour scale [{min}, {max}] is empty")));
            }
            (min, max)
        }
    };
    let span = hi - lo;
    Ok(matrix
        .iter()
        .map(|row| {
            row.iter().map(|&v| color_at(if span > 0.0 { (v - lo) / span } else { 0.0 })).collect()
        })
        .collect())
}

/// Encodes the matrix as an RGB PNG, one `CELL_PIXELS` square per entry.
pub fn encode_heatmap<W: Write>(matrix: &[Vec<f64>], scale: ColorScale, out: W) -> CliResult<()> {
    let colors = colorize(matrix, scale)?;
    let (rows, cols) = (colors.len() as u32, colors[0].len() as u32);
    let (w, h) = (cols * CELL_PIXELS, rows * CELL_PIXELS);
    let mut data = Vec::with_capacity((w * h * 3) as usize);
    for row in &colors {
        for _ in 0..CELL_PIXELS {
            for c in row {
                for _ in 0..CELL_PIXELS {
                    data.extend_from_slice(c);
                }
            }
        }
    }
    let mut enc = png::Encoder::new(out, w, h);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_compression(png::Compression::Default);
    let mut writer = enc.write_header()?;
    writer.write_image_data(&data)?;
    writer.finish()?;
    Ok(())
}

/// Writes `matrix` as a PNG at `path`.
pub fn render_heatmap(matrix: &[Vec<f64>], scale: ColorScale, path: &Path) -> CliResult<()> {
    let mut buf = Vec::new();
    encode_heatmap(matrix, scale, &mut buf)?;
    crate::output::write_bytes(path, &buf)
}

/// Reads a headerless numeric CSV matrix.
pub fn read_matrix(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> CliResult<Vec<Vec<f64>>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::Format(format!("line {}: {e}", i + 1)))
                })
                .collect()
        })
        .collect()
}

/// Renders the CSV matrix at `csv` into a PNG at `png`.
pub fn render_heatmap_csv(csv: &Path, scale: ColorScale, png: &Path) -> CliResult<()> {
    render_heatmap(&read_matrix(csv)?, scale, png)
}
