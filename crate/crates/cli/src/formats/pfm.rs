//! Grayscale PFM depth maps, little-endian (negative scale line), with
//! scanlines stored bottom-to-top per the format's convention. Invalid
//! depths are written as 0.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use splatprior_core::grid::Grid;

use crate::{CliError, CliResult};

pub fn write_pfm(path: &Path, depth: &Grid<f64>) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = format!("Pf\n{} {}\n-1.0\n", depth.width(), depth.height());
    w.write_all(header.as_bytes()).map_err(|e| CliError::io(path, e))?;
    for row in (0..depth.height()).rev() {
        for col in 0..depth.width() {
            let d = *depth.get(col, row);
            let d = if d.is_finite() && d > 0.0 { d } else { 0.0 };
            w.write_f32::<LittleEndian>(d as f32).map_err(|e| CliError::io(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_pfm(path: &Path) -> CliResult<Grid<f64>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut line = String::new();
    let next_line = |r: &mut BufReader<std::fs::File>, line: &mut String| -> CliResult<String> {
        line.clear();
        let n = r.read_line(line).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            return Err(CliError::format(path, "truncated header"));
        }
        Ok(line.trim_end().to_string())
    };

    if next_line(&mut r, &mut line)? != "Pf" {
        return Err(CliError::format(path, "not a grayscale PFM"));
    }
    let dims = next_line(&mut r, &mut line)?;
    let mut parts = dims.split_whitespace();
    let width: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::format(path, "bad width"))?;
    let height: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::format(path, "bad height"))?;
    let scale: f64 = next_line(&mut r, &mut line)?
        .parse()
        .map_err(|_| CliError::format(path, "bad scale"))?;
    if scale >= 0.0 {
        return Err(CliError::format(path, "big-endian PFM is not supported"));
    }

    let mut grid = Grid::fill(width, height, 0.0);
    for row in (0..height).rev() {
        for col in 0..width {
            let v = r.read_f32::<LittleEndian>().map_err(|e| CliError::io(path, e))?;
            *grid.get_mut(col, row) = v as f64;
        }
    }
    Ok(grid)
}
