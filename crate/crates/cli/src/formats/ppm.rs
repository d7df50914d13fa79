//! Binary PPM (P6) color images. Internal math is linear RGB; files carry
//! 8-bit values through a fixed 2.2 gamma.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use splatprior_core::grid::Grid;

use crate::{CliError, CliResult};

const GAMMA: f64 = 2.2;

pub fn encode_channel(linear: f64) -> u8 {
    (linear.clamp(0.0, 1.0).powf(1.0 / GAMMA) * 255.0).round() as u8
}

pub fn decode_channel(byte: u8) -> f64 {
    (byte as f64 / 255.0).powf(GAMMA)
}

pub fn write_ppm(path: &Path, image: &Grid<Vector3<f64>>) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = format!("P6\n{} {}\n255\n", image.width(), image.height());
    w.write_all(header.as_bytes()).map_err(|e| CliError::io(path, e))?;
    let mut bytes = Vec::with_capacity(image.len() * 3);
    for px in image.iter() {
        bytes.push(encode_channel(px.x));
        bytes.push(encode_channel(px.y));
        bytes.push(encode_channel(px.z));
    }
    w.write_all(&bytes).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_ppm(path: &Path) -> CliResult<Grid<Vector3<f64>>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut line = String::new();
    let next = |r: &mut BufReader<std::fs::File>, line: &mut String| -> CliResult<String> {
        line.clear();
        let n = r.read_line(line).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            return Err(CliError::format(path, "truncated header"));
        }
        Ok(line.trim_end().to_string())
    };

    if next(&mut r, &mut line)? != "P6" {
        return Err(CliError::format(path, "not a binary PPM"));
    }
    let dims = next(&mut r, &mut line)?;
    let mut parts = dims.split_whitespace();
    let width: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::format(path, "bad width"))?;
    let height: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::format(path, "bad height"))?;
    if next(&mut r, &mut line)? != "255" {
        return Err(CliError::format(path, "only 8-bit PPM is supported"));
    }

    let mut bytes = vec![0u8; width * height * 3];
    r.read_exact(&mut bytes).map_err(|e| CliError::io(path, e))?;
    let pixels = bytes
        .chunks_exact(3)
        .map(|px| Vector3::new(decode_channel(px[0]), decode_channel(px[1]), decode_channel(px[2])))
        .collect();
    Ok(Grid::from_vec(width, height, pixels))
}
