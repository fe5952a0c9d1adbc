use std::fs;
use std::path::Path;

use ndarray::Array2;

/// Binary greyscale PGM, values in [0, 1] scaled to 0..=255.
pub fn encode(values: &Array2<f64>) -> Vec<u8> {
    let (h, w) = values.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(
        values
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

pub fn write(values: &Array2<f64>, path: &Path) -> std::io::Result<()> {
    fs::write(path, encode(values))
}
