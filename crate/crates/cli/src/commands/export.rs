//! `oslalm export-pgm`: windowed 16-bit PGM export of a stored image.

use std::path::Path;

use oslalm::io;

use crate::error::{CliError, CliResult};

pub fn run(input: &Path, output: &Path, window: &Option<String>) -> CliResult<()> {
    let (grid, x) = io::load_image(input)?;
    let window = match window {
        Some(spec) => {
            let (lo, hi) = spec.split_once(':').ok_or_else(|| {
                CliError::args(format!("window must be LO:HI, got '{spec}'"))
            })?;
            let lo: f64 = lo
                .parse()
                .map_err(|_| CliError::args(format!("bad window low bound '{lo}'")))?;
            let hi: f64 = hi
                .parse()
                .map_err(|_| CliError::args(format!("bad window high bound '{hi}'")))?;
            (lo, hi)
        }
        None => {
            let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                (0.0, 1.0)
            } else {
                (lo, hi)
            }
        }
    };
    io::save_pgm16(output, &grid, &x, window)?;
    println!(
        "wrote {} ({}x{}, window {}..{})",
        output.display(),
        grid.nx,
        grid.ny,
        window.0,
        window.1
    );
    Ok(())
}
