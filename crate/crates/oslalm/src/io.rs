//! File formats.
//!
//! Images and sinograms are stored as raw little-endian `f32` arrays
//! (row-major) with a plain-text sidecar next to them: `<name>.f32` plus
//! `<name>.txt` holding `key value` lines. Image sidecars carry
//! `nx ny pixel_size roi_radius`; sinogram sidecars carry
//! `n_views n_bins bin_spacing`. Convergence logs are CSV as defined in
//! [`crate::solvers::ConvergenceLog`]. Images can also be exported as 16-bit
//! binary PGM with a display window applied at export time.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::ct::{Geometry, ImageGrid, Sinogram};
use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::solvers::ConvergenceLog;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("txt")
}

fn write_raw_f32(path: &Path, data: &DenseVector) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for &v in data.iter() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(io_err(path))
}

fn read_raw_f32(path: &Path, expected_len: usize) -> Result<DenseVector> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() != expected_len * 4 {
        return Err(Error::MalformedFile {
            path: path.display().to_string(),
            reason: format!(
                "expected {} bytes for {expected_len} f32 samples, found {}",
                expected_len * 4,
                bytes.len()
            ),
        });
    }
    let mut out = Vec::with_capacity(expected_len);
    for chunk in bytes.chunks_exact(4) {
        out.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64);
    }
    DenseVector::new(out)
}

fn write_sidecar(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in entries {
        s.push_str(k);
        s.push(' ');
        s.push_str(v);
        s.push('\n');
    }
    fs::write(path, s).map_err(io_err(path))
}

fn read_sidecar(path: &Path) -> Result<HashMap<String, String>> {
    let content = fs::read_to_string(path).map_err(io_err(path))?;
    let mut map = HashMap::new();
    for line in content.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once(' ').ok_or_else(|| Error::MalformedFile {
            path: path.display().to_string(),
            reason: format!("expected 'key value', got '{line}'"),
        })?;
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn sidecar_get<T: std::str::FromStr>(
    map: &HashMap<String, String>,
    path: &Path,
    key: &str,
) -> Result<T> {
    map.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::MalformedFile {
            path: path.display().to_string(),
            reason: format!("missing or invalid key '{key}'"),
        })
}

/// Write `<path>` (raw f32) and its `.txt` sidecar describing the grid.
pub fn save_image(path: &Path, grid: &ImageGrid, x: &DenseVector) -> Result<()> {
    if x.len() != grid.n_pixels() {
        return Err(Error::dim("save_image", grid.n_pixels(), x.len()));
    }
    write_raw_f32(path, x)?;
    write_sidecar(
        &sidecar_path(path),
        &[
            ("nx", grid.nx.to_string()),
            ("ny", grid.ny.to_string()),
            ("pixel_size", grid.pixel_size.to_string()),
            ("roi_radius", grid.roi_radius.to_string()),
        ],
    )
}

pub fn load_image(path: &Path) -> Result<(ImageGrid, DenseVector)> {
    let side = sidecar_path(path);
    let map = read_sidecar(&side)?;
    let grid = ImageGrid::new(
        sidecar_get(&map, &side, "nx")?,
        sidecar_get(&map, &side, "ny")?,
        sidecar_get(&map, &side, "pixel_size")?,
        sidecar_get(&map, &side, "roi_radius")?,
    )?;
    let data = read_raw_f32(path, grid.n_pixels())?;
    Ok((grid, data))
}

/// Write `<path>` (raw f32) and its `.txt` sidecar describing the scan.
pub fn save_sinogram(path: &Path, geo: &Geometry, data: &DenseVector) -> Result<()> {
    if data.len() != geo.n_rays() {
        return Err(Error::dim("save_sinogram", geo.n_rays(), data.len()));
    }
    write_raw_f32(path, data)?;
    write_sidecar(
        &sidecar_path(path),
        &[
            ("n_views", geo.n_views.to_string()),
            ("n_bins", geo.n_bins.to_string()),
            ("bin_spacing", geo.bin_spacing.to_string()),
        ],
    )
}

pub fn load_sinogram(path: &Path) -> Result<(Geometry, Sinogram)> {
    let side = sidecar_path(path);
    let map = read_sidecar(&side)?;
    let geo = Geometry::parallel(
        sidecar_get(&map, &side, "n_views")?,
        sidecar_get(&map, &side, "n_bins")?,
        sidecar_get(&map, &side, "bin_spacing")?,
    )?;
    let data = read_raw_f32(path, geo.n_rays())?;
    let sino = Sinogram::new(geo.n_views, geo.n_bins, data)?;
    Ok((geo, sino))
}

/// Raw f32 payload with no sidecar, given an expected length (used for
/// sinogram-shaped auxiliaries like the weights, which share the sinogram
/// sidecar).
pub fn save_raw(path: &Path, data: &DenseVector) -> Result<()> {
    write_raw_f32(path, data)
}

pub fn load_raw(path: &Path, expected_len: usize) -> Result<DenseVector> {
    read_raw_f32(path, expected_len)
}

pub fn save_convergence_csv(path: &Path, log: &ConvergenceLog) -> Result<()> {
    fs::write(path, log.to_csv_string()).map_err(io_err(path))
}

pub fn load_convergence_csv(path: &Path) -> Result<ConvergenceLog> {
    let content = fs::read_to_string(path).map_err(io_err(path))?;
    ConvergenceLog::from_csv_str(&content).map_err(|e| match e {
        Error::MalformedFile { reason, .. } => Error::MalformedFile {
            path: path.display().to_string(),
            reason,
        },
        other => other,
    })
}

/// Export as 16-bit binary PGM with the display window `[lo, hi]` mapped to
/// `[0, 65535]` (values clamped). Windowing happens here, at export; the
/// stored raw files keep physical values.
pub fn save_pgm16(path: &Path, grid: &ImageGrid, x: &DenseVector, window: (f64, f64)) -> Result<()> {
    if x.len() != grid.n_pixels() {
        return Err(Error::dim("save_pgm16", grid.n_pixels(), x.len()));
    }
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::InvalidParameter(
            "display window needs hi > lo".into(),
        ));
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    write!(f, "P5\n{} {}\n65535\n", grid.nx, grid.ny).map_err(io_err(path))?;
    let mut bytes = Vec::with_capacity(x.len() * 2);
    for &v in x.iter() {
        let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        let p = (t * 65535.0).round() as u16;
        bytes.extend_from_slice(&p.to_be_bytes());
    }
    f.write_all(&bytes).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::LogRow;

    fn tmpdir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("oslalm-io-{name}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn image_round_trip_is_bitwise() {
        let dir = tmpdir("img");
        let grid = ImageGrid::new(5, 4, 0.75, 1.5).unwrap();
        let x = DenseVector::from_fn(20, |i| (i as f64 * 0.37).sin()).unwrap();
        let path = dir.join("img.f32");
        save_image(&path, &grid, &x).unwrap();
        let (g2, x2) = load_image(&path).unwrap();
        assert_eq!(g2, grid);
        // a second save of the loaded data reproduces the file bytes
        let path2 = dir.join("img2.f32");
        save_image(&path2, &g2, &x2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn sinogram_round_trip() {
        let dir = tmpdir("sino");
        let geo = Geometry::parallel(3, 7, 1.25).unwrap();
        let y = DenseVector::from_fn(21, |i| i as f64 - 10.0).unwrap();
        let path = dir.join("sino.f32");
        save_sinogram(&path, &geo, &y).unwrap();
        let (g2, s2) = load_sinogram(&path).unwrap();
        assert_eq!(g2.n_views, 3);
        assert_eq!(g2.n_bins, 7);
        assert_eq!(g2.bin_spacing, 1.25);
        let path2 = dir.join("sino2.f32");
        save_sinogram(&path2, &g2, s2.data()).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn csv_file_round_trip() {
        let dir = tmpdir("csv");
        let mut log = ConvergenceLog::new();
        log.push(LogRow {
            epoch: 0,
            inner: 0,
            rho: 1.0,
            restarted: false,
            objective: 1.0,
            rmsd: 0.5,
            seconds: 0.0,
        });
        let path = dir.join("log.csv");
        save_convergence_csv(&path, &log).unwrap();
        let back = load_convergence_csv(&path).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_image(Path::new("/nonexistent/img.f32")).unwrap_err();
        match err {
            Error::Io { path, .. } => assert!(path.contains("nonexistent")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pgm_export_has_header_and_payload() {
        let dir = tmpdir("pgm");
        let grid = ImageGrid::new(3, 2, 1.0, 1.0).unwrap();
        let x = DenseVector::new(vec![0.0, 0.5, 1.0, 1.5, -1.0, 2.0]).unwrap();
        let path = dir.join("img.pgm");
        save_pgm16(&path, &grid, &x, (0.0, 1.0)).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n65535\n"));
        let payload = &bytes[b"P5\n3 2\n65535\n".len()..];
        assert_eq!(payload.len(), 12);
        // first pixel 0 -> 0, third pixel 1.0 -> 65535, fifth clamps to 0
        assert_eq!(&payload[0..2], &[0, 0]);
        assert_eq!(&payload[4..6], &[0xff, 0xff]);
        assert_eq!(&payload[8..10], &[0, 0]);
    }
}
