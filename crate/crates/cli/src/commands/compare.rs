//! `oslalm compare`: merge the RMS-vs-epoch curves of several finished runs
//! into one CSV, optionally rendering a log-scale SVG plot.

use std::path::{Path, PathBuf};

use oslalm::io;

use super::{ensure_dir, output_dir};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub fn run(
    config: &ExperimentConfig,
    runs: &[String],
    dir_override: &Option<PathBuf>,
    output: &Option<PathBuf>,
    plot: &Option<PathBuf>,
) -> CliResult<()> {
    if runs.is_empty() {
        return Err(CliError::args("compare needs at least one --runs entry"));
    }
    let dir = output_dir(config, dir_override);
    ensure_dir(&dir)?;

    let mut curves: Vec<(String, Vec<f64>)> = Vec::new();
    for name in runs {
        let path = dir.join(format!("{name}.csv"));
        if !path.exists() {
            return Err(CliError::io(format!(
                "missing log file {} (reconstruct run '{name}' first)",
                path.display()
            )));
        }
        let log = io::load_convergence_csv(&path)?;
        curves.push((name.clone(), log.end_of_epoch_rmsd()));
    }

    let max_len = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    let mut csv = String::from("epoch");
    for (name, _) in &curves {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for epoch in 0..max_len {
        csv.push_str(&epoch.to_string());
        for (_, c) in &curves {
            csv.push(',');
            if let Some(v) = c.get(epoch) {
                csv.push_str(&v.to_string());
            }
        }
        csv.push('\n');
    }
    let out_path = output.clone().unwrap_or_else(|| dir.join("compare.csv"));
    std::fs::write(&out_path, csv)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", out_path.display())))?;
    println!("wrote {}", out_path.display());

    if let Some(plot_path) = plot {
        render_svg(plot_path, &curves)?;
        println!("wrote {}", plot_path.display());
    }
    Ok(())
}

/// Minimal log-scale line plot, one polyline per run.
fn render_svg(path: &Path, curves: &[(String, Vec<f64>)]) -> CliResult<()> {
    let (w, h, ml, mb) = (640.0, 420.0, 60.0, 40.0);
    let max_epoch = curves
        .iter()
        .map(|(_, c)| c.len().saturating_sub(1))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let finite: Vec<f64> = curves
        .iter()
        .flat_map(|(_, c)| c.iter().copied())
        .filter(|v| v.is_finite() && *v > 0.0)
        .collect();
    if finite.is_empty() {
        return Err(CliError::data("nothing to plot: no positive finite values"));
    }
    let y_max = finite.iter().copied().fold(f64::MIN, f64::max).log10();
    let y_min = finite.iter().copied().fold(f64::MAX, f64::min).log10();
    let y_span = (y_max - y_min).max(1e-9);

    let sx = |e: f64| ml + (w - ml - 10.0) * e / max_epoch;
    let sy = |v: f64| 10.0 + (h - mb - 10.0) * (y_max - v.log10()) / y_span;

    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    );
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ml}\" y1=\"10\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - 10.0,
        h - mb,
        h - mb
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">epoch</text>\n\
         <text x=\"8\" y=\"20\" font-size=\"12\">rmsd (log)</text>\n",
        (w - ml) / 2.0,
        h - 8.0
    ));
    for (i, (name, curve)) in curves.iter().enumerate() {
        let color = palette[i % palette.len()];
        let pts: Vec<String> = curve
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite() && **v > 0.0)
            .map(|(e, v)| format!("{:.1},{:.1}", sx(e as f64), sy(*v)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{name}</text>\n",
            w - 150.0,
            22.0 + 16.0 * i as f64
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}
