//! `oslalm analyze`: damping classification, primal-dual gap sweeps,
//! restart-period measurement, and majorization checking, each emitting a
//! small CSV report.

use std::path::{Path, PathBuf};

use oslalm::analysis::{
    classify_damping, primal_dual_gap, restart_period_check, theorem2_bound, DampingRegime,
    GapContext,
};
use oslalm::io;
use oslalm::linalg::{spectral_bound, DenseVector, DiagonalOperator, SparseMatrix};
use oslalm::majorizer::{compute_ldiag, majorization_check, Majorizer};
use oslalm::solvers::{FullLalmSolver, IdentityProx};

use super::{ensure_dir, load_problem, output_dir};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

fn write_report(path: &Path, content: &str) -> CliResult<()> {
    std::fs::write(path, content)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn damping(lambda_ratio: f64, rho: f64, output: &Option<PathBuf>) -> CliResult<()> {
    let rep = classify_damping(lambda_ratio, rho)?;
    let regime = match rep.regime {
        DampingRegime::Under => "under",
        DampingRegime::Critical => "critical",
        DampingRegime::Over => "over",
    };
    println!(
        "lambda/L = {lambda_ratio}, rho = {rho}: {regime}-damped, rate = {:.6}, modulus = {:.6}{}",
        rep.rate,
        rep.modulus,
        rep.damped_frequency
            .map(|p| format!(", damped frequency = {p:.6} rad/update"))
            .unwrap_or_default()
    );
    if let Some(path) = output {
        let mut csv = String::from("lambda_ratio,rho,regime,rate,modulus,damped_frequency\n");
        csv.push_str(&format!(
            "{lambda_ratio},{rho},{regime},{},{},{}\n",
            rep.rate,
            rep.modulus,
            rep.damped_frequency.map(|p| p.to_string()).unwrap_or_default()
        ));
        write_report(path, &csv)?;
    }
    Ok(())
}

/// Construct a deterministic strongly convex sparse quadratic, run the exact
/// split iterates, and report the measured primal-dual gap of the averaged
/// iterates against the exact-update bound `C^2 / k` for every step.
pub fn gap(
    size: usize,
    rho: f64,
    iterations: usize,
    seed: u64,
    output: &Option<PathBuf>,
) -> CliResult<()> {
    if size < 2 {
        return Err(CliError::args("gap analysis needs --size >= 2"));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(CliError::args("gap analysis needs rho in (0, 1]"));
    }
    let n = size;
    let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
    let mut rand01 = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64)
    };
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::new();
        for j in 0..n {
            if i == j {
                row.push((j, 1.0 + rand01()));
            } else if rand01() < 0.3 {
                row.push((j, 0.5 * (rand01() - 0.5)));
            }
        }
        rows.push(row);
    }
    let a = SparseMatrix::from_rows(n, rows)?;
    let y = DenseVector::from_fn(n, |i| (i as f64 * 0.7).sin())?;

    // exact optimum via dense normal equations
    let mut ata = vec![vec![0.0; n]; n];
    let mut aty = vec![0.0; n];
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (i, &ci) in cols.iter().enumerate() {
            aty[ci] += vals[i] * y[r];
            for (j, &cj) in cols.iter().enumerate() {
                ata[ci][cj] += vals[i] * vals[j];
            }
        }
    }
    let x_hat = oslalm::analysis::solve_dense(ata, aty)?;
    let z_hat = a.spmv(&x_hat)?.sub(&y);

    let w = DiagonalOperator::identity(n);
    let l = spectral_bound(&a, &w, 50_000, 1e-12)?;
    let t = 1.0 / l;
    let op_norm_sq = l / oslalm::linalg::SPECTRAL_SAFETY_FACTOR;

    let solver = FullLalmSolver::new(&a, &w, &y)?;
    let x0 = DenseVector::zeros(n);
    let mut st = solver.init_state(x0.clone(), rho)?;
    let ctx = GapContext::new(
        x_hat,
        z_hat,
        x0,
        st.d.scale(-rho),
        t / rho,
        rho,
        op_norm_sq,
    )?;
    let metric = DiagonalOperator::uniform(n, l)?;
    let eps = vec![0.0; iterations];
    let h = |_: &DenseVector| 0.0;

    let mut csv = String::from("k,gap,bound\n");
    let mut x_sum = DenseVector::zeros(n);
    let mut z_sum = DenseVector::zeros(n);
    let mut violations = 0usize;
    for k in 1..=iterations {
        solver.step(&mut st, &metric, rho, &IdentityProx)?;
        x_sum = x_sum.add(&st.x);
        z_sum = z_sum.add(&st.d.scale(-rho));
        let gap_k = primal_dual_gap(
            &z_sum.scale(1.0 / k as f64),
            &x_sum.scale(1.0 / k as f64),
            &ctx,
            &a,
            &y,
            &h,
        )?;
        let bound = theorem2_bound(k, &ctx, &eps)?;
        if gap_k > bound {
            violations += 1;
        }
        csv.push_str(&format!("{k},{gap_k},{bound}\n"));
    }
    println!(
        "gap sweep over {iterations} exact updates (n = {n}, rho = {rho}): {} violations",
        violations
    );
    if let Some(path) = output {
        write_report(path, &csv)?;
    }
    if violations > 0 {
        return Err(CliError::data(format!(
            "{violations} of {iterations} averaged iterates exceeded the gap bound"
        )));
    }
    Ok(())
}

pub fn restart(log_path: &Path, mu: f64, l_max: f64, output: &Option<PathBuf>) -> CliResult<()> {
    let log = io::load_convergence_csv(log_path)?;
    let rep = restart_period_check(&log, mu, l_max)?;
    println!(
        "{} restarts, mean interval {:.2} updates, predicted {:.2} (relative deviation {:.1}%)",
        rep.intervals.len() + 1,
        rep.mean_interval,
        rep.predicted,
        rep.relative_deviation * 100.0
    );
    if let Some(path) = output {
        let mut csv = String::from("mean_interval,predicted,relative_deviation,intervals\n");
        csv.push_str(&format!(
            "{},{},{},{}\n",
            rep.mean_interval,
            rep.predicted,
            rep.relative_deviation,
            rep.intervals
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";")
        ));
        write_report(path, &csv)?;
    }
    Ok(())
}

pub fn majorization(
    config: &ExperimentConfig,
    dir_override: &Option<PathBuf>,
    kind: &str,
    samples: usize,
    seed: u64,
    output: &Option<PathBuf>,
) -> CliResult<()> {
    let dir = output_dir(config, dir_override);
    ensure_dir(&dir)?;
    let problem = load_problem(config, &dir)?;
    let majorizer = match kind {
        "diagonal" => Majorizer::Diagonal(compute_ldiag(&problem.a, &problem.weights)?),
        "scalar" => Majorizer::Scalar(spectral_bound(
            &problem.a,
            &problem.weights,
            20_000,
            1e-9,
        )?),
        other => {
            return Err(CliError::args(format!(
                "unknown majorizer '{other}' (expected diagonal or scalar)"
            )))
        }
    };
    let rep = majorization_check(&problem.a, &problem.weights, &majorizer, samples, seed)?;
    println!(
        "majorization check ({kind}, {samples} samples): worst margin {:.3e}, {}",
        rep.worst_margin,
        if rep.passed { "passed" } else { "FAILED" }
    );
    if let Some(path) = output {
        let csv = format!(
            "kind,samples,worst_margin,passed\n{kind},{},{},{}\n",
            rep.samples, rep.worst_margin, rep.passed
        );
        write_report(path, &csv)?;
    }
    if !rep.passed {
        return Err(CliError::data(format!(
            "majorization violated: worst margin {:.3e}",
            rep.worst_margin
        )));
    }
    Ok(())
}
