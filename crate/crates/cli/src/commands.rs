//! One function per subcommand. Each writes its artifacts under `out` and
//! returns a short human-readable summary for stdout.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fracnls_core::dependence::{
    remainder_decay_experiment, run_dependence, Column, DependenceReport, PerturbationFamily,
};
use fracnls_core::exponents::ExponentSet;
use fracnls_core::grid::lebesgue_norm;
use fracnls_core::nonlinearity::{
    modulus_constant, phase_constant, pointwise_sweep, remainder_k, LemmaExponents,
    PowerNonlinearity, RemainderConfig,
};
use fracnls_core::selftest::{run_selftest, SelftestOptions};
use fracnls_core::snapshot::{sci, write_field_binary, write_field_csv};
use fracnls_core::solver::{
    detect_blowup, picard_with_backoff, smallness_check, split_step_sampled, PicardConfig,
};
use fracnls_core::spaces::{slice_norms, sobolev_norm, NormSpec};
use fracnls_core::{Field, ProblemParams, TimeGrid, Trajectory};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{
    check_dims, load, output_dir, DependenceRunConfig, IntegratorChoice, PointwiseConfig,
    RemainderRunConfig, SnapshotFormat, SnapshotMode, SolveConfig,
};
use crate::error::CliError;

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((path, BufWriter::new(file)))
}

fn write_text(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<PathBuf, CliError> {
    let (path, mut w) = create(dir, name)?;
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf, CliError> {
    write_text(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

pub fn exponents(params: &ProblemParams) -> Result<String, CliError> {
    let exps = ExponentSet::new(params)?;
    serde_json::to_string_pretty(&exps).map_err(failure)
}

pub fn selftest(
    config: Option<&Path>,
    gain_error: Option<f64>,
    samples: Option<usize>,
) -> Result<String, CliError> {
    let mut opts = match config {
        Some(p) => load::<SelftestOptions>(p)?.config,
        None => SelftestOptions::default(),
    };
    if let Some(g) = gain_error {
        opts.partition_gain_error = g;
    }
    if let Some(n) = samples {
        opts.pointwise_samples = n;
    }
    let report = run_selftest(&opts);
    let mut text = String::new();
    for suite in &report.suites {
        text.push_str(&format!(
            "{:<12} {} passed, {} failed\n",
            suite.name,
            suite.passed(),
            suite.failed()
        ));
        for c in suite.checks.iter().filter(|c| !c.passed) {
            text.push_str(&format!("  FAIL {}: {}\n", c.name, c.detail));
        }
    }
    let failed: usize = report.suites.iter().map(|s| s.failed()).sum();
    if failed == 0 {
        Ok(text)
    } else {
        print!("{text}");
        Err(CliError::Failure(format!(
            "{failed} selftest checks failed"
        )))
    }
}

pub fn verify_pointwise(config: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let loaded = load::<PointwiseConfig>(config)?;
    let cfg = &loaded.config;
    if cfg.alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) || cfg.samples == 0 {
        return Err(CliError::Config(
            "alphas must be positive and samples at least 1".into(),
        ));
    }
    let dir = output_dir(out, cfg.output_dir.as_deref());
    let sweeps: Vec<_> = cfg
        .alphas
        .iter()
        .map(|&a| pointwise_sweep(a, cfg.samples, cfg.seed))
        .collect();
    write_text(&dir, "pointwise.csv", |w| {
        writeln!(w, "# config_hash={}", loaded.hash)?;
        writeln!(
            w,
            "alpha,samples,modulus_constant,phase_constant,modulus_violations,phase_violations,modulus_max_ratio,phase_max_ratio"
        )?;
        for sw in &sweeps {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                sci(sw.alpha),
                sw.samples,
                sci(modulus_constant(sw.alpha)),
                sci(phase_constant(sw.alpha)),
                sw.modulus_violations,
                sw.phase_violations,
                sci(sw.modulus_max_ratio),
                sci(sw.phase_max_ratio)
            )?;
        }
        Ok(())
    })?;
    let violations: usize = sweeps
        .iter()
        .map(|s| s.modulus_violations + s.phase_violations)
        .sum();
    write_json(
        &dir,
        "pointwise.json",
        &json!({
            "config_hash": loaded.hash,
            "inputs": cfg,
            "sweeps": sweeps,
            "violations": violations,
        }),
    )?;
    let text = sweeps
        .iter()
        .map(|s| {
            format!(
                "alpha {}: {} samples, {} modulus / {} phase violations\n",
                s.alpha, s.samples, s.modulus_violations, s.phase_violations
            )
        })
        .collect::<String>();
    if violations == 0 {
        Ok(text)
    } else {
        print!("{text}");
        Err(CliError::Failure(format!(
            "{violations} pointwise violations"
        )))
    }
}

pub fn remainder(config: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let loaded = load::<RemainderRunConfig>(config)?;
    let cfg = &loaded.config;
    check_dims(&cfg.grid, &cfg.problem)?;
    let grid = cfg.grid.build()?;
    let exps = ExponentSet::new(&cfg.problem)?;
    let nl = PowerNonlinearity::new(cfg.problem.lambda, cfg.problem.alpha)?;
    let lem = LemmaExponents::canonical(&exps);
    let rcfg = RemainderConfig {
        theta_nodes: cfg.theta_nodes,
        quadrature: cfg.quadrature,
    };
    let u = cfg.u.build(&grid, cfg.seed)?;
    let psi = cfg.psi.build(&grid, cfg.seed)?;
    let rows: Vec<(usize, f64, f64)> = (0..=cfg.levels)
        .into_par_iter()
        .map(|k| {
            let eps = 0.5f64.powi(k as i32);
            let v = u.axpy(Complex64::new(eps, 0.0), &psi).map_err(failure)?;
            let kv = remainder_k(&u, &v, &nl, cfg.problem.alpha, &lem, &rcfg)?;
            Ok((k, eps, kv))
        })
        .collect::<Result<_, CliError>>()?;
    let dir = output_dir(out, cfg.output_dir.as_deref());
    write_text(&dir, "remainder.csv", |w| {
        writeln!(w, "# config_hash={}", loaded.hash)?;
        writeln!(w, "k,eps,K")?;
        for (k, eps, kv) in &rows {
            writeln!(w, "{k},{},{}", sci(*eps), sci(*kv))?;
        }
        Ok(())
    })?;
    let monotone = rows.windows(2).all(|w| w[1].2 < w[0].2);
    let ratio = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) if f.2 > 0.0 => l.2 / f.2,
        _ => f64::NAN,
    };
    write_json(
        &dir,
        "remainder.json",
        &json!({
            "config_hash": loaded.hash,
            "lemma_exponents": lem,
            "monotone": monotone,
            "last_over_first": ratio,
        }),
    )?;
    Ok(format!(
        "{} rows; monotone: {monotone}; K(last)/K(0) = {}\n",
        rows.len(),
        sci(ratio)
    ))
}

fn write_snapshot(
    dir: &Path,
    name: &str,
    field: &Field,
    format: SnapshotFormat,
    hash: &str,
) -> Result<PathBuf, CliError> {
    match format {
        SnapshotFormat::Csv => write_text(dir, &format!("{name}.csv"), |w| {
            write_field_csv(w, field, hash)
        }),
        // binary snapshots carry the hash in their file name
        SnapshotFormat::Binary => write_text(dir, &format!("{name}_{}.bin", &hash[..16]), |w| {
            write_field_binary(w, field)
        }),
    }
}

pub fn solve(config: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let loaded = load::<SolveConfig>(config)?;
    let cfg = &loaded.config;
    check_dims(&cfg.grid, &cfg.problem)?;
    let grid = cfg.grid.build()?;
    let exps = ExponentSet::new(&cfg.problem)?;
    let nl = PowerNonlinearity::new(cfg.problem.lambda, cfg.problem.alpha)?;
    let phi = cfg.initial.build(&grid, cfg.seed)?;
    let tg = TimeGrid::new(cfg.horizon, cfg.intervals()?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let picard_cfg = cfg.picard(PicardConfig::for_exponents(&exps));
    let smallness = smallness_check(&phi, &tg, &exps)?;

    let (traj, iteration): (Trajectory, Option<_>) = match cfg.integrator {
        IntegratorChoice::Picard => {
            picard_cfg.validate(cfg.problem.dim)?;
            let (t, rep) = picard_with_backoff(&phi, &nl, &tg, &picard_cfg, cfg.max_halvings)?;
            (t, Some(rep))
        }
        IntegratorChoice::SplitStep => (split_step_sampled(&phi, &nl, &tg, cfg.substeps)?, None),
    };

    let s = cfg.problem.s;
    let l2 = slice_norms(&traj, &NormSpec::lebesgue(2.0)).map_err(failure)?;
    let hs = slice_norms(&traj, &NormSpec::sobolev(s, false)).map_err(failure)?;
    let besov = slice_norms(&traj, &NormSpec::besov_lp(s, exps.rho, 2.0, true)).map_err(failure)?;
    let times = traj.timegrid().times();

    let dir = output_dir(out, cfg.output_dir.as_deref());
    write_text(&dir, "solve_norms.csv", |w| {
        writeln!(w, "# config_hash={}", loaded.hash)?;
        writeln!(w, "t,L2,Hs,Besov")?;
        for m in 0..times.len() {
            writeln!(
                w,
                "{},{},{},{}",
                sci(times[m]),
                sci(l2[m]),
                sci(hs[m]),
                sci(besov[m])
            )?;
        }
        Ok(())
    })?;

    let mut snapshots = Vec::new();
    match cfg.snapshots {
        SnapshotMode::None => {}
        SnapshotMode::Final => snapshots.push(write_snapshot(
            &dir,
            "final",
            traj.last(),
            cfg.snapshot_format,
            &loaded.hash,
        )?),
        SnapshotMode::All => {
            for (m, f) in traj.slices().iter().enumerate() {
                snapshots.push(write_snapshot(
                    &dir,
                    &format!("slice_{m:05}"),
                    f,
                    cfg.snapshot_format,
                    &loaded.hash,
                )?);
            }
        }
    }

    let blowup_time = match cfg.blowup_threshold {
        Some(th) => detect_blowup(&traj, th, s)?,
        None => None,
    };
    let mass0 = lebesgue_norm(traj.initial(), 2.0).map_err(failure)?;
    let mass1 = lebesgue_norm(traj.last(), 2.0).map_err(failure)?;
    let mass_drift = if mass0 > 0.0 {
        (mass1 - mass0).abs() / mass0
    } else {
        mass1
    };
    write_json(
        &dir,
        "solve.json",
        &json!({
            "config_hash": loaded.hash,
            "exponents": exps,
            "integrator": cfg.integrator,
            "horizon": traj.timegrid().horizon(),
            "intervals": traj.timegrid().intervals(),
            "smallness": smallness,
            "smallness_delta": picard_cfg.smallness_delta,
            "iteration": iteration,
            "mass_drift": mass_drift,
            "blowup_time": blowup_time,
            "snapshots": snapshots
                .iter()
                .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .collect::<Vec<_>>(),
        }),
    )?;

    let mut text = format!(
        "{} slices to T = {}; |dM|/M = {}",
        times.len(),
        traj.timegrid().horizon(),
        sci(mass_drift)
    );
    if let Some(rep) = &iteration {
        text.push_str(&format!(
            "; {} Picard iterations, {} halvings",
            rep.iterations, rep.halvings
        ));
    }
    if smallness > picard_cfg.smallness_delta {
        text.push_str(&format!(
            "\nnote: free-evolution norm {} exceeds delta {}",
            sci(smallness),
            sci(picard_cfg.smallness_delta)
        ));
    }
    if let Some(t) = blowup_time {
        text.push_str(&format!("\nH^s threshold crossed at t = {t}"));
    }
    text.push('\n');
    Ok(text)
}

fn family(cfg: &DependenceRunConfig) -> Result<PerturbationFamily, CliError> {
    let grid = cfg.grid.build()?;
    let f = &cfg.family;
    let base = f.base.build(&grid, cfg.seed)?;
    let s = cfg.problem.s;
    match &f.direction {
        Some(d) => {
            let psi = d.build(&grid, cfg.seed)?;
            let n = sobolev_norm(&psi, s, false);
            if n.is_nan() || n <= 0.0 {
                return Err(CliError::Config("perturbation direction is zero".into()));
            }
            Ok(PerturbationFamily::new(
                base,
                psi.scale(Complex64::new(1.0 / n, 0.0)),
                f.eps0,
                f.levels,
            )?)
        }
        None => {
            if f.shift.len() > grid.dim() {
                return Err(CliError::Config(format!(
                    "shift has {} coordinates in dimension {}",
                    f.shift.len(),
                    grid.dim()
                )));
            }
            let mut shift = [0.0; 3];
            shift[..f.shift.len()].copy_from_slice(&f.shift);
            Ok(PerturbationFamily::with_default_direction(
                base, s, shift, f.width, f.eps0, f.levels,
            )?)
        }
    }
}

fn column_summary(report: &DependenceReport, col: Column) -> serde_json::Value {
    let lip = report.lipschitz(col);
    match report.fit(col) {
        Ok(fit) => json!({"fit": fit, "lipschitz": lip}),
        Err(e) => json!({"fit": null, "fit_error": e.to_string(), "lipschitz": lip}),
    }
}

pub fn dependence(config: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let loaded = load::<DependenceRunConfig>(config)?;
    let cfg = &loaded.config;
    check_dims(&cfg.grid, &cfg.problem)?;
    let fam = family(cfg)?;
    let report = run_dependence(&cfg.problem, &fam, &cfg.solver)?;
    let dir = output_dir(out, cfg.output_dir.as_deref());
    write_text(&dir, "dependence.csv", |w| {
        report.write_csv(w, &loaded.hash)
    })?;

    let remainder_rows = match &cfg.remainder {
        Some(rcfg) => {
            let rows = remainder_decay_experiment(&cfg.problem, &fam, &cfg.solver, rcfg)?;
            write_text(&dir, "remainder_decay.csv", |w| {
                writeln!(w, "# config_hash={}", loaded.hash)?;
                writeln!(w, "k,eps,K_Lgamma_dual")?;
                for r in &rows {
                    writeln!(w, "{},{},{}", r.k, sci(r.eps), sci(r.k_norm))?;
                }
                Ok(())
            })?;
            Some(rows)
        }
        None => None,
    };

    let main_fit = report.fit(Column::SupHs).ok();
    let lip = report.lipschitz(Column::SupHs);
    write_json(
        &dir,
        "dependence.json",
        &json!({
            "config_hash": loaded.hash,
            "slope": main_fit.map(|f| f.slope),
            "r2": main_fit.map(|f| f.r_squared),
            "intercept": main_fit.map(|f| f.intercept),
            "lipschitz_constant": lip.constant,
            "lipschitz_bounded": lip.bounded,
            "monotone": report.monotone(1e-12),
            "columns": {
                "out_sup_Hs": column_summary(&report, Column::SupHs),
                "out_Lgamma_Besov": column_summary(&report, Column::LgammaBesov),
                "out_Lgamma_Lsigma": column_summary(&report, Column::LgammaLsigma),
            },
            "smallness": report.smallness,
            "smallness_delta": report.smallness_delta,
            "base_iterations": report.base_iterations,
            "exponents": report.exponents,
            "rows": report.rows.len(),
            "remainder_decay": remainder_rows,
            "flags": report.flags,
        }),
    )?;

    let mut text = format!("{} rows", report.rows.len());
    if let Some(f) = main_fit {
        text.push_str(&format!(
            "; slope {:.4} (r^2 {:.6}); Lipschitz constant {:.4}",
            f.slope, f.r_squared, lip.constant
        ));
    }
    for flag in &report.flags {
        text.push_str(&format!("\nflag: {flag}"));
    }
    text.push('\n');
    Ok(text)
}
