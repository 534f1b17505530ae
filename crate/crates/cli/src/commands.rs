use std::fs;
use std::path::Path;

use krrpm::cps::krrpm_predict_batch;
use krrpm::gpr::bayes_predict;
use krrpm::kernels::KernelSpec;
use krrpm::ridge::FitState;
use krrpm::validation::calibration::ks_critical_5pct;
use krrpm::validation::{calibration_suite, curve_grid, run_figure1, run_figure23, CalibrationConfig, Curve};
use serde_json::json;

use crate::data::{parse_inline, read_gram, read_tests, read_training};
use crate::error::{CliError, CliResult};
use crate::{CalibrateArgs, ExperimentArgs, Figure, KernelArgs, KernelName, PredictArgs};

fn kernel_spec(args: &KernelArgs) -> CliResult<KernelSpec> {
    if args.gram.is_some() && !matches!(args.kernel, KernelName::Precomputed) {
        return Err(CliError::Usage("--gram is only used with --kernel precomputed".into()));
    }
    let spec = match args.kernel {
        KernelName::Linear => KernelSpec::Linear,
        KernelName::Laplacian => KernelSpec::laplacian(args.scale.unwrap_or(1.0))?,
        KernelName::Trig2d => KernelSpec::Trig2d,
        KernelName::Precomputed => {
            let path = args
                .gram
                .as_ref()
                .ok_or_else(|| CliError::Usage("--kernel precomputed needs --gram".into()))?;
            KernelSpec::precomputed(read_gram(path)?)?
        }
    };
    Ok(spec)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    write(dir, name, &text)
}

fn check_points(points: usize) -> CliResult<()> {
    if points < 2 {
        return Err(CliError::Usage(format!("--points must be at least 2, got {points}")));
    }
    Ok(())
}

pub fn predict(args: &PredictArgs) -> CliResult<()> {
    check_points(args.points)?;
    if !(args.span_iqr >= 0.0 && args.span_iqr.is_finite()) {
        return Err(CliError::Usage(format!("--span-iqr must be non-negative, got {}", args.span_iqr)));
    }
    let kernel = kernel_spec(&args.kernel)?;
    let training = read_training(&args.train)?;
    let mut tests = match &args.test {
        Some(path) => read_tests(path)?,
        None => Vec::new(),
    };
    for text in &args.at {
        tests.push(parse_inline(text)?);
    }

    let fit = FitState::fit(training.objects, training.labels, kernel, args.kernel.a)?;
    create_dir(&args.out.out)?;
    let refs: Vec<&[f64]> = tests.iter().map(Vec::as_slice).collect();
    let dists = krrpm_predict_batch(&fit, &refs, args.kernel.variant)?;
    for (j, (test, dist)) in tests.iter().zip(&dists).enumerate() {
        write_json(&args.out.out, &format!("pred_{j}.json"), dist)?;
        let grid = curve_grid(&[dist], args.span_iqr, args.points);
        write(
            &args.out.out,
            &format!("pred_{j}.csv"),
            &Curve::from_distribution(format!("pred_{j}"), dist, &grid).to_csv(),
        )?;
        if let Some(sigma) = args.sigma {
            let bayes = bayes_predict(&fit, test, sigma)?;
            write(
                &args.out.out,
                &format!("bayes_{j}.csv"),
                &Curve::from_cdf(format!("bayes_{j}"), |y| bayes.cdf(y), &grid).to_csv(),
            )?;
        }
        println!(
            "test {j}: median {} 90% interval [{}, {}]",
            dist.quantile(0.5, 0.5)?,
            dist.quantile(0.05, 0.5)?,
            dist.quantile(0.95, 0.5)?
        );
    }
    Ok(())
}

pub fn calibrate(args: &CalibrateArgs) -> CliResult<()> {
    let kernel = kernel_spec(&args.kernel)?;
    let mut config = CalibrationConfig::new(
        args.generator,
        args.n,
        kernel,
        args.kernel.a,
        args.kernel.variant,
        args.trials,
        args.seed,
    );
    config.bins = args.bins;
    let threshold = args.threshold.unwrap_or_else(|| ks_critical_5pct(args.trials));
    let report = calibration_suite(&config)?;
    create_dir(&args.out.out)?;
    write_json(&args.out.out, "report.json", &report)?;
    println!(
        "KS statistic {:.6} over {} trials (threshold {threshold:.6})",
        report.ks_statistic, report.trials
    );
    if report.passes(threshold) {
        Ok(())
    } else {
        Err(CliError::CalibrationFailed {
            ks: report.ks_statistic,
            threshold,
        })
    }
}

fn write_curves(dir: &Path, prefix: &str, curves: &[Curve]) -> CliResult<()> {
    for curve in curves {
        write(dir, &format!("{prefix}_{}.csv", curve.name), &curve.to_csv())?;
    }
    Ok(())
}

pub fn experiment(args: &ExperimentArgs) -> CliResult<()> {
    check_points(args.points)?;
    let dir = &args.out.out;
    create_dir(dir)?;
    match args.figure {
        Figure::Fig1 => {
            let f = run_figure1(args.n.unwrap_or(1000), args.seed)?;
            write_curves(dir, "fig1", &f.curves(args.points))?;
            let summary = json!({
                "figure": "fig1",
                "n": f.n,
                "seed": f.seed,
                "test": f.test,
                "weights": f.weights,
                "bayes": f.bayes,
                "sup_distance_to_bayes": {
                    "cpd_true": f.sup_true,
                    "cpd_laplacian": f.sup_laplacian,
                    "cpd_linear": f.sup_linear,
                },
            });
            write_json(dir, "fig1_summary.json", &summary)?;
            println!(
                "fig1: sup distance to Bayes: true {:.4}, laplacian {:.4}, linear {:.4}",
                f.sup_true, f.sup_laplacian, f.sup_linear
            );
        }
        Figure::Fig2 | Figure::Fig3 => {
            let name = if args.figure == Figure::Fig2 { "fig2" } else { "fig3" };
            let default_n = if args.figure == Figure::Fig2 { 1000 } else { 10 };
            let f = run_figure23(args.n.unwrap_or(default_n), args.seed)?;
            write_curves(dir, name, &f.curves(args.points))?;
            let summary = json!({
                "figure": name,
                "n": f.n,
                "seed": f.seed,
                "kernel": f.kernel,
                "a": f.a,
                "sup_studentized_vs_ordinary": {
                    "x0": f.sup_studentized_vs_ordinary[0],
                    "x1": f.sup_studentized_vs_ordinary[1],
                },
                "sup_x0_vs_x1": f.sup_x0_vs_x1,
            });
            write_json(dir, &format!("{name}_summary.json"), &summary)?;
            println!(
                "{name}: studentized vs ordinary {:.4} (x=0), {:.4} (x=1); x=0 vs x=1 {:.4}",
                f.sup_studentized_vs_ordinary[0], f.sup_studentized_vs_ordinary[1], f.sup_x0_vs_x1
            );
        }
    }
    Ok(())
}
