use std::fmt::Write as _;

use anyhow::{Context, Result};
use novelty::analysis::{chernoff_row, ChernoffRow, Diagnostics, ScatterRow, VoteRates};
use novelty::dataset::{generate_synthetic, load_csv, to_csv_string, LabeledDataset};
use novelty::eval::{run_cross_validation, run_single_fold, EvalReport, Method, ReportRow};
use novelty::rng::derive_seed;

use crate::config::{DataSource, RunConfig};
use crate::output::Output;

fn load_data(cfg: &RunConfig) -> Result<LabeledDataset> {
    match &cfg.data {
        DataSource::Csv(path) => {
            load_csv(path).with_context(|| format!("loading {}", path.display()))
        }
        DataSource::Synth(spec) => generate_synthetic(spec).context("generating synthetic data"),
    }
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let ds = generate_synthetic(&cfg.synth).context("generating synthetic data")?;
    let text = to_csv_string(&ds);
    let parent = cfg
        .synth_output
        .parent()
        .unwrap_or(std::path::Path::new("."));
    let name = cfg
        .synth_output
        .file_name()
        .context("synth.output has no file name")?;
    let mut out = Output::new(parent);
    let path = out.write(name, &text)?;
    out.commit();
    println!(
        "wrote {} examples of {} classes to {}",
        ds.len(),
        ds.num_classes(),
        path.display()
    );
    Ok(())
}

fn aggregate_csv(report: &EvalReport) -> String {
    let mut out = String::from("method,representation,s,count,auc_mean,auc_std,eer_mean,eer_std\n");
    for a in report.aggregate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            a.method,
            a.representation,
            a.set_size,
            a.count,
            a.auc_mean,
            a.auc_std,
            a.eer_mean,
            a.eer_std
        );
    }
    out
}

fn scatter_csv(d: &Diagnostics) -> String {
    let mut out = format!("{}\n", ScatterRow::CSV_HEADER);
    for row in &d.scatter {
        let _ = writeln!(out, "{}", row.to_csv());
    }
    out
}

fn diagnostics_csv(d: &Diagnostics) -> String {
    format!(
        "statistic,value\nr1_auc,{}\nr2_ks,{}\np_rate,{}\nq_rate,{}\nmu_novel,{}\nmu_known,{}\n",
        d.r1_auc, d.r2_ks, d.p_rate, d.q_rate, d.mu_novel, d.mu_known
    )
}

fn roc_path(row: &ReportRow) -> String {
    format!("repeat_{}/{}", row.repeat, row.roc_file_name())
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let data = load_data(cfg)?;
    cfg.cv
        .validate(data.num_classes(), data.dim())
        .map_err(|e| crate::CliError::Config(crate::config::ConfigError::Invalid(e.to_string())))?;
    let report = run_cross_validation(&data, &cfg.cv).context("cross-validation")?;

    let mut out = Output::new(&cfg.output_dir);
    out.write("summary.csv", &report.summary_csv())?;
    out.write("aggregate.csv", &aggregate_csv(&report))?;
    for (row, curve) in report.rows.iter().zip(&report.curves) {
        out.write(roc_path(row), &curve.to_csv())?;
    }
    if cfg.cv.methods.contains(&Method::Ensemble) {
        out.write("vote_gap.csv", &report.vote_gap_csv())?;
    }
    if let Some(d) = &report.diagnostics {
        out.write("theta_scatter.csv", &scatter_csv(d))?;
        out.write("diagnostics.csv", &diagnostics_csv(d))?;
    }
    for fold in &report.models {
        for ensemble in &fold.ensembles {
            let dir = format!(
                "models/repeat_{}/fold_{}/s{}",
                fold.repeat, fold.fold, ensemble.set_size
            );
            out.write_dir(dir, |path| ensemble.save_dir(path).map_err(Into::into))?;
        }
    }
    out.commit();
    print!("{}", report.aggregate_table());
    Ok(())
}

pub fn diagnose(cfg: &RunConfig) -> Result<()> {
    let data = load_data(cfg)?;
    let mut cv = cfg.cv.clone();
    cv.methods = vec![Method::Ensemble];
    cv.keep_curves = false;
    cv.keep_models = false;
    cv.validate(data.num_classes(), data.dim())
        .map_err(|e| crate::CliError::Config(crate::config::ConfigError::Invalid(e.to_string())))?;
    if cfg.diagnose_repeat >= cv.repeats || cfg.diagnose_fold >= cv.folds {
        return Err(
            crate::CliError::Config(crate::config::ConfigError::Invalid(format!(
                "diagnose.repeat/fold ({}, {}) outside {} repeats × {} folds",
                cfg.diagnose_repeat, cfg.diagnose_fold, cv.repeats, cv.folds
            )))
            .into(),
        );
    }
    let report = run_single_fold(&data, &cv, cfg.diagnose_repeat, cfg.diagnose_fold)
        .context("diagnostic fold")?;
    let d = report
        .diagnostics
        .as_ref()
        .context("the fold lacks known, presumed-novel or truly novel test sets")?;
    let mut out = Output::new(&cfg.output_dir);
    out.write("theta_scatter.csv", &scatter_csv(d))?;
    out.write("diagnostics.csv", &diagnostics_csv(d))?;
    out.write("vote_gap.csv", &report.vote_gap_csv())?;
    out.commit();
    print!("{}", diagnostics_csv(d));
    Ok(())
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let s = &cfg.simulate;
    let deltas: Vec<Option<f64>> = match &s.deltas {
        None => vec![None],
        Some(d) => d.iter().copied().map(Some).collect(),
    };
    let mut rows: Vec<ChernoffRow> = Vec::new();
    for (di, delta) in deltas.iter().enumerate() {
        for &l in &s.sizes {
            let flags = (0..l).map(|i| i < s.novel_assigned).collect();
            let rates = VoteRates::new(vec![s.p; l], vec![s.q; l], flags)?;
            let seed = derive_seed(cfg.seed, &[l as u64, di as u64]);
            rows.push(chernoff_row(&rates, *delta, s.trials, seed)?);
        }
    }
    let mut text = format!("{}\n", ChernoffRow::CSV_HEADER);
    for row in &rows {
        let _ = writeln!(text, "{}", row.to_csv());
    }
    let mut out = Output::new(&cfg.output_dir);
    out.write("chernoff_report.csv", &text)?;
    out.commit();
    print!("{text}");
    Ok(())
}
