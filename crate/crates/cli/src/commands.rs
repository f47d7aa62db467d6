use std::fs;
use std::path::{Path, PathBuf};

use hubbard_tunneling::curvefit::{fit_bspline, r2_heatmap, r_squared, write_fit_report_csv, write_heatmap_csv};
use hubbard_tunneling::dataset::{fmt_f64, run_trajectory, sweep, TrajectoryDataset};
use hubbard_tunneling::kan::{cross_validate, per_group_r2, train, KanBatch, KanModel};
use log::info;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::plot::{self, Mark, Series};
use crate::CliError;

pub struct Context {
    pub run: RunConfig,
    pub plot: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: String,
    inputs: Vec<(String, String)>,
    outputs: Vec<String>,
}

/// Collects the files written by one command under the output directory.
struct Output<'a> {
    ctx: &'a Context,
    command: &'a str,
    inputs: Vec<(String, String)>,
    written: Vec<String>,
}

impl<'a> Output<'a> {
    fn new(ctx: &'a Context, command: &'a str) -> Result<Self, CliError> {
        let dir = &ctx.run.out_dir;
        fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        let mut out = Self { ctx, command, inputs: Vec::new(), written: Vec::new() };
        out.write("config.toml", ctx.run.canonical_toml().as_bytes())?;
        Ok(out)
    }

    fn input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.push((path.display().to_string(), digest));
        Ok(bytes)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.ctx.run.out_dir.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        info!("wrote {}", path.display());
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.written.push("run.json".into());
        let manifest = Manifest {
            command: self.command,
            config_sha256: self.ctx.run.hash(),
            inputs: self.inputs.clone(),
            outputs: self.written.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.path("run.json");
        fs::write(&path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

fn tag_dataset(ds: &mut TrajectoryDataset, run: &RunConfig) {
    ds.metadata.insert("config_sha256".into(), run.hash());
    if let Some(p) = &run.preset {
        ds.metadata.insert("preset".into(), p.clone());
    }
}

fn load_dataset(out: &mut Output, path: &Path) -> Result<TrajectoryDataset, CliError> {
    let bytes = out.input(path)?;
    Ok(TrajectoryDataset::read(bytes.as_slice())?)
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let spec = &ctx.run.spec;
    let mut out = Output::new(ctx, "simulate")?;
    let samples = run_trajectory(spec)?;
    let mut ds = TrajectoryDataset::single(spec, samples);
    tag_dataset(&mut ds, &ctx.run);
    out.write("trajectory.csv", &ds.to_bytes()?)?;
    let samples = &ds.groups[0].samples;
    let max_n = samples.iter().map(|s| s.n_a).fold(0.0, f64::max);
    let max_s = samples.iter().map(|s| s.s_a).fold(0.0, f64::max);
    println!(
        "L={} U={} h={}: {} samples, max n_A = {}, max S_A = {}",
        spec.sites,
        spec.interaction,
        spec.barrier_height(),
        samples.len(),
        fmt_f64(max_n),
        fmt_f64(max_s)
    );
    if ctx.plot {
        let series = [
            Series { label: "n_A".into(), points: samples.iter().map(|s| (s.t, s.n_a)).collect(), mark: Mark::Line },
            Series { label: "S_A".into(), points: samples.iter().map(|s| (s.t, s.s_a)).collect(), mark: Mark::Line },
        ];
        let title = format!("L={} U={} h={}", spec.sites, spec.interaction, spec.barrier_height());
        out.write("trajectory.svg", plot::chart(&title, "t J", "value", &series).as_bytes())?;
    }
    out.finish()
}

pub fn sweep_cmd(ctx: &Context) -> Result<(), CliError> {
    let grid = ctx.run.grid.as_ref().ok_or_else(|| {
        CliError::Config("sweep needs 'interactions' and 'heights' (or a sweep preset)".into())
    })?;
    let mut out = Output::new(ctx, "sweep")?;
    let mut ds = sweep(&ctx.run.spec, grid, None)?;
    tag_dataset(&mut ds, &ctx.run);
    out.write("dataset.csv", &ds.to_bytes()?)?;
    println!("{} groups, {} rows, {} skipped pairs", ds.groups.len(), ds.row_count(), ds.skipped.len());
    for s in &ds.skipped {
        println!("skipped U={} h={} (tunneling-only sweep needs U < h)", s.u, s.h);
    }
    out.finish()
}

pub fn fit(ctx: &Context, dataset: &Path) -> Result<(), CliError> {
    let mut out = Output::new(ctx, "fit")?;
    let ds = load_dataset(&mut out, dataset)?;
    let cells = r2_heatmap(&ds)?;
    let mut report = Vec::new();
    write_fit_report_csv(&cells, &mut report)?;
    out.write("fit_report.csv", &report)?;
    let mut heat = Vec::new();
    write_heatmap_csv(&cells, &mut heat)?;
    out.write("heatmap.csv", &heat)?;

    let mut spline = String::from("U,h,L,R2,status\n");
    for g in &ds.groups {
        let points: Vec<(f64, f64)> = g.samples.iter().map(|s| (s.n_a, s.s_a)).collect();
        let result = fit_bspline(&points, ctx.run.spline_knots).and_then(|f| f.r_squared(&points));
        let (r2, status) = match result {
            Ok(r2) => (fmt_f64(r2), "ok".to_string()),
            Err(e) => (String::new(), e.to_string().replace(',', ";")),
        };
        spline.push_str(&format!("{},{},{},{r2},{status}\n", fmt_f64(g.key.u), fmt_f64(g.key.h), g.key.sites));
    }
    out.write("spline_fit.csv", spline.as_bytes())?;

    let ok: Vec<_> = cells.iter().filter_map(|c| c.r_squared().map(|r| (c, r))).collect();
    for c in &cells {
        match &c.fit {
            Ok(f) => println!("U={} h={} L={}: c1={:.6} c2={:.6} R2={:.5}", c.u, c.h, c.sites, f.c1, f.c2, f.r_squared),
            Err(e) => println!("U={} h={} L={}: fit failed: {e}", c.u, c.h, c.sites),
        }
    }
    if ctx.plot {
        let grid: Vec<(f64, f64, Option<f64>)> = cells.iter().map(|c| (c.u, c.h, c.r_squared())).collect();
        out.write("heatmap.svg", plot::heatmap("binary-entropy fit R2", "U / J", "h / J", &grid).as_bytes())?;
        let series: Vec<Series> = ds
            .groups
            .iter()
            .map(|g| Series {
                label: format!("U={} h={}", g.key.u, g.key.h),
                points: g.samples.iter().map(|s| (s.n_a, s.s_a)).collect(),
                mark: Mark::Dots,
            })
            .collect();
        out.write("collapse.svg", plot::chart("S_A against n_A", "n_A", "S_A", &series).as_bytes())?;
    }
    out.finish()?;
    match ok.iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
        Some((c, r)) => {
            println!("{} of {} groups fitted; lowest R2 = {r:.5} at U={} h={}", ok.len(), cells.len(), c.u, c.h);
            Ok(())
        }
        None => Err(CliError::Numerical("no group could be fitted".into())),
    }
}

pub fn kan_train(ctx: &Context, dataset: &Path) -> Result<(), CliError> {
    let mut out = Output::new(ctx, "kan train")?;
    let batch = KanBatch::from_dataset(&load_dataset(&mut out, dataset)?);
    let (model, report) = train(&ctx.run.kan, &batch)?;
    if !report.final_loss.is_finite() {
        return Err(CliError::Numerical(format!("training diverged (loss {})", report.final_loss)));
    }
    out.write("model.json", (model.to_json()? + "\n").as_bytes())?;
    out.write("train_report.json", (to_json(&report) + "\n").as_bytes())?;
    println!(
        "{} rows, {} epochs, {} iterations, {} line-search fallbacks",
        batch.len(),
        report.epochs,
        report.iterations,
        report.line_search_fallbacks
    );
    println!("initial MSE {:.3e}, final MSE {:.3e}", report.initial_loss, report.final_loss);
    out.finish()
}

pub fn kan_cv(ctx: &Context, dataset: &Path) -> Result<(), CliError> {
    let mut out = Output::new(ctx, "kan cv")?;
    let batch = KanBatch::from_dataset(&load_dataset(&mut out, dataset)?);
    let report = cross_validate(&ctx.run.kan, &batch)?;
    out.write("cv_report.json", (to_json(&report) + "\n").as_bytes())?;
    let mut folds = String::from("fold,train_rows,test_rows,test_R2,train_MSE\n");
    let mut groups = String::from("fold,U,R2\n");
    for f in &report.folds {
        folds.push_str(&format!(
            "{},{},{},{},{}\n",
            f.fold + 1,
            f.train_rows,
            f.test_rows,
            fmt_f64(f.test_r2),
            fmt_f64(f.train_mse)
        ));
        for (u, r2) in &f.per_group {
            groups.push_str(&format!("{},{},{}\n", f.fold + 1, fmt_f64(*u), fmt_f64(*r2)));
        }
        println!("Fold {}: R2 = {:.5}", f.fold + 1, f.test_r2);
    }
    out.write("cv_folds.csv", folds.as_bytes())?;
    out.write("cv_per_group.csv", groups.as_bytes())?;
    println!("Mean: {:.5} ± {:.5}", report.mean_r2, report.std_r2);
    for (u, r2) in report.worst_per_group() {
        println!("U={u}: worst-fold R2 = {r2:.5}");
    }
    out.finish()
}

pub fn kan_eval(ctx: &Context, dataset: &Path, checkpoint: &Path) -> Result<(), CliError> {
    let mut out = Output::new(ctx, "kan eval")?;
    let batch = KanBatch::from_dataset(&load_dataset(&mut out, dataset)?);
    let text = String::from_utf8(out.input(checkpoint)?)
        .map_err(|_| CliError::Config(format!("{} is not UTF-8", checkpoint.display())))?;
    let model = KanModel::from_json(&text)?;
    let pred = model.predict(&batch.inputs);
    let r2 = r_squared(&batch.targets, &pred.values)?;
    let groups = per_group_r2(&model, &batch)?;
    let mut csv = String::from("U,R2\n");
    for (u, g) in &groups {
        csv.push_str(&format!("{},{}\n", fmt_f64(*u), fmt_f64(*g)));
        println!("U={u}: R2 = {g:.5}");
    }
    out.write("eval_per_group.csv", csv.as_bytes())?;
    println!("{} rows, overall R2 = {r2:.5}, {} clamped inputs", batch.len(), pred.clamped);
    out.finish()
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}
