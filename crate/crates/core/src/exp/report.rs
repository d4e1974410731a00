use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::datapipe::{DatasetSplit, PredictionWindow};
use crate::models::{ModelConfig, ModelKind};
use crate::scenegraph::Strategy;
use crate::{Error, Result};

use super::metrics::{evaluate_displacement, Metrics};
use super::train::{train, TrainConfig};

/// One train-and-evaluate run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub model: String,
    pub variant: String,
    pub strategy: String,
    pub seed: u64,
    pub mean_displ: f64,
    pub final_displ: f64,
}

/// Mean and sample standard deviation of one configuration's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub model: String,
    pub variant: String,
    pub strategy: String,
    pub n: usize,
    pub mean_displ_mean: f64,
    pub mean_displ_std: f64,
    pub final_displ_mean: f64,
    pub final_displ_std: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub rows: Vec<RunRow>,
}

/// Mean and sample (n − 1) standard deviation; the deviation of a single
/// value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl RunReport {
    /// One aggregate per `(model, variant, strategy)` in order of first
    /// appearance.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut keys: Vec<(&str, &str, &str)> = Vec::new();
        for r in &self.rows {
            let k = (r.model.as_str(), r.variant.as_str(), r.strategy.as_str());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(m, v, s)| {
                let rows: Vec<&RunRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.model == m && r.variant == v && r.strategy == s)
                    .collect();
                let (mm, ms) = mean_std(&rows.iter().map(|r| r.mean_displ).collect::<Vec<_>>());
                let (fm, fs) = mean_std(&rows.iter().map(|r| r.final_displ).collect::<Vec<_>>());
                Aggregate {
                    model: m.to_owned(),
                    variant: v.to_owned(),
                    strategy: s.to_owned(),
                    n: rows.len(),
                    mean_displ_mean: mm,
                    mean_displ_std: ms,
                    final_displ_mean: fm,
                    final_displ_std: fs,
                }
            })
            .collect()
    }

    pub fn rows_csv(&self) -> String {
        let mut s = String::from("model,variant,strategy,seed,mean_displ_m,final_displ_m\n");
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                r.model, r.variant, r.strategy, r.seed, r.mean_displ, r.final_displ
            )
            .unwrap();
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(
            "model,variant,strategy,n,mean_displ_mean,mean_displ_std,final_displ_mean,final_displ_std\n",
        );
        for a in self.aggregates() {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                a.model,
                a.variant,
                a.strategy,
                a.n,
                a.mean_displ_mean,
                a.mean_displ_std,
                a.final_displ_mean,
                a.final_displ_std
            )
            .unwrap();
        }
        s
    }

    /// Point cloud of per-seed mean displacements with a bar at each
    /// configuration's mean.
    pub fn summary_svg(&self) -> String {
        let aggs = self.aggregates();
        let (col_w, left, top, plot_h, bottom) = (90.0, 70.0, 30.0, 300.0, 140.0);
        let width = left + col_w * aggs.len() as f64 + 20.0;
        let height = top + plot_h + bottom;
        let lo = self
            .rows
            .iter()
            .map(|r| r.mean_displ)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .rows
            .iter()
            .map(|r| r.mean_displ)
            .fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.1).max(1e-3);
        let (lo, hi) = (lo - pad, hi + pad);
        let ypos = |v: f64| top + plot_h * (hi - v) / (hi - lo);

        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.2}" stroke="black"/>"#,
            top + plot_h
        )
        .unwrap();
        for i in 0..=4 {
            let v = lo + (hi - lo) * i as f64 / 4.0;
            let y = ypos(v);
            writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"##,
                left,
                width - 20.0,
                left - 4.0,
                y + 4.0
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">mean displacement (m)</text>"#,
            top + plot_h / 2.0,
            top + plot_h / 2.0
        )
        .unwrap();
        for (c, a) in aggs.iter().enumerate() {
            let cx = left + col_w * (c as f64 + 0.5);
            let rows = self.rows.iter().filter(|r| {
                r.model == a.model && r.variant == a.variant && r.strategy == a.strategy
            });
            for (k, r) in rows.enumerate() {
                let dx = ((k % 7) as f64 - 3.0) * 4.0;
                writeln!(
                    s,
                    r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#4477aa" fill-opacity="0.6"/>"##,
                    cx + dx,
                    ypos(r.mean_displ)
                )
                .unwrap();
            }
            let my = ypos(a.mean_displ_mean);
            writeln!(
                s,
                r##"<line x1="{:.2}" y1="{my:.2}" x2="{:.2}" y2="{my:.2}" stroke="#cc3311" stroke-width="2"/>"##,
                cx - 18.0,
                cx + 18.0
            )
            .unwrap();
            let ly = top + plot_h + 12.0;
            writeln!(
                s,
                r#"<text x="{cx:.2}" y="{ly:.2}" transform="rotate(40 {cx:.2} {ly:.2})">{} {} {}</text>"#,
                a.model, a.variant, a.strategy
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Writes `rows.csv`, `summary.csv` and `summary.svg` into `out_dir`.
pub fn emit_report(report: &RunReport, out_dir: impl AsRef<Path>) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::invalid("cannot emit an empty report"));
    }
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in [
        ("rows.csv", report.rows_csv()),
        ("summary.csv", report.summary_csv()),
        ("summary.svg", report.summary_svg()),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Row labels for a configuration.
pub fn run_labels(config: &ModelConfig, strategy: Strategy) -> (String, String, String) {
    let strategy = match config.kind {
        ModelKind::Ff => "none".to_owned(),
        _ => strategy.name().to_owned(),
    };
    (
        config.kind.name().to_owned(),
        config.variant_name(),
        strategy,
    )
}

fn run_one(data: &DatasetSplit, cfg: &TrainConfig) -> Result<Metrics> {
    let outcome = train(&data.train, &data.val, cfg)?;
    evaluate_displacement(&outcome.model, test_set(data))
}

fn test_set(data: &DatasetSplit) -> &[PredictionWindow] {
    &data.test
}

/// Trains and evaluates `template` once per seed, in parallel; rows come
/// back in seed order.
pub fn run_multi_seed(
    data: &DatasetSplit,
    template: &TrainConfig,
    seeds: &[u64],
) -> Result<RunReport> {
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    if data.test.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let (model, variant, strategy) = run_labels(&template.model, template.strategy);
    let metrics: Vec<Metrics> = seeds
        .par_iter()
        .map(|&seed| {
            run_one(
                data,
                &TrainConfig {
                    seed,
                    ..template.clone()
                },
            )
        })
        .collect::<Result<_>>()?;
    Ok(RunReport {
        rows: seeds
            .iter()
            .zip(metrics)
            .map(|(&seed, m)| RunRow {
                model: model.clone(),
                variant: variant.clone(),
                strategy: strategy.clone(),
                seed,
                mean_displ: m.mean_displacement,
                final_displ: m.final_displacement,
            })
            .collect(),
    })
}

/// Seeds used for the all-connections row of the ablation grid.
pub const ALL_CONNECTIONS_SEEDS: usize = 3;

/// One configuration of the ablation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationEntry {
    pub model: ModelConfig,
    pub strategy: Strategy,
    pub variant: String,
    /// Cap on the number of seeds for this row.
    pub max_seeds: Option<usize>,
}

/// The 13 configurations: five GCN variants and four GAT variants with
/// neighbour connections, then the default GAT under each strategy. Model
/// widths and layer counts come from `base`.
pub fn ablation_grid(base: &ModelConfig) -> Vec<AblationEntry> {
    let with = |kind: ModelKind, f: &dyn Fn(&mut ModelConfig)| {
        let mut c = ModelConfig { kind, ..*base };
        c.use_residual = true;
        c.use_ff_output = true;
        c.use_edge_features = true;
        c.use_weighted_edges = false;
        f(&mut c);
        c
    };
    let gcn: [&dyn Fn(&mut ModelConfig); 5] = [
        &|_| {},
        &|c| c.use_ff_output = false,
        &|c| c.use_weighted_edges = true,
        &|c| {
            c.use_residual = false;
            c.use_weighted_edges = true
        },
        &|c| c.use_residual = false,
    ];
    let gat: [&dyn Fn(&mut ModelConfig); 4] = [
        &|_| {},
        &|c| c.use_ff_output = false,
        &|c| c.use_residual = false,
        &|c| c.use_edge_features = false,
    ];
    let mut grid = Vec::new();
    for (kind, variants) in [(ModelKind::Gcn, &gcn[..]), (ModelKind::Gat, &gat[..])] {
        for f in variants {
            let model = with(kind, *f);
            grid.push(AblationEntry {
                variant: model.variant_name(),
                model,
                strategy: Strategy::NeighbourConnection,
                max_seeds: None,
            });
        }
    }
    for strategy in Strategy::ALL {
        grid.push(AblationEntry {
            model: with(ModelKind::Gat, &|_| {}),
            strategy,
            variant: "connection-strategy".into(),
            max_seeds: (strategy == Strategy::AllConnections).then_some(ALL_CONNECTIONS_SEEDS),
        });
    }
    grid
}

/// Runs the ablation grid. Each distinct `(configuration, strategy, seed)`
/// is trained once, all in parallel; the report lists rows in grid order.
pub fn ablation_suite(
    data: &DatasetSplit,
    template: &TrainConfig,
    seeds: &[u64],
) -> Result<RunReport> {
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    if data.test.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let grid = ablation_grid(&template.model);
    let mut jobs: Vec<(ModelConfig, Strategy, u64)> = Vec::new();
    for e in &grid {
        for &seed in &seeds[..e.max_seeds.unwrap_or(seeds.len()).min(seeds.len())] {
            let job = (e.model, e.strategy, seed);
            if !jobs.contains(&job) {
                jobs.push(job);
            }
        }
    }
    let results: Vec<Metrics> = jobs
        .par_iter()
        .map(|(model, strategy, seed)| {
            let cfg = TrainConfig {
                model: *model,
                strategy: *strategy,
                seed: *seed,
                ..template.clone()
            };
            run_one(data, &cfg)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for e in &grid {
        let (model, _, strategy) = run_labels(&e.model, e.strategy);
        for &seed in &seeds[..e.max_seeds.unwrap_or(seeds.len()).min(seeds.len())] {
            let k = jobs
                .iter()
                .position(|j| j.0 == e.model && j.1 == e.strategy && j.2 == seed)
                .expect("every grid job was scheduled");
            rows.push(RunRow {
                model: model.clone(),
                variant: e.variant.clone(),
                strategy: strategy.clone(),
                seed,
                mean_displ: results[k].mean_displacement,
                final_displ: results[k].final_displacement,
            });
        }
    }
    Ok(RunReport { rows })
}
