//! Files written for a run, and the `summarize` reader.
//!
//! A run of scenario `NAME` into `OUT` produces `OUT/NAME/` holding:
//!
//! | file | contents |
//! |------|----------|
//! | `scenario.toml` | the resolved scenario, overrides applied |
//! | `seeds.csv` | `replicate,seed` |
//! | `replicate_NNN.csv` | one row per generation or tick |
//! | `mean.csv` | column-wise mean over replicates, same header |
//! | `summary.csv`, `summary.txt` | peak comparison, when there are two injections |
//! | `*.svg` | line plots of the mean series, unless `run.plots = false` |
//!
//! Numbers use Rust's shortest round-trip formatting, so integers print
//! without a decimal point and floats lose nothing.

use std::fs;
use std::path::{Path, PathBuf};

use memsim::clonal::RunRecord;
use memsim::scenario::{Engine, Scenario};
use memsim::shape::AFFINITY_BUCKET_LABELS;
use memsim::spatial::SpatialRecord;
use memsim::stats::WilcoxonResult;
use memsim::{Error, Result};
use plotters::prelude::*;

use crate::runner::{summarize_series, Replicate, RunOutput};

/// A header and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Sum of every column whose name starts with `prefix`.
    pub fn column_sum(&self, prefix: &str) -> Vec<f64> {
        let idx: Vec<usize> = (0..self.header.len())
            .filter(|&i| self.header[i].starts_with(prefix))
            .collect();
        self.rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i]).sum())
            .collect()
    }
}

pub fn clonal_table(rec: &RunRecord) -> Table {
    let mut header: Vec<String> = [
        "generation",
        "rises",
        "antigen",
        "bound",
        "network_bindings",
    ]
    .map(String::from)
    .to_vec();
    header.extend(AFFINITY_BUCKET_LABELS.iter().map(|s| s.to_string()));
    let rows = rec
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![
                f64::from(r.generation),
                r.rise_count as f64,
                r.antigen_count as f64,
                r.bound as f64,
                r.network_bindings as f64,
            ];
            row.extend(r.affinity.counts.iter().map(|&c| c as f64));
            row
        })
        .collect();
    Table { header, rows }
}

pub fn spatial_table(rec: &SpatialRecord) -> Table {
    let mut header: Vec<String> = ["tick", "naive", "memory", "naive_unrelated"]
        .map(String::from)
        .to_vec();
    for prefix in ["memory_", "antibodies_", "antigen_"] {
        header.extend(rec.strain_names.iter().map(|n| format!("{prefix}{n}")));
    }
    header.extend(
        [
            "activations",
            "bystander_divisions",
            "il15_mass",
            "attractant_mass",
        ]
        .map(String::from),
    );
    let rows = rec
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![
                f64::from(r.tick),
                r.naive as f64,
                r.memory as f64,
                r.naive_unrelated as f64,
            ];
            for v in [&r.memory_specific, &r.antibodies, &r.antigen] {
                row.extend(v.iter().map(|&c| c as f64));
            }
            row.extend([
                r.activations as f64,
                r.bystander_divisions as f64,
                r.il15_mass,
                r.attractant_mass,
            ]);
            row
        })
        .collect();
    Table { header, rows }
}

pub fn replicate_table(rep: &Replicate) -> Table {
    match rep {
        Replicate::Clonal(r) => clonal_table(r),
        Replicate::Spatial(r) => spatial_table(r),
    }
}

/// Element-wise mean; every table must share the first one's shape.
pub fn mean_table(tables: &[Table]) -> Option<Table> {
    let first = tables.first()?;
    let n = tables.len() as f64;
    let rows = (0..first.rows.len())
        .map(|i| {
            (0..first.header.len())
                .map(|j| tables.iter().map(|t| t.rows[i][j]).sum::<f64>() / n)
                .collect()
        })
        .collect();
    Some(Table {
        header: first.header.clone(),
        rows,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Runtime(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(&table.header)
        .map_err(|e| csv_error(path, e))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Runtime(format!("{}: {e}", path.display())))?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// One line of the peak-comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub p_value: f64,
    pub significant: bool,
    pub ratio: f64,
}

impl SummaryRow {
    pub fn new(scenario_name: &str, r: &WilcoxonResult) -> Self {
        Self {
            experiment: experiment_label(scenario_name),
            p_value: r.p_value,
            significant: r.significant_99,
            ratio: r.ratio,
        }
    }
}

/// `both-smallgap` reads as `Both Small Gap`.
pub fn experiment_label(name: &str) -> String {
    name.split('-')
        .map(|w| match w {
            "smallgap" => "Small Gap".to_owned(),
            "biggap" => "Big Gap".to_owned(),
            w => {
                let mut c = w.chars();
                c.next()
                    .map(|f| f.to_uppercase().chain(c).collect())
                    .unwrap_or_default()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Three significant figures in plain decimal notation.
pub fn three_sig(p: f64) -> String {
    if p <= 0.0 || !p.is_finite() {
        return format!("{p}");
    }
    let decimals = (2 - p.log10().floor() as i32).max(0) as usize;
    format!("{p:.decimals$}")
}

const SUMMARY_HEADER: [&str; 4] = ["experiment", "p_value", "significant_99", "ratio"];

fn verdict(b: bool) -> &'static str {
    if b {
        "Yes"
    } else {
        "No"
    }
}

pub fn write_summary(dir: &Path, rows: &[SummaryRow]) -> Result<()> {
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(SUMMARY_HEADER)
        .map_err(|e| csv_error(&path, e))?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            three_sig(r.p_value),
            verdict(r.significant).to_owned(),
            format!("{:.3}", r.ratio),
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let txt = dir.join("summary.txt");
    fs::write(&txt, summary_text(rows)).map_err(|e| Error::io(&txt, e))
}

/// Aligned text table in the layout Experiment / p-value / Significant / Ratio.
pub fn summary_text(rows: &[SummaryRow]) -> String {
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            [
                r.experiment.clone(),
                three_sig(r.p_value),
                verdict(r.significant).to_owned(),
                format!("{:.3}", r.ratio),
            ]
        })
        .collect();
    let head = ["Experiment", "p-value", "Significant (99%)", "Ratio"];
    let mut width = head.map(str::len);
    for c in &cells {
        for (w, s) in width.iter_mut().zip(c) {
            *w = (*w).max(s.len());
        }
    }
    let line = |c: [&str; 4]| {
        format!(
            "{:<w0$}  {:>w1$}  {:<w2$}  {:>w3$}\n",
            c[0],
            c[1],
            c[2],
            c[3],
            w0 = width[0],
            w1 = width[1],
            w2 = width[2],
            w3 = width[3]
        )
    };
    let mut out = line(head);
    for c in &cells {
        out += &line([&c[0], &c[1], &c[2], &c[3]]);
    }
    out
}

/// Writes a run into `out/<scenario name>/`, which is created; `out` must
/// already exist.
pub fn write_run(run: &RunOutput, out: &Path) -> Result<PathBuf> {
    if !out.is_dir() {
        return Err(Error::MissingOutputDir(out.to_path_buf()));
    }
    let dir = out.join(&run.scenario.name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let scen = dir.join("scenario.toml");
    fs::write(&scen, run.scenario.to_toml()).map_err(|e| Error::io(&scen, e))?;

    let seeds = dir.join("seeds.csv");
    let mut text = String::from("replicate,seed\n");
    for (i, s) in run.seeds.iter().enumerate() {
        text += &format!("{i},{s}\n");
    }
    fs::write(&seeds, text).map_err(|e| Error::io(&seeds, e))?;

    let tables: Vec<Table> = run.replicates.iter().map(replicate_table).collect();
    for (i, t) in tables.iter().enumerate() {
        write_table(&dir.join(format!("replicate_{i:03}.csv")), t)?;
    }
    let mean = mean_table(&tables).expect("at least one replicate");
    write_table(&dir.join("mean.csv"), &mean)?;

    if let Some(summary) = run.summary() {
        let row = SummaryRow::new(&run.scenario.name, &summary?);
        write_summary(&dir, &[row])?;
    }
    if run.scenario.run.plots {
        write_plots(&dir, run.scenario.engine, &mean)?;
    }
    Ok(dir)
}

fn write_plots(dir: &Path, engine: Engine, mean: &Table) -> Result<()> {
    let x = mean.rows.iter().map(|r| r[0]).collect::<Vec<_>>();
    let x_label = &mean.header[0];
    let pick = |names: &[String]| -> Vec<(String, Vec<f64>)> {
        names
            .iter()
            .filter_map(|n| mean.column(n).map(|c| (n.clone(), c)))
            .collect()
    };
    let starting = |prefix: &str| -> Vec<String> {
        mean.header
            .iter()
            .filter(|h| h.starts_with(prefix))
            .cloned()
            .collect()
    };
    let plots: Vec<(&str, Vec<String>)> = match engine {
        Engine::Clonal => vec![
            ("population", vec!["rises".into()]),
            ("antigen", vec!["antigen".into()]),
            ("affinity", starting("aff_")),
        ],
        Engine::Spatial => vec![
            ("memory", starting("memory_")),
            ("antibodies", starting("antibodies_")),
            ("antigen", starting("antigen_")),
            (
                "cells",
                vec!["naive".into(), "memory".into(), "naive_unrelated".into()],
            ),
        ],
    };
    for (name, cols) in plots {
        let path = dir.join(format!("{name}.svg"));
        line_plot(&path, name, x_label, &x, &pick(&cols))?;
    }
    Ok(())
}

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

/// Mean-series line chart.
pub fn line_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    x: &[f64],
    series: &[(String, Vec<f64>)],
) -> Result<()> {
    let plot_err =
        |e: &dyn std::fmt::Display| Error::Runtime(format!("plotting {}: {e}", path.display()));
    let x_max = x.last().copied().unwrap_or(1.0).max(1.0);
    let y_max = series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .fold(0.0_f64, f64::max)
        .max(1.0)
        * 1.05;
    let root = SVGBackend::new(path, (900, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(0.0..x_max, 0.0..y_max)
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc("mean over replicates")
        .draw()
        .map_err(|e| plot_err(&e))?;
    for (i, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(
                x.iter().copied().zip(ys.iter().copied()),
                color,
            ))
            .map_err(|e| plot_err(&e))?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

/// Run directories under `dir`: `dir` itself if it holds a run, otherwise
/// its immediate subdirectories that do, sorted by name.
pub fn find_runs(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingOutputDir(dir.to_path_buf()));
    }
    if dir.join("scenario.toml").is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut runs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("scenario.toml").is_file())
        .collect();
    runs.sort();
    Ok(runs)
}

fn replicate_files(run: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(run)
        .map_err(|e| Error::io(run, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("replicate_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Recomputes the peak comparison of every run found under `dir` from its
/// replicate CSVs, writes `summary.csv` and `summary.txt` into `dir`, and
/// returns the rows. Runs without two injections or with too few
/// replicates are skipped.
pub fn summarize_dir(dir: &Path) -> Result<Vec<SummaryRow>> {
    let runs = find_runs(dir)?;
    if runs.is_empty() {
        return Err(Error::Runtime(format!(
            "no runs found under {}",
            dir.display()
        )));
    }
    let mut rows = Vec::new();
    for run in runs {
        let path = run.join("scenario.toml");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let scenario = Scenario::from_toml(&text)?;
        let series = replicate_files(&run)?
            .iter()
            .map(|f| {
                let t = read_table(f)?;
                Ok(match scenario.engine {
                    Engine::Clonal => t.column("antigen").ok_or_else(|| {
                        Error::Runtime(format!("{}: no antigen column", f.display()))
                    })?,
                    Engine::Spatial => t.column_sum("antigen_"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(result) = summarize_series(&scenario, series) {
            rows.push(SummaryRow::new(&scenario.name, &result?));
        }
    }
    write_summary(dir, &rows)?;
    Ok(rows)
}
