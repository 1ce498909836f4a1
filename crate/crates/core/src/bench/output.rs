//! CSV and SVG artifacts.
//!
//! * `runs.csv`: `solver_id,problem_id,n,f0,f_fin,NF,status`; `NF` is empty
//!   when the run never evaluated.
//! * `profiles_tol{E}.csv`: `solver_id,log2_ratio,fraction`, one row per
//!   breakpoint per curve. `E` is the tolerance in `{:e}` form (`1e-3`).
//! * `profiles_tol{E}.svg`: one step-function polyline per solver.
//! * `trace.csv` (single runs): `eval,best_f`.
//! * `iterations.csv` (single runs): one row per iteration.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ProfileCurve, RunRecord};
use crate::driver::IterationLog;
use crate::oracle::TracePoint;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl OutputError {
    fn io(path: &Path, source: io::Error) -> Self {
        OutputError::Io { path: path.to_path_buf(), source }
    }

    fn csv(path: &Path, source: csv::Error) -> Self {
        OutputError::Csv { path: path.to_path_buf(), source }
    }
}

/// One line of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub solver_id: String,
    pub problem_id: String,
    pub n: usize,
    pub f0: f64,
    pub f_fin: f64,
    #[serde(rename = "NF")]
    pub nf: Option<usize>,
    pub status: String,
}

const RUNS_HEADER: [&str; 7] = ["solver_id", "problem_id", "n", "f0", "f_fin", "NF", "status"];

/// Writes rows to any sink. The header is written even for no rows.
pub fn write_runs_csv<W: Write>(sink: W, rows: &[RunRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(RUNS_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs_csv<R: io::Read>(source: R) -> csv::Result<Vec<RunRow>> {
    csv::Reader::from_reader(source).deserialize().collect()
}

pub fn format_tol(tol: f64) -> String {
    format!("{tol:e}")
}

pub fn write_profile_csv<W: Write>(sink: W, curves: &[ProfileCurve]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["solver_id", "log2_ratio", "fraction"])?;
    for curve in curves {
        for &(t, frac) in &curve.points {
            w.serialize((&curve.solver_id, t, frac))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(sink: W, trace: &[TracePoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["eval", "best_f"])?;
    for t in trace {
        w.serialize((t.eval, t.best))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_iterations_csv<W: Write>(sink: W, log: &[IterationLog]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "k",
        "f_k",
        "delta",
        "gg_norm",
        "subspace_dim",
        "f_subspace",
        "f_next",
        "accepted_via",
        "decrease_flag",
        "delta_next",
        "evals",
    ])?;
    for it in log {
        w.serialize((
            it.k,
            it.f_k,
            it.delta,
            it.gg_norm,
            it.subspace_dim,
            it.f_subspace,
            it.f_next,
            it.accepted_via.as_str(),
            it.decrease_flag,
            it.delta_next,
            it.evals(),
        ))?;
    }
    w.flush()?;
    Ok(())
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Step-function plot of the curves: `log2` ratio on the x-axis, fraction
/// of problems on the y-axis. Each curve is one `<polyline>`; axes and
/// ticks use `<line>`.
pub fn profile_svg(curves: &[ProfileCurve], tol: f64) -> String {
    let x_max = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.0))
        .filter(|t| t.is_finite())
        .fold(0.0_f64, f64::max)
        .max(1.0)
        * 1.05;
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |t: f64| MARGIN_L + plot_w * (t / x_max);
    let sy = |f: f64| MARGIN_T + plot_h * (1.0 - f);

    let mut s = String::new();
    s.push_str(&format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">Performance profile, tol = {}</text>\n",
        MARGIN_L + plot_w / 2.0,
        format_tol(tol)
    ));

    let (x0, y0, x1, y1) = (sx(0.0), sy(0.0), sx(x_max), sy(1.0));
    s.push_str(&format!("<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x1:.1}\" y2=\"{y0:.1}\" stroke=\"black\"/>\n"));
    s.push_str(&format!("<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x0:.1}\" y2=\"{y1:.1}\" stroke=\"black\"/>\n"));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let y = sy(f);
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{x0:.1}\" y2=\"{y:.1}\" stroke=\"black\"/>\n<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{f}</text>\n",
            x0 - 4.0,
            x0 - 7.0,
            y + 4.0
        ));
    }
    let tick_step = (x_max / 5.0).ceil().max(1.0);
    let mut t = 0.0;
    while t <= x_max {
        let x = sx(t);
        s.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{y0:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{t}</text>\n",
            y0 + 4.0,
            y0 + 17.0
        ));
        t += tick_step;
    }
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">log2(NF / best NF)</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 18.0
    ));
    s.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 {:.1})\">fraction of problems</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    ));

    for (i, curve) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = Vec::new();
        let mut prev = 0.0;
        for &(t, f) in curve.points.iter().filter(|p| p.0.is_finite()) {
            pts.push((sx(t), sy(prev)));
            pts.push((sx(t), sy(f)));
            prev = f;
        }
        pts.push((sx(x_max), sy(prev)));
        let pts: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        let ly = MARGIN_T + 16.0 * (i as f64 + 1.0);
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\" fill=\"{color}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            WIDTH - MARGIN_R + 10.0,
            escape(&curve.solver_id)
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    File::create(path).map(BufWriter::new).map_err(|e| OutputError::io(path, e))
}

/// Writes `runs.csv` plus one CSV/SVG pair per tolerance into `out_dir`
/// (created if missing). With no records the CSVs carry only headers and
/// no SVG is written. Returns the paths written.
pub fn emit_outputs(
    records: &[RunRecord],
    profiles: &[(f64, Vec<ProfileCurve>)],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(out_dir).map_err(|e| OutputError::io(out_dir, e))?;
    let mut written = Vec::new();

    let path = out_dir.join("runs.csv");
    let rows: Vec<RunRow> = records.iter().map(RunRecord::row).collect();
    write_runs_csv(create(&path)?, &rows).map_err(|e| OutputError::csv(&path, e))?;
    written.push(path);

    for (tol, curves) in profiles {
        let stem = format!("profiles_tol{}", format_tol(*tol));
        let path = out_dir.join(format!("{stem}.csv"));
        write_profile_csv(create(&path)?, curves).map_err(|e| OutputError::csv(&path, e))?;
        written.push(path);
        if !records.is_empty() && !curves.is_empty() {
            let path = out_dir.join(format!("{stem}.svg"));
            let mut f = create(&path)?;
            f.write_all(profile_svg(curves, *tol).as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| OutputError::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes `trace.csv` and `iterations.csv` for a single run.
pub fn emit_run(trace: &[TracePoint], log: &[IterationLog], out_dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(out_dir).map_err(|e| OutputError::io(out_dir, e))?;
    let trace_path = out_dir.join("trace.csv");
    write_trace_csv(create(&trace_path)?, trace).map_err(|e| OutputError::csv(&trace_path, e))?;
    let iter_path = out_dir.join("iterations.csv");
    write_iterations_csv(create(&iter_path)?, log).map_err(|e| OutputError::csv(&iter_path, e))?;
    Ok(vec![trace_path, iter_path])
}
