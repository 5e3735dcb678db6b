use std::path::Path;

use plotters::prelude::*;
use serde_json::json;

use super::{DegreeRun, RunConfig};
use crate::adapt::{convergence_rate, ConvergenceRecord};
use crate::forms::ErrorNorms;
use crate::linalg::{FILL_REDUCING_ORDERING, SADDLE_TOLERANCE};
use crate::solver::SOLVE_TOLERANCE;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "level",
    "dofs",
    "est_Vh",
    "err_L2_coarse",
    "err_Vh_coarse",
    "err_L2_full",
    "err_Vh_full",
    "err_L2_adjoint",
    "err_Vh_adjoint",
    "err_L2_dg",
    "err_Vh_dg",
    "newton_iters",
];

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn num(x: f64) -> String {
    format!("{x:.15e}")
}

fn norms(n: Option<ErrorNorms>) -> [String; 2] {
    match n {
        Some(n) => [num(n.l2), num(n.vh)],
        None => [String::new(), String::new()],
    }
}

/// One row per level; blank cells where a quantity does not apply.
pub fn write_csv(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        let e = r.errors.as_ref();
        let mut row = vec![r.level.to_string(), r.dofs.to_string(), num(r.estimate)];
        row.extend(norms(e.map(|e| e.coarse)));
        row.extend(norms(e.and_then(|e| e.full)));
        row.extend(norms(e.and_then(|e| e.adjoint)));
        row.extend(norms(e.and_then(|e| e.dg)));
        row.push(r.newton_iterations.map_or(String::new(), |n| n.to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

type Series = (&'static str, fn(&ConvergenceRecord) -> Option<f64>);

const SERIES: [Series; 4] = [
    ("estimate", |r| Some(r.estimate)),
    ("coarse", |r| r.errors.as_ref().map(|e| e.coarse.vh)),
    ("full", |r| {
        r.errors.as_ref().and_then(|e| e.full).map(|e| e.vh)
    }),
    ("adjoint", |r| {
        r.errors.as_ref().and_then(|e| e.adjoint).map(|e| e.vh)
    }),
];

/// Log-log plot of the V_h errors and the estimate against `dofs^{1/2}`,
/// labelled with the slope over the last five levels.
pub fn write_plot(path: &Path, title: &str, records: &[ConvergenceRecord]) -> Result<()> {
    let dofs: Vec<usize> = records.iter().map(|r| r.dofs).collect();
    let x: Vec<f64> = dofs.iter().map(|&d| (d as f64).sqrt()).collect();
    let series: Vec<(String, Vec<f64>)> = SERIES
        .iter()
        .filter_map(|(name, pick)| {
            let ys: Option<Vec<f64>> = records.iter().map(pick).collect();
            let ys = ys.filter(|v| v.iter().all(|&y| y > 0.0))?;
            let label = if ys.len() >= 2 {
                let rate = convergence_rate(&dofs, &ys, ys.len().min(5));
                format!("{name} (slope {rate:.2})")
            } else {
                name.to_string()
            };
            Some((label, ys))
        })
        .collect();
    let ys = series.iter().flat_map(|s| s.1.iter().copied());
    let (ylo, yhi) = ys.fold((f64::INFINITY, 0.0f64), |(a, b), y| (a.min(y), b.max(y)));
    let (xlo, xhi) = (x[0], x[x.len() - 1]);
    let xr = (xlo / 1.2)..(xhi * 1.2);
    let yr = if ylo.is_finite() {
        (ylo / 2.0)..(yhi * 2.0)
    } else {
        1e-3..1.0
    };

    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(io)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(72)
        .build_cartesian_2d(xr.log_scale(), yr.log_scale())
        .map_err(io)?;
    chart
        .configure_mesh()
        .x_desc("dofs^(1/2)")
        .y_desc("V_h norm")
        .y_label_formatter(&|v| format!("{v:.0e}"))
        .draw()
        .map_err(io)?;
    for (i, (label, ys)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let pts: Vec<(f64, f64)> = x.iter().copied().zip(ys.iter().copied()).collect();
        chart
            .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
            .map_err(io)?
            .label(label)
            .legend(move |(a, b)| {
                PathElement::new(vec![(a, b), (a + 20, b)], color.stroke_width(2))
            });
        chart
            .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
            .map_err(io)?;
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.85))
        .draw()
        .map_err(io)?;
    root.present().map_err(io)?;
    Ok(())
}

pub fn write_metadata(path: &Path, cfg: &RunConfig, run: &DegreeRun) -> Result<()> {
    let last = run.records.last();
    let meta = json!({
        "config": cfg,
        "degree": run.degree,
        "levels_completed": run.records.len(),
        "final_dofs": last.map(|r| r.dofs),
        "final_estimate": last.map(|r| r.estimate),
        "wall_time_seconds": run.seconds,
        "tolerances": {
            "newton_increment": cfg.newton_tolerance,
            "saddle_solve": SADDLE_TOLERANCE,
            "linear_solve": SOLVE_TOLERANCE,
        },
        "fill_reducing_ordering": FILL_REDUCING_ORDERING,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let text = serde_json::to_string_pretty(&meta).map_err(io)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
