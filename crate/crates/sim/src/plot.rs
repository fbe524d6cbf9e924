//! SVG figures drawn from CSV records, so `report` can regenerate them from
//! a results directory alone.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::record::Record;
use crate::HarnessError;

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

fn perr<E: std::fmt::Display>(e: E) -> HarnessError {
    HarnessError::Plot(e.to_string())
}

/// Writes `speedup_cpu.svg`, `speedup_cgra.svg` and `movement.svg` for
/// whichever of them `records` has data for. Returns the files written.
pub fn plot_all(records: &[Record], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out = Vec::new();
    for backend in ["cpu", "cgra"] {
        let path = dir.join(format!("speedup_{backend}.svg"));
        if plot_speedup(records, backend, &path)? {
            out.push(path);
        }
    }
    let path = dir.join("movement.svg");
    if plot_movement(records, &path)? {
        out.push(path);
    }
    Ok(out)
}

/// Speedup against nodes, one line per kernel and model.
pub fn plot_speedup(records: &[Record], backend: &str, path: &Path) -> Result<bool, HarnessError> {
    let rows: Vec<&Record> = records.iter().filter(|r| r.backend == backend && r.model != "serial").collect();
    if rows.is_empty() {
        return Ok(false);
    }
    let mut series: Vec<(String, String)> = rows.iter().map(|r| (r.kernel.clone(), r.model.clone())).collect();
    series.sort();
    series.dedup();
    let max_n = rows.iter().map(|r| r.nodes).max().unwrap_or(1) as f64;
    let max_y = rows.iter().map(|r| r.speedup).fold(0.0, f64::max).max(1e-3) * 1.1;

    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(perr)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("speedup over serial ({backend})"), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(0.5f64..max_n + 0.5, 0f64..max_y)
        .map_err(perr)?;
    chart.configure_mesh().x_desc("nodes").y_desc("speedup").draw().map_err(perr)?;
    for (i, (kernel, model)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| &r.kernel == kernel && &r.model == model)
            .map(|r| (r.nodes as f64, r.speedup))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let style = if model == "bsp" { color.stroke_width(1) } else { color.stroke_width(2) };
        chart
            .draw_series(LineSeries::new(pts.clone(), style))
            .map_err(perr)?
            .label(format!("{kernel} {model}"))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
        chart.draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled()))).map_err(perr)?;
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::UpperLeft)
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(perr)?;
    root.present().map_err(perr)?;
    Ok(true)
}

/// Arena bytes per category, stacked and divided by the BSP total for the
/// same kernel, backend and nodes. One bar per pair that has both rows.
pub fn plot_movement(records: &[Record], path: &Path) -> Result<bool, HarnessError> {
    let mut bars: Vec<(String, [f64; 3])> = Vec::new();
    for a in records.iter().filter(|r| r.model == "arena") {
        let Some(b) = records
            .iter()
            .find(|b| b.model == "bsp" && b.kernel == a.kernel && b.backend == a.backend && b.nodes == a.nodes)
        else {
            continue;
        };
        if b.total_bytes == 0 {
            continue;
        }
        let t = b.total_bytes as f64;
        bars.push((
            format!("{} {} n{}", a.kernel, a.backend, a.nodes),
            [a.task_bytes as f64 / t, a.essential_bytes as f64 / t, a.nonessential_bytes as f64 / t],
        ));
    }
    if bars.is_empty() {
        return Ok(false);
    }
    let max_y = bars.iter().map(|(_, v)| v.iter().sum::<f64>()).fold(1.0, f64::max) * 1.1;
    let width = (120 + 48 * bars.len()).max(480) as u32;

    let root = SVGBackend::new(path, (width, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(perr)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("arena bytes relative to BSP", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(96)
        .y_label_area_size(56)
        .build_cartesian_2d(0f64..bars.len() as f64, 0f64..max_y)
        .map_err(perr)?;
    let labels: Vec<String> = bars.iter().map(|(l, _)| l.clone()).collect();
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(bars.len() * 2 + 1)
        .x_label_formatter(&|x| {
            let i = x.floor() as usize;
            if (x - i as f64 - 0.5).abs() < 1e-6 && i < labels.len() {
                labels[i].clone()
            } else {
                String::new()
            }
        })
        .x_label_style(("sans-serif", 11).into_font().transform(FontTransform::Rotate90))
        .y_desc("bytes / BSP bytes")
        .draw()
        .map_err(perr)?;
    let names = ["task movement", "essential data", "nonessential data"];
    for (k, name) in names.iter().enumerate() {
        let color = PALETTE[k];
        chart
            .draw_series(bars.iter().enumerate().map(|(i, (_, v))| {
                let lo: f64 = v[..k].iter().sum();
                let x = i as f64;
                Rectangle::new([(x + 0.15, lo), (x + 0.85, lo + v[k])], color.filled())
            }))
            .map_err(perr)?
            .label(*name)
            .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 12, y + 5)], color.filled()));
    }
    chart
        .draw_series(LineSeries::new(vec![(0.0, 1.0), (bars.len() as f64, 1.0)], BLACK.stroke_width(1)))
        .map_err(perr)?;
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::UpperRight)
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(perr)?;
    root.present().map_err(perr)?;
    Ok(true)
}
