//! Figure generation from trace files: laser ranges with trigger marks,
//! feature-error decay, and the top-down trajectory. SVG output.

use std::path::Path;

use plotters::prelude::*;

use super::trace::ParsedTrace;
use super::HarnessError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Plot {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn finite_series(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    t.iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect()
}

fn bounds(series: &[Vec<(f64, f64)>]) -> Option<(f64, f64, f64, f64)> {
    let mut it = series.iter().flatten();
    let first = it.next()?;
    let mut b = (first.0, first.0, first.1, first.1);
    for (x, y) in series.iter().flatten() {
        b.0 = b.0.min(*x);
        b.1 = b.1.max(*x);
        b.2 = b.2.min(*y);
        b.3 = b.3.max(*y);
    }
    let pad_y = ((b.3 - b.2) * 0.05).max(0.1);
    Some((b.0, b.1, b.2 - pad_y, b.3 + pad_y))
}

const SERIES_COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(127, 127, 127),
];

/// Laser ranges over time, with vertical marks where the trigger fired.
pub fn plot_laser_ranges(trace: &ParsedTrace, path: &Path) -> Result<(), HarnessError> {
    let t = trace
        .numeric_column("t")
        .ok_or_else(|| io_err(path, "trace has no t column"))?;
    let mut lasers = Vec::new();
    let mut i = 0;
    while let Some(col) = trace.numeric_column(&format!("laser_{i}")) {
        lasers.push(col);
        i += 1;
    }
    if lasers.is_empty() {
        return Err(io_err(path, "trace has no laser columns"));
    }
    let triggered = trace
        .numeric_column("triggered")
        .ok_or_else(|| io_err(path, "trace has no triggered column"))?;

    let series: Vec<Vec<(f64, f64)>> = lasers.iter().map(|l| finite_series(&t, l)).collect();
    let (x0, x1, y0, y1) = bounds(&series).ok_or_else(|| io_err(path, "empty trace"))?;

    let root = SVGBackend::new(path, (900, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| io_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Laser ranges and trigger", ("sans-serif", 22))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| io_err(path, e))?;
    chart
        .configure_mesh()
        .x_desc("t [s]")
        .y_desc("range [m]")
        .draw()
        .map_err(|e| io_err(path, e))?;

    for (i, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        chart
            .draw_series(LineSeries::new(s.clone(), &color))
            .map_err(|e| io_err(path, e))?
            .label(format!("laser_{i}"))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    // Trigger marks.
    let marks: Vec<(f64, f64)> = t
        .iter()
        .zip(&triggered)
        .filter(|(_, &tr)| tr > 0.5)
        .map(|(&tt, _)| (tt, y1))
        .collect();
    for (tt, _) in &marks {
        chart
            .draw_series(LineSeries::new(vec![(*tt, y0), (*tt, y1)], &RED.mix(0.6)))
            .map_err(|e| io_err(path, e))?;
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(|e| io_err(path, e))?;
    root.present().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Feature error norm over time (detected frames only).
pub fn plot_feature_error(trace: &ParsedTrace, path: &Path) -> Result<(), HarnessError> {
    let t = trace
        .numeric_column("t")
        .ok_or_else(|| io_err(path, "trace has no t column"))?;
    let err = trace
        .numeric_column("feature_error")
        .ok_or_else(|| io_err(path, "trace has no feature_error column"))?;
    let series = finite_series(&t, &err);
    let (x0, x1, y0, y1) =
        bounds(std::slice::from_ref(&series)).unwrap_or((0.0, 1.0, 0.0, 1.0));

    let root = SVGBackend::new(path, (900, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| io_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Feature error norm", ("sans-serif", 22))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(x0..x1, y0.min(0.0)..y1)
        .map_err(|e| io_err(path, e))?;
    chart
        .configure_mesh()
        .x_desc("t [s]")
        .y_desc("|s - s*|")
        .draw()
        .map_err(|e| io_err(path, e))?;
    chart
        .draw_series(LineSeries::new(series, &SERIES_COLORS[0]))
        .map_err(|e| io_err(path, e))?;
    root.present().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Top-down view of the UAV and deck trajectories.
pub fn plot_trajectory(trace: &ParsedTrace, path: &Path) -> Result<(), HarnessError> {
    let ux = trace
        .numeric_column("uav_x")
        .ok_or_else(|| io_err(path, "trace has no uav_x column"))?;
    let uy = trace
        .numeric_column("uav_y")
        .ok_or_else(|| io_err(path, "trace has no uav_y column"))?;
    let tx = trace
        .numeric_column("truck_x")
        .ok_or_else(|| io_err(path, "trace has no truck_x column"))?;
    let ty = trace
        .numeric_column("truck_y")
        .ok_or_else(|| io_err(path, "trace has no truck_y column"))?;

    let uav: Vec<(f64, f64)> = finite_series(&ux, &uy);
    let deck: Vec<(f64, f64)> = finite_series(&tx, &ty);
    let (x0, x1, y0, y1) =
        bounds(&[uav.clone(), deck.clone()]).ok_or_else(|| io_err(path, "empty trace"))?;

    let root = SVGBackend::new(path, (900, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| io_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Top-down trajectory", ("sans-serif", 22))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| io_err(path, e))?;
    chart
        .configure_mesh()
        .x_desc("x [m]")
        .y_desc("y [m]")
        .draw()
        .map_err(|e| io_err(path, e))?;
    chart
        .draw_series(LineSeries::new(uav.clone(), &SERIES_COLORS[0]))
        .map_err(|e| io_err(path, e))?
        .label("uav")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], SERIES_COLORS[0]));
    chart
        .draw_series(LineSeries::new(deck, &SERIES_COLORS[1]))
        .map_err(|e| io_err(path, e))?
        .label("deck")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], SERIES_COLORS[1]));
    if let Some(last) = uav.last() {
        chart
            .draw_series(PointSeries::of_element(
                vec![*last],
                5,
                &RED,
                &|c, s, st| EmptyElement::at(c) + Circle::new((0, 0), s, st.filled()),
            ))
            .map_err(|e| io_err(path, e))?;
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(|e| io_err(path, e))?;
    root.present().map_err(|e| io_err(path, e))?;
    Ok(())
}
