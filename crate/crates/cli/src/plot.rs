//! Self-contained SVG scatter plots of final validation losses in loss
//! space: one marker per network per selected sample, per-network colors
//! from a fixed palette, and optional dashed true-front polylines. Three
//! objectives are shown as the three pairwise projections side by side.
//!
//! Output bytes are deterministic for identical inputs.

use hvfront_core::problems::{ProblemSpec, Sample};
use hvfront_core::trainer::RunRecord;
use std::fmt::Write as _;

use crate::CliError;
use hvfront_core::error::Error as CoreError;

/// Fixed per-network palette, indexed by network id modulo 8.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// What to draw.
#[derive(Debug, Clone)]
pub struct PlotSpec {
    /// Validation sample ids to plot; empty draws axes only.
    pub samples: Vec<usize>,
    /// Axis upper bounds per objective; `None` fits the data.
    pub axis_max: Option<Vec<f64>>,
    pub overlay_true_front: bool,
    /// Polyline resolution for the front overlay.
    pub front_resolution: usize,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            samples: Vec::new(),
            axis_max: None,
            overlay_true_front: true,
            front_resolution: 256,
        }
    }
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 420.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_B: f64 = 46.0;
const MARGIN_T: f64 = 22.0;
const MARGIN_R: f64 = 16.0;

struct Panel {
    axis_x: usize,
    axis_y: usize,
    max_x: f64,
    max_y: f64,
}

impl Panel {
    fn sx(&self, v: f64) -> f64 {
        MARGIN_L + (v / self.max_x).clamp(0.0, 1.0) * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn sy(&self, v: f64) -> f64 {
        PANEL_H - MARGIN_B - (v / self.max_y).clamp(0.0, 1.0) * (PANEL_H - MARGIN_T - MARGIN_B)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1000.0) {
        format!("{v:.2}")
    } else {
        format!("{v:.1e}")
    }
}

/// Render the final validation losses of a run. `samples` is the validation
/// set that produced `record.final_validation_losses`.
pub fn emit_front_plot(
    record: &RunRecord,
    problem: &ProblemSpec,
    samples: &[Sample],
    spec: &PlotSpec,
) -> Result<String, CliError> {
    let n = problem.objectives();
    let losses = &record.final_validation_losses;
    for &id in &spec.samples {
        if !samples.iter().any(|s| s.id == id) {
            return Err(CliError::Config(CoreError::InvalidConfig(format!(
                "plot sample id {id} is not in the validation set"
            ))));
        }
    }
    let selected: Vec<(usize, &Sample)> = spec
        .samples
        .iter()
        .map(|&id| {
            let pos = samples.iter().position(|s| s.id == id).unwrap();
            (pos, &samples[pos])
        })
        .collect();

    let fronts: Vec<Vec<Vec<f64>>> = if spec.overlay_true_front {
        selected
            .iter()
            .map(|(_, s)| {
                problem
                    .true_front(s, spec.front_resolution.max(2))
                    .into_iter()
                    .map(|lv| lv.values().to_vec())
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };

    // Pairwise projections: one panel for n = 2, three for n = 3.
    let pairs: Vec<(usize, usize)> = match n {
        2 => vec![(0, 1)],
        _ => vec![(0, 1), (0, 2), (1, 2)],
    };

    let axis_bound = |axis: usize| -> f64 {
        if let Some(bounds) = &spec.axis_max {
            return bounds[axis.min(bounds.len() - 1)];
        }
        let mut max = f64::MIN;
        for (pos, _) in &selected {
            for row in &losses[*pos] {
                max = max.max(row[axis]);
            }
        }
        for front in &fronts {
            for point in front {
                max = max.max(point[axis]);
            }
        }
        if max <= 0.0 || !max.is_finite() {
            1.0
        } else {
            max * 1.05
        }
    };

    let width = PANEL_W * pairs.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" viewBox="0 0 {width} {PANEL_H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (panel_idx, &(ax, ay)) in pairs.iter().enumerate() {
        let panel = Panel {
            axis_x: ax,
            axis_y: ay,
            max_x: axis_bound(ax),
            max_y: axis_bound(ay),
        };
        let off = panel_idx as f64 * PANEL_W;
        let _ = writeln!(svg, r#"<g transform="translate({off},0)">"#);

        // Axes.
        let x0 = MARGIN_L;
        let y0 = PANEL_H - MARGIN_B;
        let x1 = PANEL_W - MARGIN_R;
        let y1 = MARGIN_T;
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" stroke-width="1"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" stroke-width="1"/>"#
        );
        for t in 0..=4 {
            let frac = t as f64 / 4.0;
            let vx = frac * panel.max_x;
            let px = panel.sx(vx);
            let _ = writeln!(
                svg,
                r#"<line x1="{px}" y1="{y0}" x2="{px}" y2="{}" stroke="black" stroke-width="1"/>"#,
                y0 + 4.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{px}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
                y0 + 17.0,
                tick_label(vx)
            );
            let vy = frac * panel.max_y;
            let py = panel.sy(vy);
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{py}" x2="{x0}" y2="{py}" stroke="black" stroke-width="1"/>"#,
                x0 - 4.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
                x0 - 7.0,
                py + 4.0,
                tick_label(vy)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">L{}</text>"#,
            (x0 + x1) / 2.0,
            PANEL_H - 10.0,
            panel.axis_x + 1
        );
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {})">L{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            panel.axis_y + 1
        );

        // Dashed true-front polylines.
        for front in &fronts {
            if front.len() < 2 {
                continue;
            }
            let mut d = String::new();
            for (i, point) in front.iter().enumerate() {
                let cmd = if i == 0 { 'M' } else { 'L' };
                let _ = write!(
                    d,
                    "{cmd}{} {} ",
                    fmt(panel.sx(point[panel.axis_x])),
                    fmt(panel.sy(point[panel.axis_y]))
                );
            }
            let _ = writeln!(
                svg,
                r#"<path d="{}" fill="none" stroke="green" stroke-width="1" stroke-dasharray="5,4"/>"#,
                d.trim_end()
            );
        }

        // One marker per network per selected sample.
        for (pos, _) in &selected {
            for (net, row) in losses[*pos].iter().enumerate() {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{}" cy="{}" r="4" fill="{}" fill-opacity="0.85"/>"#,
                    fmt(panel.sx(row[panel.axis_x])),
                    fmt(panel.sy(row[panel.axis_y])),
                    PALETTE[net % PALETTE.len()]
                );
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hvfront_core::problems::{LossPair, TwoSampleCase};
    use hvfront_core::trainer::SeedPlan;

    fn fake_record(
        problem: &ProblemSpec,
        samples: &[Sample],
        networks: usize,
    ) -> RunRecord {
        let losses: Vec<Vec<Vec<f64>>> = samples
            .iter()
            .map(|s| {
                (0..networks)
                    .map(|i| {
                        let z = vec![0.1 * (i as f64 + 1.0); problem.output_dim()];
                        problem.loss_values(&z, s)
                    })
                    .collect()
            })
            .collect();
        RunRecord {
            method: "hv_per_sample".into(),
            problem: problem.name().into(),
            seeds: SeedPlan::derive(1, networks),
            entries: vec![],
            final_validation_losses: losses,
            ordering_consistency: None,
        }
    }

    #[test]
    fn empty_selection_is_axes_only() {
        let problem = ProblemSpec::regression(LossPair::MseMse, 4);
        let (_, val) = problem.datasets(1);
        let record = fake_record(&problem, &val, 3);
        let spec = PlotSpec::default();
        let svg = emit_front_plot(&record, &problem, &val, &spec).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("<circle"));
    }

    #[test]
    fn marker_and_polyline_counts_match_selection() {
        let problem = ProblemSpec::regression(LossPair::MseMse, 12);
        let (_, val) = problem.datasets(1);
        let record = fake_record(&problem, &val, 5);
        let spec = PlotSpec {
            samples: vec![0, 2, 4, 6, 8, 10],
            ..PlotSpec::default()
        };
        let svg = emit_front_plot(&record, &problem, &val, &spec).unwrap();
        assert_eq!(svg.matches("<circle").count(), 30);
        assert_eq!(svg.matches("<path").count(), 6);
    }

    #[test]
    fn output_bytes_are_deterministic() {
        let problem = ProblemSpec::two_sample(TwoSampleCase::NonConvex);
        let (_, val) = problem.datasets(1);
        let record = fake_record(&problem, &val, 4);
        let spec = PlotSpec {
            samples: vec![0, 1],
            ..PlotSpec::default()
        };
        let a = emit_front_plot(&record, &problem, &val, &spec).unwrap();
        let b = emit_front_plot(&record, &problem, &val, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_sample_id_is_rejected() {
        let problem = ProblemSpec::regression(LossPair::MseMse, 4);
        let (_, val) = problem.datasets(1);
        let record = fake_record(&problem, &val, 2);
        let spec = PlotSpec {
            samples: vec![99],
            ..PlotSpec::default()
        };
        assert!(emit_front_plot(&record, &problem, &val, &spec).is_err());
    }

    #[test]
    fn three_objectives_render_three_panels() {
        let problem = ProblemSpec::regression_three(6);
        let (_, val) = problem.datasets(1);
        let record = fake_record(&problem, &val, 2);
        let spec = PlotSpec {
            samples: vec![1, 3],
            ..PlotSpec::default()
        };
        let svg = emit_front_plot(&record, &problem, &val, &spec).unwrap();
        assert_eq!(svg.matches("<g transform").count(), 3);
        // 2 nets × 2 samples × 3 panels.
        assert_eq!(svg.matches("<circle").count(), 12);
    }
}
