use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{EvalError, InstanceResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapMetric {
    /// Fraction of seeds solved.
    SuccessRate,
    /// Median steps over the solved seeds.
    MedianSteps,
}

impl FromStr for HeatmapMetric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "success_rate" => Ok(HeatmapMetric::SuccessRate),
            "median_steps" => Ok(HeatmapMetric::MedianSteps),
            _ => Err(EvalError::InvalidConfig(format!("unknown metric {s:?}"))),
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Cell values keyed by `(n, k)`; `None` marks a steps cell with no solved seed.
pub fn cell_values(
    rows: &[InstanceResult],
    metric: HeatmapMetric,
    policy: &str,
) -> Result<BTreeMap<(u32, u32), Option<f64>>, EvalError> {
    let mut cells: BTreeMap<(u32, u32), Vec<&InstanceResult>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.policy == policy) {
        cells.entry((r.n, r.k)).or_default().push(r);
    }
    if cells.is_empty() {
        return Err(EvalError::UnknownPolicy(policy.to_string()));
    }
    Ok(cells
        .into_iter()
        .map(|(key, runs)| {
            let value = match metric {
                HeatmapMetric::SuccessRate => {
                    Some(runs.iter().filter(|r| r.solved).count() as f64 / runs.len() as f64)
                }
                HeatmapMetric::MedianSteps => {
                    let mut steps: Vec<f64> = runs
                        .iter()
                        .filter(|r| r.solved)
                        .map(|r| r.steps as f64)
                        .collect();
                    (!steps.is_empty()).then(|| median(&mut steps))
                }
            };
            (key, value)
        })
        .collect())
}

const LIGHT: [f64; 3] = [247.0, 251.0, 255.0];
const DARK: [f64; 3] = [8.0, 48.0, 107.0];
const CELL: u32 = 44;
const LEFT: u32 = 48;
const TOP: u32 = 36;
const BOTTOM: u32 = 40;

/// Linear blend from light (0) to dark (1).
fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let c: Vec<u8> = LIGHT
        .iter()
        .zip(DARK)
        .map(|(&l, d)| (l + (d - l) * t).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn label(metric: HeatmapMetric, v: f64) -> String {
    match metric {
        HeatmapMetric::SuccessRate => format!("{v:.2}"),
        HeatmapMetric::MedianSteps if v.fract() == 0.0 => format!("{v}"),
        HeatmapMetric::MedianSteps => format!("{v:.1}"),
    }
}

/// SVG grid with `n` on the x-axis and `k` on the y-axis (growing upwards).
/// Success cells darken towards 1.0; step cells darken with the log of the
/// median and are hatched when no seed was solved. Each cell carries its value
/// in `data-value`.
pub fn emit_heatmap(
    rows: &[InstanceResult],
    metric: HeatmapMetric,
    policy: &str,
) -> Result<String, EvalError> {
    let cells = cell_values(rows, metric, policy)?;
    let ns: Vec<u32> = cells.keys().map(|c| c.0).collect();
    let ks: Vec<u32> = cells.keys().map(|c| c.1).collect();
    let (n_lo, n_hi) = (
        *ns.iter().min().expect("non-empty"),
        *ns.iter().max().expect("non-empty"),
    );
    let (k_lo, k_hi) = (
        *ks.iter().min().expect("non-empty"),
        *ks.iter().max().expect("non-empty"),
    );
    let (cols, rows_n) = (n_hi - n_lo + 1, k_hi - k_lo + 1);
    let width = LEFT + cols * CELL + 12;
    let height = TOP + rows_n * CELL + BOTTOM;

    let logs: Vec<f64> = cells.values().flatten().map(|v| v.max(1.0).ln()).collect();
    let (lo, hi) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let intensity = |v: f64| match metric {
        HeatmapMetric::SuccessRate => v,
        HeatmapMetric::MedianSteps if hi > lo => (v.max(1.0).ln() - lo) / (hi - lo),
        HeatmapMetric::MedianSteps => 0.5,
    };
    let title = match metric {
        HeatmapMetric::SuccessRate => "success rate",
        HeatmapMetric::MedianSteps => "median steps",
    };

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        w,
        r##"<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6"><path d="M0,6 L6,0" stroke="#999" stroke-width="1"/></pattern></defs>"##
    );
    let _ = writeln!(
        w,
        r#"<text x="{LEFT}" y="20" font-size="13">{policy}: {title}</text>"#
    );
    for (&(n, k), &value) in &cells {
        let x = LEFT + (n - n_lo) * CELL;
        let y = TOP + (k_hi - k) * CELL;
        match value {
            Some(v) => {
                let t = intensity(v);
                let ink = if t > 0.5 { "#ffffff" } else { "#000000" };
                let _ = writeln!(
                    w,
                    r##"<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="#ffffff" data-n="{n}" data-k="{k}" data-value="{v}"/>"##,
                    shade(t)
                );
                let _ = writeln!(
                    w,
                    r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{}</text>"#,
                    x + CELL / 2,
                    y + CELL / 2 + 4,
                    label(metric, v)
                );
            }
            None => {
                let _ = writeln!(
                    w,
                    r##"<rect class="cell unsolved" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="url(#hatch)" stroke="#ffffff" data-n="{n}" data-k="{k}"/>"##
                );
            }
        }
    }
    let base = TOP + rows_n * CELL;
    for n in n_lo..=n_hi {
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{}" text-anchor="middle">{n}</text>"#,
            LEFT + (n - n_lo) * CELL + CELL / 2,
            base + 14
        );
    }
    for k in k_lo..=k_hi {
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{}" text-anchor="end">{k}</text>"#,
            LEFT - 6,
            TOP + (k_hi - k) * CELL + CELL / 2 + 4
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{}" y="{}" text-anchor="middle">n</text>"#,
        LEFT + cols * CELL / 2,
        base + 32
    );
    let _ = writeln!(
        w,
        r#"<text x="12" y="{}" text-anchor="middle">k</text>"#,
        TOP + rows_n * CELL / 2
    );
    s.push_str("</svg>\n");
    Ok(s)
}
