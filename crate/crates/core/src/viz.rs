//! SVG renderers: contagion sequences, duration/size heat maps and line plots.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::batch::RunSummary;
use crate::engine::{site_index, InfectionEvent};
use crate::world::{AgentId, PlaceKind};
use crate::{Error, Result};

/// Colours, dash patterns and widths of a contagion-sequence drawing.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceStyle {
    /// Indexed like [`site_index`]: unknown, house, school, factory,
    /// hospital, nursing home, open space.
    pub colors: [&'static str; 7],
    pub incubation_dash: &'static str,
    pub asymptomatic_dash: &'static str,
    /// Stroke width for fragility exponents -2, -1, 0, 1.
    pub widths: [f64; 4],
    pub day_px: f64,
    pub level_px: f64,
    pub margin: f64,
}

impl Default for SequenceStyle {
    fn default() -> Self {
        Self {
            colors: ["black", "cyan", "yellow", "brown", "pink", "orange", "gray"],
            incubation_dash: "1,2",
            asymptomatic_dash: "5,3",
            widths: [0.75, 1.5, 2.25, 3.0],
            day_px: 6.0,
            level_px: 8.0,
            margin: 30.0,
        }
    }
}

impl SequenceStyle {
    pub fn color(&self, site: Option<PlaceKind>) -> &'static str {
        self.colors[site_index(site)]
    }

    pub fn width(&self, exponent: i8) -> f64 {
        self.widths[(exponent.clamp(-2, 1) + 2) as usize]
    }
}

struct Row<'a> {
    event: &'a InfectionEvent,
    level: usize,
}

/// Renders the first `limit` infections of a log as stacked segments.
///
/// Each infected agent gets a horizontal segment at the level of its
/// infection ordinal, dotted during incubation and then dashed or solid.
/// Transmissions are vertical connectors in the colour of the spreader's
/// segment; lower-level connectors are drawn first so later ones sit on top.
pub fn emit_sequence(events: &[InfectionEvent], limit: Option<usize>, style: &SequenceStyle) -> Result<String> {
    let mut level_of: BTreeMap<AgentId, usize> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        if let Some(src) = e.infector {
            if !level_of.contains_key(&src) {
                return Err(Error::CyclicLog(format!(
                    "agent {} infects agent {} before being infected",
                    src.0, e.infectee.0
                )));
            }
        }
        if level_of.insert(e.infectee, i + 1).is_some() {
            return Err(Error::CyclicLog(format!("agent {} infected twice", e.infectee.0)));
        }
    }
    let shown = limit.map_or(events.len(), |l| l.min(events.len()));
    let rows: Vec<Row> = events[..shown].iter().enumerate().map(|(i, event)| Row { event, level: i + 1 }).collect();

    let first = rows.iter().map(|r| r.event.day).min().unwrap_or(0);
    let last = rows.iter().map(|r| r.event.infection_end).max().unwrap_or(first).max(first + 1);
    let width = 2.0 * style.margin + f64::from(last - first) * style.day_px;
    let height = 2.0 * style.margin + (rows.len().max(1) as f64) * style.level_px;
    let x = |day: u32| style.margin + f64::from(day - first) * style.day_px;
    let y = |level: usize| height - style.margin - level as f64 * style.level_px;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.2}\" height=\"{height:.2}\">"
    );
    let _ = writeln!(svg, "<rect x=\"0\" y=\"0\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"white\"/>");
    let axis_y = height - style.margin;
    let _ = writeln!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{axis_y:.2}\" x2=\"{:.2}\" y2=\"{axis_y:.2}\" stroke=\"black\" stroke-width=\"0.5\"/>",
        x(first),
        x(last)
    );
    let mut tick = first;
    while tick <= last {
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"8\" text-anchor=\"middle\">{}</text>",
            x(tick),
            axis_y + 12.0,
            tick
        );
        tick += 10;
    }

    // connectors, grouped by the lower end
    let mut connectors: Vec<(usize, usize, u32, &'static str)> = Vec::new();
    for r in &rows {
        let Some(src) = r.event.infector else { continue };
        let src_level = level_of[&src];
        let color = style.color(events[src_level - 1].site);
        connectors.push((src_level.min(r.level), src_level, r.level as u32, color));
    }
    connectors.sort_by_key(|c| c.0);
    let _ = writeln!(svg, "<g id=\"connectors\">");
    for (_, from, to, color) in &connectors {
        let day = rows[*to as usize - 1].event.day;
        let _ = writeln!(
            svg,
            "<line x1=\"{0:.2}\" y1=\"{1:.2}\" x2=\"{0:.2}\" y2=\"{2:.2}\" stroke=\"{color}\" stroke-width=\"0.75\"/>",
            x(day),
            y(*from),
            y(*to as usize)
        );
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, "<g id=\"segments\">");
    for r in &rows {
        let e = r.event;
        let color = style.color(e.site);
        let w = style.width(e.infectee_exponent);
        let yy = y(r.level);
        if e.incubation_end > e.day {
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" stroke=\"{color}\" stroke-width=\"{w:.2}\" stroke-dasharray=\"{}\"/>",
                x(e.day),
                x(e.incubation_end),
                style.incubation_dash
            );
        }
        let start = e.incubation_end.max(e.day);
        let dash = if e.symptomatic {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{}\"", style.asymptomatic_dash)
        };
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" stroke=\"{color}\" stroke-width=\"{w:.2}\"{dash}/>",
            x(start),
            x(e.infection_end.max(start))
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Two-dimensional histogram of epidemic duration against total infected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatGrid {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// Row-major, `counts[y * nx + x]`.
    pub counts: Vec<u32>,
}

fn edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Bin index of `v` in `edges`; the last edge belongs to the last bin.
pub fn bin_of(edges: &[f64], v: f64) -> Option<usize> {
    let n = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[n]);
    if !(lo..=hi).contains(&v) {
        return None;
    }
    let i = ((v - lo) / (hi - lo) * n as f64) as usize;
    Some(i.min(n - 1))
}

/// Observed range widened by 5% on each side, or by 0.5 when degenerate.
pub fn padded_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold(None, |acc: Option<(f64, f64)>, v| match acc {
        None => Some((v, v)),
        Some((a, b)) => Some((a.min(v), b.max(v))),
    })?;
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    Some((lo - pad, hi + pad))
}

impl HeatGrid {
    pub fn new(points: &[(f64, f64)], x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("bin counts must be positive, got {nx}x{ny}")));
        }
        if !(x_range.1 > x_range.0) || !(y_range.1 > y_range.0) {
            return Err(Error::InvalidArgument(String::from("empty heat-map range")));
        }
        let x_edges = edges(x_range.0, x_range.1, nx);
        let y_edges = edges(y_range.0, y_range.1, ny);
        let mut counts = vec![0u32; nx * ny];
        for &(px, py) in points {
            if let (Some(i), Some(j)) = (bin_of(&x_edges, px), bin_of(&y_edges, py)) {
                counts[j * nx + i] += 1;
            }
        }
        Ok(Self { x_edges, y_edges, counts })
    }

    /// Grid over (duration, cumulative total) with padded observed ranges.
    pub fn from_runs(runs: &[RunSummary], nx: usize, ny: usize) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::EmptySubset);
        }
        let points: Vec<(f64, f64)> = runs.iter().map(|r| (f64::from(r.duration), f64::from(r.cum_total))).collect();
        let xr = padded_range(points.iter().map(|p| p.0)).ok_or(Error::EmptySubset)?;
        let yr = padded_range(points.iter().map(|p| p.1)).ok_or(Error::EmptySubset)?;
        Self::new(&points, xr, yr, nx, ny)
    }

    pub fn nx(&self) -> usize {
        self.x_edges.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.y_edges.len() - 1
    }

    pub fn count(&self, x: usize, y: usize) -> u32 {
        self.counts[y * self.nx() + x]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn x_marginal(&self) -> Vec<u32> {
        (0..self.nx()).map(|x| (0..self.ny()).map(|y| self.count(x, y)).sum()).collect()
    }

    pub fn y_marginal(&self) -> Vec<u32> {
        (0..self.ny()).map(|y| (0..self.nx()).map(|x| self.count(x, y)).sum()).collect()
    }

    /// `log10(count + 1)` scaled so the fullest cell maps to 1.
    pub fn color_index(&self, count: u32) -> f64 {
        let top = libm::log10(f64::from(self.max()) + 1.0);
        if top == 0.0 {
            0.0
        } else {
            libm::log10(f64::from(count) + 1.0) / top
        }
    }
}

fn ramp(t: f64) -> String {
    // pale yellow to dark red
    let lerp = |a: f64, b: f64| libm::round(a + (b - a) * t) as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 128.0), lerp(255.0, 0.0), lerp(204.0, 38.0))
}

/// Heat-map SVG of a grid. Every non-empty cell carries its raw count.
pub fn heatmap_svg(grid: &HeatGrid) -> String {
    let cell = 14.0;
    let margin = 40.0;
    let (nx, ny) = (grid.nx(), grid.ny());
    let width = 2.0 * margin + nx as f64 * cell;
    let height = 2.0 * margin + ny as f64 * cell;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.2}\" height=\"{height:.2}\">"
    );
    let _ = writeln!(svg, "<rect x=\"0\" y=\"0\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"white\"/>");
    for yb in 0..ny {
        for xb in 0..nx {
            let c = grid.count(xb, yb);
            let px = margin + xb as f64 * cell;
            let py = height - margin - (yb + 1) as f64 * cell;
            let fill = if c == 0 { String::from("#ffffff") } else { ramp(grid.color_index(c)) };
            let _ = writeln!(
                svg,
                "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"{fill}\" stroke=\"#eeeeee\" stroke-width=\"0.5\"/>"
            );
            if c > 0 {
                let _ = writeln!(
                    svg,
                    "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"6\" text-anchor=\"middle\">{c}</text>",
                    px + cell / 2.0,
                    py + cell / 2.0 + 2.0
                );
            }
        }
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">duration (days) {:.0} to {:.0}</text>",
        width / 2.0,
        height - 12.0,
        grid.x_edges[0],
        grid.x_edges[nx]
    );
    let _ = writeln!(
        svg,
        "<text x=\"12\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\" transform=\"rotate(-90 12 {:.2})\">infected and deceased {:.0} to {:.0}</text>",
        height / 2.0,
        height / 2.0,
        grid.y_edges[0],
        grid.y_edges[ny]
    );
    svg.push_str("</svg>\n");
    svg
}

/// Builds the grid of a batch and renders it.
pub fn emit_heatmap(runs: &[RunSummary], nx: usize, ny: usize) -> Result<(HeatGrid, String)> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!("bin counts must be positive, got {nx}x{ny}")));
    }
    let grid = HeatGrid::from_runs(runs, nx, ny)?;
    let svg = heatmap_svg(&grid);
    Ok((grid, svg))
}

/// One polyline of a line plot; `None` values break the line.
#[derive(Debug, Clone, PartialEq)]
pub struct Line<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub dash: Option<&'a str>,
    pub values: &'a [Option<f64>],
}

/// Plots lines over a shared day axis, with an optional horizontal guide
/// (for instance at R = 1).
pub fn line_plot_svg(lines: &[Line<'_>], guide: Option<f64>) -> Result<String> {
    let n = lines.iter().map(|l| l.values.len()).max().unwrap_or(0);
    let finite = || lines.iter().flat_map(|l| l.values.iter().flatten().copied()).filter(|v| v.is_finite());
    let (Some(lo), Some(hi)) = (finite().reduce(f64::min), finite().reduce(f64::max)) else {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    };
    let (lo, hi) = match guide {
        Some(g) => (lo.min(g), hi.max(g)),
        None => (lo, hi),
    };
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let (w, h, m) = (720.0, 360.0, 40.0);
    let px = |i: usize| m + (w - 2.0 * m) * i as f64 / (n.max(2) - 1) as f64;
    let py = |v: f64| h - m - (h - 2.0 * m) * (v - lo) / (hi - lo);
    let mut svg = String::new();
    let _ = writeln!(svg, "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.0}\" height=\"{h:.0}\">");
    let _ = writeln!(svg, "<rect x=\"0\" y=\"0\" width=\"{w:.0}\" height=\"{h:.0}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<line x1=\"{m:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"0.5\"/>",
        h - m,
        w - m,
        h - m
    );
    let _ = writeln!(svg, "<line x1=\"{m:.2}\" y1=\"{m:.2}\" x2=\"{m:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"0.5\"/>", h - m);
    let _ = writeln!(svg, "<text x=\"4\" y=\"{:.2}\" font-size=\"9\">{hi:.2}</text>", m + 3.0);
    let _ = writeln!(svg, "<text x=\"4\" y=\"{:.2}\" font-size=\"9\">{lo:.2}</text>", h - m + 3.0);
    if let Some(g) = guide {
        let y = py(g);
        let _ = writeln!(
            svg,
            "<line x1=\"{m:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#999999\" stroke-dasharray=\"4,4\" stroke-width=\"0.75\"/>",
            w - m
        );
    }
    for (k, line) in lines.iter().enumerate() {
        let dash = line.dash.map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default();
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, svg: &mut String| {
            if run.len() > 1 {
                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    svg,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\"{dash}/>",
                    pts.join(" "),
                    line.color
                );
            }
            run.clear();
        };
        for (i, v) in line.values.iter().enumerate() {
            match v {
                Some(v) if v.is_finite() => run.push((px(i), py(*v))),
                _ => flush(&mut run, &mut svg),
            }
        }
        flush(&mut run, &mut svg);
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"{}\">{}</text>",
            w - m - 120.0,
            m + 12.0 * (k + 1) as f64,
            line.color,
            line.label
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::PlaceId;
    use proptest::prelude::*;

    fn ev(day: u32, infector: Option<u32>, infectee: u32, site: Option<PlaceKind>) -> InfectionEvent {
        InfectionEvent {
            day,
            infector: infector.map(AgentId),
            infectee: AgentId(infectee),
            site,
            place: site.map(|_| PlaceId(0)),
            infectee_exponent: -1,
            symptomatic: false,
            incubation_end: if infector.is_some() { day + 5 } else { day },
            infection_end: day + 20,
        }
    }

    #[test]
    fn four_at_work_on_day_two() {
        let mut log = vec![ev(0, None, 1, None), ev(0, None, 2, None)];
        for k in 0..4 {
            log.push(ev(2, Some(2), 10 + k, Some(PlaceKind::Factory)));
        }
        let svg = emit_sequence(&log, None, &SequenceStyle::default()).unwrap();
        let segments = svg.split("<g id=\"segments\">").nth(1).unwrap();
        // two unknown-origin agents plus four incubating-then-asymptomatic ones
        assert_eq!(segments.matches("<line").count(), 2 + 4 * 2);
        let connectors = svg.split("<g id=\"connectors\">").nth(1).unwrap().split("</g>").next().unwrap();
        assert_eq!(connectors.matches("<line").count(), 4);
        // connectors take the colour of the spreader, infected outside
        assert_eq!(connectors.matches("stroke=\"black\"").count(), 4);
        assert_eq!(connectors.matches("x1=\"42.00\"").count(), 4);
        assert_eq!(segments.matches("stroke=\"brown\"").count(), 8);
    }

    #[test]
    fn empty_log_is_a_frame() {
        let svg = emit_sequence(&[], None, &SequenceStyle::default()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn infector_must_come_first() {
        let log = vec![ev(1, Some(2), 1, Some(PlaceKind::House)), ev(0, None, 2, None)];
        assert!(matches!(emit_sequence(&log, None, &SequenceStyle::default()), Err(Error::CyclicLog(_))));
        let log = vec![ev(0, None, 1, None), ev(1, Some(1), 1, Some(PlaceKind::House))];
        assert!(matches!(emit_sequence(&log, None, &SequenceStyle::default()), Err(Error::CyclicLog(_))));
    }

    #[test]
    fn limit_caps_rows() {
        let mut log = vec![ev(0, None, 1, None)];
        for k in 2..30 {
            log.push(ev(k, Some(1), k, Some(PlaceKind::OpenSpace)));
        }
        let svg = emit_sequence(&log, Some(5), &SequenceStyle::default()).unwrap();
        let connectors = svg.split("<g id=\"connectors\">").nth(1).unwrap().split("</g>").next().unwrap();
        assert_eq!(connectors.matches("<line").count(), 4);
    }

    #[test]
    fn widths_increase_with_fragility() {
        let s = SequenceStyle::default();
        assert!(s.width(-2) < s.width(-1) && s.width(-1) < s.width(0) && s.width(0) < s.width(1));
        for site in [None].into_iter().chain(PlaceKind::ALL.map(Some)) {
            assert!(!s.color(site).is_empty());
        }
    }

    fn summary(duration: u32, total: u32) -> RunSummary {
        RunSummary {
            seed: 0,
            duration,
            truncated: false,
            cum_symptomatic: 0,
            cum_total: total,
            deceased: 0,
            checkpoints: [None; 5],
        }
    }

    #[test]
    fn single_and_double_runs() {
        let (g, _) = emit_heatmap(&[summary(100, 500)], 40, 40).unwrap();
        assert_eq!(g.total(), 1);
        assert_eq!(g.counts.iter().filter(|&&c| c == 1).count(), 1);
        let (g, svg) = emit_heatmap(&[summary(100, 500), summary(100, 500)], 40, 40).unwrap();
        assert_eq!(g.max(), 2);
        assert_eq!(g.color_index(2), 1.0);
        assert!((g.color_index(1) - libm::log10(2.0) / libm::log10(3.0)).abs() < 1e-12);
        assert!(svg.contains(">2</text>"));
    }

    #[test]
    fn bad_bins() {
        assert!(emit_heatmap(&[summary(1, 1)], 0, 3).is_err());
        assert_eq!(emit_heatmap(&[], 3, 3).unwrap_err(), Error::EmptySubset);
    }

    proptest! {
        #[test]
        fn marginals_match_histograms(pts in proptest::collection::vec((1u32..700, 2u32..4000), 1..120),
                                      nx in 1usize..30, ny in 1usize..30) {
            let runs: Vec<RunSummary> = pts.iter().map(|&(d, t)| summary(d, t)).collect();
            let g = HeatGrid::from_runs(&runs, nx, ny).unwrap();
            prop_assert_eq!(g.total(), runs.len() as u64);
            let mut hx = vec![0u32; nx];
            let mut hy = vec![0u32; ny];
            for &(d, t) in &pts {
                hx[bin_of(&g.x_edges, f64::from(d)).unwrap()] += 1;
                hy[bin_of(&g.y_edges, f64::from(t)).unwrap()] += 1;
            }
            prop_assert_eq!(g.x_marginal(), hx);
            prop_assert_eq!(g.y_marginal(), hy);
        }
    }

    #[test]
    fn line_plot_breaks_on_gaps() {
        let a = [Some(1.0), Some(2.0), None, Some(1.5), Some(0.5)];
        let svg = line_plot_svg(&[Line { label: "rt", color: "black", dash: None, values: &a }], Some(1.0)).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray=\"4,4\""));
        assert!(line_plot_svg(&[Line { label: "x", color: "red", dash: None, values: &[None] }], None).is_err());
    }
}
