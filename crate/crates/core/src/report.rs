//! Rendering: association tables in the standard reporting layout, CSV result
//! exports, and tertile trajectory plot data / SVG.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::assess::FeatureName;
use crate::inference::{
    AssociationResult, EffectEstimate, MediationResult, Outcome, SuppressionRow, TertileGroup,
    TertileSeries, SUPPRESSION_COLUMNS,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("results parse error at line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// A fully formatted table: cells are final strings, stars included.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RenderedTable {
    /// Plain-text rendering with aligned columns.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(String::len).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.len());
            }
        }
        let mut out = String::new();
        out.push_str(&self.title);
        out.push('\n');
        let render_row = |cells: &[String]| {
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        out.push_str(&render_row(&self.columns));
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&render_row(row));
            out.push('\n');
        }
        out
    }
}

/// Two-decimal formatting with negative zero normalized to "0.00".
pub fn format_point(value: f64) -> String {
    let s = format!("{value:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// `"0.38* [0.16, 0.56]"`-style cell; the star marks FDR significance.
pub fn format_cell(estimate: &EffectEstimate) -> String {
    format!(
        "{}{} [{}, {}]",
        format_point(estimate.estimate),
        if estimate.significant { "*" } else { "" },
        format_point(estimate.ci_low),
        format_point(estimate.ci_high),
    )
}

fn canonical_order(results: &[AssociationResult]) -> Vec<&AssociationResult> {
    FeatureName::ALL
        .iter()
        .filter_map(|f| results.iter().find(|r| r.feature == *f))
        .collect()
}

/// Renders association results in the fixed feature order with r and
/// adjusted-β columns.
pub fn render_association_table(results: &[AssociationResult], title: &str) -> RenderedTable {
    let rows = canonical_order(results)
        .into_iter()
        .map(|r| {
            vec![
                r.feature.label().to_string(),
                format_cell(&r.r),
                format_cell(&r.beta),
            ]
        })
        .collect();
    RenderedTable {
        title: title.to_string(),
        columns: vec![
            "Language Feature".into(),
            "r [95% CI]".into(),
            "beta (adjusted) [95% CI]".into(),
        ],
        rows,
    }
}

/// Renders the suppression scan: unadjusted r, one β per single covariate,
/// fully adjusted β.
pub fn render_suppression_table(rows: &[SuppressionRow], title: &str) -> RenderedTable {
    let mut columns = vec!["Language Feature".into(), "Unadjusted".into()];
    columns.extend(
        SUPPRESSION_COLUMNS
            .iter()
            .map(|c| pretty_covariate(c.name())),
    );
    columns.push("Adjusted".into());

    let table_rows = FeatureName::ALL
        .iter()
        .filter_map(|f| rows.iter().find(|r| r.feature == *f))
        .map(|r| {
            let mut cells = vec![r.feature.label().to_string(), format_cell(&r.unadjusted)];
            cells.extend(r.single_covariate.iter().map(|(_, e)| format_cell(e)));
            cells.push(format_cell(&r.fully_adjusted));
            cells
        })
        .collect();
    RenderedTable {
        title: title.to_string(),
        columns,
        rows: table_rows,
    }
}

/// Renders the marital-status mediation comparison.
pub fn render_mediation_table(rows: &[MediationResult], title: &str) -> RenderedTable {
    let table_rows = FeatureName::ALL
        .iter()
        .filter_map(|f| rows.iter().find(|r| r.feature == *f))
        .map(|r| {
            vec![
                r.feature.label().to_string(),
                format_cell(&r.without_marital),
                format_cell(&r.with_marital),
            ]
        })
        .collect();
    RenderedTable {
        title: title.to_string(),
        columns: vec![
            "Language Feature".into(),
            "beta (standard controls)".into(),
            "beta (+ marital status)".into(),
        ],
        rows: table_rows,
    }
}

fn pretty_covariate(name: &str) -> String {
    let mut out = String::new();
    for (i, part) in name.split('_').enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if part == "pcl" {
            out.push_str("PCL");
            continue;
        }
        let mut chars = part.chars();
        if let Some(c) = chars.next() {
            out.extend(c.to_uppercase());
            out.push_str(chars.as_str());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// CSV result export / import
// ---------------------------------------------------------------------------

const RESULT_COLUMNS: &str = "feature,outcome,n,r,r_lo,r_hi,r_p,r_p_adj,r_significant,beta,beta_lo,beta_hi,beta_p,beta_p_adj,beta_significant";

fn outcome_key(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::BaselinePcl => "baseline_pcl",
        Outcome::Slope => "slope",
    }
}

fn parse_outcome(key: &str) -> Option<Outcome> {
    match key {
        "baseline_pcl" => Some(Outcome::BaselinePcl),
        "slope" => Some(Outcome::Slope),
        _ => None,
    }
}

/// Writes association results as CSV, preceded by `#` comment lines carrying
/// the analysis manifest (inputs, seed, version).
pub fn write_association_results<W: Write>(
    mut writer: W,
    results: &[AssociationResult],
    comments: &[String],
) -> Result<(), ReportError> {
    for comment in comments {
        writeln!(writer, "# {comment}")?;
    }
    writeln!(writer, "{RESULT_COLUMNS}")?;
    for r in canonical_order(results) {
        writeln!(
            writer,
            "{},{},{},{}",
            r.feature.key(),
            outcome_key(r.outcome),
            r.n,
            [&r.r, &r.beta]
                .iter()
                .map(|e| {
                    format!(
                        "{:.10},{:.10},{:.10},{:.10e},{:.10e},{}",
                        e.estimate, e.ci_low, e.ci_high, e.p_raw, e.p_adj, e.significant
                    )
                })
                .collect::<Vec<_>>()
                .join(",")
        )?;
    }
    Ok(())
}

/// Reads results written by [`write_association_results`].
pub fn read_association_results<R: BufRead>(
    reader: R,
) -> Result<Vec<AssociationResult>, ReportError> {
    let mut results = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 15 {
            return Err(ReportError::Malformed {
                line: line_no,
                message: format!("expected 15 columns, found {}", fields.len()),
            });
        }
        let bad = |message: String| ReportError::Malformed {
            line: line_no,
            message,
        };
        let feature = FeatureName::from_key(fields[0])
            .ok_or_else(|| bad(format!("unknown feature {:?}", fields[0])))?;
        let outcome = parse_outcome(fields[1])
            .ok_or_else(|| bad(format!("unknown outcome {:?}", fields[1])))?;
        let n: usize = fields[2].parse().map_err(|e| bad(format!("n: {e}")))?;
        let num = |i: usize| -> Result<f64, ReportError> {
            fields[i].parse().map_err(|e| ReportError::Malformed {
                line: line_no,
                message: format!("column {i}: {e}"),
            })
        };
        let flag = |i: usize| -> Result<bool, ReportError> {
            fields[i].parse().map_err(|e| ReportError::Malformed {
                line: line_no,
                message: format!("column {i}: {e}"),
            })
        };
        let effect = |base: usize| -> Result<EffectEstimate, ReportError> {
            Ok(EffectEstimate {
                estimate: num(base)?,
                ci_low: num(base + 1)?,
                ci_high: num(base + 2)?,
                p_raw: num(base + 3)?,
                p_adj: num(base + 4)?,
                significant: flag(base + 5)?,
            })
        };
        results.push(AssociationResult {
            feature,
            outcome,
            n,
            r: effect(3)?,
            beta: effect(9)?,
        });
    }
    Ok(results)
}

// ---------------------------------------------------------------------------
// Tertile plot data and SVG
// ---------------------------------------------------------------------------

/// Long-format plot data: `feature,group,t_years,mean_adjusted_pcl`, with
/// group sizes carried in header comments.
pub fn write_tertile_data<W: Write>(
    mut writer: W,
    series: &[&TertileSeries],
) -> Result<(), ReportError> {
    for s in series {
        writeln!(
            writer,
            "# group_size: {} {}={}",
            s.feature.key(),
            s.group.label(),
            s.group_size
        )?;
    }
    writeln!(writer, "feature,group,t_years,mean_adjusted_pcl")?;
    for s in series {
        for (t, v) in &s.points {
            writeln!(
                writer,
                "{},{},{:.6},{:.6}",
                s.feature.key(),
                s.group.label(),
                t,
                v
            )?;
        }
    }
    Ok(())
}

/// Reads plot data written by [`write_tertile_data`] back into
/// `(feature, group, t, value)` tuples.
pub fn read_tertile_data<R: BufRead>(
    reader: R,
) -> Result<Vec<(String, String, f64, f64)>, ReportError> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(ReportError::Malformed {
                line: line_no,
                message: format!("expected 4 columns, found {}", fields.len()),
            });
        }
        let t: f64 = fields[2].parse().map_err(|e| ReportError::Malformed {
            line: line_no,
            message: format!("t: {e}"),
        })?;
        let v: f64 = fields[3].parse().map_err(|e| ReportError::Malformed {
            line: line_no,
            message: format!("value: {e}"),
        })?;
        rows.push((fields[0].to_string(), fields[1].to_string(), t, v));
    }
    Ok(rows)
}

/// Reconstructs the top/bottom series pair from a plot-data file (member ids
/// are not stored in the file and come back empty).
pub fn read_tertile_series<R: BufRead>(
    reader: R,
) -> Result<(TertileSeries, TertileSeries), ReportError> {
    let mut sizes: std::collections::BTreeMap<String, usize> = std::collections::BTreeMap::new();
    let mut text = String::new();
    for line in reader.lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix("# group_size:") {
            // "<feature> <group>=<n>"
            if let Some((_, pair)) = rest.trim().split_once(' ') {
                if let Some((group, n)) = pair.split_once('=') {
                    if let Ok(n) = n.parse::<usize>() {
                        sizes.insert(group.to_string(), n);
                    }
                }
            }
        }
        text.push_str(&line);
        text.push('\n');
    }
    let rows = read_tertile_data(text.as_bytes())?;
    if rows.is_empty() {
        return Err(ReportError::Malformed {
            line: 1,
            message: "no plot rows".into(),
        });
    }
    let feature = FeatureName::from_key(&rows[0].0).ok_or_else(|| ReportError::Malformed {
        line: 2,
        message: format!("unknown feature {:?}", rows[0].0),
    })?;
    let collect = |label: &str, group: TertileGroup| TertileSeries {
        feature,
        group,
        points: rows
            .iter()
            .filter(|(_, g, _, _)| g == label)
            .map(|(_, _, t, v)| (*t, *v))
            .collect(),
        group_size: sizes.get(label).copied().unwrap_or(0),
        member_ids: Vec::new(),
    };
    let top = collect("top", TertileGroup::Top);
    let bottom = collect("bottom", TertileGroup::Bottom);
    if top.points.is_empty() || bottom.points.is_empty() {
        return Err(ReportError::Malformed {
            line: 2,
            message: "plot data must contain both top and bottom groups".into(),
        });
    }
    Ok((top, bottom))
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

/// Self-contained SVG with the top tertile in red and the bottom in blue.
pub fn tertile_svg(top: &TertileSeries, bottom: &TertileSeries, title: &str) -> String {
    let all_points = || top.points.iter().chain(bottom.points.iter());
    let t_min = all_points().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_max = all_points().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut v_min = all_points().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut v_max = all_points().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if (v_max - v_min).abs() < 1e-9 {
        v_min -= 1.0;
        v_max += 1.0;
    }
    let pad = 0.05 * (v_max - v_min);
    let (v_min, v_max) = (v_min - pad, v_max + pad);

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |t: f64| MARGIN_LEFT + (t - t_min) / (t_max - t_min).max(1e-12) * plot_w;
    let y_of = |v: f64| MARGIN_TOP + (v_max - v) / (v_max - v_min) * plot_h;

    let polyline = |series: &TertileSeries, color: &str| {
        let pts: Vec<String> = series
            .points
            .iter()
            .map(|(t, v)| format!("{:.2},{:.2}", x_of(*t), y_of(*v)))
            .collect();
        format!(
            r#"  <polyline fill="none" stroke="{color}" stroke-width="2.5" points="{}"/>"#,
            pts.join(" ")
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"  <rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"  <text x="{:.1}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        SVG_WIDTH / 2.0,
        xml_escape(title)
    ));
    svg.push('\n');

    // axes
    svg.push_str(&format!(
        r#"  <line x1="{l:.1}" y1="{b:.1}" x2="{r:.1}" y2="{b:.1}" stroke="black"/>"#,
        l = MARGIN_LEFT,
        r = SVG_WIDTH - MARGIN_RIGHT,
        b = SVG_HEIGHT - MARGIN_BOTTOM
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"  <line x1="{l:.1}" y1="{t:.1}" x2="{l:.1}" y2="{b:.1}" stroke="black"/>"#,
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = SVG_HEIGHT - MARGIN_BOTTOM
    ));
    svg.push('\n');

    // ticks and labels
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let t = t_min + frac * (t_max - t_min);
        let x = x_of(t);
        svg.push_str(&format!(
            r#"  <line x1="{x:.1}" y1="{b:.1}" x2="{x:.1}" y2="{b2:.1}" stroke="black"/>"#,
            b = SVG_HEIGHT - MARGIN_BOTTOM,
            b2 = SVG_HEIGHT - MARGIN_BOTTOM + 5.0
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"  <text x="{x:.1}" y="{y:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">{t:.1}</text>"#,
            y = SVG_HEIGHT - MARGIN_BOTTOM + 20.0
        ));
        svg.push('\n');
        let v = v_min + frac * (v_max - v_min);
        let y = y_of(v);
        svg.push_str(&format!(
            r#"  <line x1="{x1:.1}" y1="{y:.1}" x2="{x2:.1}" y2="{y:.1}" stroke="black"/>"#,
            x1 = MARGIN_LEFT - 5.0,
            x2 = MARGIN_LEFT
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"  <text x="{x:.1}" y="{y2:.1}" text-anchor="end" font-family="sans-serif" font-size="12">{v:.1}</text>"#,
            x = MARGIN_LEFT - 9.0,
            y2 = y + 4.0
        ));
        svg.push('\n');
    }
    svg.push_str(&format!(
        r#"  <text x="{x:.1}" y="{y:.1}" text-anchor="middle" font-family="sans-serif" font-size="13">Years since interview</text>"#,
        x = MARGIN_LEFT + plot_w / 2.0,
        y = SVG_HEIGHT - 15.0
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"  <text x="18" y="{y:.1}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {y:.1})">Adjusted PCL</text>"#,
        y = MARGIN_TOP + plot_h / 2.0
    ));
    svg.push('\n');

    svg.push_str(&polyline(top, "#c0392b"));
    svg.push('\n');
    svg.push_str(&polyline(bottom, "#2471a3"));
    svg.push('\n');

    // legend
    let legend_y = MARGIN_TOP + 10.0;
    for (i, (series, color)) in [(top, "#c0392b"), (bottom, "#2471a3")].iter().enumerate() {
        let y = legend_y + 18.0 * i as f64;
        svg.push_str(&format!(
            r#"  <line x1="{x:.1}" y1="{y:.1}" x2="{x2:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2.5"/>"#,
            x = MARGIN_LEFT + 12.0,
            x2 = MARGIN_LEFT + 40.0
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"  <text x="{x:.1}" y="{y2:.1}" font-family="sans-serif" font-size="12">{label} tertile (n={n})</text>"#,
            x = MARGIN_LEFT + 46.0,
            y2 = y + 4.0,
            label = series.group.label(),
            n = series.group_size
        ));
        svg.push('\n');
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::TertileGroup;

    fn effect(estimate: f64, lo: f64, hi: f64, significant: bool) -> EffectEstimate {
        EffectEstimate {
            estimate,
            ci_low: lo,
            ci_high: hi,
            p_raw: 0.01,
            p_adj: if significant { 0.04 } else { 0.2 },
            significant,
        }
    }

    #[test]
    fn golden_cell_format() {
        let cell = format_cell(&effect(0.38, 0.16, 0.56, true));
        assert_eq!(cell, "0.38* [0.16, 0.56]");
    }

    #[test]
    fn negative_zero_is_normalized() {
        let cell = format_cell(&effect(-0.002, -0.23, 0.22, false));
        assert_eq!(cell, "0.00 [-0.23, 0.22]");
    }

    fn result(feature: FeatureName, r: f64) -> AssociationResult {
        AssociationResult {
            feature,
            outcome: Outcome::BaselinePcl,
            n: 75,
            r: effect(r, r - 0.2, r + 0.2, r > 0.3),
            beta: effect(r - 0.05, r - 0.25, r + 0.15, false),
        }
    }

    #[test]
    fn rows_render_in_canonical_order() {
        // shuffled input comes out anxiety..word-count
        let results = vec![
            result(FeatureName::WordCount, 0.22),
            result(FeatureName::Anxiety, 0.26),
            result(FeatureName::Depression, 0.38),
        ];
        let table = render_association_table(&results, "demo");
        let first_col: Vec<&str> = table.rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(first_col, ["Anxiety", "Depression", "Word Count"]);
    }

    #[test]
    fn star_tracks_significance_flag() {
        let results = vec![result(FeatureName::Depression, 0.38)];
        let table = render_association_table(&results, "demo");
        assert!(table.rows[0][1].contains('*'));
        assert!(!table.rows[0][2].contains('*'));
    }

    #[test]
    fn rendering_is_deterministic() {
        let results = vec![
            result(FeatureName::Anxiety, 0.26),
            result(FeatureName::Depression, 0.38),
        ];
        let a = render_association_table(&results, "demo").to_text();
        let b = render_association_table(&results, "demo").to_text();
        assert_eq!(a, b);
    }

    #[test]
    fn association_csv_round_trip() {
        let results = vec![
            result(FeatureName::Anxiety, 0.26),
            result(FeatureName::Depression, 0.38),
        ];
        let mut buf = Vec::new();
        write_association_results(&mut buf, &results, &["seed: 42".into()]).unwrap();
        let parsed = read_association_results(buf.as_slice()).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].feature, FeatureName::Anxiety);
        assert!((parsed[1].r.estimate - 0.38).abs() < 1e-9);
        assert!(parsed[1].r.significant);
    }

    fn series(group: TertileGroup, level: f64) -> TertileSeries {
        TertileSeries {
            feature: FeatureName::FirstPersonPlural,
            group,
            points: (0..5).map(|i| (i as f64, level + i as f64 * 0.1)).collect(),
            group_size: 3,
            member_ids: vec!["a".into(), "b".into(), "c".into()],
        }
    }

    #[test]
    fn tertile_data_row_count_is_twice_grid() {
        let top = series(TertileGroup::Top, 5.0);
        let bottom = series(TertileGroup::Bottom, -5.0);
        let mut buf = Vec::new();
        write_tertile_data(&mut buf, &[&top, &bottom]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data_lines = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(data_lines, 1 + 2 * 5);
        let parsed = read_tertile_data(text.as_bytes()).unwrap();
        assert_eq!(parsed.len(), 10);

        // values round-trip at the file's 6-decimal precision
        let (top_back, bottom_back) = read_tertile_series(text.as_bytes()).unwrap();
        for (a, b) in top_back.points.iter().zip(&top.points) {
            assert!((a.0 - b.0).abs() < 1e-6 && (a.1 - b.1).abs() < 1e-6);
        }
        assert_eq!(bottom_back.points.len(), bottom.points.len());
        assert_eq!(top_back.group_size, 3);
    }

    #[test]
    fn svg_contains_both_styled_series_and_axis_labels() {
        let top = series(TertileGroup::Top, 5.0);
        let bottom = series(TertileGroup::Bottom, -5.0);
        let svg = tertile_svg(&top, &bottom, "first-person plural");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("#c0392b") && svg.contains("#2471a3"));
        assert!(svg.contains("Years since interview"));
        assert!(svg.contains("Adjusted PCL"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn constant_series_render_horizontal_lines() {
        let flat_top = TertileSeries {
            points: (0..5).map(|i| (i as f64, 2.0)).collect(),
            ..series(TertileGroup::Top, 0.0)
        };
        let flat_bottom = TertileSeries {
            points: (0..5).map(|i| (i as f64, -2.0)).collect(),
            ..series(TertileGroup::Bottom, 0.0)
        };
        let svg = tertile_svg(&flat_top, &flat_bottom, "flat");
        // a horizontal polyline repeats the same y for every point
        for line in svg.lines().filter(|l| l.contains("<polyline")) {
            let ys: Vec<&str> = line
                .split_whitespace()
                .filter(|w| w.contains(','))
                .map(|w| w.split(',').nth(1).unwrap_or(""))
                .collect();
            let cleaned: Vec<String> = ys
                .iter()
                .map(|y| y.trim_end_matches("/>").trim_end_matches('"').to_string())
                .collect();
            assert!(cleaned.windows(2).all(|w| w[0] == w[1]), "{line}");
        }
    }
}
