use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::LabeledMatrix;

const CELL: usize = 18;
const CHAR_WIDTH: usize = 7;
const FONT: &str = "font-family=\"sans-serif\" font-size=\"11\"";
const MISSING_FILL: &str = "#f0f0f0";
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Fixed two-decimal coordinates with trailing zeros trimmed.
fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn text_width(s: &str) -> usize {
    s.chars().count() * CHAR_WIDTH
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ramp {
    /// White to dark blue.
    Blues,
    /// Red through white to blue, white at the middle of the range.
    Diverging,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorScale {
    pub min: f64,
    pub max: f64,
    pub ramp: Ramp,
}

impl ColorScale {
    pub fn blues(min: f64, max: f64) -> Self {
        ColorScale {
            min,
            max,
            ramp: Ramp::Blues,
        }
    }

    /// Symmetric diverging scale over `[-extent, extent]`.
    pub fn diverging(extent: f64) -> Self {
        ColorScale {
            min: -extent,
            max: extent,
            ramp: Ramp::Diverging,
        }
    }

    pub fn color(&self, v: f64) -> String {
        let span = self.max - self.min;
        let t = if span > 0.0 {
            ((v - self.min) / span).clamp(0.0, 1.0)
        } else {
            0.5
        };
        let lerp = |a: [u8; 3], b: [u8; 3], t: f64| -> [u8; 3] {
            let mut c = [0u8; 3];
            for k in 0..3 {
                c[k] = (a[k] as f64 + (b[k] as f64 - a[k] as f64) * t).round() as u8;
            }
            c
        };
        const WHITE: [u8; 3] = [255, 255, 255];
        let c = match self.ramp {
            Ramp::Blues => lerp(WHITE, [8, 48, 107], t),
            Ramp::Diverging if t < 0.5 => lerp([178, 24, 43], WHITE, t * 2.0),
            Ramp::Diverging => lerp(WHITE, [33, 102, 172], (t - 0.5) * 2.0),
        };
        format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeatCell {
    Value(f64),
    /// Drawn as a cross.
    Missing,
    /// A language paired with its own cuisine, drawn with a dot.
    SelfPair(Option<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapRender {
    pub title: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub cells: Vec<Vec<HeatCell>>,
    pub scale: ColorScale,
}

impl HeatmapRender {
    pub fn from_matrix(
        title: &str,
        matrix: &LabeledMatrix,
        is_self: impl Fn(&str, &str) -> bool,
        scale: ColorScale,
    ) -> Self {
        let cells = matrix
            .rows
            .iter()
            .zip(&matrix.values)
            .map(|(r, row)| {
                matrix
                    .cols
                    .iter()
                    .zip(row)
                    .map(|(c, v)| match (is_self(r, c), v) {
                        (true, v) => HeatCell::SelfPair(*v),
                        (false, Some(v)) => HeatCell::Value(*v),
                        (false, None) => HeatCell::Missing,
                    })
                    .collect()
            })
            .collect();
        HeatmapRender {
            title: title.to_owned(),
            row_labels: matrix.rows.clone(),
            col_labels: matrix.cols.clone(),
            cells,
            scale,
        }
    }
}

pub fn render_heatmap(h: &HeatmapRender) -> String {
    assert_eq!(h.cells.len(), h.row_labels.len());
    assert!(h.cells.iter().all(|r| r.len() == h.col_labels.len()));
    let row_w = h
        .row_labels
        .iter()
        .map(|s| text_width(s))
        .max()
        .unwrap_or(0);
    let col_h = h
        .col_labels
        .iter()
        .map(|s| text_width(s))
        .max()
        .unwrap_or(0);
    let left = 10 + row_w + 6;
    let top = 30 + col_h + 6;
    let grid_w = h.col_labels.len() * CELL;
    let grid_h = h.row_labels.len() * CELL;
    let legend_x = left + grid_w + 20;
    let width = legend_x + 70;
    let height = (top + grid_h).max(top + 10 * 12) + 10;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(
        s,
        "<rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        s,
        "<text x=\"10\" y=\"18\" {FONT} font-weight=\"bold\">{}</text>",
        escape(&h.title)
    );
    for (j, c) in h.col_labels.iter().enumerate() {
        let x = left + j * CELL + CELL / 2 + 4;
        let y = top - 6;
        let _ = writeln!(
            s,
            "<text x=\"{x}\" y=\"{y}\" {FONT} transform=\"rotate(-90 {x} {y})\">{}</text>",
            escape(c)
        );
    }
    for (i, r) in h.row_labels.iter().enumerate() {
        let y = top + i * CELL + CELL / 2 + 4;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{y}\" {FONT} text-anchor=\"end\">{}</text>",
            left - 6,
            escape(r)
        );
    }
    for (i, row) in h.cells.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            let (x, y) = (left + j * CELL, top + i * CELL);
            let fill = match cell {
                HeatCell::Value(v) | HeatCell::SelfPair(Some(v)) => h.scale.color(*v),
                _ => MISSING_FILL.to_owned(),
            };
            let _ = writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{fill}\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>"
            );
            match cell {
                HeatCell::Missing => {
                    let (a, b) = (4, CELL - 4);
                    let _ = writeln!(
                        s,
                        "<path d=\"M{} {}L{} {}M{} {}L{} {}\" stroke=\"#555555\" stroke-width=\"1\"/>",
                        x + a, y + a, x + b, y + b, x + b, y + a, x + a, y + b
                    );
                }
                HeatCell::SelfPair(_) => {
                    let _ = writeln!(
                        s,
                        "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#000000\"/>",
                        x + CELL / 2,
                        y + CELL / 2
                    );
                }
                HeatCell::Value(_) => {}
            }
        }
    }
    // colour bar, maximum on top
    for k in 0..10 {
        let v = h.scale.max - (h.scale.max - h.scale.min) * (k as f64 + 0.5) / 10.0;
        let _ = writeln!(
            s,
            "<rect x=\"{legend_x}\" y=\"{}\" width=\"14\" height=\"12\" fill=\"{}\"/>",
            top + k * 12,
            h.scale.color(v)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" {FONT}>{}</text>",
        legend_x + 18,
        top + 10,
        tick(h.scale.max)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" {FONT}>{}</text>",
        legend_x + 18,
        top + 120,
        tick(h.scale.min)
    );
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Fixed y axis range; derived from the data when `None`.
    pub y_range: Option<(f64, f64)>,
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Series with two or more points become polylines, single points markers.
pub fn render_line_chart(chart: &LineChart) -> String {
    const PLOT_W: f64 = 480.0;
    const PLOT_H: f64 = 300.0;
    const LEFT: f64 = 70.0;
    const TOP: f64 = 40.0;
    let all = || chart.series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = padded_range(all().map(|p| p.0));
    let (y0, y1) = chart
        .y_range
        .unwrap_or_else(|| padded_range(all().map(|p| p.1)));
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * PLOT_W;
    let py = |y: f64| TOP + PLOT_H - (y - y0) / (y1 - y0) * PLOT_H;
    let legend_w = chart
        .series
        .iter()
        .map(|s| text_width(&s.label))
        .max()
        .unwrap_or(0) as f64
        + 40.0;
    let width = LEFT + PLOT_W + 20.0 + legend_w;
    let height = TOP + PLOT_H + 50.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = num(width),
        h = num(height)
    );
    let _ = writeln!(
        s,
        "<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
        num(width),
        num(height)
    );
    let _ = writeln!(
        s,
        "<text x=\"10\" y=\"20\" {FONT} font-weight=\"bold\">{}</text>",
        escape(&chart.title)
    );
    let _ = writeln!(
        s,
        "<path d=\"M{l} {t}L{l} {b}L{r} {b}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>",
        l = num(LEFT),
        t = num(TOP),
        b = num(TOP + PLOT_H),
        r = num(LEFT + PLOT_W)
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let (tx, ty) = (px(fx), py(fy));
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" {FONT} text-anchor=\"middle\">{}</text>",
            num(tx),
            num(TOP + PLOT_H + 16.0),
            tick(fx)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" {FONT} text-anchor=\"end\">{}</text>",
            num(LEFT - 6.0),
            num(ty + 4.0),
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" {FONT} text-anchor=\"middle\">{}</text>",
        num(LEFT + PLOT_W / 2.0),
        num(TOP + PLOT_H + 36.0),
        escape(&chart.x_label)
    );
    let (yx, yy) = (num(16.0), num(TOP + PLOT_H / 2.0));
    let _ = writeln!(
        s,
        "<text x=\"{yx}\" y=\"{yy}\" {FONT} text-anchor=\"middle\" transform=\"rotate(-90 {yx} {yy})\">{}</text>",
        escape(&chart.y_label)
    );
    for (k, series) in chart.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        match series.points.as_slice() {
            [] => {}
            [(x, y)] => {
                let _ = writeln!(
                    s,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>",
                    num(px(*x)),
                    num(py(*y))
                );
            }
            pts => {
                let coords: Vec<String> = pts
                    .iter()
                    .map(|(x, y)| format!("{},{}", num(px(*x)), num(py(*y))))
                    .collect();
                let _ = writeln!(
                    s,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                    coords.join(" ")
                );
            }
        }
        let ly = TOP + 10.0 + k as f64 * 16.0;
        let lx = LEFT + PLOT_W + 20.0;
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"4\" fill=\"{color}\"/>",
            num(lx),
            num(ly - 4.0)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" {FONT}>{}</text>",
            num(lx + 18.0),
            num(ly),
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One curve per cuisine with its values in rank order; the legend lists
/// cuisines by descending peak value.
pub fn render_ranked_curves(title: &str, lists: &BTreeMap<String, Vec<f64>>) -> String {
    let mut entries: Vec<(&String, &Vec<f64>)> =
        lists.iter().filter(|(_, v)| !v.is_empty()).collect();
    let peak = |v: &Vec<f64>| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    entries.sort_by(|a, b| peak(b.1).total_cmp(&peak(a.1)).then_with(|| a.0.cmp(b.0)));
    let series = entries
        .into_iter()
        .map(|(label, values)| Series {
            label: label.clone(),
            points: values
                .iter()
                .enumerate()
                .map(|(i, v)| ((i + 1) as f64, *v))
                .collect(),
        })
        .collect();
    render_line_chart(&LineChart {
        title: title.to_owned(),
        x_label: "rank of language pair".to_owned(),
        y_label: "pairwise jaccard".to_owned(),
        series,
        y_range: Some((0.0, 1.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn color_ramps() {
        let b = ColorScale::blues(0.0, 1.0);
        assert_eq!(b.color(0.0), "#ffffff");
        assert_eq!(b.color(1.0), "#08306b");
        assert_eq!(b.color(7.0), "#08306b");
        let d = ColorScale::diverging(1.0);
        assert_eq!(d.color(0.0), "#ffffff");
        assert_eq!(d.color(-1.0), "#b2182b");
        assert_eq!(d.color(1.0), "#2166ac");
    }

    #[test]
    fn degenerate_heatmaps() {
        let one =
            LabeledMatrix::new(vec!["a".into()], vec!["x".into()], vec![vec![Some(0.5)]]).unwrap();
        let svg = render_heatmap(&HeatmapRender::from_matrix(
            "t",
            &one,
            |_, _| false,
            ColorScale::blues(0.0, 1.0),
        ));
        assert_eq!(svg.matches("stroke=\"#cccccc\"").count(), 1);

        let empty = LabeledMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![vec![None, None], vec![None, None]],
        )
        .unwrap();
        let svg = render_heatmap(&HeatmapRender::from_matrix(
            "t",
            &empty,
            |_, _| false,
            ColorScale::blues(0.0, 1.0),
        ));
        assert_eq!(svg.matches("<path d=\"M").count(), 4);
        assert_eq!(svg.matches("<circle").count(), 0);

        let svg = render_heatmap(&HeatmapRender::from_matrix(
            "t",
            &empty,
            |r, c| r == "a" && c == "x",
            ColorScale::blues(0.0, 1.0),
        ));
        assert_eq!(svg.matches("<path d=\"M").count(), 3);
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn labels_are_escaped() {
        let m = LabeledMatrix::new(vec!["a<b&c".into()], vec!["\"x\"".into()], vec![vec![None]])
            .unwrap();
        let svg = render_heatmap(&HeatmapRender::from_matrix(
            "t",
            &m,
            |_, _| false,
            ColorScale::blues(0.0, 1.0),
        ));
        assert!(svg.contains("a&lt;b&amp;c"));
        assert!(svg.contains("&quot;x&quot;"));
    }

    #[test]
    fn ranked_curves_order_and_markers() {
        let mut lists = BTreeMap::new();
        lists.insert("low".to_owned(), vec![0.3, 0.1]);
        lists.insert("high".to_owned(), vec![0.9, 0.5, 0.2]);
        lists.insert("single".to_owned(), vec![0.5]);
        let svg = render_ranked_curves("agreement", &lists);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 1);
        let pos = |s: &str| svg.find(&format!(">{s}</text>")).unwrap();
        assert!(pos("high") < pos("single") && pos("single") < pos("low"));
    }
}
