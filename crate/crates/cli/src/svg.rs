//! Minimal static SVG line charts: fixed 800x500 viewBox, linear axes with
//! tick labels, polyline series and an optional min/max band. No plotting
//! dependencies, diffable output.

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 48.0;

pub type Points = [(f64, f64)];

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: &'a Points,
}

struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let pow = 10f64.powf(raw.log10().floor());
    let frac = raw / pow;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * pow
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        // avoid "-0"
        out.push(if t == 0.0 { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt(v: f64) -> String {
    let r = format!("{v:.6}");
    let r = r.trim_end_matches('0').trim_end_matches('.');
    if r.is_empty() || r == "-" {
        "0".to_string()
    } else {
        r.to_string()
    }
}

/// Render a chart with the given series and optional band (lower and upper
/// envelope sharing x-coordinates).
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    band: Option<(&Points, &Points)>,
    series: &[Series<'_>],
) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(x, y) in s.points {
            xs.push(x);
            ys.push(y);
        }
    }
    if let Some((lo, hi)) = band {
        for &(x, y) in lo.iter().chain(hi.iter()) {
            xs.push(x);
            ys.push(y);
        }
    }
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);
    let sx = Scale {
        lo: x_lo,
        hi: x_hi,
        px_lo: MARGIN_LEFT,
        px_hi: WIDTH - MARGIN_RIGHT,
    };
    let sy = Scale {
        lo: y_lo,
        hi: y_hi,
        px_lo: HEIGHT - MARGIN_BOTTOM,
        px_hi: MARGIN_TOP,
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        title
    ));

    // Axes.
    out.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{}\" height=\"{}\" \
         fill=\"none\" stroke=\"black\"/>\n",
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    ));
    for t in ticks(x_lo, x_hi) {
        let px = sx.map(t);
        out.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{0}\" x2=\"{px:.2}\" y2=\"{1}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            HEIGHT - MARGIN_BOTTOM + 18.0,
            fmt(t)
        ));
    }
    for t in ticks(y_lo, y_hi) {
        let py = sy.map(t);
        out.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{py:.2}\" x2=\"{1}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 8.0,
            py + 4.0,
            fmt(t)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 10.0,
        x_label
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        y_label
    ));

    if let Some((lo, hi)) = band {
        let mut pts = String::new();
        for &(x, y) in lo {
            pts.push_str(&format!("{:.2},{:.2} ", sx.map(x), sy.map(y)));
        }
        for &(x, y) in hi.iter().rev() {
            pts.push_str(&format!("{:.2},{:.2} ", sx.map(x), sy.map(y)));
        }
        out.push_str(&format!(
            "<polygon points=\"{}\" fill=\"#9ecae1\" fill-opacity=\"0.45\" stroke=\"none\"/>\n",
            pts.trim_end()
        ));
    }

    for s in series {
        let mut pts = String::new();
        for &(x, y) in s.points {
            pts.push_str(&format!("{:.2},{:.2} ", sx.map(x), sy.map(y)));
        }
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            pts.trim_end(),
            s.color
        ));
    }

    // Legend, top-right inside the frame.
    for (i, s) in series.iter().enumerate() {
        let y = MARGIN_TOP + 16.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN_RIGHT - 170.0;
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            x + 22.0,
            s.color
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            x + 28.0,
            y + 4.0,
            s.name
        ));
    }

    out.push_str("</svg>\n");
    out
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.04;
    (lo - pad, hi + pad)
}
