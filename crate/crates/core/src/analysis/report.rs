use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::cavity::ReflectionPair;
use crate::error::{Error, Result};

use super::metrics::DephasedFidelity;
use super::sweep::SweepRecord;

pub const CSV_COLUMNS: [&str; 11] = [
    "kappa_s_over_kappa",
    "g_over_sum",
    "r_o_re",
    "r_o_im",
    "r_h_re",
    "r_h_im",
    "eta_closed",
    "eta_sim",
    "herald_rate",
    "leakage_rate",
    "cond_fidelity",
];

/// Extra columns present when a dephasing time is given.
pub const DEPHASING_COLUMNS: [&str; 3] = ["dephasing_penalty", "fidelity_dephased_sub", "fidelity_dephased_mul"];

fn row(r: &SweepRecord) -> Vec<f64> {
    let mut v = vec![
        r.kappa_s_over_kappa,
        r.g_over_sum,
        r.pair.r_o.re,
        r.pair.r_o.im,
        r.pair.r_h.re,
        r.pair.r_h.im,
        r.eta_closed,
        r.eta_sim,
        r.herald_rate,
        r.leakage_rate,
        r.cond_fidelity,
    ];
    if let Some(d) = r.dephasing {
        v.extend([d.penalty, d.subtractive, d.multiplicative]);
    }
    v
}

/// Sweep records as CSV. The dephasing columns appear when the records
/// carry them; mixing records with and without is an error.
pub fn emit_csv(records: &[SweepRecord]) -> Result<String> {
    let dephased = records.first().is_some_and(|r| r.dephasing.is_some());
    if records.iter().any(|r| r.dephasing.is_some() != dephased) {
        return Err(Error::config("records disagree on dephasing columns"));
    }
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    if dephased {
        header.extend(DEPHASING_COLUMNS);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::config(format!("csv: {e}"));
    w.write_record(&header).map_err(io)?;
    for r in records {
        w.write_record(row(r).iter().map(|v| v.to_string())).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h.map_err(|e| Error::parse(1, e.to_string()))?,
        None => return Err(Error::parse(1, "missing header")),
    };
    let header: Vec<&str> = header.iter().collect();
    let dephased = if header == CSV_COLUMNS {
        false
    } else if header.len() == 14 && header[..11] == CSV_COLUMNS && header[11..] == DEPHASING_COLUMNS {
        true
    } else {
        return Err(Error::parse(1, "unexpected header"));
    };
    let mut out = Vec::new();
    for (i, rec) in rows.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        let v = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(line, format!("not a number: `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if v.len() != header.len() {
            return Err(Error::parse(
                line,
                format!("expected {} fields, got {}", header.len(), v.len()),
            ));
        }
        out.push(SweepRecord {
            kappa_s_over_kappa: v[0],
            g_over_sum: v[1],
            pair: ReflectionPair::new(C64::new(v[2], v[3]), C64::new(v[4], v[5])),
            eta_closed: v[6],
            eta_sim: v[7],
            herald_rate: v[8],
            leakage_rate: v[9],
            cond_fidelity: v[10],
            dephasing: dephased.then(|| DephasedFidelity {
                penalty: v[11],
                subtractive: v[12],
                multiplicative: v[13],
            }),
        });
    }
    Ok(out)
}

/// Column that can be drawn as a heatmap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepColumn {
    EtaClosed,
    EtaSim,
    HeraldRate,
    LeakageRate,
    CondFidelity,
}

impl SweepColumn {
    pub const ALL: [SweepColumn; 5] = [
        SweepColumn::EtaClosed,
        SweepColumn::EtaSim,
        SweepColumn::HeraldRate,
        SweepColumn::LeakageRate,
        SweepColumn::CondFidelity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepColumn::EtaClosed => "eta_closed",
            SweepColumn::EtaSim => "eta_sim",
            SweepColumn::HeraldRate => "herald_rate",
            SweepColumn::LeakageRate => "leakage_rate",
            SweepColumn::CondFidelity => "cond_fidelity",
        }
    }

    pub fn value(self, r: &SweepRecord) -> f64 {
        match self {
            SweepColumn::EtaClosed => r.eta_closed,
            SweepColumn::EtaSim => r.eta_sim,
            SweepColumn::HeraldRate => r.herald_rate,
            SweepColumn::LeakageRate => r.leakage_rate,
            SweepColumn::CondFidelity => r.cond_fidelity,
        }
    }
}

impl fmt::Display for SweepColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepColumn::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config(format!("unknown column `{s}`")))
    }
}

/// Plot geometry, in SVG user units.
pub mod geometry {
    pub const LEFT: f64 = 80.0;
    pub const TOP: f64 = 40.0;
    pub const PLOT_W: f64 = 480.0;
    pub const PLOT_H: f64 = 400.0;
    pub const LEGEND_GAP: f64 = 30.0;
    pub const LEGEND_W: f64 = 20.0;
    pub const WIDTH: f64 = LEFT + PLOT_W + LEGEND_GAP + LEGEND_W + 80.0;
    pub const HEIGHT: f64 = TOP + PLOT_H + 60.0;
}

const VIRIDIS: [(u8, u8, u8); 5] = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
];

/// Map `t` in `[0, 1]` to a hex colour.
pub fn colour(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let lerp = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    format!("#{:02x}{:02x}{:02x}", lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

/// Recover the two axes from row-major records.
fn axes(records: &[SweepRecord]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = records.first().ok_or_else(|| Error::config("no records to plot"))?;
    let cols = records
        .iter()
        .take_while(|r| r.kappa_s_over_kappa == first.kappa_s_over_kappa)
        .count();
    if !records.len().is_multiple_of(cols) {
        return Err(Error::config("records do not form a rectangular grid"));
    }
    let g: Vec<f64> = records[..cols].iter().map(|r| r.g_over_sum).collect();
    let ks: Vec<f64> = records.iter().step_by(cols).map(|r| r.kappa_s_over_kappa).collect();
    for (k, r) in records.iter().enumerate() {
        if r.kappa_s_over_kappa != ks[k / cols] || r.g_over_sum != g[k % cols] {
            return Err(Error::config("records are not in row-major grid order"));
        }
    }
    Ok((ks, g))
}

fn axis_ticks(values: &[f64]) -> Vec<(usize, f64)> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..5).map(|k| k * (n - 1) / 4).collect();
    idx.dedup();
    idx.into_iter().map(|i| (i, values[i])).collect()
}

/// Heatmap of one column: `g/(kappa_s+kappa)` across, `kappa_s/kappa` up.
pub fn emit_svg_heatmap(records: &[SweepRecord], column: SweepColumn) -> Result<String> {
    use geometry::*;
    let (ks, g) = axes(records)?;
    let (rows, cols) = (ks.len(), g.len());
    let cw = PLOT_W / cols as f64;
    let ch = PLOT_H / rows as f64;
    let values: Vec<f64> = records.iter().map(|r| column.value(r)).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{column}</text>"#,
        LEFT + PLOT_W / 2.0,
        TOP / 2.0 + 5.0
    );
    let _ = writeln!(s, r#"<g class="cells" shape-rendering="crispEdges">"#);
    for (k, v) in values.iter().enumerate() {
        let (i, j) = (k / cols, k % cols);
        let x = LEFT + j as f64 * cw;
        let y = TOP + (rows - 1 - i) as f64 * ch;
        let _ = writeln!(
            s,
            r#"<rect class="cell" x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{}"><title>{}={} g/(ks+k)={} ks/k={}</title></rect>"#,
            colour(scale(*v)),
            column,
            v,
            g[j],
            ks[i]
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
    );

    for (j, v) in axis_ticks(&g) {
        let x = LEFT + (j as f64 + 0.5) * cw;
        let y = TOP + PLOT_H;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y}" x2="{x}" y2="{}" stroke="black"/>"#,
            y + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{v:.3}</text>"#,
            y + 18.0
        );
    }
    for (i, v) in axis_ticks(&ks) {
        let y = TOP + (rows - 1 - i) as f64 * ch + ch / 2.0;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{v:.3}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">g/(kappa_s+kappa)</text>"#,
        LEFT + PLOT_W / 2.0,
        TOP + PLOT_H + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">kappa_s/kappa</text>"#,
        y = TOP + PLOT_H / 2.0
    );

    let lx = LEFT + PLOT_W + LEGEND_GAP;
    let _ = writeln!(s, r#"<defs><linearGradient id="legend" x1="0" y1="1" x2="0" y2="0">"#);
    for k in 0..VIRIDIS.len() {
        let t = k as f64 / (VIRIDIS.len() - 1) as f64;
        let _ = writeln!(s, r#"<stop offset="{t}" stop-color="{}"/>"#, colour(t));
    }
    let _ = writeln!(s, "</linearGradient></defs>");
    let _ = writeln!(
        s,
        r#"<rect class="legend" x="{lx}" y="{TOP}" width="{LEGEND_W}" height="{PLOT_H}" fill="url(#legend)" stroke="black"/>"#
    );
    let tx = lx + LEGEND_W + 5.0;
    let _ = writeln!(s, r#"<text x="{tx}" y="{}">{hi:.4}</text>"#, TOP + 10.0);
    let _ = writeln!(s, r#"<text x="{tx}" y="{}">{lo:.4}</text>"#, TOP + PLOT_H);
    let _ = writeln!(s, "</svg>");
    Ok(s)
}
