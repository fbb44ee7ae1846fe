//! CSV and JSON output.
//!
//! Numbers are written with 12 significant digits, `.` as the decimal
//! separator and no locale dependence, so reruns are byte-identical.

use crate::contour::ContourTrace;
use crate::stats::{series, SeriesId};
use crate::strips::{primary_score, rounded_strip, strip_width, Strip};
use crate::zeros::CriticalZero;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::Path;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats like C's `%.12g`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIGNIFICANT_DIGITS as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_csv<P: AsRef<Path>>(path: P, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

pub fn write_zeros(path: &Path, zeros: &[CriticalZero]) -> io::Result<()> {
    write_csv(
        path,
        &["ordinal", "t"],
        zeros.iter().map(|z| vec![z.ordinal.to_string(), fmt_sig(z.t)]),
    )
}

pub fn read_zeros(path: &Path) -> io::Result<Vec<CriticalZero>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            let parse_err = |e: &dyn std::fmt::Display| io::Error::new(io::ErrorKind::InvalidData, e.to_string());
            Ok(CriticalZero {
                ordinal: rec[0].parse().map_err(|e| parse_err(&e))?,
                t: rec[1].parse().map_err(|e| parse_err(&e))?,
            })
        })
        .collect()
}

pub fn trace_file_name(trace: &ContourTrace) -> String {
    format!("trace_{}.csv", trace.k)
}

pub fn write_trace(path: &Path, trace: &ContourTrace) -> io::Result<()> {
    write_csv(
        path,
        &["sigma", "t"],
        trace.points.iter().map(|p| vec![fmt_sig(p.sigma), fmt_sig(p.t)]),
    )
}

pub const STRIPS_HEADER: [&str; 10] = [
    "m",
    "bottom_t",
    "top_t",
    "width",
    "bottom_rounded",
    "top_rounded",
    "width_rounded",
    "n_zeros",
    "primary_index",
    "primary_score",
];

pub fn write_strips(path: &Path, strips: &[Strip]) -> io::Result<()> {
    write_csv(
        path,
        &STRIPS_HEADER,
        strips.iter().map(|s| {
            let r = rounded_strip(s);
            vec![
                s.m.to_string(),
                fmt_sig(s.bottom_t),
                fmt_sig(s.top_t),
                fmt_sig(strip_width(s)),
                r.bottom.to_string(),
                r.top.to_string(),
                r.width.to_string(),
                s.n_zeros().to_string(),
                s.primary_index.to_string(),
                fmt_sig(primary_score(s).value),
            ]
        }),
    )
}

/// A plot-ready series file and how it should be drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureFile {
    pub file: String,
    pub series: Vec<String>,
    pub x: String,
    /// `linear` or `log`.
    pub x_scale: String,
}

/// Writes `fig1.csv` .. `fig5.csv` and returns their descriptions.
pub fn write_figures(dir: &Path, strips: &[Strip], rounded: bool) -> io::Result<Vec<FigureFile>> {
    let col = |id: SeriesId| series(strips, id, rounded);
    let figures: [(&str, Vec<SeriesId>, &str); 5] = [
        ("fig1.csv", vec![SeriesId::Bottoms, SeriesId::Tops], "linear"),
        ("fig2.csv", vec![SeriesId::Widths], "linear"),
        ("fig3.csv", vec![SeriesId::Zeros], "log"),
        ("fig4.csv", vec![SeriesId::ZerosPerWidth], "log"),
        ("fig5.csv", vec![SeriesId::PrimaryScore], "linear"),
    ];
    let mut out = Vec::new();
    for (file, ids, x_scale) in figures {
        let columns: Vec<_> = ids.iter().map(|&id| col(id)).collect();
        let mut header = vec!["m"];
        header.extend(ids.iter().map(|id| id.name()));
        write_csv(
            dir.join(file),
            &header,
            strips.iter().enumerate().map(|(i, s)| {
                let mut row = vec![s.m.to_string()];
                row.extend(columns.iter().map(|c| fmt_sig(c[i].value)));
                row
            }),
        )?;
        out.push(FigureFile {
            file: file.to_string(),
            series: ids.iter().map(|id| id.name().to_string()).collect(),
            x: "m".into(),
            x_scale: x_scale.into(),
        });
    }
    Ok(out)
}
