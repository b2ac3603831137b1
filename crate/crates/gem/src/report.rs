//! Run artifact output: CSV time series and snapshots, plus two
//! self-contained SVG plots (tip velocity vs tip position, and overlaid
//! envelope shapes at the snapshot times).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::driver::{RunArtifacts, TimeRecord};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const TIMESERIES_HEADER: &str = "t,x_tip,v_tip,node_count,ms_per_step";

/// Format a snapshot time for a file name: `2` for 2.0, `0.5` for 0.5.
fn time_tag(t: f64) -> String {
    format!("{t}")
}

fn timeseries_csv(records: &[TimeRecord]) -> String {
    let mut s = String::from(TIMESERIES_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.t, r.x_tip, r.v_tip, r.node_count, r.ms_per_step
        );
    }
    s
}

fn polyline_csv(points: &[Vec2]) -> String {
    let mut s = String::from("x,y\n");
    for p in points {
        let _ = writeln!(s, "{},{}", p.x, p.y);
    }
    s
}

/// Write every artifact file for one or more runs into `out`; returns the
/// paths written. With several runs (solver = both), per-run files carry the
/// solver name; the first run also provides the unprefixed timeseries.csv.
pub fn emit_report(artifacts: &[RunArtifacts], out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let put = |name: String, body: String| -> Result<PathBuf> {
        let path = out.join(name);
        fs::write(&path, body)?;
        Ok(path)
    };

    for (k, art) in artifacts.iter().enumerate() {
        let prefix = if artifacts.len() > 1 {
            format!("{}_", art.solver)
        } else {
            String::new()
        };
        if k == 0 {
            written.push(put("timeseries.csv".into(), timeseries_csv(&art.records))?);
        }
        if !prefix.is_empty() {
            written.push(put(
                format!("{prefix}timeseries.csv"),
                timeseries_csv(&art.records),
            )?);
        }
        for snap in &art.envelopes {
            written.push(put(
                format!("{prefix}envelope_{}.csv", time_tag(snap.t)),
                polyline_csv(&snap.points),
            )?);
        }
        for snap in &art.fields {
            let mut s = String::from("x,y,u\n");
            for (p, u) in snap.positions.iter().zip(&snap.values) {
                let _ = writeln!(s, "{},{},{u}", p.x, p.y);
            }
            written.push(put(format!("{prefix}field_{}.csv", time_tag(snap.t)), s)?);
        }
    }

    let tip_curves: Vec<(String, Vec<(f64, f64)>)> = artifacts
        .iter()
        .map(|a| {
            (
                a.solver.to_string(),
                a.records.iter().map(|r| (r.x_tip, r.v_tip)).collect(),
            )
        })
        .collect();
    written.push(put(
        "vtip_vs_xtip.svg".into(),
        line_plot(&tip_curves, "x_tip", "v_tip"),
    )?);

    let shapes: Vec<(String, Vec<(f64, f64)>)> = artifacts
        .iter()
        .flat_map(|a| {
            a.envelopes.iter().map(|s| {
                (
                    format!("{} t={}", a.solver, time_tag(s.t)),
                    s.points.iter().map(|p| (p.x, p.y)).collect(),
                )
            })
        })
        .collect();
    written.push(put("envelopes.svg".into(), shape_plot(&shapes))?);
    Ok(written)
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const M: f64 = 56.0; // margin for axes and labels
const COLORS: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn bounds(curves: &[(String, Vec<(f64, f64)>)]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in curves {
        for &(x, y) in pts {
            b.0 = b.0.min(x);
            b.1 = b.1.max(x);
            b.2 = b.2.min(y);
            b.3 = b.3.max(y);
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    // avoid a degenerate axis range
    if b.1 - b.0 < 1e-12 {
        b.0 -= 0.5;
        b.1 += 0.5;
    }
    if b.3 - b.2 < 1e-12 {
        b.2 -= 0.5;
        b.3 += 0.5;
    }
    (b.0, b.1, b.2, b.3)
}

fn svg_open(s: &mut String) {
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
}

fn svg_axes(s: &mut String, (x0, x1, y0, y1): (f64, f64, f64, f64), xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        s,
        "<line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - M,
        W - M / 2.0,
        H - M
    );
    let _ = writeln!(
        s,
        "<line x1=\"{M}\" y1=\"{}\" x2=\"{M}\" y2=\"{}\" stroke=\"black\"/>",
        H - M,
        M / 2.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{M}\" y=\"{}\">{x0:.3}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{x1:.3}</text>",
        H - M / 3.0,
        W - M / 2.0,
        H - M / 3.0
    );
    let _ = writeln!(
        s,
        "<text x=\"4\" y=\"{}\">{y0:.3}</text><text x=\"4\" y=\"{}\">{y1:.3}</text>",
        H - M,
        M / 2.0 + 10.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xlabel}</text>",
        W / 2.0,
        H - 8.0
    );
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{ylabel}</text>",
        H / 2.0,
        H / 2.0
    );
}

fn map_point((x0, x1, y0, y1): (f64, f64, f64, f64), x: f64, y: f64) -> (f64, f64) {
    (
        M + (x - x0) / (x1 - x0) * (W - 1.5 * M),
        H - M - (y - y0) / (y1 - y0) * (H - 1.5 * M),
    )
}

fn svg_curves(
    s: &mut String,
    curves: &[(String, Vec<(f64, f64)>)],
    b: (f64, f64, f64, f64),
    close: bool,
) {
    for (k, (label, pts)) in curves.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        for &(x, y) in pts {
            let (px, py) = map_point(b, x, y);
            let _ = write!(d, "{px:.2},{py:.2} ");
        }
        let tag = if close { "polygon" } else { "polyline" };
        let _ = writeln!(
            s,
            "<{tag} points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            d.trim_end()
        );
        // legend entry
        let ly = M / 2.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{}\" y=\"{}\">{label}</text>",
            W - 170.0,
            W - 140.0,
            W - 134.0,
            ly + 4.0
        );
    }
}

/// Generic x-y line plot with a legend.
pub fn line_plot(curves: &[(String, Vec<(f64, f64)>)], xlabel: &str, ylabel: &str) -> String {
    let b = bounds(curves);
    let mut s = String::new();
    svg_open(&mut s);
    svg_axes(&mut s, b, xlabel, ylabel);
    svg_curves(&mut s, curves, b, false);
    s.push_str("</svg>\n");
    s
}

/// Equal-aspect plot of closed envelope shapes.
pub fn shape_plot(shapes: &[(String, Vec<(f64, f64)>)]) -> String {
    let (x0, x1, y0, y1) = bounds(shapes);
    // equal aspect: expand the shorter range around its midpoint
    let half = 0.5 * (x1 - x0).max(y1 - y0) * 1.05;
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let b = (cx - half, cx + half, cy - half, cy + half);
    let mut s = String::new();
    svg_open(&mut s);
    svg_axes(&mut s, b, "x", "y");
    svg_curves(&mut s, shapes, b, true);
    s.push_str("</svg>\n");
    s
}

/// Parse a timeseries.csv back into records (used by the report subcommand).
pub fn parse_timeseries(text: &str) -> Result<Vec<TimeRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TIMESERIES_HEADER => {}
        other => {
            return Err(Error::Config(format!(
                "unexpected timeseries header: {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::Config(format!(
                "timeseries line {}: expected 5 columns",
                k + 2
            )));
        }
        let bad = |c: &str| Error::Config(format!("timeseries line {}: bad number '{c}'", k + 2));
        out.push(TimeRecord {
            t: cols[0].parse().map_err(|_| bad(cols[0]))?,
            x_tip: cols[1].parse().map_err(|_| bad(cols[1]))?,
            v_tip: cols[2].parse().map_err(|_| bad(cols[2]))?,
            node_count: cols[3].parse().map_err(|_| bad(cols[3]))?,
            ms_per_step: cols[4].parse().map_err(|_| bad(cols[4]))?,
        });
    }
    Ok(out)
}

/// Parse an envelope/polyline CSV (x,y header).
pub fn parse_polyline(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,y") {
        return Err(Error::Config("expected x,y header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (x, y) = l
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("bad polyline row '{l}'")))?;
            Ok((
                x.parse().map_err(|_| Error::Config(format!("bad x '{x}'")))?,
                y.parse().map_err(|_| Error::Config(format!("bad y '{y}'")))?,
            ))
        })
        .collect()
}

/// Rebuild both SVGs from CSVs already present in `dir`.
pub fn regenerate_svgs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut tip_curves = Vec::new();
    let mut shapes = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(n) => n.to_string(),
            None => continue,
        };
        if name.ends_with("timeseries.csv") {
            let label = name
                .strip_suffix("timeseries.csv")
                .unwrap()
                .trim_end_matches('_');
            let recs = parse_timeseries(&fs::read_to_string(&path)?)?;
            tip_curves.push((
                if label.is_empty() { "run".to_string() } else { label.to_string() },
                recs.iter().map(|r| (r.x_tip, r.v_tip)).collect(),
            ));
        } else if name.starts_with("envelope_") || name.contains("_envelope_") {
            if let Some(stem) = name.strip_suffix(".csv") {
                shapes.push((
                    stem.replace("envelope_", "t=").replace('_', " "),
                    parse_polyline(&fs::read_to_string(&path)?)?,
                ));
            }
        }
    }
    if tip_curves.is_empty() {
        return Err(Error::Config(format!(
            "no timeseries.csv found in {}",
            dir.display()
        )));
    }
    let mut written = Vec::new();
    let p = dir.join("vtip_vs_xtip.svg");
    fs::write(&p, line_plot(&tip_curves, "x_tip", "v_tip"))?;
    written.push(p);
    let p = dir.join("envelopes.svg");
    fs::write(&p, shape_plot(&shapes))?;
    written.push(p);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::EnvelopeSnapshot;

    fn sample_artifacts(solver: &'static str, n: usize) -> RunArtifacts {
        RunArtifacts {
            solver,
            records: (0..n)
                .map(|k| TimeRecord {
                    t: k as f64 * 0.1,
                    x_tip: 0.22 + 0.1 * k as f64,
                    v_tip: 1.5 - 0.1 * k as f64,
                    node_count: 100 + k,
                    ms_per_step: 1.0,
                })
                .collect(),
            envelopes: vec![EnvelopeSnapshot {
                t: 2.0,
                points: vec![
                    Vec2::new(1.0, 0.0),
                    Vec2::new(0.0, 1.0),
                    Vec2::new(-1.0, 0.0),
                    Vec2::new(0.0, -1.0),
                ],
            }],
            fields: vec![],
        }
    }

    #[test]
    fn empty_run_writes_headers_and_axes() {
        let dir = std::env::temp_dir().join("gem_report_empty");
        let _ = std::fs::remove_dir_all(&dir);
        let art = RunArtifacts {
            solver: "sharp",
            records: vec![],
            envelopes: vec![],
            fields: vec![],
        };
        emit_report(&[art], &dir).unwrap();
        let ts = fs::read_to_string(dir.join("timeseries.csv")).unwrap();
        assert_eq!(ts.trim(), TIMESERIES_HEADER);
        let svg = fs::read_to_string(dir.join("vtip_vs_xtip.svg")).unwrap();
        assert!(svg.contains("<svg") && svg.contains("<line"));
        assert!(!svg.contains("polyline points=\"\" "));
    }

    #[test]
    fn two_solver_run_shares_one_svg_with_legend() {
        let dir = std::env::temp_dir().join("gem_report_both");
        let _ = std::fs::remove_dir_all(&dir);
        emit_report(
            &[sample_artifacts("sharp", 5), sample_artifacts("diffuse", 5)],
            &dir,
        )
        .unwrap();
        let svg = fs::read_to_string(dir.join("vtip_vs_xtip.svg")).unwrap();
        assert!(svg.contains(">sharp<") && svg.contains(">diffuse<"), "{svg}");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(dir.join("sharp_timeseries.csv").exists());
        assert!(dir.join("diffuse_timeseries.csv").exists());
        assert!(dir.join("sharp_envelope_2.csv").exists());
    }

    #[test]
    fn snapshot_times_name_envelope_files() {
        let dir = std::env::temp_dir().join("gem_report_snaps");
        let _ = std::fs::remove_dir_all(&dir);
        let mut art = sample_artifacts("sharp", 3);
        art.envelopes = [2.0, 6.0, 12.0]
            .iter()
            .map(|&t| EnvelopeSnapshot {
                t,
                points: art.envelopes[0].points.clone(),
            })
            .collect();
        emit_report(&[art], &dir).unwrap();
        for t in ["2", "6", "12"] {
            assert!(dir.join(format!("envelope_{t}.csv")).exists(), "t = {t}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let art = sample_artifacts("sharp", 4);
        let text = timeseries_csv(&art.records);
        let back = parse_timeseries(&text).unwrap();
        assert_eq!(back, art.records);
        let poly = polyline_csv(&art.envelopes[0].points);
        let pts = parse_polyline(&poly).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[1], (0.0, 1.0));
    }

    #[test]
    fn regenerate_svgs_from_directory() {
        let dir = std::env::temp_dir().join("gem_report_regen");
        let _ = std::fs::remove_dir_all(&dir);
        emit_report(&[sample_artifacts("sharp", 5)], &dir).unwrap();
        fs::remove_file(dir.join("vtip_vs_xtip.svg")).unwrap();
        fs::remove_file(dir.join("envelopes.svg")).unwrap();
        let written = regenerate_svgs(&dir).unwrap();
        assert_eq!(written.len(), 2);
        assert!(dir.join("vtip_vs_xtip.svg").exists());
        assert!(dir.join("envelopes.svg").exists());
    }
}
