//! On-disk artifacts: CSV tables, JSON fit reports and a plotting script.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::num;
use crate::error::Result;
use crate::measurement::LevelSetTrace;
use crate::solver::Snapshot;

/// `trace_lambda_<lambda>.csv`, the level in shortest round-trip form.
pub fn trace_file_name(lambda: f64) -> String {
    format!("trace_lambda_{}.csv", num(lambda))
}

pub fn write_snapshots_csv<W: Write>(mut w: W, snapshots: &[Snapshot]) -> Result<()> {
    writeln!(w, "t,x,u")?;
    for s in snapshots {
        let t = num(s.t);
        for (i, &u) in s.values.iter().enumerate() {
            writeln!(w, "{t},{},{}", num(s.position(i)), num(u))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(mut w: W, trace: &LevelSetTrace) -> Result<()> {
    writeln!(w, "t,x_lambda")?;
    for &(t, x) in trace.samples() {
        writeln!(w, "{},{}", num(t), num(x))?;
    }
    w.flush()?;
    Ok(())
}

/// Generic CSV with a header row; rows are written as shortest round-trip floats.
pub fn write_table_csv<W: Write>(mut w: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| crate::Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Snapshots and one trace per level into `dir`; returns the written paths.
pub fn write_run_tables(dir: &Path, snapshots: &[Snapshot], traces: &[LevelSetTrace]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let snap = dir.join("snapshots.csv");
    write_snapshots_csv(create(&snap)?, snapshots)?;
    files.push(snap);
    for trace in traces {
        let path = dir.join(trace_file_name(trace.lambda));
        write_trace_csv(create(&path)?, trace)?;
        files.push(path);
    }
    Ok(files)
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot the CSV artifacts in this directory tree (needs matplotlib)."""
import csv
import pathlib
import sys

import matplotlib.pyplot as plt


def read(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = list(zip(*[[float(v) for v in r] for r in body])) if body else [[] for _ in header]
    return dict(zip(header, cols))


def snapshots(path, ax):
    data = read(path)
    groups = {}
    for t, x, u in zip(data["t"], data["x"], data["u"]):
        groups.setdefault(t, ([], []))
        groups[t][0].append(x)
        groups[t][1].append(u)
    for t, (xs, us) in sorted(groups.items()):
        ax.plot(xs, us, label=f"t = {t:g}")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend()
    ax.set_title(path.parent.name)


def traces(paths, ax):
    for p in paths:
        d = read(p)
        ax.plot(d["t"], d["x_lambda"], label=f"{p.parent.name}: {p.stem}")
    ax.set_xlabel("t")
    ax.set_ylabel("x_lambda(t)")


def main():
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).parent)
    for snap in sorted(root.rglob("snapshots.csv")):
        fig, ax = plt.subplots()
        snapshots(snap, ax)
        fig.savefig(snap.with_suffix(".png"), dpi=120)
        plt.close(fig)
    trace_paths = sorted(root.rglob("trace_lambda_*.csv"))
    if trace_paths:
        fig, ax = plt.subplots()
        traces(trace_paths, ax)
        overlay = root / "overlays.csv"
        if overlay.exists():
            d = read(overlay)
            for name, ys in d.items():
                if name != "t":
                    ax.plot(d["t"], ys, "--", linewidth=2.5, label=name)
        ax.legend(fontsize="small")
        fig.savefig(root / "traces.png", dpi=120)
        plt.close(fig)
    for table in ("nonlinearity.csv",):
        path = root / table
        if path.exists():
            d = read(path)
            fig, ax = plt.subplots()
            for name, ys in d.items():
                if name != "s":
                    ax.plot(d["s"], ys, label=name)
            ax.set_xscale("log")
            ax.set_xlabel("s")
            ax.legend()
            fig.savefig(path.with_suffix(".png"), dpi=120)
            plt.close(fig)


if __name__ == "__main__":
    main()
"#;

pub fn write_plot_script(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("plot.py");
    std::fs::write(&path, PLOT_SCRIPT)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_names_and_rows() {
        assert_eq!(trace_file_name(0.5), "trace_lambda_0.5.csv");
        assert_eq!(trace_file_name(0.1), "trace_lambda_0.1.csv");
        let tr = LevelSetTrace::from_samples(0.5, vec![(0.0, 1.0), (0.1, 1.0 / 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &tr).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,x_lambda\n0.0,1.0\n0.1,0.3333333333333333\n");
        let back: f64 = text.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn snapshot_rows() {
        let s = Snapshot {
            t: 2.0,
            x_left: -1.0,
            dx: 0.5,
            values: vec![1.0, 0.25, 1e-300],
        };
        let mut buf = Vec::new();
        write_snapshots_csv(&mut buf, &[s]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,x,u\n2.0,-1.0,1.0\n2.0,-0.5,0.25\n2.0,0.0,1e-300\n"
        );
    }
}
