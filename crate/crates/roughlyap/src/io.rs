//! File formats: CSV for paths, lifts, trajectories and point clouds, JSON
//! for sidecar metadata, partitions, reports and experiment tables.
//!
//! All writers format floats with Rust's shortest round-trip representation,
//! so a rerun with the same inputs produces byte-identical files.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Grid, PathSample};
use crate::rough::{PathMeta, RoughPathGrid};
use crate::solver::Trajectory;

/// Hex SHA-256 of a canonical JSON value; used as the provenance hash in
/// experiment outputs.
pub fn content_hash(value: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(value).expect("json serialization");
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write a path as CSV with header `t,x1..xm`.
pub fn write_path_csv<W: Write>(mut w: W, path: &PathSample) -> Result<()> {
    let mut header = String::from("t");
    for c in 1..=path.dims {
        header.push_str(&format!(",x{c}"));
    }
    writeln!(w, "{header}")?;
    for k in 0..path.grid.n_nodes() {
        let mut line = format!("{}", path.grid.time(k));
        for v in path.value(k) {
            line.push_str(&format!(",{v}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Sidecar metadata written next to path CSVs.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct PathSidecar {
    pub hurst: Option<f64>,
    pub seed: Option<u64>,
    pub dt: f64,
    pub t0: f64,
    pub dims: usize,
    pub provenance: PathMeta,
}

pub fn path_sidecar(rp: &RoughPathGrid) -> PathSidecar {
    let (hurst, seed) = match rp.meta {
        PathMeta::Fbm { hurst, seed, .. } => (Some(hurst), Some(seed)),
        _ => (rp.hurst, None),
    };
    PathSidecar {
        hurst,
        seed,
        dt: rp.grid().dt,
        t0: rp.grid().t0,
        dims: rp.dims(),
        provenance: rp.meta.clone(),
    }
}

/// Write per-step level-2 data as CSV `t,X11..Xmm` (row-major flattening),
/// one row per step, `t` the step's left endpoint.
pub fn write_level2_csv<W: Write>(mut w: W, rp: &RoughPathGrid) -> Result<()> {
    let m = rp.dims();
    let mut header = String::from("t");
    for r in 1..=m {
        for c in 1..=m {
            header.push_str(&format!(",X{r}{c}"));
        }
    }
    writeln!(w, "{header}")?;
    for k in 0..rp.n_steps() {
        let mut line = format!("{}", rp.grid().time(k));
        for v in rp.level2_step(k) {
            line.push_str(&format!(",{v}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Read a path CSV (`t,x1..xm`) back into a sample path. The grid step is
/// inferred from the first two rows and consistency-checked against the rest.
pub fn read_path_csv<R: std::io::Read>(r: R) -> Result<PathSample> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::input("empty path csv"))??;
    let dims = header.split(',').count().saturating_sub(1);
    if dims == 0 {
        return Err(Error::input("path csv header needs t,x1..xm"));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t: f64 = fields
            .next()
            .ok_or_else(|| Error::input("missing time field"))?
            .trim()
            .parse()
            .map_err(|e| Error::input(format!("bad time field: {e}")))?;
        times.push(t);
        let mut count = 0;
        for f in fields {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|e| Error::input(format!("bad value field: {e}")))?;
            values.push(v);
            count += 1;
        }
        if count != dims {
            return Err(Error::input(format!(
                "row has {count} values, header promised {dims}"
            )));
        }
    }
    if times.len() < 2 {
        return Err(Error::input("path csv needs at least two rows"));
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(Error::input("path csv rows are not equally spaced"));
        }
    }
    let grid = Grid::new(times[0], dt, times.len() - 1)?;
    PathSample::new(grid, dims, values)
}

/// Write a trajectory as CSV `t,y1..yd`.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    let mut header = String::from("t");
    for c in 1..=traj.dim {
        header.push_str(&format!(",y{c}"));
    }
    writeln!(w, "{header}")?;
    for k in 0..traj.n_nodes() {
        let mut line = format!("{}", traj.grid.time(k));
        for v in traj.state(k) {
            line.push_str(&format!(",{v}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Write a point cloud as a CSV point list `y1..yd`.
pub fn write_cloud_csv<W: Write>(mut w: W, points: &[f64], dim: usize) -> Result<()> {
    let mut header = String::new();
    for c in 1..=dim {
        if c > 1 {
            header.push(',');
        }
        header.push_str(&format!("y{c}"));
    }
    writeln!(w, "{header}")?;
    for chunk in points.chunks(dim) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Serialize any report as pretty JSON to a file path.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

/// A `{parameter, mean_dH, stderr, n_flagged}` experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ExperimentTable {
    pub parameter_name: String,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TableRow {
    pub parameter: f64,
    pub mean_dh: f64,
    pub stderr: f64,
    pub n_flagged: usize,
}

impl ExperimentTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{},mean_dH,stderr,n_flagged", self.parameter_name)?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                row.parameter, row.mean_dh, row.stderr, row.n_flagged
            )?;
        }
        Ok(())
    }

    /// Companion gnuplot script plotting the table with error bars.
    pub fn gnuplot_script(&self, csv_name: &str, out_name: &str) -> String {
        format!(
            "set datafile separator ','\n\
             set key off\n\
             set logscale x\n\
             set xlabel '{param}'\n\
             set ylabel 'mean d_H'\n\
             set terminal pngcairo size 800,500\n\
             set output '{out_name}'\n\
             plot '{csv_name}' skip 1 using 1:2:3 with yerrorlines\n",
            param = self.parameter_name,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough::lift_piecewise_linear;

    #[test]
    fn path_csv_roundtrip() {
        let grid = Grid::new(-0.5, 0.25, 4).unwrap();
        let path = PathSample::new(
            grid,
            2,
            vec![0.0, 1.0, 0.5, -0.25, 1.0 / 3.0, 2.0, -0.125, 0.7, 0.9, 1.1],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &path).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,x2\n"));
        let back = read_path_csv(&buf[..]).unwrap();
        assert_eq!(back.dims, 2);
        assert_eq!(back.grid.n_steps, 4);
        assert_eq!(back.raw_values(), path.raw_values());
        assert!((back.grid.t0 - grid.t0).abs() < 1e-15);
    }

    #[test]
    fn rerun_is_byte_identical() {
        let grid = Grid::new(0.0, 1.0 / 128.0, 128).unwrap();
        let x = crate::fbm::generate_fbm(0.4, 1, grid, 42).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_path_csv(&mut a, &x).unwrap();
        let x2 = crate::fbm::generate_fbm(0.4, 1, grid, 42).unwrap();
        write_path_csv(&mut b, &x2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn level2_csv_header() {
        let grid = Grid::new(0.0, 1.0, 2).unwrap();
        let rp = lift_piecewise_linear(
            PathSample::new(grid, 2, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0]).unwrap(),
        );
        let mut buf = Vec::new();
        write_level2_csv(&mut buf, &rp).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,X11,X12,X21,X22\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn content_hash_stable_and_sensitive() {
        let a = content_hash(&serde_json::json!({"a": 1, "b": [1.5, 2.5]}));
        let b = content_hash(&serde_json::json!({"a": 1, "b": [1.5, 2.5]}));
        let c = content_hash(&serde_json::json!({"a": 1, "b": [1.5, 2.6]}));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn table_csv_and_script() {
        let table = ExperimentTable {
            parameter_name: "c_g".into(),
            rows: vec![
                TableRow { parameter: 0.2, mean_dh: 0.19, stderr: 0.02, n_flagged: 0 },
                TableRow { parameter: 0.1, mean_dh: 0.10, stderr: 0.01, n_flagged: 1 },
            ],
        };
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("c_g,mean_dH,stderr,n_flagged\n"));
        assert!(text.contains("0.2,0.19,0.02,0"));
        let script = table.gnuplot_script("table.csv", "table.png");
        assert!(script.contains("table.csv"));
    }
}
