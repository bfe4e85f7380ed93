//! On-disk run artifacts: `timeseries.csv`, `snapshots.csv`, `run.json`.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! yields bit-identical values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ksflux::diagnostics::{BlowupConstants, DiagRecord};
use ksflux::integrator::{StopReason, Verdict};
use ksflux::{Fields, RadialGrid};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const TIMESERIES: &str = "timeseries.csv";
pub const SNAPSHOTS: &str = "snapshots.csv";
pub const RUN_JSON: &str = "run.json";

pub const VERDICT_NOTE: &str =
    "numerical proxy: BlowUp means the density reached u_cap with a collapsing time step and monotone growth; \
     Bounded means t_end was reached below u_cap";

/// Contents of `run.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub config: RunConfig,
    /// Canonical `key = value` form of `config`.
    pub config_text: String,
    pub verdict: Verdict,
    pub verdict_note: String,
    pub t_detect: Option<f64>,
    pub peak_linf: f64,
    pub stop: StopReason,
    pub note: Option<String>,
    pub steps: u64,
    pub floor_hits: u64,
    pub u_cap: f64,
    pub dt_min: f64,
    pub initial_mass: f64,
    pub final_t: f64,
    pub frames: usize,
    pub wall_seconds: f64,
    /// Present when `α < 0` and `n = 2`.
    pub constants: Option<BlowupConstants>,
    pub constants_error: Option<String>,
}

pub fn write_timeseries(path: &Path, frames: &[DiagRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    for f in frames {
        w.serialize(f)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_timeseries(path: &Path) -> Result<Vec<DiagRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let frames = r.deserialize().collect::<Result<Vec<DiagRecord>, _>>()?;
    if frames.is_empty() {
        bail!("{} holds no frames", path.display());
    }
    Ok(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SnapshotRow {
    frame: usize,
    r: f64,
    u: f64,
    v: f64,
    /// Radial gradient at the cell's outer face.
    vr: f64,
}

/// One stored frame: its index in the time series and the fields.
pub type Snapshot = (usize, Fields);

/// Streams snapshot rows as frames arrive.
pub struct SnapshotWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl SnapshotWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        Ok(SnapshotWriter {
            inner: csv::Writer::from_writer(BufWriter::new(file)),
        })
    }

    pub fn write(&mut self, grid: &RadialGrid, frame: usize, fields: &Fields) -> Result<()> {
        for i in 0..grid.cells() {
            self.inner.serialize(SnapshotRow {
                frame,
                r: grid.centers[i],
                u: fields.u[i],
                v: fields.v[i],
                vr: fields.vr[i + 1],
            })?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| anyhow::anyhow!("{}", e.error()))?
            .flush()?;
        Ok(())
    }
}

/// Reads `snapshots.csv`; `times[k]` is the time of frame `k`.
pub fn read_snapshots(path: &Path, cells: usize, times: &[f64]) -> Result<Vec<Snapshot>> {
    let mut r = csv::Reader::from_reader(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ));
    let mut out: Vec<Snapshot> = Vec::new();
    for row in r.deserialize() {
        let row: SnapshotRow = row?;
        let Some(&t) = times.get(row.frame) else {
            bail!("snapshot frame {} has no time series row", row.frame);
        };
        if out.last().map(|s| s.0) != Some(row.frame) {
            if out.last().is_some_and(|s| s.1.u.len() != cells) {
                bail!("snapshot frame {} is incomplete", out.last().unwrap().0);
            }
            out.push((
                row.frame,
                Fields {
                    u: Vec::with_capacity(cells),
                    v: Vec::new(),
                    vr: vec![0.0],
                    t,
                },
            ));
        }
        let f = &mut out.last_mut().unwrap().1;
        f.u.push(row.u);
        f.v.push(row.v);
        f.vr.push(row.vr);
    }
    if out.iter().any(|s| s.1.u.len() != cells) {
        bail!("snapshot frames must hold {cells} cells each");
    }
    Ok(out)
}

pub fn write_run_json(path: &Path, record: &RunRecord) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, record)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_run_json(path: &Path) -> Result<RunRecord> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("cannot parse {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64) -> DiagRecord {
        DiagRecord {
            t,
            dt: 1.0 / 3.0 * t,
            mass: 10.000000000000002,
            linf_u: 1e300,
            l2_u: 5e-324,
            l4_u: std::f64::consts::PI,
            linf_v: 0.1 + 0.2,
            grad_l2_v: 7.0,
            phi: f64::NAN,
            psi: 1.2345678901234567e-7,
            min_u: 0.0,
        }
    }

    #[test]
    fn timeseries_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(TIMESERIES);
        let frames: Vec<_> = [0.0, 1e-17, 0.3, 2.0].into_iter().map(record).collect();
        write_timeseries(&path, &frames).unwrap();
        let back = read_timeseries(&path).unwrap();
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(header.starts_with("t,dt,mass,linf_u,l2_u,l4_u,linf_v,grad_l2_v,phi,psi,min_u\n"));
        for (a, b) in frames.iter().zip(&back) {
            let bits = |r: &DiagRecord| {
                [
                    r.t,
                    r.dt,
                    r.mass,
                    r.linf_u,
                    r.l2_u,
                    r.l4_u,
                    r.linf_v,
                    r.grad_l2_v,
                    r.phi,
                    r.psi,
                    r.min_u,
                ]
                .map(f64::to_bits)
            };
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn snapshots_round_trip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(SNAPSHOTS);
        let grid = RadialGrid::new(2, 1.0, 5).unwrap();
        let fields = |s: f64| Fields {
            u: (0..5).map(|i| s / (i as f64 + 3.0)).collect(),
            v: (0..5).map(|i| (i as f64 * s).sin()).collect(),
            vr: (0..6).map(|i| if i == 0 { 0.0 } else { s * i as f64 / 7.0 }).collect(),
            t: 0.0,
        };
        let mut w = SnapshotWriter::create(&path).unwrap();
        w.write(&grid, 0, &fields(1.0)).unwrap();
        w.write(&grid, 3, &fields(0.1)).unwrap();
        w.finish().unwrap();
        let back = read_snapshots(&path, 5, &[0.0, 0.5, 1.0, 1.5]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].0, 3);
        assert_eq!(back[1].1, Fields { t: 1.5, ..fields(0.1) });
        assert!(read_snapshots(&path, 4, &[0.0, 0.5, 1.0, 1.5]).is_err());
        assert!(read_snapshots(&path, 5, &[0.0]).is_err());
    }
}
