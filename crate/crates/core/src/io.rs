//! CSV formats for snapshots, bases and averaged tables.
//!
//! Every float is written with 17 significant digits so a round trip is
//! bit-exact.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::basis::{BasisKind, BasisSet};
use crate::budget::{AveragedBudget, IntervalTable};
use crate::error::{Error, Result};
use crate::fem::{FeVector, Mesh};
use crate::solver::{CaseConfig, RunStats, SnapshotSet};

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    let s = field.ok_or_else(|| Error::Format(format!("missing field '{what}'")))?;
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse '{s}' as {what}")))
}

fn records<R: Read>(r: R) -> Result<Vec<StringRecord>> {
    let mut rdr = ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
    rdr.records().map(|r| r.map_err(Error::from)).collect()
}

fn floats(rec: &StringRecord, skip: usize, what: &str) -> Result<Vec<f64>> {
    rec.iter().skip(skip).map(|s| parse(Some(s), what)).collect()
}

/// Header line, parameter line, column line, then one row per snapshot.
pub fn write_snapshots<W: Write>(snaps: &SnapshotSet, out: W) -> Result<()> {
    let cfg = &snaps.config;
    let mut w = WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["n_cells", "nu", "dt", "T", "stride", "count"])?;
    w.write_record([
        cfg.n_cells.to_string(),
        fmt(cfg.nu),
        fmt(cfg.dt),
        fmt(cfg.t_final),
        cfg.snapshot_stride.to_string(),
        snaps.len().to_string(),
    ])?;
    let n = cfg.n_cells - 1;
    let mut cols = vec!["time".to_string()];
    cols.extend((1..=n).map(|i| format!("v_{i}")));
    w.write_record(&cols)?;
    for (t, s) in snaps.times.iter().zip(&snaps.states) {
        let mut row = Vec::with_capacity(n + 1);
        row.push(fmt(*t));
        row.extend(s.as_slice().iter().map(|v| fmt(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot file. Solver settings not stored in the file take their
/// defaults.
pub fn read_snapshots<R: Read>(input: R) -> Result<SnapshotSet> {
    let recs = records(input)?;
    if recs.len() < 3 {
        return Err(Error::Format("snapshot file needs a header, parameter and column line".into()));
    }
    let p = &recs[1];
    let n_cells: usize = parse(p.get(0), "n_cells")?;
    let mut config = CaseConfig::step_case(parse(p.get(3), "T")?, parse(p.get(2), "dt")?, parse(p.get(4), "stride")?);
    config.n_cells = n_cells;
    config.nu = parse(p.get(1), "nu")?;
    let count: usize = parse(p.get(5), "count")?;
    let mesh = Mesh::new(n_cells)?;
    let rows = &recs[3..];
    if rows.len() != count {
        return Err(Error::Format(format!("expected {count} snapshot rows, found {}", rows.len())));
    }
    let mut times = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    for rec in rows {
        let vals = floats(rec, 0, "snapshot value")?;
        let (t, v) = vals
            .split_first()
            .ok_or_else(|| Error::Format("empty snapshot row".into()))?;
        times.push(*t);
        states.push(FeVector::from_values(&mesh, v.to_vec())?);
    }
    Ok(SnapshotSet {
        times,
        states,
        config,
        stats: RunStats::default(),
    })
}

/// Header and parameter line, then `k, λ_k, w_k` per mode.
pub fn write_basis<W: Write>(basis: &BasisSet, out: W) -> Result<()> {
    let mut w = WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["kind", "d", "n_cells", "rank_tol"])?;
    w.write_record([
        basis.kind.to_string(),
        basis.d().to_string(),
        basis.mesh.n_cells().to_string(),
        fmt(basis.rank_tol),
    ])?;
    let n = basis.mesh.n_dof();
    let mut cols = vec!["k".to_string(), "eigenvalue".to_string()];
    cols.extend((1..=n).map(|i| format!("w_{i}")));
    w.write_record(&cols)?;
    for (k, (lam, v)) in basis.eigenvalues.iter().zip(&basis.vectors).enumerate() {
        let mut row = vec![(k + 1).to_string(), fmt(*lam)];
        row.extend(v.as_slice().iter().map(|x| fmt(*x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_basis<R: Read>(input: R) -> Result<BasisSet> {
    let recs = records(input)?;
    if recs.len() < 3 {
        return Err(Error::Format("basis file needs a header, parameter and column line".into()));
    }
    let p = &recs[1];
    let kind: BasisKind = parse::<String>(p.get(0), "kind")?.parse()?;
    let d: usize = parse(p.get(1), "d")?;
    let mesh = Mesh::new(parse(p.get(2), "n_cells")?)?;
    let rank_tol = parse(p.get(3), "rank_tol")?;
    let rows = &recs[3..];
    if rows.len() != d {
        return Err(Error::Format(format!("expected {d} basis rows, found {}", rows.len())));
    }
    let mut eigenvalues = Vec::with_capacity(d);
    let mut vectors = Vec::with_capacity(d);
    for rec in rows {
        let vals = floats(rec, 1, "basis value")?;
        let (lam, v) = vals
            .split_first()
            .ok_or_else(|| Error::Format("empty basis row".into()))?;
        eigenvalues.push(*lam);
        vectors.push(FeVector::from_values(&mesh, v.to_vec())?);
    }
    Ok(BasisSet {
        kind,
        mesh,
        vectors,
        eigenvalues,
        rank_tol,
    })
}

const TABLE_COLUMNS: [&str; 8] = ["m", "avg_e_m", "avg_E_m", "avg_sum", "T", "n", "dt", "d"];

pub fn write_table<W: Write>(rows: &[AveragedBudget], out: W) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(TABLE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            fmt(r.avg_e_m),
            fmt(r.avg_cap_e_m),
            fmt(r.avg_sum),
            fmt(r.t_final),
            r.n.to_string(),
            fmt(r.dt),
            r.d.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(input: R) -> Result<Vec<AveragedBudget>> {
    let recs = records(input)?;
    let Some((head, rows)) = recs.split_first() else {
        return Err(Error::Format("empty table file".into()));
    };
    if head.iter().collect::<Vec<_>>() != TABLE_COLUMNS {
        return Err(Error::Format(format!("unexpected table header {:?}", head)));
    }
    rows.iter()
        .map(|r| {
            Ok(AveragedBudget {
                m: parse(r.get(0), "m")?,
                avg_e_m: parse(r.get(1), "avg_e_m")?,
                avg_cap_e_m: parse(r.get(2), "avg_E_m")?,
                avg_sum: parse(r.get(3), "avg_sum")?,
                t_final: parse(r.get(4), "T")?,
                n: parse(r.get(5), "n")?,
                dt: parse(r.get(6), "dt")?,
                d: parse(r.get(7), "d")?,
            })
        })
        .collect()
}

/// Which column set of an [`IntervalTable`] to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalQuantity {
    Transfer,
    Viscous,
}

/// One row per `m`, one column per interval.
pub fn write_interval_table<W: Write>(table: &IntervalTable, which: IntervalQuantity, out: W) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    let label = match which {
        IntervalQuantity::Transfer => "avg_e_m",
        IntervalQuantity::Viscous => "avg_E_m",
    };
    let mut head = vec!["m".to_string()];
    head.extend(table.intervals.iter().map(|t| format!("{label}@T={t}")));
    w.write_record(&head)?;
    for r in &table.rows {
        let vals = match which {
            IntervalQuantity::Transfer => &r.e_m,
            IntervalQuantity::Viscous => &r.cap_e_m,
        };
        let mut row = vec![r.m.to_string()];
        row.extend(vals.iter().map(|v| fmt(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format `time, x, u` with the boundary zeros included, for plotting.
pub fn write_profiles<W: Write>(snaps: &SnapshotSet, every: usize, out: W) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(["time", "x", "u"])?;
    let h = 1.0 / snaps.config.n_cells as f64;
    for (t, s) in snaps.times.iter().zip(&snaps.states).step_by(every.max(1)) {
        for (i, u) in s.with_boundary().iter().enumerate() {
            w.write_record([fmt(*t), fmt(i as f64 * h), fmt(*u)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save<P: AsRef<Path>>(path: P, f: impl FnOnce(File) -> Result<()>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    f(File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_pod, RankTolerance};
    use crate::fem::assemble_mass;
    use crate::solver::run_case;

    fn small_run() -> SnapshotSet {
        let mut cfg = CaseConfig::step_case(0.05, 1e-2, 1);
        cfg.n_cells = 16;
        run_case(&cfg).unwrap()
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let snaps = small_run();
        let mut buf = Vec::new();
        write_snapshots(&snaps, &mut buf).unwrap();
        let back = read_snapshots(buf.as_slice()).unwrap();
        assert_eq!(back.times, snaps.times);
        assert_eq!(back.states, snaps.states);
        assert_eq!(back.config, snaps.config);
    }

    #[test]
    fn basis_round_trip_is_exact() {
        let snaps = small_run();
        let mass = assemble_mass(&snaps.mesh().unwrap());
        let basis = build_pod(&snaps, &mass, RankTolerance::default()).unwrap();
        let mut buf = Vec::new();
        write_basis(&basis, &mut buf).unwrap();
        let back = read_basis(buf.as_slice()).unwrap();
        assert_eq!(back.eigenvalues, basis.eigenvalues);
        assert_eq!(back.vectors, basis.vectors);
        assert_eq!(back.kind, BasisKind::Pod);
    }

    #[test]
    fn table_round_trip_and_header() {
        let rows = vec![AveragedBudget {
            m: 3,
            avg_e_m: 0.1 + 0.2,
            avg_cap_e_m: -1.0 / 3.0,
            avg_sum: 0.3 - 1.0 / 3.0,
            t_final: 1.0,
            n: 100,
            dt: 1e-2,
            d: 37,
        }];
        let mut buf = Vec::new();
        write_table(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("m,avg_e_m,avg_E_m,avg_sum"));
        assert_eq!(read_table(buf.as_slice()).unwrap(), rows);
        assert!(read_table("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn truncated_snapshot_file_is_rejected() {
        let snaps = small_run();
        let mut buf = Vec::new();
        write_snapshots(&snaps, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_snapshots(cut.as_bytes()), Err(Error::Format(_))));
    }
}
