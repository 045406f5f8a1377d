//! Plot-data CSVs. Floats use the report formatting, so reading a file back
//! reproduces the values bit for bit.

use std::path::Path;

use ssbm::ei::EiCurve;
use ssbm::plateau::SdSpline;
use ssbm::simulate::BenchmarkRow;
use ssbm::subsample::{BmCurve, BmPoint};

use crate::format::fmt_f64;
use crate::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Columns `sample_size, n, emr, mpmr, sd`.
pub fn write_bm_curve(path: &Path, curve: &BmCurve) -> Result<(), CliError> {
    write_rows(
        path,
        &["sample_size", "n", "emr", "mpmr", "sd"],
        curve.points.iter().map(|p| {
            vec![
                curve.sample_size.to_string(),
                p.n.to_string(),
                fmt_f64(p.emr),
                fmt_f64(p.mpmr),
                fmt_f64(p.sd),
            ]
        }),
    )
}

pub fn read_bm_curve(path: &Path) -> Result<BmCurve, CliError> {
    let bad = |msg: String| CliError::input("read_bm_curve", format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut sample_size = None;
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| bad(format!("short row {rec:?}")));
        let int = |i: usize| field(i)?.parse::<usize>().map_err(|e| bad(e.to_string()));
        let real = |i: usize| field(i)?.parse::<f64>().map_err(|e| bad(e.to_string()));
        let size = int(0)?;
        if *sample_size.get_or_insert(size) != size {
            return Err(bad("inconsistent sample_size column".into()));
        }
        points.push(BmPoint {
            n: int(1)?,
            emr: real(2)?,
            mpmr: real(3)?,
            sd: real(4)?,
        });
    }
    let size = sample_size.ok_or_else(|| bad("no rows".into()))?;
    BmCurve::new(size, points).map_err(|e| bad(e.to_string()))
}

/// Columns `n, g, dg_dlogn` on a log-spaced grid of `points` between the
/// spline's end knots.
pub fn write_sd_spline(path: &Path, spline: &SdSpline, points: usize) -> Result<(), CliError> {
    let (lo, hi) = (spline.t_min(), spline.t_max());
    let last = points.max(2) - 1;
    write_rows(
        path,
        &["n", "g", "dg_dlogn"],
        (0..=last).map(|i| {
            let t = if i == last { hi } else { lo + (hi - lo) * i as f64 / last as f64 };
            vec![fmt_f64(t.exp()), fmt_f64(spline.value_log(t)), fmt_f64(spline.deriv_log(t))]
        }),
    )
}

/// Columns `n, theta_hat, z_mean, z_sd, windows`.
pub fn write_ei_curve(path: &Path, curve: &EiCurve) -> Result<(), CliError> {
    write_rows(
        path,
        &["n", "theta_hat", "z_mean", "z_sd", "windows"],
        curve.points.iter().map(|p| {
            vec![
                p.n.to_string(),
                fmt_f64(p.theta_hat),
                fmt_f64(p.z_mean),
                fmt_f64(p.z_sd),
                p.windows.to_string(),
            ]
        }),
    )
}

/// Columns `phi, xi, method, mape, failures, replicates`.
pub fn write_benchmark(path: &Path, rows: &[BenchmarkRow]) -> Result<(), CliError> {
    let mut out = Vec::new();
    benchmark_csv(&mut out, rows)?;
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn benchmark_csv<W: std::io::Write>(out: W, rows: &[BenchmarkRow]) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phi", "xi", "method", "mape", "failures", "replicates"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.phi),
            fmt_f64(r.xi),
            r.method.clone(),
            fmt_f64(r.mape),
            r.failures.to_string(),
            r.replicates.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
