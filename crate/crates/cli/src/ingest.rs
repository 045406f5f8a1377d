//! CSV ingestion into a time-ordered series.

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub path: PathBuf,
    pub column: String,
    pub timestamp_column: Option<String>,
    /// Data rows in the file, including dropped ones.
    pub rows: usize,
    /// Rows whose target cell was blank or not a finite number.
    pub dropped: usize,
    /// True when timestamps were out of order and the series was re-sorted.
    pub resorted: bool,
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// Accepts RFC 3339, `YYYY-MM-DD HH:MM:SS`, `YYYY-MM-DDTHH:MM:SS`, `YYYY-MM-DD`,
/// or a plain number (e.g. a Unix time or a year). Returns seconds.
pub fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp() as f64 + t.timestamp_subsec_nanos() as f64 * 1e-9);
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            let u = t.and_utc();
            return Some(u.timestamp() as f64 + u.timestamp_subsec_nanos() as f64 * 1e-9);
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp() as f64);
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Read `column` from a headed CSV. Rows with an unparseable target are
/// dropped and counted. With a timestamp column the series is stably sorted
/// by time; a bad timestamp on a kept row is an error.
pub fn ingest(path: &Path, column: &str, timestamp: Option<&str>) -> Result<Series, CliError> {
    let input_err = |msg: String| CliError::input("ingest", msg);
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| input_err(format!("{}: {e}", path.display())))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| input_err(format!("missing column `{name}` in {}", path.display())))
    };
    let col = find(column)?;
    let ts_col = timestamp.map(find).transpose()?;

    let mut rows = 0;
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| input_err(format!("{}: {e}", path.display())))?;
        rows += 1;
        let Some(v) = rec.get(col).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite()) else {
            continue;
        };
        let t = match ts_col {
            Some(c) => {
                let raw = rec.get(c).unwrap_or("");
                parse_timestamp(raw)
                    .ok_or_else(|| input_err(format!("row {}: unparseable timestamp `{raw}`", i + 2)))?
            }
            None => i as f64,
        };
        kept.push((t, v));
    }
    if kept.is_empty() {
        return Err(input_err(format!("no numeric values in column `{column}`")));
    }
    let resorted = kept.windows(2).any(|w| w[1].0 < w[0].0);
    if resorted {
        kept.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(Series {
        path: path.to_path_buf(),
        column: column.to_string(),
        timestamp_column: timestamp.map(str::to_string),
        rows,
        dropped: rows - kept.len(),
        resorted,
        values: kept.into_iter().map(|(_, v)| v).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_rows() {
        let f = csv_file("x\n1.0\n2.0\n3.0\n");
        let s = ingest(f.path(), "x", None).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0, 3.0]);
        assert_eq!((s.rows, s.dropped), (3, 0));
    }

    #[test]
    fn blank_cell_is_dropped_and_counted() {
        let f = csv_file("t,x\na,1.0\nb,\nc,3.0\n");
        let s = ingest(f.path(), "x", None).unwrap();
        assert_eq!(s.values, vec![1.0, 3.0]);
        assert_eq!(s.dropped, 1);
    }

    #[test]
    fn timestamps_are_resorted() {
        let f = csv_file("date,x\n2020-01-03,3\n2020-01-01,1\n2020-01-02,2\n2020-01-01,1.5\n");
        let s = ingest(f.path(), "x", Some("date")).unwrap();
        assert_eq!(s.values, vec![1.0, 1.5, 2.0, 3.0]);
        assert!(s.resorted);
        let sorted = csv_file("date,x\n2020-01-01,1\n2020-01-02,2\n");
        assert!(!ingest(sorted.path(), "x", Some("date")).unwrap().resorted);
    }

    #[test]
    fn timestamp_formats() {
        assert_eq!(parse_timestamp("1970-01-02"), Some(86_400.0));
        assert_eq!(parse_timestamp("1970-01-01T00:01:00Z"), Some(60.0));
        assert_eq!(parse_timestamp("1970-01-01 00:00:30"), Some(30.0));
        assert_eq!(parse_timestamp("1999"), Some(1999.0));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn errors() {
        let f = csv_file("x\n1\n");
        assert!(ingest(f.path(), "y", None).is_err());
        let f = csv_file("x\n\nfoo\n");
        assert!(ingest(f.path(), "x", None).is_err());
        let f = csv_file("d,x\nnot-a-date,1\n");
        assert!(ingest(f.path(), "x", Some("d")).is_err());
        assert!(ingest(Path::new("/nonexistent/file.csv"), "x", None).is_err());
    }
}
