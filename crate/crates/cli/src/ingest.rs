use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use rvlab::realized::LogPricePath;

use crate::error::CliError;

/// Prefix of columns written alongside simulated paths that carry the spot
/// variance rather than prices; they are skipped unless selected by name.
pub const SPOT_VAR_PREFIX: &str = "spot_var";

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Values are already log-prices.
    pub log_input: bool,
    /// Price columns to read; all non-time, non-spot-variance columns when empty.
    pub columns: Vec<String>,
}

#[derive(Debug)]
pub struct Ingested {
    pub path: LogPricePath,
    pub columns: Vec<String>,
    /// Calendar length of the observation window in seconds.
    pub duration_secs: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum TimeKind {
    Seconds,
    Timestamp,
}

fn parse_time(raw: &str) -> Option<(f64, TimeKind)> {
    let s = raw.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some((v, TimeKind::Seconds));
    }
    let secs = |dt: NaiveDateTime| {
        let utc = dt.and_utc();
        utc.timestamp() as f64 + f64::from(utc.timestamp_subsec_nanos()) * 1e-9
    };
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some((secs(dt.naive_utc()), TimeKind::Timestamp));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some((secs(dt), TimeKind::Timestamp));
        }
    }
    None
}

/// Reads a price CSV with a `time` column and one column per asset.
///
/// Prices are logged (unless `log_input`), times are mapped affinely onto
/// `[0, 1]`, and repeated timestamps keep the last row. Lines starting with
/// `#` are ignored.
pub fn ingest_csv(path: &Path, opts: &IngestOptions) -> Result<Ingested, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    ingest_reader(file, opts)
}

pub fn ingest_reader<R: std::io::Read>(reader: R, opts: &IngestOptions) -> Result<Ingested, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read header: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let time_col = names
        .iter()
        .position(|h| h.eq_ignore_ascii_case("time"))
        .ok_or_else(|| CliError::Data("header must contain a `time` column".into()))?;
    let price_cols: Vec<usize> = if opts.columns.is_empty() {
        (0..names.len())
            .filter(|&c| c != time_col && !names[c].starts_with(SPOT_VAR_PREFIX))
            .collect()
    } else {
        opts.columns
            .iter()
            .map(|want| {
                names
                    .iter()
                    .position(|h| h == want)
                    .ok_or_else(|| CliError::Data(format!("no column named `{want}`")))
            })
            .collect::<Result<_, _>>()?
    };
    if price_cols.is_empty() {
        return Err(CliError::Data("no price columns".into()));
    }

    let mut warnings = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut kind: Option<TimeKind> = None;
    for (k, record) in rdr.records().enumerate() {
        let row_no = k + 1;
        let record = record.map_err(|e| CliError::Data(format!("row {row_no}: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |msg: String| CliError::Data(format!("row {row_no} (line {line}): {msg}"));
        let raw_time = record.get(time_col).unwrap_or("");
        let (t, this_kind) = parse_time(raw_time).ok_or_else(|| at(format!("unparseable time `{raw_time}`")))?;
        match kind {
            None => kind = Some(this_kind),
            Some(k) if k != this_kind => return Err(at("mixed numeric and timestamp times".into())),
            _ => {}
        }
        let mut values = Vec::with_capacity(price_cols.len());
        for &c in &price_cols {
            let raw = record.get(c).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| at(format!("column `{}`: unparseable value `{raw}`", names[c])))?;
            if opts.log_input {
                if !v.is_finite() {
                    return Err(at(format!("column `{}`: non-finite log-price", names[c])));
                }
                values.push(v);
            } else {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(at(format!("column `{}`: price must be positive, got {raw}", names[c])));
                }
                values.push(v.ln());
            }
        }
        match times.last() {
            Some(&last) if t < last => return Err(at(format!("time {raw_time} is earlier than the previous row"))),
            Some(&last) if t == last => {
                warnings.push(format!("row {row_no}: duplicate time {raw_time}, keeping this row"));
                *rows.last_mut().expect("non-empty") = values;
            }
            _ => {
                times.push(t);
                rows.push(values);
            }
        }
    }
    if times.is_empty() {
        return Err(CliError::Data("file has no data rows".into()));
    }
    if times.len() < 2 {
        return Err(CliError::Data("need at least two distinct times".into()));
    }
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let duration = t1 - t0;
    let scaled: Vec<f64> = times.iter().map(|t| (t - t0) / duration).collect();
    let path = LogPricePath::new(scaled, rows)?;
    Ok(Ingested {
        path,
        columns: price_cols.iter().map(|&c| names[c].to_string()).collect(),
        duration_secs: duration,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<Ingested, CliError> {
        ingest_reader(s.as_bytes(), &IngestOptions::default())
    }

    #[test]
    fn logs_prices_and_rescales_time() {
        let got = read("time,p\n10,100\n20,110.517\n30,90.484\n50,122.140\n").unwrap();
        let p = &got.path;
        assert_eq!(p.times(), &[0.0, 0.25, 0.5, 1.0]);
        let expect = [4.60517, 4.70517, 4.50517, 4.80517];
        for (k, e) in expect.iter().enumerate() {
            assert!((p.row(k)[0] - e).abs() < 1e-5, "{k}");
        }
        assert_eq!(got.duration_secs, 40.0);
        assert!(got.warnings.is_empty());
    }

    #[test]
    fn duplicate_times_keep_the_last_row() {
        let got = read("time,p\n0,1\n1,2\n1,3\n2,4\n").unwrap();
        assert_eq!(got.path.len(), 3);
        assert_eq!(got.path.row(1)[0], 3f64.ln());
        assert_eq!(got.warnings.len(), 1);
    }

    #[test]
    fn non_positive_price_names_the_row() {
        let err = read("time,p\n0,1\n1,2\n2,0\n").unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
        let err = read("time,p\n0,1\nxx,2\n").unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("unparseable time"), "{err}");
        assert!(read("time,p\n").is_err());
        assert!(read("p,q\n1,2\n").is_err());
        assert!(read("time,p\n2,1\n1,2\n").is_err());
    }

    #[test]
    fn iso_timestamps() {
        let got = read("time,a,b\n2024-01-02T09:30:00Z,1,2\n2024-01-02 09:31:00,2,4\n2024-01-02T09:32:00+00:00,4,8\n")
            .unwrap();
        assert_eq!(got.path.times(), &[0.0, 0.5, 1.0]);
        assert_eq!(got.path.dim(), 2);
        assert_eq!(got.duration_secs, 120.0);
    }

    #[test]
    fn spot_variance_columns_are_skipped_and_logs_pass_through() {
        let opts = IngestOptions {
            log_input: true,
            columns: vec![],
        };
        let got = ingest_reader("# meta\ntime,y0,spot_var0\n0,0.5,1\n1,-0.25,1\n".as_bytes(), &opts).unwrap();
        assert_eq!(got.columns, vec!["y0"]);
        assert_eq!(got.path.row(1), &[-0.25]);
    }
}
