use std::io::Write;
use std::path::Path;

use super::{ExperimentResult, MetricsRecord};
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 6] = ["k", "algorithm", "mse_db", "mismatch_db", "update_rate", "mults"];

fn csv_err(e: csv::Error) -> Error {
    Error::Inconsistent(format!("csv: {e}"))
}

/// Writes `# key=value` header lines followed by one row per record.
///
/// The file is written to a temporary sibling and renamed into place, so a
/// failed write never leaves a partial file at `path`.
pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let file = tmp.as_file_mut();
        for (k, v) in &result.header {
            writeln!(file, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(CSV_COLUMNS).map_err(csv_err)?;
        for r in &result.records {
            w.write_record([
                r.k.to_string(),
                r.algorithm.clone(),
                r.mse_db().to_string(),
                r.mismatch_db().to_string(),
                r.update_rate.to_string(),
                r.mults.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Reads a file written by [`emit_csv`]. dB columns are converted back to
/// linear values.
pub fn parse_csv(text: &str) -> Result<ExperimentResult> {
    let header = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Inconsistent(format!("bad header line: {l}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let columns: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if columns != CSV_COLUMNS {
        return Err(Error::Inconsistent(format!("unexpected columns {columns:?}")));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| Error::Inconsistent(format!("not a number: {s}")))
    };
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let k = row[0]
            .parse::<usize>()
            .map_err(|_| Error::Inconsistent(format!("bad k: {}", &row[0])))?;
        records.push(MetricsRecord {
            k,
            algorithm: row[1].to_string(),
            mse: 10f64.powf(num(&row[2])? / 10.0),
            mismatch: 10f64.powf(num(&row[3])? / 10.0),
            update_rate: num(&row[4])?,
            mults: num(&row[5])?,
        });
    }
    Ok(ExperimentResult { header, records })
}
