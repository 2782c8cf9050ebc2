use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use kmrcd::{DataMatrix, GramMatrix};
use serde_json::{Number, Value};

/// 17 significant digits; parses back to the same `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn json_num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(num(x).parse::<Number>().expect("formatted float is a JSON number"))
}

pub fn json_nums(xs: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(xs.into_iter().map(json_num).collect())
}

fn read_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let file = File::open(path).with_context(|| format!("cannot open input file {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut records = Vec::new();
    for record in rdr.records() {
        records.push(record.with_context(|| format!("malformed CSV in {}", path.display()))?);
    }
    Ok(records)
}

fn parse_row(record: &csv::StringRecord) -> Option<Vec<f64>> {
    record.iter().map(|f| f.parse::<f64>().ok()).collect()
}

/// Numeric CSV with an optional header row; the first row is a header when any
/// of its fields is not a number.
pub fn read_data(path: &Path) -> Result<DataMatrix> {
    let records = read_records(path)?;
    let skip = match records.first() {
        None => bail!("{} contains no data", path.display()),
        Some(first) => usize::from(parse_row(first).is_none()),
    };
    let mut rows = Vec::with_capacity(records.len());
    for (line, record) in records.iter().enumerate().skip(skip) {
        match parse_row(record) {
            Some(row) => rows.push(row),
            None => bail!("{}: line {} has a non-numeric field", path.display(), line + 1),
        }
    }
    if rows.len() < 4 {
        bail!("{}: need at least 4 observations, found {}", path.display(), rows.len());
    }
    DataMatrix::from_rows(&rows).with_context(|| format!("invalid data in {}", path.display()))
}

pub fn read_gram(path: &Path) -> Result<GramMatrix> {
    let file = File::open(path).with_context(|| format!("cannot open input file {}", path.display()))?;
    let gram = GramMatrix::from_csv(file).with_context(|| format!("invalid Gram matrix in {}", path.display()))?;
    if gram.n() < 4 {
        bail!("{}: need at least 4 observations, found {}", path.display(), gram.n());
    }
    Ok(gram)
}

pub fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Writes rows of numbers without a header.
pub fn write_matrix<'a>(dir: &Path, name: &str, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
    let mut w = create(dir, name)?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| num(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
