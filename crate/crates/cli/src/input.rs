//! Reading numeric series and traces from CSV files.

use std::path::Path;

use anyhow::{bail, Context, Result};
use sampler_lab::Point;

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))
}

/// Column index for `column` (a header name or a 0-based index) given the
/// first record. Returns whether that record is a header.
fn resolve_column(first: &csv::StringRecord, column: Option<&str>) -> Result<(usize, bool)> {
    let is_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let index = match column {
        None => 0,
        Some(c) => match c.parse::<usize>() {
            Ok(i) => i,
            Err(_) if is_header => first
                .iter()
                .position(|h| h == c)
                .with_context(|| format!("no column named `{c}`"))?,
            Err(_) => bail!("column `{c}` given by name but the file has no header row"),
        },
    };
    if index >= first.len() {
        bail!(
            "column {index} out of range, the file has {} columns",
            first.len()
        );
    }
    Ok((index, is_header))
}

/// One numeric column. Blank cells are skipped.
pub fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let mut rdr = reader(path)?;
    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => r?,
        None => bail!("{} is empty", path.display()),
    };
    let (index, is_header) = resolve_column(&first, column)?;
    let mut values = Vec::new();
    let rest = records.map(|r| r.map_err(anyhow::Error::from));
    let all = (!is_header).then_some(Ok(first)).into_iter().chain(rest);
    for (line, rec) in all.enumerate() {
        let rec = rec?;
        let Some(cell) = rec.get(index) else { continue };
        if cell.is_empty() {
            continue;
        }
        let v: f64 = cell.parse().with_context(|| {
            format!(
                "row {}: `{cell}` is not a number",
                line + 1 + usize::from(is_header)
            )
        })?;
        values.push(v);
    }
    if values.is_empty() {
        bail!("no values in {}", path.display());
    }
    Ok(values)
}

/// Cold-chain positions from a trace file written by the experiments
/// (`t,chain,dim0,...,accepted,swapped`).
pub fn read_trace_positions(path: &Path) -> Result<Vec<Point>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let chain_col = headers.iter().position(|h| h == "chain");
    let dims: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("dim"))
        .map(|(i, _)| i)
        .collect();
    if dims.is_empty() {
        bail!(
            "{} has no dim0.. columns; is it a trace file?",
            path.display()
        );
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if let Some(c) = chain_col {
            if rec.get(c) != Some("0") {
                continue;
            }
        }
        let coords = dims
            .iter()
            .map(|&i| {
                rec[i]
                    .parse::<f64>()
                    .with_context(|| format!("bad coordinate `{}`", &rec[i]))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(Point::new(coords)?);
    }
    Ok(out)
}
