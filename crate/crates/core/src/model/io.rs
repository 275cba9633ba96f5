//! Text dumps: datasets as comma-separated lines with a `name:kind` header,
//! queries as one JSON record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::dataset::{Column, ColumnData, ColumnKind, Dataset};
use super::query::Query;
use crate::error::{Error, Result};

pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    let header: Vec<String> =
        dataset.columns().iter().map(|c| format!("{}:{}", c.name, c.kind().as_str())).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for row in 0..dataset.num_rows() {
        line.clear();
        for (i, col) in dataset.columns().iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            match &col.data {
                ColumnData::Numeric(v) => line.push_str(&v[row].to_string()),
                ColumnData::Categorical(v) => line.push_str(&v[row].to_string()),
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_dataset<R: BufRead>(input: R, source: &str) -> Result<Dataset> {
    let parse_err = |line: usize, msg: String| Error::Parse { path: source.to_string(), line, msg };
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::io(source, e))?,
        None => return Err(parse_err(1, "missing header".into())),
    };
    let mut names = Vec::new();
    let mut kinds = Vec::new();
    for field in header.split(',') {
        let (name, kind) =
            field.split_once(':').ok_or_else(|| parse_err(1, format!("header field '{field}' is not name:kind")))?;
        names.push(name.trim().to_string());
        kinds.push(kind.trim().parse::<ColumnKind>().map_err(|e| parse_err(1, e.to_string()))?);
    }
    let mut numeric: Vec<Vec<f64>> = vec![Vec::new(); kinds.len()];
    let mut codes: Vec<Vec<u32>> = vec![Vec::new(); kinds.len()];
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != kinds.len() {
            return Err(parse_err(lineno, format!("expected {} fields, found {}", kinds.len(), fields.len())));
        }
        for (c, field) in fields.iter().enumerate() {
            let field = field.trim();
            match kinds[c] {
                ColumnKind::Numeric => numeric[c]
                    .push(field.parse().map_err(|_| parse_err(lineno, format!("bad number '{field}'")))?),
                ColumnKind::Categorical => codes[c]
                    .push(field.parse().map_err(|_| parse_err(lineno, format!("bad category code '{field}'")))?),
            }
        }
    }
    let columns = names
        .into_iter()
        .zip(kinds)
        .enumerate()
        .map(|(c, (name, kind))| match kind {
            ColumnKind::Numeric => Column::numeric(name, std::mem::take(&mut numeric[c])),
            ColumnKind::Categorical => Column::categorical(name, std::mem::take(&mut codes[c])),
        })
        .collect();
    Dataset::new(columns)
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_dataset(dataset, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file), &path.display().to_string())
}

pub fn write_queries<W: Write>(queries: &[Query], mut out: W) -> Result<()> {
    for q in queries {
        serde_json::to_writer(&mut out, q)?;
        out.write_all(b"\n").map_err(|e| Error::io("<queries>", e))?;
    }
    Ok(())
}

pub fn read_queries<R: BufRead>(input: R, source: &str) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let q: Query = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { path: source.to_string(), line: i + 1, msg: e.to_string() })?;
        out.push(q);
    }
    Ok(out)
}

pub fn save_queries(queries: &[Query], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_queries(queries, &mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_queries(path: &Path) -> Result<Vec<Query>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_queries(BufReader::new(file), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Predicate;

    #[test]
    fn dataset_text_round_trip() {
        let ds = Dataset::new(vec![
            Column::numeric("x", vec![0.1, 1.0 / 3.0, -2.5e-7]),
            Column::categorical("c", vec![2, 0, 1]),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x:numeric,c:categorical\n"));
        let back = read_dataset(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn dataset_parse_errors_name_the_line() {
        let err = read_dataset("x:numeric\n1.0\nabc\n".as_bytes(), "d.csv").unwrap_err();
        assert_eq!(err.to_string(), "d.csv:3: bad number 'abc'");
        assert!(read_dataset("x:float\n".as_bytes(), "d.csv").is_err());
    }

    #[test]
    fn queries_round_trip() {
        let qs = vec![
            Query::new(0, vec![Predicate::between(0, 0.0, 0.5)]).with_template(1),
            Query::new(1, vec![]),
        ];
        let mut buf = Vec::new();
        write_queries(&qs, &mut buf).unwrap();
        assert_eq!(read_queries(buf.as_slice(), "mem").unwrap(), qs);
    }
}
