use std::io::{self, BufRead, Write};

use crate::embed::EmbeddingTable;
use crate::error::ParseError;

/// Writes a header line `vocab_size<TAB>dim`, then one `token<TAB>v1...`
/// row per token in table order.
pub fn write_embeddings(table: &EmbeddingTable, mut sink: impl Write) -> io::Result<()> {
    writeln!(sink, "{}\t{}", table.len(), table.dim())?;
    for (token, vector) in table.iter() {
        sink.write_all(token.as_bytes())?;
        for v in vector {
            write!(sink, "\t{v}")?;
        }
        sink.write_all(b"\n")?;
    }
    sink.flush()
}

pub fn read_embeddings(source: impl BufRead) -> Result<EmbeddingTable, ParseError> {
    let table_err = |line: usize, message: String| ParseError::Table { line, message };
    let mut lines = source.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| table_err(1, e.to_string()))?,
        None => return Err(table_err(1, "missing header".into())),
    };
    let (size, dim) = header
        .split_once('\t')
        .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
        .ok_or_else(|| table_err(1, format!("bad header {header:?}")))?;
    let mut table = EmbeddingTable::new(dim);
    for (i, line) in lines {
        let line = line.map_err(|e| table_err(i + 1, e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let token = fields.next().unwrap_or_default().to_owned();
        let values = fields
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| table_err(i + 1, e.to_string()))?;
        if values.len() != dim {
            return Err(table_err(i + 1, format!("expected {dim} values, found {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(table_err(i + 1, "non-finite value".into()));
        }
        if !table.insert(token.clone(), &values) {
            return Err(table_err(i + 1, format!("duplicate token {token:?}")));
        }
    }
    if table.len() != size {
        return Err(table_err(1, format!("header declares {size} rows, found {}", table.len())));
    }
    Ok(table)
}
