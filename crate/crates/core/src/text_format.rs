//! word2vec-style text vectors: a `count dim` header line, then one
//! `name v1 … v_d` line per row with 6 significant digits.

use std::io::{BufRead, Write};

use ndarray::Array2;

use crate::{Error, Result};

/// Row-labelled vectors, the in-memory form of a vectors file.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedVectors {
    pub names: Vec<String>,
    pub vectors: Array2<f64>,
}

impl NamedVectors {
    pub fn new(names: Vec<String>, vectors: Array2<f64>) -> Result<Self> {
        if names.len() != vectors.nrows() {
            return Err(Error::Shape(format!(
                "{} names for {} vectors",
                names.len(),
                vectors.nrows()
            )));
        }
        if let Some(bad) = names.iter().find(|n| n.is_empty() || n.contains(char::is_whitespace)) {
            return Err(Error::InvalidArgument(format!("vector name {bad:?} is empty or contains whitespace")));
        }
        Ok(NamedVectors { names, vectors })
    }

    /// Builds the matrix from equally long rows.
    pub fn from_rows(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Shape(format!("rows of length {dim} and {}", bad.len())));
        }
        let n = rows.len();
        let vectors = Array2::from_shape_vec((n, dim), rows.concat()).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(names, vectors)
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Formats like C's `%g`: 6 significant digits, trailing zeros removed,
/// exponent notation outside `[1e-4, 1e6)`.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_vectors<W: Write>(mut w: W, v: &NamedVectors) -> Result<()> {
    writeln!(w, "{} {}", v.len(), v.dim())?;
    for (name, row) in v.names.iter().zip(v.vectors.rows()) {
        w.write_all(name.as_bytes())?;
        for x in row {
            write!(w, " {}", format_g6(*x))?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_vectors<R: BufRead>(r: R) -> Result<NamedVectors> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("missing vectors header".into()))??;
    let mut parts = header.split_whitespace();
    let mut field = |what: &str| -> Result<usize> {
        parts
            .next()
            .ok_or_else(|| Error::Parse(format!("vectors header lacks {what}")))?
            .parse()
            .map_err(|e| Error::Parse(format!("vectors header {what}: {e}")))
    };
    let count = field("count")?;
    let dim = field("dim")?;
    let mut names = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let name = it.next().expect("non-empty line");
        let before = data.len();
        for tok in it {
            let x: f64 = tok
                .parse()
                .map_err(|e| Error::Parse(format!("vectors line {}: {e}", i + 2)))?;
            data.push(x);
        }
        if data.len() - before != dim {
            return Err(Error::Parse(format!(
                "vectors line {}: expected {dim} values, found {}",
                i + 2,
                data.len() - before
            )));
        }
        names.push(name.to_string());
    }
    if names.len() != count {
        return Err(Error::Parse(format!("header announces {count} vectors, file has {}", names.len())));
    }
    let vectors = Array2::from_shape_vec((count, dim), data).map_err(|e| Error::Shape(e.to_string()))?;
    NamedVectors::new(names, vectors)
}
