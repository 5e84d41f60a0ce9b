//! Plain CSV dumps at full precision (17 significant digits).

use super::Matrix;
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header `dim,<n>,provenance,<tag>`, then one row per line.
pub fn write_matrix_csv<W: Write>(mut out: W, m: &Matrix, provenance: &str) -> Result<()> {
    writeln!(out, "dim,{},provenance,{}", m.rows(), provenance)?;
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| fmt17(*v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Parses what [`write_matrix_csv`] writes; returns the matrix and provenance tag.
pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<(Matrix, String)> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Io("empty matrix csv".into()))??;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() < 4 || fields[0] != "dim" || fields[2] != "provenance" {
        return Err(Error::Io(format!("bad matrix csv header: {header}")));
    }
    let dim: usize = fields[1].parse().map_err(|_| Error::Io(format!("bad dim: {}", fields[1])))?;
    let provenance = fields[3..].join(",");
    let mut data = Vec::with_capacity(dim * dim);
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        for f in line.split(',') {
            data.push(f.trim().parse::<f64>().map_err(|_| Error::Io(format!("bad value: {f}")))?);
        }
    }
    Ok((Matrix::from_row_major(dim, dim, data)?, provenance))
}

/// `index,value` rows with a header.
pub fn write_sequence_csv<W: Write>(
    mut out: W,
    values: impl IntoIterator<Item = (i64, f64)>,
) -> Result<()> {
    writeln!(out, "index,value")?;
    for (i, v) in values {
        writeln!(out, "{i},{}", fmt17(v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matrix_csv_is_lossless(n in 1usize..6, vals in proptest::collection::vec(-1e6f64..1e6, 36)) {
            let m = Matrix::from_fn(n, n, |i, j| vals[i * 6 + j] / 3.0);
            let mut buf = Vec::new();
            write_matrix_csv(&mut buf, &m, "bessel,theta=1").unwrap();
            let (back, tag) = read_matrix_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, m);
            prop_assert_eq!(tag, "bessel,theta=1");
        }
    }

    #[test]
    fn sequence_csv_format() {
        let mut buf = Vec::new();
        write_sequence_csv(&mut buf, [(0, 1.0), (-1, 0.5)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "index,value\n0,1.0000000000000000e0\n-1,5.0000000000000000e-1\n");
    }
}
