//! Matrix Market coordinate format (`real`, `general` or `symmetric`).

use std::io::{BufRead, Write};

use super::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

/// Writes `m` with 17 significant digits so values round-trip exactly.
///
/// With [`Symmetry::Symmetric`] only the lower triangle is written; the caller
/// is responsible for `m` actually being symmetric.
pub fn write_matrix_market<W: Write>(mut w: W, m: &CsrMatrix, sym: Symmetry) -> Result<()> {
    use crate::linop::LinearOperator;
    let kind = match sym {
        Symmetry::General => "general",
        Symmetry::Symmetric => "symmetric",
    };
    let entries: Vec<_> = m
        .triplets()
        .into_iter()
        .filter(|(i, j, _)| sym == Symmetry::General || j <= i)
        .collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(r: R) -> Result<(CsrMatrix, Symmetry)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty Matrix Market file".into()))??;
    let h: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(Error::Parse(format!("bad header: {header}")));
    }
    if h[2] != "coordinate" || h[3] != "real" {
        return Err(Error::Parse(format!("unsupported format {} {}", h[2], h[3])));
    }
    let sym = match h[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::Parse(format!("unsupported symmetry {other}"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        let bad = || Error::Parse(format!("bad line: {t}"));
        match size {
            None => {
                if f.len() != 3 {
                    return Err(bad());
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| bad());
                size = Some((p(f[0])?, p(f[1])?, p(f[2])?));
                trip.reserve(p(f[2])?);
            }
            Some((nr, nc, _)) => {
                if f.len() != 3 {
                    return Err(bad());
                }
                let i: usize = f[0].parse().map_err(|_| bad())?;
                let j: usize = f[1].parse().map_err(|_| bad())?;
                let v: f64 = f[2].parse().map_err(|_| bad())?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(bad());
                }
                trip.push((i - 1, j - 1, v));
                if sym == Symmetry::Symmetric && i != j {
                    trip.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let stored = match sym {
        Symmetry::General => trip.len(),
        Symmetry::Symmetric => trip.iter().filter(|(i, j, _)| j <= i).count(),
    };
    if stored != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {stored}")));
    }
    Ok((CsrMatrix::from_triplets(nr, nc, &trip), sym))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn general_round_trip_is_bit_identical(
            entries in proptest::collection::vec((0usize..6, 0usize..9, any::<f64>().prop_filter("finite", |v| v.is_finite())), 0..40)
        ) {
            let m = CsrMatrix::from_triplets(6, 9, &entries);
            let mut buf = Vec::new();
            write_matrix_market(&mut buf, &m, Symmetry::General).unwrap();
            let (back, sym) = read_matrix_market(&buf[..]).unwrap();
            prop_assert_eq!(sym, Symmetry::General);
            let a: Vec<_> = m.triplets().into_iter().map(|(i, j, v)| (i, j, v.to_bits())).collect();
            let b: Vec<_> = back.triplets().into_iter().map(|(i, j, v)| (i, j, v.to_bits())).collect();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn symmetric_round_trip() {
        let m = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (1, 0, 0.1 + 0.2), (0, 1, 0.1 + 0.2), (2, 2, -1.0 / 3.0)],
        );
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &m, Symmetry::Symmetric).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n"));
        let (back, _) = read_matrix_market(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_out_of_range_entry() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(read_matrix_market(text.as_bytes()).is_err());
    }
}
