//! Problem directories: `meta.txt` with `key = value` lines, one Matrix
//! Market file per assembled matrix and one little-endian f64 file per vector.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{generate, GeneratedProblem, ProblemSpec};
use crate::error::{Error, Result};
use crate::linop::mtx::write_matrix_market;

pub const META_FILE: &str = "meta.txt";

pub fn write_f64_bin(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_f64_bin(path: &Path, len: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * len {
        return Err(Error::Parse(format!("{}: expected {} values, found {} bytes", path.display(), len, bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
pub fn read_meta<R: BufRead>(r: R) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse(format!("expected key = value: {t}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn write_problem_dir(dir: &Path, g: &GeneratedProblem) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut meta = BufWriter::new(File::create(dir.join(META_FILE))?);
    for (k, v) in g.spec.to_meta() {
        writeln!(meta, "{k} = {v}")?;
    }
    writeln!(meta, "seed = {}", g.seed)?;
    writeln!(meta, "n_vars = {}", g.problem.n())?;
    writeln!(meta, "m_eq = {}", g.problem.m())?;
    for (name, m, sym) in &g.matrices {
        let file = format!("{name}.mtx");
        write_matrix_market(BufWriter::new(File::create(dir.join(&file))?), m, *sym)?;
        writeln!(meta, "matrix.{name} = {file}")?;
    }
    for (name, v) in &g.vectors {
        let file = format!("{name}.bin");
        write_f64_bin(&dir.join(&file), v)?;
        writeln!(meta, "vector.{name} = {file}")?;
        writeln!(meta, "vector.{name}.len = {}", v.len())?;
    }
    meta.flush()?;
    Ok(())
}

/// Regenerates the problem from the parameters in `meta.txt` and checks that
/// every stored vector matches the regenerated one bit for bit.
pub fn load_problem_dir(dir: &Path) -> Result<GeneratedProblem> {
    let meta = read_meta(BufReader::new(File::open(dir.join(META_FILE))?))?;
    let spec = ProblemSpec::from_meta(&meta)?;
    let seed: u64 = meta
        .get("seed")
        .ok_or_else(|| Error::Parse("meta has no seed".into()))?
        .parse()
        .map_err(|_| Error::Parse("bad seed".into()))?;
    let g = generate(&spec, seed)?;
    for (name, v) in &g.vectors {
        let Some(file) = meta.get(&format!("vector.{name}")) else { continue };
        let stored = read_f64_bin(&dir.join(file), v.len())?;
        if stored.iter().zip(v).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Err(Error::Parse(format!("stored vector {name} differs from the regenerated problem")));
        }
    }
    Ok(g)
}
