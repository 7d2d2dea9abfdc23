//! Reading and writing tables, design matrices and posterior draws.
//!
//! Count tables are long-format CSV with columns `stratum,geo,category,count`
//! in any order. Labels take the order of their first appearance. In case
//! files the category token [`MISSING_TOKEN`] marks cases whose category is
//! unknown.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::inference::PosteriorDraws;
use crate::tables::{CaseTable, DesignMatrices, Labels, PopulationTable};

pub const MISSING_TOKEN: &str = "__MISSING__";
const TABLE_COLUMNS: [&str; 4] = ["stratum", "geo", "category", "count"];
const DRAWS_MAGIC: &[u8; 8] = b"MRDRAWS1";

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

/// Column positions of `stratum,geo,category,count`; rejects unknown,
/// repeated or absent columns.
fn table_columns(headers: &csv::StringRecord) -> Result<[usize; 4]> {
    let mut pos = [usize::MAX; 4];
    for (c, h) in headers.iter().enumerate() {
        let k = TABLE_COLUMNS
            .iter()
            .position(|n| *n == h)
            .ok_or_else(|| parse_err(1, format!("unknown column `{h}`")))?;
        if pos[k] != usize::MAX {
            return Err(parse_err(1, format!("repeated column `{h}`")));
        }
        pos[k] = c;
    }
    if let Some(k) = pos.iter().position(|p| *p == usize::MAX) {
        return Err(parse_err(1, format!("missing column `{}`", TABLE_COLUMNS[k])));
    }
    Ok(pos)
}

struct LongRow {
    line: usize,
    stratum: String,
    geo: String,
    category: String,
    count: u64,
}

fn read_long<R: Read>(r: R) -> Result<Vec<LongRow>> {
    let mut rdr = reader(r);
    let cols = table_columns(rdr.headers()?)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let field = |k: usize| rec.get(cols[k]).unwrap_or("").to_string();
        let raw = field(3);
        let count = raw
            .parse::<u64>()
            .map_err(|_| parse_err(line, format!("count `{raw}` is not a nonnegative integer")))?;
        rows.push(LongRow {
            line,
            stratum: field(0),
            geo: field(1),
            category: field(2),
            count,
        });
    }
    Ok(rows)
}

fn intern(labels: &mut Vec<String>, index: &mut HashMap<String, usize>, v: &str) -> usize {
    if let Some(&k) = index.get(v) {
        return k;
    }
    labels.push(v.to_string());
    index.insert(v.to_string(), labels.len() - 1);
    labels.len() - 1
}

pub fn read_population<R: Read>(r: R) -> Result<PopulationTable> {
    let rows = read_long(r)?;
    if rows.is_empty() {
        return Err(parse_err(1, "population file has no data rows"));
    }
    let (mut s, mut g, mut c) = (Vec::new(), Vec::new(), Vec::new());
    let (mut si, mut gi, mut ci) = (HashMap::new(), HashMap::new(), HashMap::new());
    let mut keys = Vec::with_capacity(rows.len());
    for row in &rows {
        if row.category == MISSING_TOKEN {
            return Err(parse_err(row.line, "population rows cannot use the missing-category token"));
        }
        keys.push((
            intern(&mut s, &mut si, &row.stratum),
            intern(&mut g, &mut gi, &row.geo),
            intern(&mut c, &mut ci, &row.category),
        ));
    }
    let labels = Labels {
        strata: s,
        geos: g,
        categories: c,
    };
    let dims = labels.dims();
    let mut counts = vec![0u64; dims.n_cells()];
    let mut seen = vec![false; dims.n_cells()];
    for (row, &(i, g, j)) in rows.iter().zip(&keys) {
        let k = dims.cell(i, g, j);
        if seen[k] {
            return Err(parse_err(
                row.line,
                format!("duplicate cell ({}, {}, {})", row.stratum, row.geo, row.category),
            ));
        }
        seen[k] = true;
        counts[k] = row.count;
    }
    PopulationTable::new(labels, counts)
}

pub fn load_population_csv(path: impl AsRef<Path>) -> Result<PopulationTable> {
    read_population(BufReader::new(File::open(path)?))
}

/// Cases conforming to `pop`; labels must already exist in the population.
pub fn read_cases<R: Read>(r: R, pop: &PopulationTable) -> Result<CaseTable> {
    let labels = pop.labels();
    let lookup = |v: &[String]| -> HashMap<String, usize> {
        v.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect()
    };
    let (si, gi, ci) = (
        lookup(&labels.strata),
        lookup(&labels.geos),
        lookup(&labels.categories),
    );
    let dims = pop.dims();
    let mut cases = CaseTable::zeros(dims);
    let mut seen_x = vec![false; dims.n_cells()];
    let mut seen_m = vec![false; dims.n_rows()];
    for row in read_long(r)? {
        let unknown = |axis: &str, v: &str| {
            parse_err(row.line, format!("{axis} `{v}` is not in the population table"))
        };
        let i = *si.get(&row.stratum).ok_or_else(|| unknown("stratum", &row.stratum))?;
        let g = *gi.get(&row.geo).ok_or_else(|| unknown("geo", &row.geo))?;
        let dup = || parse_err(row.line, format!("duplicate cell ({}, {}, {})", row.stratum, row.geo, row.category));
        if row.category == MISSING_TOKEN {
            let k = dims.row(i, g);
            if std::mem::replace(&mut seen_m[k], true) {
                return Err(dup());
            }
            cases.set_m(i, g, row.count);
        } else {
            let j = *ci.get(&row.category).ok_or_else(|| unknown("category", &row.category))?;
            let k = dims.cell(i, g, j);
            if std::mem::replace(&mut seen_x[k], true) {
                return Err(dup());
            }
            cases.set_x(i, g, j, row.count);
        }
    }
    Ok(cases)
}

pub fn load_cases_csv(path: impl AsRef<Path>, pop: &PopulationTable) -> Result<CaseTable> {
    read_cases(BufReader::new(File::open(path)?), pop)
}

pub fn write_population<W: Write>(w: W, pop: &PopulationTable) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(TABLE_COLUMNS)?;
    let l = pop.labels();
    let d = pop.dims();
    for g in 0..d.geos {
        for i in 0..d.strata {
            for j in 0..d.categories {
                wtr.write_record([
                    l.strata[i].as_str(),
                    l.geos[g].as_str(),
                    l.categories[j].as_str(),
                    &pop.get(i, g, j).to_string(),
                ])?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Writes every cell, zeros included, so a round trip is exact.
pub fn write_cases<W: Write>(w: W, cases: &CaseTable, pop: &PopulationTable) -> Result<()> {
    cases.conforms_to(pop)?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(TABLE_COLUMNS)?;
    let l = pop.labels();
    let d = pop.dims();
    for g in 0..d.geos {
        for i in 0..d.strata {
            for j in 0..d.categories {
                wtr.write_record([
                    l.strata[i].as_str(),
                    l.geos[g].as_str(),
                    l.categories[j].as_str(),
                    &cases.x(i, g, j).to_string(),
                ])?;
            }
            wtr.write_record([
                l.strata[i].as_str(),
                l.geos[g].as_str(),
                MISSING_TOKEN,
                &cases.m(i, g).to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_population_csv(path: impl AsRef<Path>, pop: &PopulationTable) -> Result<()> {
    write_population(BufWriter::new(File::create(path)?), pop)
}

pub fn save_cases_csv(path: impl AsRef<Path>, cases: &CaseTable, pop: &PopulationTable) -> Result<()> {
    write_cases(BufWriter::new(File::create(path)?), cases, pop)
}

/// A wide covariate file keyed by `key_column`: one row per label of `keys`,
/// every other column a real covariate.
fn read_covariates<R: Read>(r: R, key_column: &str, keys: &[String]) -> Result<(DMatrix<f64>, Vec<String>)> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some(key_column) {
        return Err(parse_err(1, format!("first column must be `{key_column}`")));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let index: HashMap<&str, usize> = keys.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let mut m = DMatrix::zeros(keys.len(), names.len());
    let mut seen = vec![false; keys.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let key = rec.get(0).unwrap_or("");
        let r = *index
            .get(key)
            .ok_or_else(|| parse_err(line, format!("{key_column} `{key}` is not in the population table")))?;
        if std::mem::replace(&mut seen[r], true) {
            return Err(parse_err(line, format!("duplicate {key_column} `{key}`")));
        }
        if rec.len() != names.len() + 1 {
            return Err(parse_err(line, "wrong number of fields"));
        }
        for (c, v) in rec.iter().skip(1).enumerate() {
            let x: f64 = v
                .parse()
                .map_err(|_| parse_err(line, format!("`{v}` is not a number")))?;
            if !x.is_finite() {
                return Err(parse_err(line, "covariates must be finite"));
            }
            m[(r, c)] = x;
        }
    }
    if let Some(r) = seen.iter().position(|s| !s) {
        return Err(parse_err(0, format!("no row for {key_column} `{}`", keys[r])));
    }
    Ok((m, names))
}

/// Stratum covariates from `stratum,<name>...`; optional area covariates
/// from `geo,<name>...`.
pub fn read_design<R: Read, S: Read>(z: R, w: Option<S>, pop: &PopulationTable) -> Result<DesignMatrices> {
    let labels = pop.labels();
    let (zm, names) = read_covariates(z, "stratum", &labels.strata)?;
    let wm = match w {
        Some(w) => read_covariates(w, "geo", &labels.geos)?.0,
        None => DMatrix::zeros(labels.geos.len(), 0),
    };
    let mut d = DesignMatrices::new(zm, wm)?;
    d.z_names = names;
    Ok(d)
}

pub fn load_design_csv(z: impl AsRef<Path>, w: Option<&Path>, pop: &PopulationTable) -> Result<DesignMatrices> {
    let zf = BufReader::new(File::open(z)?);
    let wf = w.map(File::open).transpose()?.map(BufReader::new);
    read_design(zf, wf, pop)
}

pub fn write_design<W: Write>(w: W, design: &DesignMatrices, pop: &PopulationTable) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["stratum".to_string()];
    header.extend(design.z_names.iter().cloned());
    wtr.write_record(&header)?;
    for (i, s) in pop.labels().strata.iter().enumerate() {
        let mut rec = vec![s.clone()];
        rec.extend((0..design.k()).map(|c| design.z[(i, c)].to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// One row per draw: `chain,iter,<parameters>`; chain and iteration are 1-based.
pub fn write_draws_csv<W: Write>(w: W, draws: &PosteriorDraws) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["chain".to_string(), "iter".to_string()];
    header.extend(draws.names.iter().cloned());
    wtr.write_record(&header)?;
    let mut rec = Vec::with_capacity(header.len());
    for c in 0..draws.chains {
        for t in 0..draws.iters {
            rec.clear();
            rec.push((c + 1).to_string());
            rec.push((t + 1).to_string());
            rec.extend(draws.draw(c * draws.iters + t).iter().map(|v| format!("{v:e}")));
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads draws written by [`write_draws_csv`]; rows must be chain-major.
pub fn read_draws_csv<R: Read>(r: R) -> Result<PosteriorDraws> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("chain") || headers.get(1) != Some("iter") {
        return Err(parse_err(1, "draws header must start with `chain,iter`"));
    }
    let names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    let mut values = Vec::new();
    let mut chain_len: Vec<usize> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let int = |k: usize| -> Result<usize> {
            rec.get(k)
                .and_then(|v| v.parse().ok())
                .filter(|v| *v >= 1)
                .ok_or_else(|| parse_err(line, "chain and iter must be positive integers"))
        };
        let (c, t) = (int(0)?, int(1)?);
        if c == chain_len.len() + 1 {
            chain_len.push(0);
        }
        if c != chain_len.len() || t != chain_len[c - 1] + 1 {
            return Err(parse_err(line, "draws must be ordered by chain then iteration"));
        }
        chain_len[c - 1] += 1;
        if rec.len() != names.len() + 2 {
            return Err(parse_err(line, "wrong number of fields"));
        }
        for v in rec.iter().skip(2) {
            values.push(
                v.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("`{v}` is not a number")))?,
            );
        }
    }
    let iters = chain_len.first().copied().unwrap_or(0);
    if chain_len.iter().any(|n| *n != iters) {
        return Err(parse_err(0, "chains have unequal lengths"));
    }
    PosteriorDraws::from_values(names, chain_len.len(), iters, values)
}

/// Compact binary layout, all integers little-endian:
/// magic `MRDRAWS1`, `u64` chains, iters, params; per name a `u32` byte
/// length and UTF-8 bytes; `chains * iters * params` `f64` values in
/// chain-major order; one byte per draw for the divergence flag.
pub fn write_draws_binary<W: Write>(mut w: W, draws: &PosteriorDraws) -> Result<()> {
    w.write_all(DRAWS_MAGIC)?;
    for n in [draws.chains, draws.iters, draws.n_params()] {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for name in &draws.names {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    for v in &draws.values {
        w.write_all(&v.to_le_bytes())?;
    }
    let flags: Vec<u8> = draws.divergent.iter().map(|d| u8::from(*d)).collect();
    w.write_all(&flags)?;
    w.flush()?;
    Ok(())
}

pub fn read_draws_binary<R: Read>(mut r: R) -> Result<PosteriorDraws> {
    let bad = |msg: &str| parse_err(0, format!("binary draws: {msg}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DRAWS_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut u64buf = [0u8; 8];
    let mut next_u64 = |r: &mut R| -> Result<usize> {
        r.read_exact(&mut u64buf)?;
        Ok(u64::from_le_bytes(u64buf) as usize)
    };
    let chains = next_u64(&mut r)?;
    let iters = next_u64(&mut r)?;
    let params = next_u64(&mut r)?;
    let n = chains
        .checked_mul(iters)
        .and_then(|n| n.checked_mul(params))
        .ok_or_else(|| bad("size overflow"))?;
    let mut names = Vec::with_capacity(params.min(1 << 20));
    for _ in 0..params {
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut buf = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut buf)?;
        names.push(String::from_utf8(buf).map_err(|_| bad("name is not UTF-8"))?);
    }
    let mut values = Vec::with_capacity(n.min(1 << 24));
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        values.push(f64::from_le_bytes(b));
    }
    let mut flags = vec![0u8; chains * iters];
    r.read_exact(&mut flags)?;
    let mut draws = PosteriorDraws::from_values(names, chains, iters, values)?;
    draws.divergent = flags.iter().map(|f| *f != 0).collect();
    Ok(draws)
}

pub fn save_draws(path: impl AsRef<Path>, draws: &PosteriorDraws) -> Result<()> {
    let path = path.as_ref();
    let w = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e == "csv") {
        write_draws_csv(w, draws)
    } else {
        write_draws_binary(w, draws)
    }
}

pub fn load_draws(path: impl AsRef<Path>) -> Result<PosteriorDraws> {
    let path = path.as_ref();
    let r = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "csv") {
        read_draws_csv(r)
    } else {
        read_draws_binary(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_population() {
        let pop = read_population("stratum,geo,category,count\na,g,c,5\n".as_bytes()).unwrap();
        assert_eq!(pop.counts(), &[5]);
    }

    #[test]
    fn columns_in_any_order_and_implicit_zeros() {
        let csv = "count,category,geo,stratum\n3,b,g1,s1\n4,a,g2,s2\n";
        let pop = read_population(csv.as_bytes()).unwrap();
        assert_eq!(pop.labels().categories, vec!["b", "a"]);
        assert_eq!(pop.get(0, 0, 0), 3);
        assert_eq!(pop.get(1, 1, 1), 4);
        assert_eq!(pop.get(0, 1, 0), 0);
    }

    #[test]
    fn bad_rows_report_their_line() {
        let dup = "stratum,geo,category,count\na,g,c,5\na,g,d,1\na,g,c,2\n";
        match read_population(dup.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let neg = "stratum,geo,category,count\na,g,c,-5\n";
        assert!(matches!(read_population(neg.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let col = "stratum,geo,category,count,extra\na,g,c,5,1\n";
        assert!(matches!(read_population(col.as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn cases_reject_unknown_category() {
        let pop = read_population("stratum,geo,category,count\na,g,c,5\n".as_bytes()).unwrap();
        let ok = read_cases("stratum,geo,category,count\na,g,c,2\na,g,__MISSING__,1\n".as_bytes(), &pop).unwrap();
        assert_eq!((ok.x(0, 0, 0), ok.m(0, 0)), (2, 1));
        let bad = "stratum,geo,category,count\na,g,z,2\n";
        assert!(matches!(read_cases(bad.as_bytes(), &pop), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn binary_draws_roundtrip() {
        let mut d = PosteriorDraws::from_values(
            vec!["a".into(), "b[1]".into()],
            2,
            3,
            (0..12).map(|v| v as f64 * 0.1 - 0.3).collect(),
        )
        .unwrap();
        d.divergent[4] = true;
        let mut buf = Vec::new();
        write_draws_binary(&mut buf, &d).unwrap();
        let back = read_draws_binary(buf.as_slice()).unwrap();
        assert_eq!(back.values, d.values);
        assert_eq!(back.names, d.names);
        assert_eq!(back.divergent, d.divergent);
        let mut csv = Vec::new();
        write_draws_csv(&mut csv, &d).unwrap();
        let back = read_draws_csv(csv.as_slice()).unwrap();
        assert_eq!(back.values, d.values);
    }
}
