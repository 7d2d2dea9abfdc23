//! Population, case and design tables.
//!
//! Count tensors are stored geography-major: the cell `(i, g, j)` lives at
//! `(g * I + i) * J + j`, so all strata of one geography are contiguous.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis sizes of a stratum × geography × category table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub strata: usize,
    pub geos: usize,
    pub categories: usize,
}

impl Dims {
    pub fn new(strata: usize, geos: usize, categories: usize) -> Self {
        Self {
            strata,
            geos,
            categories,
        }
    }

    #[inline]
    pub fn cell(&self, i: usize, g: usize, j: usize) -> usize {
        (g * self.strata + i) * self.categories + j
    }

    #[inline]
    pub fn row(&self, i: usize, g: usize) -> usize {
        g * self.strata + i
    }

    pub fn n_cells(&self) -> usize {
        self.strata * self.geos * self.categories
    }

    pub fn n_rows(&self) -> usize {
        self.strata * self.geos
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub strata: Vec<String>,
    pub geos: Vec<String>,
    pub categories: Vec<String>,
}

impl Labels {
    /// Numbered placeholder labels, e.g. `s1..sI`.
    pub fn numbered(dims: Dims) -> Self {
        let mk = |p: &str, n: usize| (1..=n).map(|k| format!("{p}{k}")).collect();
        Self {
            strata: mk("s", dims.strata),
            geos: mk("g", dims.geos),
            categories: mk("c", dims.categories),
        }
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.strata.len(), self.geos.len(), self.categories.len())
    }
}

/// Known census counts `E[i, g, j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTable {
    dims: Dims,
    labels: Labels,
    counts: Vec<u64>,
}

impl PopulationTable {
    pub fn new(labels: Labels, counts: Vec<u64>) -> Result<Self> {
        let dims = labels.dims();
        if counts.len() != dims.n_cells() {
            return Err(Error::Dimension(format!(
                "population counts have {} entries, axes imply {}",
                counts.len(),
                dims.n_cells()
            )));
        }
        if dims.strata == 0 || dims.geos == 0 || dims.categories == 0 {
            return Err(Error::Dimension("population table has an empty axis".into()));
        }
        Ok(Self {
            dims,
            labels,
            counts,
        })
    }

    /// Single-geography table from an `I × J` row-major matrix.
    pub fn from_matrix(rows: &[Vec<u64>]) -> Result<Self> {
        let i = rows.len();
        let j = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != j) {
            return Err(Error::Dimension("ragged population matrix".into()));
        }
        let labels = Labels::numbered(Dims::new(i, 1, j));
        Self::new(labels, rows.iter().flatten().copied().collect())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    #[inline]
    pub fn get(&self, i: usize, g: usize, j: usize) -> u64 {
        self.counts[self.dims.cell(i, g, j)]
    }

    /// Population vector `e_ig` over categories.
    pub fn row(&self, i: usize, g: usize) -> &[u64] {
        let start = self.dims.cell(i, g, 0);
        &self.counts[start..start + self.dims.categories]
    }

    pub fn category_totals(&self) -> Vec<u64> {
        let d = self.dims;
        let mut out = vec![0u64; d.categories];
        for (k, c) in self.counts.iter().enumerate() {
            out[k % d.categories] += c;
        }
        out
    }

    /// `E` for geography `g` as an `I × J` real matrix.
    pub fn geo_matrix(&self, g: usize) -> DMatrix<f64> {
        let d = self.dims;
        DMatrix::from_fn(d.strata, d.categories, |i, j| self.get(i, g, j) as f64)
    }

    /// Requires a single geography; the simple model is defined on `I × J` tables.
    pub fn require_single_geo(&self) -> Result<()> {
        if self.dims.geos != 1 {
            return Err(Error::Dimension(format!(
                "operation needs a single geography, table has {}",
                self.dims.geos
            )));
        }
        Ok(())
    }

    /// Treat every (stratum, geography) pair as a stratum of one geography.
    pub fn flatten_geos(&self) -> Self {
        let d = self.dims;
        let mut strata = Vec::with_capacity(d.n_rows());
        for g in 0..d.geos {
            for i in 0..d.strata {
                strata.push(format!("{}@{}", self.labels.strata[i], self.labels.geos[g]));
            }
        }
        let labels = Labels {
            strata,
            geos: vec!["all".into()],
            categories: self.labels.categories.clone(),
        };
        // The storage order is already (g, i, j) so the buffer is reused as-is.
        Self {
            dims: labels.dims(),
            labels,
            counts: self.counts.clone(),
        }
    }

    /// Restrict to a subset of geographies and categories, in the given order.
    pub fn select(&self, geos: &[usize], categories: &[usize]) -> Result<Self> {
        let d = self.dims;
        if geos.iter().any(|&g| g >= d.geos) || categories.iter().any(|&j| j >= d.categories) {
            return Err(Error::Dimension("selection index out of range".into()));
        }
        let labels = Labels {
            strata: self.labels.strata.clone(),
            geos: geos.iter().map(|&g| self.labels.geos[g].clone()).collect(),
            categories: categories
                .iter()
                .map(|&j| self.labels.categories[j].clone())
                .collect(),
        };
        let mut counts = Vec::with_capacity(d.strata * geos.len() * categories.len());
        for &g in geos {
            for i in 0..d.strata {
                for &j in categories {
                    counts.push(self.get(i, g, j));
                }
            }
        }
        Self::new(labels, counts)
    }
}

/// Observed category counts `X[i, g, j]` and missing-category counts `M[i, g]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTable {
    dims: Dims,
    observed: Vec<u64>,
    missing: Vec<u64>,
}

impl CaseTable {
    pub fn new(dims: Dims, observed: Vec<u64>, missing: Vec<u64>) -> Result<Self> {
        if observed.len() != dims.n_cells() || missing.len() != dims.n_rows() {
            return Err(Error::Dimension(format!(
                "case table sizes ({}, {}) do not match axes ({}, {})",
                observed.len(),
                missing.len(),
                dims.n_cells(),
                dims.n_rows()
            )));
        }
        Ok(Self {
            dims,
            observed,
            missing,
        })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            observed: vec![0; dims.n_cells()],
            missing: vec![0; dims.n_rows()],
        }
    }

    /// Single-geography table from an `I × J` observed matrix and `I` missing counts.
    pub fn from_matrix(observed: &[Vec<u64>], missing: &[u64]) -> Result<Self> {
        let i = observed.len();
        let j = observed.first().map_or(0, Vec::len);
        if observed.iter().any(|r| r.len() != j) {
            return Err(Error::Dimension("ragged case matrix".into()));
        }
        Self::new(
            Dims::new(i, 1, j),
            observed.iter().flatten().copied().collect(),
            missing.to_vec(),
        )
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn observed(&self) -> &[u64] {
        &self.observed
    }

    pub fn missing(&self) -> &[u64] {
        &self.missing
    }

    #[inline]
    pub fn x(&self, i: usize, g: usize, j: usize) -> u64 {
        self.observed[self.dims.cell(i, g, j)]
    }

    #[inline]
    pub fn m(&self, i: usize, g: usize) -> u64 {
        self.missing[self.dims.row(i, g)]
    }

    pub fn x_row(&self, i: usize, g: usize) -> &[u64] {
        let start = self.dims.cell(i, g, 0);
        &self.observed[start..start + self.dims.categories]
    }

    pub fn set_x(&mut self, i: usize, g: usize, j: usize, v: u64) {
        let k = self.dims.cell(i, g, j);
        self.observed[k] = v;
    }

    pub fn set_m(&mut self, i: usize, g: usize, v: u64) {
        let k = self.dims.row(i, g);
        self.missing[k] = v;
    }

    pub fn total_observed(&self) -> u64 {
        self.observed.iter().sum()
    }

    pub fn total_missing(&self) -> u64 {
        self.missing.iter().sum()
    }

    /// Checks that the axes match a population table.
    pub fn conforms_to(&self, pop: &PopulationTable) -> Result<()> {
        if self.dims != pop.dims() {
            return Err(Error::Dimension(format!(
                "case axes {:?} do not conform to population axes {:?}",
                self.dims,
                pop.dims()
            )));
        }
        Ok(())
    }

    pub fn flatten_geos(&self) -> Self {
        let d = self.dims;
        Self {
            dims: Dims::new(d.n_rows(), 1, d.categories),
            observed: self.observed.clone(),
            missing: self.missing.clone(),
        }
    }

    /// Drop all missing counts (the complete-case view of the data).
    pub fn without_missing(&self) -> Self {
        Self {
            dims: self.dims,
            observed: self.observed.clone(),
            missing: vec![0; self.missing.len()],
        }
    }
}

/// Stratum covariates `Z` (`I × K`) and area covariates `W` (`G × D`).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub z: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub z_names: Vec<String>,
}

impl DesignMatrices {
    pub fn new(z: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        if z.iter().chain(w.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("design matrices must be finite".into()));
        }
        let z_names = (1..=z.ncols()).map(|k| format!("z{k}")).collect();
        Ok(Self { z, w, z_names })
    }

    /// Design with no stratum or area covariates.
    pub fn empty(strata: usize, geos: usize) -> Self {
        Self {
            z: DMatrix::zeros(strata, 0),
            w: DMatrix::zeros(geos, 0),
            z_names: Vec::new(),
        }
    }

    pub fn with_z(z: DMatrix<f64>, geos: usize) -> Result<Self> {
        Self::new(z, DMatrix::zeros(geos, 0))
    }

    pub fn n_strata(&self) -> usize {
        self.z.nrows()
    }

    pub fn k(&self) -> usize {
        self.z.ncols()
    }

    pub fn d(&self) -> usize {
        self.w.ncols()
    }

    /// `z_i · coef`.
    #[inline]
    pub fn zdot(&self, i: usize, coef: &[f64]) -> f64 {
        let mut s = 0.0;
        for (k, c) in coef.iter().enumerate() {
            s += self.z[(i, k)] * c;
        }
        s
    }

    pub fn conforms_to(&self, dims: Dims) -> Result<()> {
        if self.z.nrows() != dims.strata {
            return Err(Error::Dimension(format!(
                "Z has {} rows, table has {} strata",
                self.z.nrows(),
                dims.strata
            )));
        }
        if self.w.nrows() != dims.geos && self.w.ncols() > 0 {
            return Err(Error::Dimension(format!(
                "W has {} rows, table has {} geographies",
                self.w.nrows(),
                dims.geos
            )));
        }
        Ok(())
    }

    /// Sum-to-zero (effect) coding for labels of the form `SEX:AGE`.
    ///
    /// One column for sex and `levels - 1` columns for age; the last level of
    /// each factor is coded `-1` on every column of that factor. Returns `None`
    /// when any label lacks the `:` separator.
    pub fn sum_to_zero_sex_age(strata: &[String]) -> Option<Self> {
        let mut sexes: Vec<&str> = Vec::new();
        let mut ages: Vec<&str> = Vec::new();
        let mut parsed = Vec::with_capacity(strata.len());
        for s in strata {
            let (sex, age) = s.split_once(':')?;
            if !sexes.contains(&sex) {
                sexes.push(sex);
            }
            if !ages.contains(&age) {
                ages.push(age);
            }
            parsed.push((sex, age));
        }
        let sex_cols = sexes.len().saturating_sub(1);
        let age_cols = ages.len().saturating_sub(1);
        let k = sex_cols + age_cols;
        let mut z = DMatrix::zeros(strata.len(), k);
        let effect = |levels: &[&str], v: &str, col: usize| -> f64 {
            let idx = levels.iter().position(|l| *l == v).unwrap();
            if idx == levels.len() - 1 {
                -1.0
            } else if idx == col {
                1.0
            } else {
                0.0
            }
        };
        for (r, (sex, age)) in parsed.iter().enumerate() {
            for c in 0..sex_cols {
                z[(r, c)] = effect(&sexes, sex, c);
            }
            for c in 0..age_cols {
                z[(r, sex_cols + c)] = effect(&ages, age, c);
            }
        }
        let mut names: Vec<String> = (0..sex_cols).map(|c| format!("sex:{}", sexes[c])).collect();
        names.extend((0..age_cols).map(|c| format!("age:{}", ages[c])));
        Some(Self {
            z,
            w: DMatrix::zeros(0, 0),
            z_names: names,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_geo_major() {
        let labels = Labels::numbered(Dims::new(2, 3, 4));
        let counts: Vec<u64> = (0..24).collect();
        let pop = PopulationTable::new(labels, counts).unwrap();
        assert_eq!(pop.get(1, 2, 3), 23);
        assert_eq!(pop.row(0, 1), &[8, 9, 10, 11]);
        assert_eq!(pop.flatten_geos().get(5, 0, 3), 23);
    }

    #[test]
    fn select_reorders() {
        let labels = Labels::numbered(Dims::new(1, 2, 3));
        let pop = PopulationTable::new(labels, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let s = pop.select(&[1], &[2, 0]).unwrap();
        assert_eq!(s.counts(), &[6, 4]);
        assert_eq!(s.labels().categories, vec!["c3", "c1"]);
    }

    #[test]
    fn effect_coding_sums_to_zero() {
        let strata: Vec<String> = ["F", "M"]
            .iter()
            .flat_map(|s| ["a", "b", "c"].iter().map(move |a| format!("{s}:{a}")))
            .collect();
        let d = DesignMatrices::sum_to_zero_sex_age(&strata).unwrap();
        assert_eq!(d.k(), 3);
        for c in 0..d.k() {
            let col_sum: f64 = d.z.column(c).iter().sum();
            assert_eq!(col_sum, 0.0);
        }
        assert!(DesignMatrices::sum_to_zero_sex_age(&["x".to_string()]).is_none());
    }

    #[test]
    fn case_table_shape_errors() {
        assert!(CaseTable::new(Dims::new(2, 1, 2), vec![0; 4], vec![0; 3]).is_err());
        let pop = PopulationTable::from_matrix(&[vec![1, 2]]).unwrap();
        let cases = CaseTable::from_matrix(&[vec![0, 0, 0]], &[0]).unwrap();
        assert!(cases.conforms_to(&pop).is_err());
    }
}
