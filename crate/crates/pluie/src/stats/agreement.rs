//! Agreement statistics over predicted-versus-human contingency tables.

use serde::{Deserialize, Serialize};

use super::Stat;
use crate::error::{Error, Result};

/// Counts over predicted category (rows) by human category (columns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    /// Builds a table from a rectangular, non-empty count matrix.
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.is_empty() || counts[0].is_empty() {
            return Err(Error::EmptyInput("contingency counts"));
        }
        let width = counts[0].len();
        if counts.iter().any(|row| row.len() != width) {
            return Err(Error::Data("ragged contingency matrix".into()));
        }
        Ok(ContingencyTable { counts })
    }

    /// Tallies (predicted, human) pairs into a square table over the union
    /// of observed categories, in sorted order.
    pub fn from_pairs<T: Ord + Copy>(pairs: &[(T, T)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("category pairs"));
        }
        let mut categories: Vec<T> = pairs.iter().flat_map(|&(p, h)| [p, h]).collect();
        categories.sort();
        categories.dedup();
        let index = |t: T| categories.binary_search(&t).expect("category present");
        let mut counts = vec![vec![0u64; categories.len()]; categories.len()];
        for &(predicted, human) in pairs {
            counts[index(predicted)][index(human)] += 1;
        }
        Ok(ContingencyTable { counts })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.counts[0].len()];
        for row in &self.counts {
            for (s, &c) in sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        sums
    }
}

/// Cohen's κ: (p_o − p_e)/(1 − p_e) with marginal-product expected
/// agreement. Not applicable when either rater uses a single category;
/// agreement beyond chance is meaningless against a constant rater, and
/// reports keep that distinct from κ = 0.
pub fn cohens_kappa(table: &ContingencyTable) -> Result<Stat> {
    let n = table.total();
    if n == 0 {
        return Err(Error::EmptyInput("contingency table"));
    }
    let counts = table.counts();
    if counts.len() != counts[0].len() {
        return Err(Error::Data("kappa needs a square table".into()));
    }
    let rows = table.row_sums();
    let cols = table.col_sums();
    if used(&rows) < 2 || used(&cols) < 2 {
        return Ok(Stat::NotApplicable);
    }
    let n = n as f64;
    let observed: u64 = (0..counts.len()).map(|i| counts[i][i]).sum();
    let p_o = observed as f64 / n;
    let p_e: f64 = rows
        .iter()
        .zip(&cols)
        .map(|(&r, &c)| (r as f64 / n) * (c as f64 / n))
        .sum();
    if 1.0 - p_e == 0.0 {
        return Ok(Stat::NotApplicable);
    }
    Ok(Stat::Value((p_o - p_e) / (1.0 - p_e)))
}

/// Cramér's V: sqrt(χ²/(N·(min(r,c) − 1))) where r and c count categories
/// with non-zero marginals. Not applicable when either rater is constant
/// (min(r,c) = 1), the way a flat metric shows up in agreement tables.
pub fn cramers_v(table: &ContingencyTable) -> Result<Stat> {
    let n = table.total();
    if n == 0 {
        return Err(Error::EmptyInput("contingency table"));
    }
    let rows = table.row_sums();
    let cols = table.col_sums();
    let (r, c) = (used(&rows), used(&cols));
    if r.min(c) < 2 {
        return Ok(Stat::NotApplicable);
    }
    let n = n as f64;
    let mut chi_squared = 0.0;
    for (i, row) in table.counts().iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if rows[i] == 0 || cols[j] == 0 {
                continue;
            }
            let expected = rows[i] as f64 * cols[j] as f64 / n;
            let delta = count as f64 - expected;
            chi_squared += delta * delta / expected;
        }
    }
    let v = (chi_squared / (n * (r.min(c) - 1) as f64)).sqrt();
    Ok(Stat::Value(v.min(1.0)))
}

fn used(marginals: &[u64]) -> usize {
    marginals.iter().filter(|&&m| m > 0).count()
}
