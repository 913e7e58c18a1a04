//! Directed unweighted networks over a labelled country set.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};
use crate::ingest::Country;

/// Rule used to derive a binary network from an asset slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// Edge i→j when s_ij exceeds the mean of row i over the other n−1 entries.
    AboveAverageExposure,
    /// Edge i→j when s_ij / gdp_i exceeds `t`.
    GdpNormalized { t: f64 },
}

impl ThresholdRule {
    pub fn gdp_normalized(t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::invalid(format!("threshold t must be positive, got {t}")));
        }
        Ok(Self::GdpNormalized { t })
    }

    /// Short tag used in tables (`A` or `B`).
    pub fn tag(&self) -> &'static str {
        match self {
            Self::AboveAverageExposure => "A",
            Self::GdpNormalized { .. } => "B",
        }
    }
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AboveAverageExposure => f.write_str("A"),
            Self::GdpNormalized { t } => write!(f, "B(t={t})"),
        }
    }
}

/// Directed graph without self-loops, stored as dense bitset rows for both
/// directions.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryNetwork {
    countries: Vec<Country>,
    pub rule: Option<ThresholdRule>,
    pub source_year: Option<i32>,
    words: usize,
    out_rows: Vec<u64>,
    in_rows: Vec<u64>,
}

impl BinaryNetwork {
    pub fn empty(countries: Vec<Country>) -> Self {
        let n = countries.len();
        let words = bits::words_for(n);
        Self {
            countries,
            rule: None,
            source_year: None,
            words,
            out_rows: vec![0; n * words],
            in_rows: vec![0; n * words],
        }
    }

    /// Network on `n` nodes labelled `v000`, `v001`, ...
    pub fn unlabeled(n: usize) -> Self {
        Self::empty((0..n).map(|i| Country(format!("v{i:03}"))).collect())
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut net = Self::unlabeled(n);
        for (i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::invalid(format!("invalid edge {i}->{j} for n={n}")));
            }
            net.add_edge(i, j);
        }
        Ok(net)
    }

    pub fn from_adjacency(adj: &[Vec<bool>]) -> Result<Self> {
        let n = adj.len();
        let edges = adj
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().filter(|(_, &e)| e).map(move |(j, _)| (i, j)))
            .collect::<Vec<_>>();
        if adj.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("adjacency matrix is not square"));
        }
        Self::from_edges(n, edges)
    }

    pub fn with_labels(mut self, countries: Vec<Country>) -> Result<Self> {
        if countries.len() != self.n() {
            return Err(Error::CountryMismatch);
        }
        self.countries = countries;
        Ok(self)
    }

    /// Copy of the metadata (labels, rule, year) with no edges.
    pub fn cleared(&self) -> Self {
        let mut net = Self::empty(self.countries.clone());
        net.rule = self.rule;
        net.source_year = self.source_year;
        net
    }

    pub fn n(&self) -> usize {
        self.countries.len()
    }

    pub fn countries(&self) -> &[Country] {
        &self.countries
    }

    pub(crate) fn words(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        bits::test(self.out_row(i), j)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        debug_assert!(i != j, "self-loops are not allowed");
        let w = self.words;
        bits::set(&mut self.out_rows[i * w..(i + 1) * w], j);
        bits::set(&mut self.in_rows[j * w..(j + 1) * w], i);
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        let w = self.words;
        bits::clear(&mut self.out_rows[i * w..(i + 1) * w], j);
        bits::clear(&mut self.in_rows[j * w..(j + 1) * w], i);
    }

    /// Bitset of out-neighbours of `i`.
    #[inline]
    pub fn out_row(&self, i: usize) -> &[u64] {
        &self.out_rows[i * self.words..(i + 1) * self.words]
    }

    /// Bitset of in-neighbours of `i`.
    #[inline]
    pub fn in_row(&self, i: usize) -> &[u64] {
        &self.in_rows[i * self.words..(i + 1) * self.words]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        bits::count(self.out_row(i))
    }

    pub fn in_degree(&self, i: usize) -> usize {
        bits::count(self.in_row(i))
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.out_degree(i)).collect()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.in_degree(i)).collect()
    }

    pub fn edge_count(&self) -> usize {
        bits::count(&self.out_rows)
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            self.edge_count() as f64 / self.n() as f64
        }
    }

    /// Edges in row-major index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| bits::ones(self.out_row(i)).map(move |j| (i, j)))
    }

    pub fn transpose(&self) -> Self {
        let mut t = self.clone();
        std::mem::swap(&mut t.out_rows, &mut t.in_rows);
        t
    }

    /// Relabel node `i` as `perm[i]`; labels follow their nodes.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let mut countries = vec![Country(String::new()); n];
        for (i, &p) in perm.iter().enumerate() {
            countries[p] = self.countries[i].clone();
        }
        let mut out = Self::empty(countries);
        out.rule = self.rule;
        out.source_year = self.source_year;
        for (i, j) in self.edges() {
            out.add_edge(perm[i], perm[j]);
        }
        out
    }

    /// Induced subgraph on `keep` (in the given order).
    pub fn induced(&self, keep: &[usize]) -> Self {
        let mut out = Self::empty(keep.iter().map(|&i| self.countries[i].clone()).collect());
        out.rule = self.rule;
        out.source_year = self.source_year;
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                if a != b && self.has_edge(i, j) {
                    out.add_edge(a, b);
                }
            }
        }
        out
    }

    pub fn to_adjacency(&self) -> Vec<Vec<bool>> {
        (0..self.n()).map(|i| (0..self.n()).map(|j| self.has_edge(i, j)).collect()).collect()
    }
}
