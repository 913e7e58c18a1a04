//! Thresholding rules that turn an asset slice into a binary network, and
//! graph export with exposure weight classes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AssetSlice;
use crate::network::{BinaryNetwork, ThresholdRule};

/// GDP-normalized threshold used when none is given.
pub const DEFAULT_GDP_THRESHOLD: f64 = 0.0417;

// Relative slack below which a comparison counts as a tie. Row means of
// equal entries are not always exact in floating point.
const TIE_EPS: f64 = 1e-12;

#[inline]
fn strictly_exceeds(value: f64, bound: f64) -> bool {
    value > bound + TIE_EPS * bound.abs()
}

fn row_mean(slice: &AssetSlice, i: usize) -> f64 {
    slice.row_total(i) / (slice.n() - 1) as f64
}

/// Rule A: edge i→j when i's holding of j is above i's average exposure.
pub fn threshold_a(slice: &AssetSlice) -> BinaryNetwork {
    let n = slice.n();
    let mut net = BinaryNetwork::empty(slice.countries().to_vec());
    net.rule = Some(ThresholdRule::AboveAverageExposure);
    net.source_year = Some(slice.year);
    for i in 0..n {
        let mean = row_mean(slice, i);
        for j in (0..n).filter(|&j| j != i) {
            if strictly_exceeds(slice.holding(i, j), mean) {
                net.add_edge(i, j);
            }
        }
    }
    net
}

/// Rule B: edge i→j when s_ij / gdp_i > t.
pub fn threshold_b(slice: &AssetSlice, t: f64) -> Result<BinaryNetwork> {
    let rule = ThresholdRule::gdp_normalized(t)?;
    let n = slice.n();
    let mut net = BinaryNetwork::empty(slice.countries().to_vec());
    net.rule = Some(rule);
    net.source_year = Some(slice.year);
    for i in 0..n {
        let gdp = slice.gdp()[i];
        for j in (0..n).filter(|&j| j != i) {
            if strictly_exceeds(slice.holding(i, j) / gdp, t) {
                net.add_edge(i, j);
            }
        }
    }
    Ok(net)
}

pub fn threshold(slice: &AssetSlice, rule: ThresholdRule) -> Result<BinaryNetwork> {
    match rule {
        ThresholdRule::AboveAverageExposure => Ok(threshold_a(slice)),
        ThresholdRule::GdpNormalized { t } => threshold_b(slice, t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExposureAverage {
    /// Mean over every ordered pair i≠j, zeros included.
    #[default]
    AllPairs,
    /// Mean over the pairs with a positive holding.
    PositiveOnly,
}

/// Average of s_ij / gdp_i over ordered pairs.
pub fn average_gdp_exposure(slice: &AssetSlice, mode: ExposureAverage) -> f64 {
    let n = slice.n();
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..n {
        let gdp = slice.gdp()[i];
        for j in (0..n).filter(|&j| j != i) {
            let s = slice.holding(i, j);
            if mode == ExposureAverage::PositiveOnly && s <= 0.0 {
                continue;
            }
            sum += s / gdp;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Exposure class of an edge relative to the holder's average exposure:
/// 1 for [1×,2×), 2 for [2×,4×), 3 for [4×,8×), 4 for [8×,16×), 5 for 16× and
/// above. Edges below the average (possible under rule B) get class 0.
pub fn weight_class(slice: &AssetSlice, i: usize, j: usize) -> u8 {
    let mean = row_mean(slice, i);
    let s = slice.holding(i, j);
    if mean <= 0.0 {
        return 0;
    }
    let mut class = 0;
    let mut bound = mean;
    while class < 5 && s >= bound {
        class += 1;
        bound *= 2.0;
    }
    class
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    EdgeList,
    Dot,
}

/// Write `net` with per-edge weight classes. Edges are sorted by
/// (holder, issuer) country code.
pub fn export_graph<W: Write>(net: &BinaryNetwork, slice: &AssetSlice, format: ExportFormat, mut out: W) -> Result<()> {
    if net.countries() != slice.countries() {
        return Err(Error::CountryMismatch);
    }
    let codes = net.countries();
    let mut edges: Vec<(usize, usize)> = net.edges().collect();
    edges.sort_by(|a, b| (&codes[a.0], &codes[a.1]).cmp(&(&codes[b.0], &codes[b.1])));

    match format {
        ExportFormat::EdgeList => {
            writeln!(out, "holder,issuer,weight_class")?;
            for (i, j) in edges {
                writeln!(out, "{},{},{}", codes[i], codes[j], weight_class(slice, i, j))?;
            }
        }
        ExportFormat::Dot => {
            writeln!(out, "digraph finnet {{")?;
            for (i, j) in edges {
                writeln!(out, "  \"{}\" -> \"{}\" [class={}];", codes[i], codes[j], weight_class(slice, i, j))?;
            }
            writeln!(out, "}}")?;
        }
    }
    Ok(())
}
