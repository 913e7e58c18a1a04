//! Path-length, degree-correlation and clustering statistics on binary
//! networks.
//!
//! Path lengths are capped: every shortest path longer than three, and every
//! unreachable pair, counts as four in the modified ASPL.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};
use crate::network::BinaryNetwork;

/// Path length assigned to pairs beyond distance three or unreachable.
pub const SPL_CAP: u32 = 4;

/// All-pairs directed hop distances. `None` marks unreachable pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplMatrix {
    n: usize,
    dist: Vec<Option<u32>>,
}

impl SplMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<u32> {
        self.dist[i * self.n + j]
    }

    /// Distance with lengths above three and unreachable pairs mapped to four.
    pub fn capped(&self, i: usize, j: usize) -> u32 {
        match self.get(i, j) {
            Some(d) if d < SPL_CAP => d,
            _ => SPL_CAP,
        }
    }
}

pub fn shortest_paths(net: &BinaryNetwork) -> SplMatrix {
    let n = net.n();
    let w = net.words();
    let mut dist = vec![None; n * n];
    let mut visited = vec![0u64; w];
    let mut frontier = vec![0u64; w];
    let mut next = vec![0u64; w];
    for s in 0..n {
        visited.fill(0);
        bits::set(&mut visited, s);
        dist[s * n + s] = Some(0);
        frontier.copy_from_slice(net.out_row(s));
        let mut depth = 1;
        while frontier.iter().any(|&x| x != 0) {
            next.fill(0);
            for v in bits::ones(&frontier) {
                dist[s * n + v] = Some(depth);
                for (nx, o) in next.iter_mut().zip(net.out_row(v)) {
                    *nx |= o;
                }
            }
            for (vi, f) in visited.iter_mut().zip(&frontier) {
                *vi |= f;
            }
            for (nx, vi) in next.iter_mut().zip(&visited) {
                *nx &= !vi;
            }
            std::mem::swap(&mut frontier, &mut next);
            depth += 1;
        }
    }
    SplMatrix { n, dist }
}

/// Number of ordered pairs at distance exactly 1, 2 and 3, among alive nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct DistanceProfile {
    pub nodes: usize,
    pub within: [usize; 3],
}

impl DistanceProfile {
    pub fn pairs(&self) -> usize {
        self.nodes * self.nodes.saturating_sub(1)
    }

    pub fn modified_aspl(&self) -> f64 {
        let pairs = self.pairs();
        if pairs == 0 {
            return SPL_CAP as f64;
        }
        let [c1, c2, c3] = self.within;
        let far = pairs - c1 - c2 - c3;
        (c1 + 2 * c2 + 3 * c3 + SPL_CAP as usize * far) as f64 / pairs as f64
    }

    pub fn fraction_le(&self, k: usize) -> f64 {
        let pairs = self.pairs();
        if pairs == 0 {
            return 0.0;
        }
        self.within[..k].iter().sum::<usize>() as f64 / pairs as f64
    }
}

/// Capped breadth-first search restricted to the nodes in `alive`.
pub(crate) fn distance_profile(net: &BinaryNetwork, alive: &[u64]) -> DistanceProfile {
    let w = net.words();
    let mut visited = vec![0u64; w];
    let mut frontier = vec![0u64; w];
    let mut next = vec![0u64; w];
    let mut within = [0usize; 3];
    let mut nodes = 0;
    for s in bits::ones(alive) {
        nodes += 1;
        visited.fill(0);
        bits::set(&mut visited, s);
        for ((f, o), a) in frontier.iter_mut().zip(net.out_row(s)).zip(alive) {
            *f = o & a;
        }
        for (d, slot) in within.iter_mut().enumerate() {
            *slot += bits::count(&frontier);
            if d == 2 {
                break;
            }
            for (vi, f) in visited.iter_mut().zip(&frontier) {
                *vi |= f;
            }
            next.fill(0);
            for v in bits::ones(&frontier) {
                for (nx, o) in next.iter_mut().zip(net.out_row(v)) {
                    *nx |= o;
                }
            }
            for ((nx, vi), a) in next.iter_mut().zip(&visited).zip(alive) {
                *nx &= a & !vi;
            }
            std::mem::swap(&mut frontier, &mut next);
        }
    }
    DistanceProfile { nodes, within }
}

fn full_profile(net: &BinaryNetwork) -> DistanceProfile {
    distance_profile(net, &bits::full(net.n()))
}

/// Mean capped shortest-path length over ordered pairs. A network with fewer
/// than two nodes has no pairs and is assigned the cap value 4.
pub fn modified_aspl(net: &BinaryNetwork) -> f64 {
    full_profile(net).modified_aspl()
}

/// Fraction of ordered pairs with a finite shortest path of length ≤ `k`,
/// for `k` in {2, 3}.
pub fn fraction_spl_le(net: &BinaryNetwork, k: usize) -> Result<f64> {
    if !(2..=3).contains(&k) {
        return Err(Error::invalid(format!("path-length bound must be 2 or 3, got {k}")));
    }
    Ok(full_profile(net).fraction_le(k))
}

/// Which degree of the source and target node an edge pairs up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreePairing {
    #[default]
    OutIn,
    InOut,
    OutOut,
    InIn,
    TotalTotal,
}

impl DegreePairing {
    pub const ALL: [DegreePairing; 5] = [Self::OutIn, Self::InOut, Self::OutOut, Self::InIn, Self::TotalTotal];

    pub fn name(&self) -> &'static str {
        match self {
            Self::OutIn => "out-in",
            Self::InOut => "in-out",
            Self::OutOut => "out-out",
            Self::InIn => "in-in",
            Self::TotalTotal => "total-total",
        }
    }
}

impl fmt::Display for DegreePairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DegreePairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown degree pairing {s:?}")))
    }
}

/// Degree assortativity over directed edges, in the symmetrised form of the
/// Brain Connectivity Toolbox (`assortativity_bin`): each edge contributes
/// its (source, target) degree pair in both orders. Returns `None` when the
/// network has no edges or the degree variance across endpoints is zero.
pub fn assortativity(net: &BinaryNetwork, pairing: DegreePairing) -> Option<f64> {
    let outd = net.out_degrees();
    let ind = net.in_degrees();
    let (src, dst): (Vec<usize>, Vec<usize>) = match pairing {
        DegreePairing::OutIn => (outd, ind),
        DegreePairing::InOut => (ind, outd),
        DegreePairing::OutOut => (outd.clone(), outd),
        DegreePairing::InIn => (ind.clone(), ind),
        DegreePairing::TotalTotal => {
            let tot: Vec<usize> = outd.iter().zip(&ind).map(|(a, b)| a + b).collect();
            (tot.clone(), tot)
        }
    };
    let (mut sxy, mut sh, mut ssq, mut k) = (0.0, 0.0, 0.0, 0usize);
    for (i, j) in net.edges() {
        let x = src[i] as f64;
        let y = dst[j] as f64;
        sxy += x * y;
        sh += 0.5 * (x + y);
        ssq += 0.5 * (x * x + y * y);
        k += 1;
    }
    if k == 0 {
        return None;
    }
    let k = k as f64;
    let mh = sh / k;
    let num = sxy / k - mh * mh;
    let den = ssq / k - mh * mh;
    if den <= 1e-12 * (ssq / k) {
        return None;
    }
    Some(num / den)
}

/// Binary directed clustering coefficient of each node (Fagiolo's
/// formulation as implemented in the Brain Connectivity Toolbox's
/// `clustering_coef_bd`). Nodes without directed triangles get 0.
pub fn clustering_coefficients(net: &BinaryNetwork) -> Vec<f64> {
    let n = net.n();
    let sym = |i: usize, j: usize| net.has_edge(i, j) as u32 + net.has_edge(j, i) as u32;
    (0..n)
        .map(|i| {
            let mut nbrs = net.out_row(i).to_vec();
            for (a, b) in nbrs.iter_mut().zip(net.in_row(i)) {
                *a |= b;
            }
            let nbrs: Vec<usize> = bits::ones(&nbrs).collect();
            let mut cyc = 0u32;
            for &j in &nbrs {
                for &h in &nbrs {
                    if j != h {
                        cyc += sym(i, j) * sym(j, h) * sym(h, i);
                    }
                }
            }
            if cyc == 0 {
                return 0.0;
            }
            let total = (net.out_degree(i) + net.in_degree(i)) as f64;
            let bidir = bits::count_and(net.out_row(i), net.in_row(i)) as f64;
            (cyc as f64 / 2.0) / (total * (total - 1.0) - 2.0 * bidir)
        })
        .collect()
}

pub fn avg_clustering(net: &BinaryNetwork) -> f64 {
    let c = clustering_coefficients(net);
    if c.is_empty() {
        return 0.0;
    }
    c.iter().sum::<f64>() / c.len() as f64
}

/// Pr(i→k | i→j ∧ j→k) over ordered triples of distinct nodes. `None` when
/// the network has no two-step path.
pub fn edge_transitivity(net: &BinaryNetwork) -> Option<f64> {
    let (mut open, mut closed) = (0usize, 0usize);
    for (i, j) in net.edges() {
        let out_j = net.out_row(j);
        open += bits::count(out_j) - net.has_edge(j, i) as usize;
        closed += bits::count_and(out_j, net.out_row(i));
    }
    (open > 0).then(|| closed as f64 / open as f64)
}

/// The six statistics compared against null-model confidence intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    FracSplLe2,
    FracSplLe3,
    ModifiedAspl,
    Assortativity,
    AvgClustering,
    EdgeTransitivity,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::FracSplLe2,
        Measure::FracSplLe3,
        Measure::ModifiedAspl,
        Measure::Assortativity,
        Measure::AvgClustering,
        Measure::EdgeTransitivity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Measure::FracSplLe2 => "frac_spl_le2",
            Measure::FracSplLe3 => "frac_spl_le3",
            Measure::ModifiedAspl => "modified_aspl",
            Measure::Assortativity => "assortativity",
            Measure::AvgClustering => "avg_clustering",
            Measure::EdgeTransitivity => "edge_transitivity",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Values of all six measures on one network; `None` marks an undefined
/// statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureVector {
    values: [Option<f64>; 6],
}

impl MeasureVector {
    pub fn compute(net: &BinaryNetwork, pairing: DegreePairing) -> Self {
        let profile = full_profile(net);
        let mut values = [None; 6];
        values[Measure::FracSplLe2.index()] = Some(profile.fraction_le(2));
        values[Measure::FracSplLe3.index()] = Some(profile.fraction_le(3));
        values[Measure::ModifiedAspl.index()] = Some(profile.modified_aspl());
        values[Measure::Assortativity.index()] = assortativity(net, pairing);
        values[Measure::AvgClustering.index()] = Some(avg_clustering(net));
        values[Measure::EdgeTransitivity.index()] = edge_transitivity(net);
        Self { values }
    }

    pub fn from_values(values: [Option<f64>; 6]) -> Self {
        Self { values }
    }

    pub fn get(&self, m: Measure) -> Option<f64> {
        self.values[m.index()]
    }

    pub fn set(&mut self, m: Measure, v: Option<f64>) {
        self.values[m.index()] = v;
    }

    pub fn frac_spl_le2(&self) -> f64 {
        self.values[0].unwrap_or(f64::NAN)
    }

    pub fn frac_spl_le3(&self) -> f64 {
        self.values[1].unwrap_or(f64::NAN)
    }

    pub fn modified_aspl(&self) -> f64 {
        self.values[2].unwrap_or(f64::NAN)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Measure, Option<f64>)> + '_ {
        Measure::ALL.iter().map(|&m| (m, self.get(m)))
    }
}
