//! Loss-given-default cascades on the weighted asset matrix.
//!
//! A surviving country `i` defaults in a round when its holdings in the
//! already-defaulted set `D`, scaled by the haircut, strictly exceed both
//! `d1` times its total external holdings and `d2` times its GDP. Rounds are
//! synchronous and the portfolio total is the original, fixed one.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AssetSlice, Country};

/// Coarse threshold grid for sweeps; (0, 0) is excluded from sweeps.
pub const COARSE_GRID: [f64; 5] = [0.0, 0.1, 0.25, 0.5, 0.75];

pub const PIGS_D1_STEP: f64 = 0.004;
pub const PIGS_D2_STEP: f64 = 0.01;
pub const PIGS_STEPS: usize = 50;
pub const PIGS: [&str; 4] = ["PT", "IE", "GR", "ES"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgdSpec {
    /// Fraction of the total external portfolio.
    pub d1: f64,
    /// Fraction of GDP.
    pub d2: f64,
    /// Fraction of an exposure lost when the issuer defaults.
    pub haircut: f64,
}

impl LgdSpec {
    pub fn new(d1: f64, d2: f64) -> Result<Self> {
        Self::with_haircut(d1, d2, 1.0)
    }

    /// Thresholds must be nonnegative; `d1` above 1 can never trigger a
    /// default. The haircut lies in (0, 1].
    pub fn with_haircut(d1: f64, d2: f64, haircut: f64) -> Result<Self> {
        if !(d1 >= 0.0 && d1.is_finite()) || !(d2 >= 0.0 && d2.is_finite()) {
            return Err(Error::invalid(format!("thresholds must be nonnegative, got d1={d1} d2={d2}")));
        }
        if !(haircut > 0.0 && haircut <= 1.0) {
            return Err(Error::invalid(format!("haircut must lie in (0, 1], got {haircut}")));
        }
        Ok(Self { d1, d2, haircut })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeResult {
    pub initial: Vec<Country>,
    /// Countries newly defaulting in each round, in country order.
    pub rounds: Vec<Vec<Country>>,
    pub defaulted: Vec<Country>,
    /// Fraction of all countries in default, initial set included.
    pub impact: f64,
}

/// Precomputed thresholds for repeated cascades on one slice.
pub struct CascadeEngine<'a> {
    slice: &'a AssetSlice,
    spec: LgdSpec,
    portfolio_bound: Vec<f64>,
    gdp_bound: Vec<f64>,
}

/// Outcome of an index-level cascade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeOutcome {
    pub defaulted: Vec<bool>,
    pub rounds: Vec<Vec<usize>>,
    pub count: usize,
}

impl<'a> CascadeEngine<'a> {
    pub fn new(slice: &'a AssetSlice, spec: LgdSpec) -> Self {
        let n = slice.n();
        Self {
            slice,
            spec,
            portfolio_bound: (0..n).map(|i| spec.d1 * slice.row_total(i)).collect(),
            gdp_bound: slice.gdp().iter().map(|g| spec.d2 * g).collect(),
        }
    }

    #[inline]
    fn fails(&self, i: usize, loss: f64) -> bool {
        let hit = self.spec.haircut * loss;
        hit > self.portfolio_bound[i] && hit > self.gdp_bound[i]
    }

    /// Run a cascade from the given initial indices (duplicates ignored).
    pub fn run(&self, initial: &[usize]) -> CascadeOutcome {
        let n = self.slice.n();
        let mut defaulted = vec![false; n];
        let mut loss = vec![0.0; n];
        let mut fresh: Vec<usize> = Vec::with_capacity(initial.len());
        for &j in initial {
            if !defaulted[j] {
                defaulted[j] = true;
                fresh.push(j);
            }
        }
        let mut count = fresh.len();
        let mut rounds = Vec::new();
        loop {
            for &j in &fresh {
                for (i, l) in loss.iter_mut().enumerate() {
                    *l += self.slice.holding(i, j);
                }
            }
            let next: Vec<usize> = (0..n).filter(|&i| !defaulted[i] && self.fails(i, loss[i])).collect();
            if next.is_empty() {
                break;
            }
            for &i in &next {
                defaulted[i] = true;
            }
            count += next.len();
            rounds.push(next.clone());
            fresh = next;
        }
        CascadeOutcome { defaulted, rounds, count }
    }
}

pub fn cascade(slice: &AssetSlice, initial: &[Country], spec: LgdSpec) -> Result<CascadeResult> {
    if initial.is_empty() {
        return Err(Error::invalid("initial default set is empty"));
    }
    let idx = slice.indices_of(initial)?;
    let out = CascadeEngine::new(slice, spec).run(&idx);
    let names = |v: &[usize]| v.iter().map(|&i| slice.countries()[i].clone()).collect::<Vec<_>>();
    let mut initial_sorted = idx.clone();
    initial_sorted.sort_unstable();
    initial_sorted.dedup();
    Ok(CascadeResult {
        initial: names(&initial_sorted),
        rounds: out.rounds.iter().map(|r| names(r)).collect(),
        defaulted: (0..slice.n()).filter(|&i| out.defaulted[i]).map(|i| slice.countries()[i].clone()).collect(),
        impact: out.count as f64 / slice.n() as f64,
    })
}

/// Statistics of cascade impacts over all initial sets of size `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KImpact {
    pub k: usize,
    pub combinations: usize,
    pub mean: f64,
    /// Mean of the ⌈0.05·m⌉ largest impacts.
    pub worst5: f64,
    pub worst: f64,
    /// Every initial set reaching the worst impact, each sorted by code.
    pub argmax: Vec<Vec<Country>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactSummary {
    pub year: i32,
    pub spec: LgdSpec,
    pub per_k: Vec<KImpact>,
}

impl ImpactSummary {
    pub fn k(&self, k: usize) -> Option<&KImpact> {
        self.per_k.iter().find(|s| s.k == k)
    }
}

fn summarize_k(slice: &AssetSlice, engine: &CascadeEngine<'_>, k: usize) -> KImpact {
    let n = slice.n();
    let combos: Vec<Vec<usize>> = (0..n).combinations(k).collect();
    let counts: Vec<usize> = combos.par_iter().map(|c| engine.run(c).count).collect();
    let m = counts.len();
    let nf = n as f64;
    let mean = counts.iter().sum::<usize>() as f64 / (m as f64 * nf);
    let mut sorted = counts.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let top = (0.05 * m as f64).ceil() as usize;
    let worst5 = sorted[..top].iter().sum::<usize>() as f64 / (top as f64 * nf);
    let best = sorted[0];
    let argmax = combos
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c == best)
        .map(|(combo, _)| {
            let mut names: Vec<Country> = combo.iter().map(|&i| slice.countries()[i].clone()).collect();
            names.sort();
            names
        })
        .collect();
    KImpact { k, combinations: m, mean, worst5, worst: best as f64 / nf, argmax }
}

/// Cascade every initial set of size 1..=k_max.
pub fn enumerate_impacts(slice: &AssetSlice, spec: LgdSpec, k_max: usize) -> Result<ImpactSummary> {
    if !(1..=3).contains(&k_max) {
        return Err(Error::invalid(format!("k_max must be 1, 2 or 3, got {k_max}")));
    }
    if k_max > slice.n() {
        return Err(Error::invalid("k_max exceeds the number of countries"));
    }
    let engine = CascadeEngine::new(slice, spec);
    Ok(ImpactSummary { year: slice.year, spec, per_k: (1..=k_max).map(|k| summarize_k(slice, &engine, k)).collect() })
}

/// The (d1, d2) pairs of a sweep, row-major over `d1_set`, without (0, 0).
pub fn sweep_specs(d1_set: &[f64], d2_set: &[f64], haircut: f64) -> Result<Vec<LgdSpec>> {
    let mut specs = Vec::new();
    for &d1 in d1_set {
        for &d2 in d2_set {
            if d1 == 0.0 && d2 == 0.0 {
                continue;
            }
            specs.push(LgdSpec::with_haircut(d1, d2, haircut)?);
        }
    }
    Ok(specs)
}

pub fn sweep_grid(
    slice: &AssetSlice,
    d1_set: &[f64],
    d2_set: &[f64],
    k_max: usize,
    haircut: f64,
) -> Result<Vec<ImpactSummary>> {
    if d1_set.is_empty() || d2_set.is_empty() {
        return Err(Error::invalid("threshold grids must be nonempty"));
    }
    sweep_specs(d1_set, d2_set, haircut)?.into_iter().map(|spec| enumerate_impacts(slice, spec, k_max)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeverityStat {
    Mean,
    Worst5,
    Worst,
}

/// One year's column of a severity heat map: the chosen statistic for every
/// spec at initial-set size `k`, sorted from most to least severe.
pub fn severity_column(summaries: &[ImpactSummary], k: usize, stat: SeverityStat) -> Vec<f64> {
    let mut col: Vec<f64> = summaries
        .iter()
        .filter_map(|s| s.k(k))
        .map(|ki| match stat {
            SeverityStat::Mean => ki.mean,
            SeverityStat::Worst5 => ki.worst5,
            SeverityStat::Worst => ki.worst,
        })
        .collect();
    col.sort_by(|a, b| b.total_cmp(a));
    col
}

pub fn write_sweep_csv<W: std::io::Write>(summaries: &[ImpactSummary], mut out: W) -> Result<()> {
    writeln!(out, "year,d1,d2,k,mean,worst5,worst,argmax_combos")?;
    for s in summaries {
        for ki in &s.per_k {
            let combos = ki.argmax.iter().map(|c| c.iter().map(Country::as_str).join("+")).join(";");
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.year, s.spec.d1, s.spec.d2, ki.k, ki.mean, ki.worst5, ki.worst, combos
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PigsPoint {
    pub subset: Vec<Country>,
    pub d1: f64,
    pub d2: f64,
    pub impact: f64,
    pub rounds: usize,
}

/// Fine threshold grid: every nonempty subset of `group` with at most three
/// members, at d1 = 0, 0.004, ..., 0.2 and d2 = 0, 0.01, ..., 0.5.
pub fn pigs_grid(slice: &AssetSlice, group: &[Country]) -> Result<Vec<PigsPoint>> {
    if group.is_empty() {
        return Err(Error::invalid("scenario group is empty"));
    }
    let idx = slice.indices_of(group)?;
    let mut order: Vec<usize> = idx.clone();
    order.sort_unstable();
    order.dedup();
    let subsets: Vec<Vec<usize>> =
        (1..=order.len().min(3)).flat_map(|k| order.iter().copied().combinations(k)).collect();
    let grid: Vec<(f64, f64)> = (0..=PIGS_STEPS)
        .flat_map(|a| (0..=PIGS_STEPS).map(move |b| (a as f64 * PIGS_D1_STEP, b as f64 * PIGS_D2_STEP)))
        .collect();
    let n = slice.n() as f64;
    let points = subsets
        .iter()
        .flat_map(|sub| grid.iter().map(move |&(d1, d2)| (sub, d1, d2)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(sub, d1, d2)| {
            let out = CascadeEngine::new(slice, LgdSpec { d1, d2, haircut: 1.0 }).run(sub);
            PigsPoint {
                subset: sub.iter().map(|&i| slice.countries()[i].clone()).collect(),
                d1,
                d2,
                impact: out.count as f64 / n,
                rounds: out.rounds.len(),
            }
        })
        .collect();
    Ok(points)
}

pub fn write_pigs_csv<W: std::io::Write>(points: &[PigsPoint], mut out: W) -> Result<()> {
    writeln!(out, "subset,d1,d2,impact,rounds")?;
    for p in points {
        writeln!(
            out,
            "{},{:.3},{:.2},{},{}",
            p.subset.iter().map(Country::as_str).join("+"),
            p.d1,
            p.d2,
            p.impact,
            p.rounds
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub k: usize,
    pub entries: Vec<(Vec<Country>, usize)>,
}

/// For each initial-set size, count the (year, spec) cells in which each
/// combination reached the maximal impact (ties all count), and keep the
/// `top` most frequent. Equal counts are ordered lexicographically.
pub fn influence_ranking(summaries: &[ImpactSummary], top: usize) -> Result<Vec<RankingTable>> {
    if summaries.is_empty() {
        return Err(Error::invalid("no impact summaries to rank"));
    }
    let mut counts: BTreeMap<usize, BTreeMap<Vec<Country>, usize>> = BTreeMap::new();
    for s in summaries {
        for ki in &s.per_k {
            let table = counts.entry(ki.k).or_default();
            for combo in &ki.argmax {
                *table.entry(combo.clone()).or_default() += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|(k, table)| {
            let mut entries: Vec<(Vec<Country>, usize)> = table.into_iter().collect();
            entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            entries.truncate(top);
            RankingTable { k, entries }
        })
        .collect())
}

pub fn write_ranking_csv<W: std::io::Write>(tables: &[RankingTable], mut out: W) -> Result<()> {
    writeln!(out, "k,rank,combination,count")?;
    for t in tables {
        for (rank, (combo, count)) in t.entries.iter().enumerate() {
            writeln!(out, "{},{},{},{}", t.k, rank + 1, combo.iter().map(Country::as_str).join("+"), count)?;
        }
    }
    Ok(())
}
