//! Error/attack node-removal experiments and Monte-Carlo confidence
//! intervals against null-model families.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};
use crate::ingest::Country;
use crate::metrics::{distance_profile, DegreePairing, Measure, MeasureVector, SPL_CAP};
use crate::network::BinaryNetwork;
use crate::nullmodels::{NullModelKind, NullModelSpec};
use crate::seed::{derive_seed, rng_from_seed, sub_rng};
use crate::stats::quantile_sorted;

/// Number of points on the fraction-removed grid (0%, 1%, ..., 100%).
pub const GRID_POINTS: usize = 101;

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Remove a uniformly random surviving node.
    Error,
    /// Remove a surviving node of maximal in+out degree.
    Attack,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Error => "error",
            Strategy::Attack => "attack",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(Strategy::Error),
            "attack" => Ok(Strategy::Attack),
            other => Err(Error::invalid(format!("unknown strategy {other:?}"))),
        }
    }
}

fn degree_sum(net: &BinaryNetwork, v: usize, alive: &[u64]) -> usize {
    bits::count_and(net.out_row(v), alive) + bits::count_and(net.in_row(v), alive)
}

fn attack_target<R: Rng + ?Sized>(net: &BinaryNetwork, alive: &[u64], rng: &mut R) -> Option<usize> {
    let mut best = Vec::new();
    let mut best_deg = 0;
    for v in bits::ones(alive) {
        let d = degree_sum(net, v, alive);
        if best.is_empty() || d > best_deg {
            best.clear();
            best_deg = d;
            best.push(v);
        } else if d == best_deg {
            best.push(v);
        }
    }
    match best.len() {
        0 => None,
        1 => Some(best[0]),
        k => Some(best[rng.random_range(0..k)]),
    }
}

/// A node of maximal in-degree + out-degree; ties are broken uniformly.
pub fn select_attack_target<R: Rng + ?Sized>(net: &BinaryNetwork, rng: &mut R) -> Result<usize> {
    attack_target(net, &bits::full(net.n()), rng).ok_or_else(|| Error::Degenerate("network has no nodes".into()))
}

/// Modified ASPL after each removal, from the intact network down to a single
/// surviving node (whose value is the cap, 4).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnockoutTrace {
    pub strategy: Strategy,
    pub removal_order: Vec<Country>,
    pub removed_nodes: Vec<usize>,
    pub aspl_series: Vec<f64>,
    pub seed: u64,
}

pub fn run_knockout(net: &BinaryNetwork, strategy: Strategy, seed: u64) -> Result<KnockoutTrace> {
    let n = net.n();
    if n < 2 {
        return Err(Error::invalid("knockout needs at least two nodes"));
    }
    let mut rng = rng_from_seed(seed);
    let mut alive = bits::full(n);
    let mut removed_nodes = Vec::with_capacity(n - 1);
    let mut aspl_series = Vec::with_capacity(n);
    aspl_series.push(distance_profile(net, &alive).modified_aspl());
    for remaining in (2..=n).rev() {
        let victim = match strategy {
            Strategy::Error => {
                let k = rng.random_range(0..remaining);
                bits::ones(&alive).nth(k).expect("k < alive count")
            }
            Strategy::Attack => attack_target(net, &alive, &mut rng).expect("alive set is nonempty"),
        };
        bits::clear(&mut alive, victim);
        removed_nodes.push(victim);
        aspl_series.push(distance_profile(net, &alive).modified_aspl());
    }
    debug_assert_eq!(*aspl_series.last().unwrap(), SPL_CAP as f64);
    Ok(KnockoutTrace {
        strategy,
        removal_order: removed_nodes.iter().map(|&v| net.countries()[v].clone()).collect(),
        removed_nodes,
        aspl_series,
        seed,
    })
}

/// Resample a trace onto the fraction-removed grid. Entry k of the series
/// sits at k / (n − 1); grid values are linearly interpolated.
pub fn align_to_grid(series: &[f64]) -> Vec<f64> {
    let last = series.len() - 1;
    (0..GRID_POINTS)
        .map(|g| {
            if last == 0 {
                return series[0];
            }
            let x = g as f64 / (GRID_POINTS - 1) as f64 * last as f64;
            let lo = (x.floor() as usize).min(last);
            let hi = (lo + 1).min(last);
            let frac = x - lo as f64;
            series[lo] + frac * (series[hi] - series[lo])
        })
        .collect()
}

/// Mean and standard deviation of aligned knockout curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub strategy: Strategy,
    pub traces: usize,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl CurveSummary {
    fn from_curves(strategy: Strategy, curves: &[Vec<f64>]) -> Self {
        let m = curves.len() as f64;
        let grid = (0..GRID_POINTS).map(|g| g as f64 / (GRID_POINTS - 1) as f64).collect();
        // Shift by the first curve so identical traces give exactly zero spread.
        let (mean, std) = (0..GRID_POINTS)
            .map(|g| {
                let base = curves[0][g];
                let (s1, s2) = curves.iter().fold((0.0, 0.0), |(a, b), c| {
                    let d = c[g] - base;
                    (a + d, b + d * d)
                });
                let md = s1 / m;
                (base + md, (s2 / m - md * md).max(0.0).sqrt())
            })
            .unzip();
        Self { strategy, traces: curves.len(), grid, mean, std }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "grid_point,mean,std")?;
        for ((x, m), s) in self.grid.iter().zip(&self.mean).zip(&self.std) {
            writeln!(out, "{x:.2},{m},{s}")?;
        }
        Ok(())
    }
}

fn trace_seed(master: u64, network: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, network as u64), trial as u64)
}

/// `trials` traces per network, aligned by fraction removed. Trial `t` on
/// network `k` uses seed `derive_seed(derive_seed(master, k), t)`.
pub fn ensemble_knockout(
    nets: &[BinaryNetwork],
    strategy: Strategy,
    trials: usize,
    master_seed: u64,
) -> Result<CurveSummary> {
    if trials == 0 || nets.is_empty() {
        return Err(Error::invalid("need at least one network and one trial"));
    }
    let jobs: Vec<(usize, usize)> = (0..nets.len()).flat_map(|k| (0..trials).map(move |t| (k, t))).collect();
    let curves = jobs
        .par_iter()
        .map(|&(k, t)| {
            run_knockout(&nets[k], strategy, trace_seed(master_seed, k, t)).map(|tr| align_to_grid(&tr.aspl_series))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveSummary::from_curves(strategy, &curves))
}

/// Like [`ensemble_knockout`], but every trial runs on a freshly generated
/// null network. Trial `t` for spec `k` draws its network from
/// `sub_rng(trace_seed, 0)` and its removals from `trace_seed + 1`.
pub fn null_ensemble_knockout(
    specs: &[NullModelSpec],
    strategy: Strategy,
    trials: usize,
    master_seed: u64,
) -> Result<CurveSummary> {
    if trials == 0 || specs.is_empty() {
        return Err(Error::invalid("need at least one model and one trial"));
    }
    let jobs: Vec<(usize, usize)> = (0..specs.len()).flat_map(|k| (0..trials).map(move |t| (k, t))).collect();
    let curves = jobs
        .par_iter()
        .map(|&(k, t)| {
            let seed = trace_seed(master_seed, k, t);
            let net = specs[k].generate(&mut sub_rng(seed, 0))?;
            run_knockout(&net, strategy, derive_seed(seed, 1)).map(|tr| align_to_grid(&tr.aspl_series))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveSummary::from_curves(strategy, &curves))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Position {
    Below,
    Within,
    Above,
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiRow {
    pub measure: Measure,
    pub lower: f64,
    pub upper: f64,
    pub empirical: Option<f64>,
    pub position: Position,
    /// Null samples for which the measure was undefined.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiReport {
    pub model: NullModelKind,
    /// Rule tag of the empirical network (`A` or `B`), if known.
    pub rule: Option<String>,
    pub year: Option<i32>,
    pub samples: usize,
    pub alpha: f64,
    pub rows: Vec<CiRow>,
}

/// Central (1 − alpha) interval of each measure over the null samples and the
/// position of the empirical value relative to it.
pub fn ci_rows(empirical: &MeasureVector, samples: &[MeasureVector], alpha: f64) -> Vec<CiRow> {
    Measure::ALL
        .iter()
        .map(|&measure| {
            let mut values: Vec<f64> = samples.iter().filter_map(|s| s.get(measure)).collect();
            let skipped = samples.len() - values.len();
            let emp = empirical.get(measure);
            if values.is_empty() {
                return CiRow {
                    measure,
                    lower: f64::NAN,
                    upper: f64::NAN,
                    empirical: emp,
                    position: Position::Undefined,
                    skipped,
                };
            }
            values.sort_by(f64::total_cmp);
            let lower = quantile_sorted(&values, alpha / 2.0);
            let upper = quantile_sorted(&values, 1.0 - alpha / 2.0);
            let position = match emp {
                None => Position::Undefined,
                Some(v) if v < lower => Position::Below,
                Some(v) if v > upper => Position::Above,
                Some(_) => Position::Within,
            };
            CiRow { measure, lower, upper, empirical: emp, position, skipped }
        })
        .collect()
}

/// Generate `samples` null networks (sample `k` from sub-seed
/// `(master_seed, k)`) and classify the empirical measures.
pub fn ci_compare(
    empirical: &MeasureVector,
    spec: &NullModelSpec,
    samples: usize,
    alpha: f64,
    pairing: DegreePairing,
    master_seed: u64,
) -> Result<CiReport> {
    if samples < 100 {
        return Err(Error::invalid(format!("need at least 100 samples, got {samples}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let vectors = (0..samples)
        .into_par_iter()
        .map(|k| spec.generate(&mut sub_rng(master_seed, k as u64)).map(|net| MeasureVector::compute(&net, pairing)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CiReport {
        model: spec.kind(),
        rule: None,
        year: None,
        samples,
        alpha,
        rows: ci_rows(empirical, &vectors, alpha),
    })
}

/// Year-aggregated outcome per (measure, model, rule).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiTableRow {
    pub measure: Measure,
    pub model: NullModelKind,
    pub rule: String,
    /// (years above − years below) / years.
    pub score: f64,
    pub below: usize,
    pub within: usize,
    pub above: usize,
    pub undefined: usize,
    pub years: usize,
}

pub fn ci_table(reports: &[CiReport]) -> Result<Vec<CiTableRow>> {
    if reports.is_empty() {
        return Err(Error::invalid("need at least one report"));
    }
    let mut groups: BTreeMap<(NullModelKind, String, Measure), [usize; 4]> = BTreeMap::new();
    for r in reports {
        let rule = r.rule.clone().unwrap_or_else(|| "-".into());
        for row in &r.rows {
            let slot = match row.position {
                Position::Below => 0,
                Position::Within => 1,
                Position::Above => 2,
                Position::Undefined => 3,
            };
            groups.entry((r.model, rule.clone(), row.measure)).or_default()[slot] += 1;
        }
    }
    Ok(groups
        .into_iter()
        .map(|((model, rule, measure), [below, within, above, undefined])| {
            let years = below + within + above + undefined;
            CiTableRow {
                measure,
                model,
                rule,
                score: (above as f64 - below as f64) / years as f64,
                below,
                within,
                above,
                undefined,
                years,
            }
        })
        .collect())
}

pub fn write_ci_table_csv<W: std::io::Write>(rows: &[CiTableRow], mut out: W) -> Result<()> {
    writeln!(out, "measure,model,rule,score,below,within,above")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{},{}", r.measure, r.model, r.rule, r.score, r.below, r.within, r.above)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::modified_aspl;

    fn complete(n: usize) -> BinaryNetwork {
        BinaryNetwork::from_edges(n, (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))).unwrap()
    }

    fn star5() -> BinaryNetwork {
        BinaryNetwork::from_edges(5, (1..5).flat_map(|l| [(0, l), (l, 0)])).unwrap()
    }

    #[test]
    fn attack_picks_hub() {
        let mut rng = rng_from_seed(0);
        assert_eq!(select_attack_target(&star5(), &mut rng).unwrap(), 0);
        let cyc = BinaryNetwork::from_edges(4, [(1, 2), (2, 3), (3, 1)]).unwrap();
        for s in 0..50 {
            assert_ne!(select_attack_target(&cyc, &mut rng_from_seed(s)).unwrap(), 0);
        }
        assert!(select_attack_target(&BinaryNetwork::unlabeled(0), &mut rng).is_err());
    }

    #[test]
    fn complete_graph_attack_trace() {
        let tr = run_knockout(&complete(4), Strategy::Attack, 3).unwrap();
        assert_eq!(tr.aspl_series, vec![1.0, 1.0, 1.0, 4.0]);
        assert_eq!(tr.removal_order.len(), 3);
    }

    #[test]
    fn empty_graph_trace_is_flat() {
        for strategy in [Strategy::Error, Strategy::Attack] {
            let tr = run_knockout(&BinaryNetwork::unlabeled(3), strategy, 1).unwrap();
            assert_eq!(tr.aspl_series, vec![4.0; 3]);
        }
    }

    #[test]
    fn star_attack_removes_center_first() {
        let net = star5();
        let tr = run_knockout(&net, Strategy::Attack, 9).unwrap();
        assert_eq!(tr.removed_nodes[0], 0);
        // Before: 8 pairs at distance 1 (hub links), 12 leaf pairs at 2 -> 32/20.
        assert!((tr.aspl_series[0] - 32.0 / 20.0).abs() < 1e-12);
        assert_eq!(tr.aspl_series[0], modified_aspl(&net));
        // After: four isolated leaves.
        assert_eq!(tr.aspl_series[1], 4.0);
    }

    #[test]
    fn single_trial_summary_has_zero_std() {
        let net = star5();
        let s = ensemble_knockout(std::slice::from_ref(&net), Strategy::Error, 1, 4).unwrap();
        let tr = run_knockout(&net, Strategy::Error, trace_seed(4, 0, 0)).unwrap();
        assert_eq!(s.mean, align_to_grid(&tr.aspl_series));
        assert!(s.std.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn grid_alignment_endpoints() {
        let g = align_to_grid(&[1.0, 2.0, 4.0]);
        assert_eq!(g.len(), GRID_POINTS);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[50], 2.0);
        assert_eq!(g[100], 4.0);
        assert!((g[25] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn full_density_er_forces_above() {
        let net = BinaryNetwork::unlabeled(6);
        let emp = MeasureVector::compute(&net, DegreePairing::OutIn);
        let spec = NullModelSpec::Er { countries: net.countries().to_vec(), d_bar: 5.0 };
        let r = ci_compare(&emp, &spec, 100, 0.05, DegreePairing::OutIn, 1).unwrap();
        let aspl = r.rows.iter().find(|r| r.measure == Measure::ModifiedAspl).unwrap();
        assert_eq!(aspl.position, Position::Above);
        assert_eq!((aspl.lower, aspl.upper), (1.0, 1.0));
        let le2 = r.rows.iter().find(|r| r.measure == Measure::FracSplLe2).unwrap();
        assert_eq!(le2.position, Position::Below);
        // Complete graphs have zero degree variance; the empirical value is undefined too.
        let assort = r.rows.iter().find(|r| r.measure == Measure::Assortativity).unwrap();
        assert_eq!(assort.position, Position::Undefined);
        assert_eq!(assort.skipped, 100);
    }

    #[test]
    fn ci_input_validation() {
        let net = BinaryNetwork::unlabeled(3);
        let emp = MeasureVector::compute(&net, DegreePairing::OutIn);
        let spec = NullModelSpec::Er { countries: net.countries().to_vec(), d_bar: 1.0 };
        assert!(ci_compare(&emp, &spec, 99, 0.05, DegreePairing::OutIn, 0).is_err());
        assert!(ci_compare(&emp, &spec, 100, 1.0, DegreePairing::OutIn, 0).is_err());
    }

    fn report(positions: &[Position]) -> Vec<CiReport> {
        positions
            .iter()
            .enumerate()
            .map(|(y, &p)| CiReport {
                model: NullModelKind::Er,
                rule: Some("A".into()),
                year: Some(2001 + y as i32),
                samples: 100,
                alpha: 0.05,
                rows: vec![CiRow {
                    measure: Measure::FracSplLe2,
                    lower: 0.0,
                    upper: 1.0,
                    empirical: Some(0.5),
                    position: p,
                    skipped: 0,
                }],
            })
            .collect()
    }

    #[test]
    fn table_scores() {
        let t = ci_table(&report(&[Position::Below; 9])).unwrap();
        assert_eq!(t[0].score, -1.0);

        let mut p = vec![Position::Within; 9];
        p[..3].fill(Position::Below);
        let t = ci_table(&report(&p)).unwrap();
        assert!((t[0].score + 1.0 / 3.0).abs() < 1e-12);

        let mut p = vec![Position::Within; 9];
        p[0] = Position::Above;
        p[5] = Position::Below;
        let t = ci_table(&report(&p)).unwrap();
        assert_eq!(t[0].score, 0.0);
        assert_eq!((t[0].below, t[0].within, t[0].above), (1, 7, 1));
        assert!(ci_table(&[]).is_err());
    }
}
