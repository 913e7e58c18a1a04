//! Random comparison networks and the log-normal asset model.
//!
//! Four families are generated from first-order statistics of an empirical
//! binary network: uniform edge density, out-degree, in-degree, and exact
//! degree sequences (edge rewiring). The fifth draws a weighted asset matrix
//! from
//!
//! ```text
//! ln(s_ij + 1) = alpha_i + beta_j + eps_ij,   eps ~ N(0, sigma)
//! ```
//!
//! fitted by least squares on holder and issuer dummies, and thresholds it
//! with the same rule as the empirical network.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AssetSlice, Country};
use crate::netbuild::threshold;
use crate::network::{BinaryNetwork, ThresholdRule};
use crate::seed::{sub_rng, SimRng};
use crate::stats::{jarque_bera, moments, JarqueBera, Moments};

/// Scale applied to the fitted sigma to undo the downward bias from
/// left-censoring and rounding of the reported data.
pub const DEFAULT_SIGMA_CORRECTION: f64 = 1.183;

/// Reporting floor in millions of USD (holdings below it are recorded as 0).
pub const CENSOR_FLOOR_MUSD: f64 = 0.5;

pub const DEFAULT_SWAP_FACTOR: usize = 20;

fn edge_probability(expected: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("random graphs need at least two nodes"));
    }
    let p = expected / (n - 1) as f64;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("edge probability {p} outside [0, 1]")));
    }
    Ok(p)
}

/// G(n, p) with p = d_bar / (n − 1).
pub fn gen_er<R: Rng + ?Sized>(n: usize, d_bar: f64, rng: &mut R) -> Result<BinaryNetwork> {
    let p = edge_probability(d_bar, n)?;
    let mut net = BinaryNetwork::unlabeled(n);
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            if rng.random_bool(p) {
                net.add_edge(i, j);
            }
        }
    }
    Ok(net)
}

/// Edge i→j with probability out_seq[i] / (n − 1).
pub fn gen_outdeg<R: Rng + ?Sized>(out_seq: &[usize], rng: &mut R) -> Result<BinaryNetwork> {
    let n = out_seq.len();
    let probs = out_seq.iter().map(|&d| edge_probability(d as f64, n)).collect::<Result<Vec<_>>>()?;
    let mut net = BinaryNetwork::unlabeled(n);
    for (i, &p) in probs.iter().enumerate() {
        for j in (0..n).filter(|&j| j != i) {
            if rng.random_bool(p) {
                net.add_edge(i, j);
            }
        }
    }
    Ok(net)
}

/// Edge i→j with probability in_seq[j] / (n − 1).
pub fn gen_indeg<R: Rng + ?Sized>(in_seq: &[usize], rng: &mut R) -> Result<BinaryNetwork> {
    let n = in_seq.len();
    let probs = in_seq.iter().map(|&d| edge_probability(d as f64, n)).collect::<Result<Vec<_>>>()?;
    let mut net = BinaryNetwork::unlabeled(n);
    for i in 0..n {
        for (j, &p) in probs.iter().enumerate() {
            if j != i && rng.random_bool(p) {
                net.add_edge(i, j);
            }
        }
    }
    Ok(net)
}

/// Degree-preserving randomisation: `swap_factor × |E|` attempted swaps of
/// (a→b, c→d) into (a→d, c→b). Swaps that would create a self-loop or a
/// duplicate edge are rejected. Two independently drawn edges that happen to
/// coincide also count as a (rejected) attempt.
pub fn gen_rewired<R: Rng + ?Sized>(net: &BinaryNetwork, swap_factor: usize, rng: &mut R) -> BinaryNetwork {
    let mut out = net.clone();
    let mut edges: Vec<(usize, usize)> = net.edges().collect();
    let m = edges.len();
    if m < 2 {
        return out;
    }
    for _ in 0..swap_factor * m {
        let e1 = rng.random_range(0..m);
        let e2 = rng.random_range(0..m);
        if e1 == e2 {
            continue;
        }
        let (a, b) = edges[e1];
        let (c, d) = edges[e2];
        if a == d || c == b || out.has_edge(a, d) || out.has_edge(c, b) {
            continue;
        }
        out.remove_edge(a, b);
        out.remove_edge(c, d);
        out.add_edge(a, d);
        out.add_edge(c, b);
        edges[e1] = (a, d);
        edges[e2] = (c, b);
    }
    out
}

/// Divisor used for the residual variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaDivisor {
    /// Maximum-likelihood normalization, N.
    Observations,
    /// N minus the number of free coefficients (2n − 1).
    #[default]
    ResidualDof,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub correction_factor: f64,
    pub divisor: SigmaDivisor,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { correction_factor: DEFAULT_SIGMA_CORRECTION, divisor: SigmaDivisor::default() }
    }
}

/// Fitted holder/issuer effects. `beta[0]` is fixed at zero: the first
/// country is the issuer baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogNormalFit {
    pub countries: Vec<Country>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma_raw: f64,
    pub sigma_corrected: f64,
    pub correction_factor: f64,
    pub identification: String,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl LogNormalFit {
    pub fn n(&self) -> usize {
        self.countries.len()
    }

    /// Expected log holding alpha_i + beta_j.
    pub fn linear_predictor(&self, i: usize, j: usize) -> f64 {
        self.alpha[i] + self.beta[j]
    }

    pub fn residual_summary(&self) -> Result<ResidualSummary> {
        let m = moments(&self.residuals)?;
        let jb = jarque_bera(&self.residuals)?;
        Ok(ResidualSummary { moments: m, jarque_bera: jb })
    }

    /// JSON-friendly view: parameters plus a residual summary.
    pub fn report(&self) -> Result<FitReport> {
        Ok(FitReport {
            countries: self.countries.clone(),
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            sigma_raw: self.sigma_raw,
            sigma_corrected: self.sigma_corrected,
            correction_factor: self.correction_factor,
            identification: self.identification.clone(),
            observations: self.residuals.len(),
            residuals: self.residual_summary()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    #[serde(flatten)]
    pub moments: Moments,
    pub jarque_bera: JarqueBera,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub countries: Vec<Country>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma_raw: f64,
    pub sigma_corrected: f64,
    pub correction_factor: f64,
    pub identification: String,
    pub observations: usize,
    pub residuals: ResidualSummary,
}

/// One observation of ln(s+1) for holder `i`, issuer `j`.
#[derive(Debug, Clone, Copy)]
struct Obs {
    i: usize,
    j: usize,
    y: f64,
}

/// (alpha, beta, residuals, sigma)
type RawFit = (Vec<f64>, Vec<f64>, Vec<f64>, f64);

/// Least-squares two-way dummy regression, solved through the normal
/// equations. Coefficient layout: alpha_0..alpha_{n-1}, beta_1..beta_{n-1}.
fn fit_observations(n: usize, obs: &[Obs], divisor: SigmaDivisor) -> Result<RawFit> {
    let p = 2 * n - 1;
    if obs.len() <= p {
        return Err(Error::Degenerate(format!("{} observations cannot identify {p} coefficients", obs.len())));
    }
    let beta_col = |j: usize| (j > 0).then(|| n + j - 1);
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    for o in obs {
        xtx[(o.i, o.i)] += 1.0;
        xty[o.i] += o.y;
        if let Some(b) = beta_col(o.j) {
            xtx[(b, b)] += 1.0;
            xtx[(o.i, b)] += 1.0;
            xtx[(b, o.i)] += 1.0;
            xty[b] += o.y;
        }
    }
    let chol = xtx.cholesky().ok_or_else(|| Error::Degenerate("design matrix is rank deficient".into()))?;
    let coef = chol.solve(&xty);
    let alpha: Vec<f64> = coef.iter().take(n).copied().collect();
    let beta: Vec<f64> = std::iter::once(0.0).chain(coef.iter().skip(n).copied()).collect();
    let residuals: Vec<f64> = obs.iter().map(|o| o.y - alpha[o.i] - beta[o.j]).collect();
    let ss: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = match divisor {
        SigmaDivisor::Observations => obs.len(),
        SigmaDivisor::ResidualDof => obs.len() - p,
    };
    Ok((alpha, beta, residuals, (ss / dof as f64).sqrt()))
}

fn build_fit(countries: Vec<Country>, obs: &[Obs], options: FitOptions) -> Result<LogNormalFit> {
    if !(options.correction_factor > 0.0) {
        return Err(Error::invalid("correction factor must be positive"));
    }
    let (alpha, beta, residuals, sigma_raw) = fit_observations(countries.len(), obs, options.divisor)?;
    Ok(LogNormalFit {
        identification: format!("beta[{}] = 0", countries[0]),
        countries,
        alpha,
        beta,
        sigma_raw,
        sigma_corrected: sigma_raw * options.correction_factor,
        correction_factor: options.correction_factor,
        residuals,
    })
}

fn slice_observations(slice: &AssetSlice, index: &[usize]) -> Vec<Obs> {
    let n = slice.n();
    let mut obs = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            obs.push(Obs { i: index[i], j: index[j], y: slice.holding(i, j).ln_1p() });
        }
    }
    obs
}

/// Fit ln(s_ij + 1) on holder and issuer dummies over all ordered pairs of
/// one slice. Censored zeros enter as ln(1) = 0.
pub fn fit_lognormal(slice: &AssetSlice, options: FitOptions) -> Result<LogNormalFit> {
    if slice.n() < 3 {
        return Err(Error::TooFewCountries { year: slice.year, count: slice.n(), required: 3 });
    }
    let identity: Vec<usize> = (0..slice.n()).collect();
    let obs = slice_observations(slice, &identity);
    build_fit(slice.countries().to_vec(), &obs, options)
}

/// Fit on a raw row-major holdings matrix whose off-diagonal entries only
/// need to exceed −1 (uncensored model draws can be negative).
pub fn fit_holdings(countries: Vec<Country>, holdings: &[f64], options: FitOptions) -> Result<LogNormalFit> {
    let n = countries.len();
    if n < 3 {
        return Err(Error::invalid("need at least three countries"));
    }
    if holdings.len() != n * n {
        return Err(Error::invalid("holdings matrix does not match country count"));
    }
    let mut obs = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let s = holdings[i * n + j];
            if !(s > -1.0) || !s.is_finite() {
                return Err(Error::invalid(format!("holding {s} at ({i},{j}) is not above -1")));
            }
            obs.push(Obs { i, j, y: s.ln_1p() });
        }
    }
    build_fit(countries, &obs, options)
}

/// One fit over several years with country effects shared across years.
/// Countries are the sorted union of the slices' country lists.
pub fn fit_lognormal_pooled(slices: &[AssetSlice], options: FitOptions) -> Result<LogNormalFit> {
    let mut countries: Vec<Country> = slices.iter().flat_map(|s| s.countries().iter().cloned()).collect();
    countries.sort();
    countries.dedup();
    if countries.len() < 3 {
        return Err(Error::invalid("pooled fit needs at least three countries"));
    }
    let mut obs = Vec::new();
    for s in slices {
        let map: Vec<usize> =
            s.countries().iter().map(|c| countries.binary_search(c).expect("country is in the union")).collect();
        obs.extend(slice_observations(s, &map));
    }
    build_fit(countries, &obs, options)
}

/// Distortion applied to generated holdings to mimic reported data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    /// Values below the floor become 0. A floor of 0 disables censoring.
    pub censor_floor: f64,
    /// Round to integer millions (half to even) after censoring.
    pub round: bool,
}

impl Distortion {
    pub const NONE: Distortion = Distortion { censor_floor: 0.0, round: false };
    pub const REPORTED: Distortion = Distortion { censor_floor: CENSOR_FLOOR_MUSD, round: true };

    pub fn apply(&self, s: f64) -> f64 {
        let s = if self.censor_floor > 0.0 && s < self.censor_floor { 0.0 } else { s };
        if self.round {
            s.round_ties_even()
        } else {
            s
        }
    }
}

/// Draw an n×n holdings matrix (row-major, zero diagonal) from the model with
/// the given noise scale.
pub fn gen_lognormal_values<R: Rng + ?Sized>(
    alpha: &[f64],
    beta: &[f64],
    sigma: f64,
    distortion: Distortion,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = alpha.len();
    if beta.len() != n {
        return Err(Error::invalid("alpha and beta lengths differ"));
    }
    if !(sigma >= 0.0) {
        return Err(Error::invalid("sigma must be nonnegative"));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let eps = if sigma > 0.0 { normal.sample(rng) } else { 0.0 };
            let s = (alpha[i] + beta[j] + eps).exp_m1();
            values[i * n + j] = distortion.apply(s);
        }
    }
    Ok(values)
}

/// Synthetic slice drawn with `sigma_corrected`, censored at the reporting
/// floor and rounded to integer millions. Year, countries and GDP come from
/// `template`.
pub fn gen_lognormal_slice<R: Rng + ?Sized>(
    fit: &LogNormalFit,
    template: &AssetSlice,
    rng: &mut R,
) -> Result<AssetSlice> {
    if template.countries() != fit.countries.as_slice() {
        return Err(Error::CountryMismatch);
    }
    let values = gen_lognormal_values(&fit.alpha, &fit.beta, fit.sigma_corrected, Distortion::REPORTED, rng)?;
    template.with_holdings(values)
}

/// Mean of sigma_true / sigma_refit over `trials` synthetic matrices drawn
/// from (alpha, beta, sigma) and passed through `distortion`.
pub fn estimate_sigma_correction<R: Rng + ?Sized>(
    alpha: &[f64],
    beta: &[f64],
    sigma: f64,
    distortion: Distortion,
    trials: usize,
    divisor: SigmaDivisor,
    rng: &mut R,
) -> Result<f64> {
    if trials < 100 {
        return Err(Error::invalid(format!("need at least 100 trials, got {trials}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::Degenerate("sigma must be positive".into()));
    }
    let n = alpha.len();
    if n < 3 {
        return Err(Error::invalid("need at least three countries"));
    }
    let mut total = 0.0;
    for _ in 0..trials {
        let values = gen_lognormal_values(alpha, beta, sigma, distortion, rng)?;
        let obs: Vec<Obs> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| Obs { i, j, y: values[i * n + j].ln_1p() })
            .collect();
        let (_, _, _, refit) = fit_observations(n, &obs, divisor)?;
        if !(refit > 0.0) {
            return Err(Error::Degenerate("refit sigma is zero".into()));
        }
        total += sigma / refit;
    }
    Ok(total / trials as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullModelKind {
    Er,
    OutDegree,
    InDegree,
    Rewiring,
    LogNormal,
}

impl NullModelKind {
    pub const ALL: [NullModelKind; 5] = [
        NullModelKind::Er,
        NullModelKind::OutDegree,
        NullModelKind::InDegree,
        NullModelKind::Rewiring,
        NullModelKind::LogNormal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NullModelKind::Er => "er",
            NullModelKind::OutDegree => "out-degree",
            NullModelKind::InDegree => "in-degree",
            NullModelKind::Rewiring => "rewiring",
            NullModelKind::LogNormal => "log-normal",
        }
    }
}

impl fmt::Display for NullModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NullModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NullModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown null model {s:?}")))
    }
}

/// A null-model family with its parameters extracted from an empirical
/// network. Generated networks carry the empirical country labels.
#[derive(Debug, Clone)]
pub enum NullModelSpec {
    Er { countries: Vec<Country>, d_bar: f64 },
    OutDegree { countries: Vec<Country>, out_seq: Vec<usize> },
    InDegree { countries: Vec<Country>, in_seq: Vec<usize> },
    Rewiring { template: BinaryNetwork, swap_factor: usize },
    LogNormal { fit: LogNormalFit, template: AssetSlice, rule: ThresholdRule },
}

impl NullModelSpec {
    /// Parameters for the four first-order families.
    pub fn from_network(kind: NullModelKind, net: &BinaryNetwork) -> Result<Self> {
        let countries = net.countries().to_vec();
        Ok(match kind {
            NullModelKind::Er => NullModelSpec::Er { countries, d_bar: net.mean_degree() },
            NullModelKind::OutDegree => NullModelSpec::OutDegree { countries, out_seq: net.out_degrees() },
            NullModelKind::InDegree => NullModelSpec::InDegree { countries, in_seq: net.in_degrees() },
            NullModelKind::Rewiring => {
                NullModelSpec::Rewiring { template: net.clone(), swap_factor: DEFAULT_SWAP_FACTOR }
            }
            NullModelKind::LogNormal => {
                return Err(Error::invalid("the log-normal model needs an asset slice; use from_slice"))
            }
        })
    }

    /// Parameters for any family, derived from a slice thresholded by `rule`.
    pub fn from_slice(
        kind: NullModelKind,
        slice: &AssetSlice,
        rule: ThresholdRule,
        options: FitOptions,
    ) -> Result<Self> {
        match kind {
            NullModelKind::LogNormal => {
                Ok(NullModelSpec::LogNormal { fit: fit_lognormal(slice, options)?, template: slice.clone(), rule })
            }
            _ => Self::from_network(kind, &threshold(slice, rule)?),
        }
    }

    pub fn kind(&self) -> NullModelKind {
        match self {
            NullModelSpec::Er { .. } => NullModelKind::Er,
            NullModelSpec::OutDegree { .. } => NullModelKind::OutDegree,
            NullModelSpec::InDegree { .. } => NullModelKind::InDegree,
            NullModelSpec::Rewiring { .. } => NullModelKind::Rewiring,
            NullModelSpec::LogNormal { .. } => NullModelKind::LogNormal,
        }
    }

    pub fn generate(&self, rng: &mut SimRng) -> Result<BinaryNetwork> {
        match self {
            NullModelSpec::Er { countries, d_bar } => {
                gen_er(countries.len(), *d_bar, rng)?.with_labels(countries.clone())
            }
            NullModelSpec::OutDegree { countries, out_seq } => gen_outdeg(out_seq, rng)?.with_labels(countries.clone()),
            NullModelSpec::InDegree { countries, in_seq } => gen_indeg(in_seq, rng)?.with_labels(countries.clone()),
            NullModelSpec::Rewiring { template, swap_factor } => Ok(gen_rewired(template, *swap_factor, rng)),
            NullModelSpec::LogNormal { fit, template, rule } => {
                threshold(&gen_lognormal_slice(fit, template, rng)?, *rule)
            }
        }
    }

    /// `count` networks, sample `k` drawn from the sub-seed `(master_seed, k)`.
    pub fn generate_batch(&self, count: usize, master_seed: u64) -> Result<Vec<BinaryNetwork>> {
        (0..count).into_par_iter().map(|k| self.generate(&mut sub_rng(master_seed, k as u64))).collect()
    }
}
