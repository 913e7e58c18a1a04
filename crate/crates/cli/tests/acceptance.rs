//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the verdicts are always printed; exits nonzero if any criterion fails.
//!
//! The empirical-data criterion runs only when `FINNET_ACCEPTANCE_DATA`
//! points at a directory with the full `assets.csv` and `gdp.csv` panels.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{brute_aspl, brute_frac_le, brute_transitivity, random_network, random_slice, sequential_cascade};
use finnet_core::knockout::{ci_compare, ensemble_knockout};
use finnet_core::lgd::{cascade, CascadeEngine, PIGS};
use finnet_core::metrics::{edge_transitivity, fraction_spl_le, modified_aspl, Measure};
use finnet_core::nullmodels::{
    estimate_sigma_correction, fit_holdings, gen_er, gen_indeg, gen_lognormal_values, gen_outdeg, gen_rewired,
    Distortion, FitOptions, SigmaDivisor,
};
use finnet_core::seed::{derive_seed, rng_from_seed, sub_rng, SimRng};
use finnet_core::{
    core_slice, parse_asset_table, parse_gdp_table, AssetSlice, BinaryNetwork, Country, LgdSpec, MeasureVector,
    NullModelKind, NullModelSpec, Position, Strategy, ThresholdRule,
};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Verdict;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("metrics agree with brute-force enumeration", metrics_oracle),
        ("hand values for chain, complete and empty graphs", hand_values),
        ("null-model edge probabilities and degree preservation", null_statistics),
        ("log-normal recovery and censoring correction", lognormal_recovery),
        ("attack raises ASPL more than random error", robust_yet_fragile),
        ("cascade hand example, oracle, monotonicity, haircut", cascade_correctness),
        ("sweep and fine-grid output shapes", sweep_shape),
        ("empirical panels (data-conditional)", empirical_data),
        ("CLI outputs are byte-identical across runs", reproducibility),
    ];
    let mut failed = 0;
    for (k, (title, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag} [{}] {title} ({secs:.1}s): {detail}", k + 1);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn net_from_mask(n: usize, mask: u64) -> BinaryNetwork {
    let slots = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
    let edges: Vec<(usize, usize)> = slots.enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, e)| e).collect();
    BinaryNetwork::from_edges(n, edges).unwrap()
}

fn metrics_oracle() -> Verdict {
    let start = Instant::now();
    let mut checked = 0usize;
    let mut mismatches = Vec::new();
    let mut compare = |net: &BinaryNetwork, label: String| {
        let adj = net.to_adjacency();
        checked += 1;
        let ok = modified_aspl(net) == brute_aspl(&adj)
            && (2..=3).all(|k| fraction_spl_le(net, k).unwrap() == brute_frac_le(&adj, k))
            && edge_transitivity(net) == brute_transitivity(&adj);
        if !ok && mismatches.len() < 3 {
            mismatches.push(label);
        }
    };
    for n in 2..=4usize {
        for mask in 0..1u64 << (n * (n - 1)) {
            compare(&net_from_mask(n, mask), format!("n={n} mask={mask}"));
        }
    }
    let mut rng = rng_from_seed(1);
    for _ in 0..10_000 {
        let mask = rng.random_range(0..1u64 << 20);
        compare(&net_from_mask(5, mask), format!("n=5 mask={mask}"));
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches.is_empty() && elapsed < Duration::from_secs(60),
        format!("{checked} graphs, {} mismatches {mismatches:?}, {:.1}s", mismatches.len(), elapsed.as_secs_f64()),
    )
}

fn hand_values() -> Verdict {
    let chain = modified_aspl(&BinaryNetwork::from_edges(3, [(0, 1), (1, 2)]).unwrap());
    let complete_ok = (2..=10).all(|n| {
        let edges = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
        modified_aspl(&BinaryNetwork::from_edges(n, edges).unwrap()) == 1.0
    });
    let empty_ok = (1..=10).all(|n| modified_aspl(&BinaryNetwork::unlabeled(n)) == 4.0);
    verdict(
        (chain - 16.0 / 6.0).abs() <= 1e-12 && complete_ok && empty_ok,
        format!("chain {chain}, complete all 1.0: {complete_ok}, empty all 4.0: {empty_ok}"),
    )
}

/// Pearson statistic of per-slot edge counts against Bernoulli(p_ij) over
/// `draws` samples. Slots with p in {0, 1} must be deterministic and do not
/// count towards the degrees of freedom.
fn slot_gof(
    n: usize,
    p: impl Fn(usize, usize) -> f64,
    draws: usize,
    gen: impl Fn(&mut SimRng) -> BinaryNetwork,
    seed: u64,
) -> (bool, f64, f64) {
    let mut counts = vec![0usize; n * n];
    for k in 0..draws {
        let net = gen(&mut sub_rng(seed, k as u64));
        for (i, j) in net.edges() {
            counts[i * n + j] += 1;
        }
    }
    let (mut stat, mut df, mut deterministic) = (0.0, 0usize, true);
    for i in 0..n {
        for j in 0..n {
            let (pij, o) = (if i == j { 0.0 } else { p(i, j) }, counts[i * n + j] as f64);
            if pij == 0.0 || pij == 1.0 {
                deterministic &= o == pij * draws as f64;
                continue;
            }
            let e = pij * draws as f64;
            stat += (o - e).powi(2) / (e * (1.0 - pij));
            df += 1;
        }
    }
    let critical = ChiSquared::new(df as f64).unwrap().inverse_cdf(0.999);
    (deterministic && stat <= critical, stat, critical)
}

fn null_statistics() -> Verdict {
    let n = 12;
    let draws = 10_000;
    let d_bar = 3.3;
    let p = d_bar / (n - 1) as f64;
    let er = slot_gof(n, |_, _| p, draws, |r| gen_er(n, d_bar, r).unwrap(), 31);
    let out_seq = [0, 11, 3, 5, 1, 7, 2, 9, 4, 6, 10, 8];
    let od = slot_gof(n, |i, _| out_seq[i] as f64 / 11.0, draws, |r| gen_outdeg(&out_seq, r).unwrap(), 32);
    let in_seq = [4, 0, 11, 2, 8, 1, 6, 3, 9, 5, 7, 10];
    let id = slot_gof(n, |_, j| in_seq[j] as f64 / 11.0, draws, |r| gen_indeg(&in_seq, r).unwrap(), 33);

    let mut rng = rng_from_seed(34);
    let mut preserved = 0;
    for _ in 0..100 {
        let net = random_network(rng.random_range(6..30), rng.random_range(0.05..0.5), &mut rng);
        for s in 0..10 {
            let r = gen_rewired(&net, 20, &mut rng_from_seed(derive_seed(35, s)));
            if r.out_degrees() == net.out_degrees()
                && r.in_degrees() == net.in_degrees()
                && (0..r.n()).all(|i| !r.has_edge(i, i))
            {
                preserved += 1;
            }
        }
    }
    let detail = format!(
        "chi2 er {:.1}/{:.1}, out-degree {:.1}/{:.1}, in-degree {:.1}/{:.1}; rewiring preserved {preserved}/1000",
        er.1, er.2, od.1, od.2, id.1, id.2
    );
    verdict(er.0 && od.0 && id.0 && preserved == 1000, detail)
}

fn effects(n: usize, mean_alpha: f64, rng: &mut SimRng) -> (Vec<f64>, Vec<f64>) {
    let a = Normal::new(mean_alpha, 1.5).unwrap();
    let b = Normal::new(0.0, 1.5).unwrap();
    let alpha = (0..n).map(|_| a.sample(rng)).collect();
    let mut beta: Vec<f64> = (0..n).map(|_| b.sample(rng)).collect();
    beta[0] = 0.0;
    (alpha, beta)
}

fn lognormal_recovery() -> Verdict {
    let n = 64;
    let labels: Vec<Country> = (0..n).map(|i| Country(format!("K{i:02}"))).collect();
    let mut good = 0;
    for seed in 0..100 {
        let mut rng = rng_from_seed(derive_seed(40, seed));
        let (alpha, beta) = effects(n, 3.0, &mut rng);
        let values = gen_lognormal_values(&alpha, &beta, 1.5, Distortion::NONE, &mut rng).unwrap();
        let fit = fit_holdings(labels.clone(), &values, FitOptions::default()).unwrap();
        let jb = fit.residual_summary().unwrap().jarque_bera.p_value;
        if (fit.sigma_raw / 1.5 - 1.0).abs() < 0.02 && jb > 0.01 {
            good += 1;
        }
    }
    // A regime where a sizeable share of holdings falls under the floor, as in
    // reported data.
    let mut rng = rng_from_seed(41);
    let (alpha, beta) = effects(n, 1.0, &mut rng);
    let div = SigmaDivisor::default();
    let censored = estimate_sigma_correction(&alpha, &beta, 1.5, Distortion::REPORTED, 100, div, &mut rng).unwrap();
    let uncensored = estimate_sigma_correction(&alpha, &beta, 1.5, Distortion::NONE, 100, div, &mut rng).unwrap();
    // For an exact model sigma_hat^2 * dof / sigma^2 is chi-squared(dof), so
    // the chance that a correct fit lands within 2% is known in closed form.
    let dof = (n * (n - 1) - (2 * n - 1)) as f64;
    let chi = ChiSquared::new(dof).unwrap();
    let ideal = chi.cdf(1.02f64.powi(2) * dof) - chi.cdf(0.98f64.powi(2) * dof);
    verdict(
        good >= 95 && censored > 1.0 && (uncensored - 1.0).abs() <= 0.01,
        format!(
            "{good}/100 seeds within 2% with JB p > 0.01 (an exact estimator lands within 2% with probability {ideal:.3}); \
             correction {censored:.4} at floor 0.5, {uncensored:.4} at floor 0"
        ),
    )
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn robust_yet_fragile() -> Verdict {
    let text = std::fs::read_to_string(fixture("scale_free_64.csv")).unwrap();
    let edges = text.lines().skip(1).map(|l| {
        let (a, b) = l.split_once(',').unwrap();
        (a.parse().unwrap(), b.parse().unwrap())
    });
    let net = BinaryNetwork::from_edges(64, edges).unwrap();
    let trials = 2000;
    let attack = ensemble_knockout(std::slice::from_ref(&net), Strategy::Attack, trials, 50).unwrap();
    let error = ensemble_knockout(std::slice::from_ref(&net), Strategy::Error, trials, 51).unwrap();
    let g = 10; // grid point 0.10
    let se = (attack.std[g].powi(2) / trials as f64 + error.std[g].powi(2) / trials as f64).sqrt();
    let z = (attack.mean[g] - error.mean[g]) / se;
    verdict(
        z > 2.326,
        format!(
            "at 10% removed: attack {:.4} vs error {:.4}, z = {z:.1} (critical 2.326)",
            attack.mean[g], error.mean[g]
        ),
    )
}

fn cascade_correctness() -> Verdict {
    let codes = |c: &[&str]| c.iter().map(|&s| Country::from(s)).collect::<Vec<_>>();
    let hand = AssetSlice::new(
        2007,
        codes(&["A", "B", "C"]),
        vec![0.0, 0.0, 0.0, 50.0, 0.0, 30.0, 1.0, 1.0, 0.0],
        vec![100.0; 3],
    )
    .unwrap();
    let r = cascade(&hand, &codes(&["A"]), LgdSpec::new(0.1, 0.1).unwrap()).unwrap();
    let hand_ok = r.rounds == vec![codes(&["B"])] && r.defaulted == codes(&["A", "B"]) && r.impact == 2.0 / 3.0;

    let mut rng = rng_from_seed(60);
    let (mut agree, mut monotone, mut haircut) = (0, 0, 0);
    let grid = [0.0, 0.05, 0.1, 0.2, 0.4, 0.8];
    for _ in 0..1000 {
        let n = rng.random_range(3..15);
        let slice = random_slice(n, rng.random_range(0.2..0.9), &mut rng);
        let k = rng.random_range(1..=3.min(n - 1));
        let init: Vec<usize> = rand::seq::index::sample(&mut rng, n, k).into_vec();
        let (d1, d2) = (rng.random_range(0.0..0.6), rng.random_range(0.0..0.3));
        let sync = CascadeEngine::new(&slice, LgdSpec::new(d1, d2).unwrap()).run(&init);
        if sync.defaulted == sequential_cascade(&slice, &init, d1, d2, 1.0, &mut rng) {
            agree += 1;
        }
        let count = |a: f64, b: f64| CascadeEngine::new(&slice, LgdSpec::new(a, b).unwrap()).run(&init).count;
        let table: Vec<Vec<usize>> = grid.iter().map(|&a| grid.iter().map(|&b| count(a, b)).collect()).collect();
        let ok = (0..grid.len()).all(|i| {
            (0..grid.len())
                .all(|j| (i == 0 || table[i][j] <= table[i - 1][j]) && (j == 0 || table[i][j] <= table[i][j - 1]))
        });
        monotone += ok as usize;
        let h = [0.5, 0.25, 0.125][rng.random_range(0..3)];
        let a = CascadeEngine::new(&slice, LgdSpec::with_haircut(d1, d2, h).unwrap()).run(&init);
        let b = CascadeEngine::new(&slice, LgdSpec::new(d1 / h, d2 / h).unwrap()).run(&init);
        haircut += (a == b) as usize;
    }
    verdict(
        hand_ok && agree == 1000 && monotone == 1000 && haircut == 1000,
        format!("hand example {hand_ok}; sequential agreement {agree}/1000; monotone {monotone}/1000; haircut {haircut}/1000"),
    )
}

fn finnet(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_finnet")).args(args).env("FINNET_DATA_DIR", fixture("data")).output().unwrap()
}

/// Data rows of a CSV written with a metadata header.
fn csv_rows(out: &std::process::Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn sweep_shape() -> Verdict {
    let sweep = finnet(&["lgd-sweep", "--years", "2006-2008", "--k-max", "2"]);
    let rows = csv_rows(&sweep);
    let mut per_cell = std::collections::BTreeMap::<(String, String), usize>::new();
    for r in &rows {
        *per_cell.entry((r[0].clone(), r[3].clone())).or_default() += 1;
    }
    let sweep_ok = sweep.status.success() && per_cell.len() == 6 && per_cell.values().all(|&c| c == 24);

    let grid = finnet(&["pigs-grid", "--year", "2007"]);
    let mut per_subset = std::collections::BTreeMap::<String, usize>::new();
    for r in csv_rows(&grid) {
        *per_subset.entry(r[0].clone()).or_default() += 1;
    }
    let grid_ok = grid.status.success() && per_subset.len() == 14 && per_subset.values().all(|&c| c == 51 * 51);
    verdict(
        sweep_ok && grid_ok,
        format!(
            "sweep rows per (year, k): {:?}; fine grid: {} subsets with {:?} points",
            per_cell.values().collect::<std::collections::BTreeSet<_>>(),
            per_subset.len(),
            per_subset.values().collect::<std::collections::BTreeSet<_>>()
        ),
    )
}

fn empirical_data() -> Verdict {
    let Some(dir) = std::env::var_os("FINNET_ACCEPTANCE_DATA").map(PathBuf::from) else {
        return Verdict::Skip("set FINNET_ACCEPTANCE_DATA to a directory with assets.csv and gdp.csv".into());
    };
    let open = |f: &str| std::io::BufReader::new(std::fs::File::open(dir.join(f)).unwrap());
    let assets = parse_asset_table(open("assets.csv")).unwrap();
    let gdp = parse_gdp_table(open("gdp.csv")).unwrap();
    let years: Vec<i32> = (2001..=2009).collect();
    let slices: Vec<AssetSlice> = years.iter().map(|&y| core_slice(&assets, &gdp, y).unwrap()).collect();
    let sizes_ok = slices.iter().all(|s| s.n() >= 64 && s.coverage() >= 0.974);

    // Transitivity must sit above every null interval, allowing one stray
    // year per (rule, model) cell.
    let mut cells_ok = 0;
    let mut cells = 0;
    for rule in [ThresholdRule::AboveAverageExposure, ThresholdRule::gdp_normalized(0.0417).unwrap()] {
        for kind in NullModelKind::ALL {
            let mut above = 0;
            for (y, slice) in years.iter().zip(&slices) {
                let net = finnet_core::threshold(slice, rule).unwrap();
                let spec = NullModelSpec::from_slice(kind, slice, rule, FitOptions::default()).unwrap();
                let emp = MeasureVector::compute(&net, Default::default());
                let report =
                    ci_compare(&emp, &spec, 10_000, 0.05, Default::default(), derive_seed(70, *y as u64)).unwrap();
                let row = report.rows.iter().find(|r| r.measure == Measure::EdgeTransitivity).unwrap();
                above += (row.position == Position::Above) as usize;
            }
            cells += 1;
            cells_ok += (above >= years.len() - 1) as usize;
        }
    }

    let s2007 = &slices[6];
    let spec = LgdSpec::new(0.1, 0.1).unwrap();
    let singles_ok = PIGS
        .iter()
        .all(|&c| cascade(s2007, &[Country::from(c)], spec).map(|r| r.defaulted.len() <= 2).unwrap_or(false));
    let gr_ie = cascade(s2007, &[Country::from("GR"), Country::from("IE")], spec).unwrap();
    verdict(
        sizes_ok && cells_ok == cells && singles_ok && gr_ie.rounds.len() == 6,
        format!(
            "sizes/coverage {sizes_ok}; transitivity above CI in {cells_ok}/{cells} cells; PIGS singles {singles_ok}; GR+IE rounds {}",
            gr_ie.rounds.len()
        ),
    )
}

fn reproducibility() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 11] = [
        &["build", "--year", "2007", "--rule", "B"],
        &["fit-lognormal", "--years", "2006-2008", "--calibrate", "100"],
        &["gen-null", "--year", "2007", "--model", "rewiring", "--count", "20"],
        &["gen-null", "--year", "2007", "--model", "log-normal", "--count", "20"],
        &["knockout", "--years", "2006-2008", "--strategy", "error", "--trials", "50"],
        &["knockout", "--years", "2007", "--strategy", "attack", "--model", "er", "--trials", "50"],
        &["ci-table", "--years", "2006-2008", "--samples", "200"],
        &["lgd", "--year", "2007", "--initial", "GR,IE"],
        &["lgd-sweep", "--years", "2007", "--k-max", "2"],
        &["pigs-grid", "--year", "2007", "--group", "GR,IE"],
        &["export", "--year", "2007", "--format", "dot"],
    ];
    let mut differing = Vec::new();
    for (k, args) in runs.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|rep| {
                let path = dir.path().join(format!("{k}-{rep}.out"));
                let mut full: Vec<&str> = args.to_vec();
                let p = path.to_str().unwrap();
                full.extend(["--seed", "99", "--out", p]);
                let out = finnet(&full);
                assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
                std::fs::read(&path).unwrap()
            })
            .collect();
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(args[0]);
        }
    }
    verdict(differing.is_empty(), format!("{} runs compared, differing: {differing:?}", runs.len()))
}
