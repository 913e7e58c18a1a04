use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use finnet_core::knockout::{ci_compare, ci_table, ensemble_knockout, null_ensemble_knockout, write_ci_table_csv};
use finnet_core::lgd::{
    cascade, enumerate_impacts, influence_ranking, pigs_grid, sweep_grid, write_pigs_csv, write_ranking_csv,
    write_sweep_csv,
};
use finnet_core::netbuild::export_graph;
use finnet_core::nullmodels::{
    estimate_sigma_correction, fit_lognormal, fit_lognormal_pooled, Distortion, FitOptions, SigmaDivisor,
};
use finnet_core::seed::{derive_seed, sub_rng};
use finnet_core::{
    core_slice, parse_asset_table, parse_gdp_table, threshold, AssetPanel, AssetSlice, BinaryNetwork, CiReport,
    Country, ExportFormat, GdpPanel, LgdSpec, MeasureVector, NullModelSpec, ThresholdRule,
};
use serde::Serialize;

use crate::args::*;
use crate::output::{document, table, write_file, Meta, Sink};
use crate::Failure;

pub fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Ctx { seed: cli.seed, sink: Sink(cli.out) };
    match cli.command {
        Command::Build(a) => build(&ctx, a),
        Command::FitLognormal(a) => fit(&ctx, a),
        Command::GenNull(a) => gen_null(&ctx, a),
        Command::Knockout(a) => knockout(&ctx, a),
        Command::CiTable(a) => ci_table_cmd(&ctx, a),
        Command::Lgd(a) => lgd(&ctx, a),
        Command::LgdSweep(a) => lgd_sweep(&ctx, a),
        Command::PigsGrid(a) => pigs(&ctx, a.data, a.year, &a.group, a.format),
        Command::Export(a) => export(&ctx, a),
    }
}

struct Ctx {
    seed: u64,
    sink: Sink,
}

struct Panels {
    assets: AssetPanel,
    gdp: GdpPanel,
}

impl Panels {
    fn load(data: &DataArgs) -> Result<Self, Failure> {
        let assets = resolve(&data.assets, &data.data_dir, "assets.csv", "--assets")?;
        let gdp = resolve(&data.gdp, &data.data_dir, "gdp.csv", "--gdp")?;
        Ok(Self { assets: read_table(&assets, parse_asset_table)?, gdp: read_table(&gdp, parse_gdp_table)? })
    }

    fn slice(&self, year: i32) -> Result<AssetSlice, Failure> {
        Ok(core_slice(&self.assets, &self.gdp, year)?)
    }
}

fn resolve(explicit: &Option<PathBuf>, dir: &Option<PathBuf>, file: &str, flag: &str) -> Result<PathBuf, Failure> {
    match (explicit, dir) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(d)) => Ok(d.join(file)),
        (None, None) => {
            Err(Failure::Usage(format!("no input for {file}: pass {flag} or --data-dir, or set {DATA_DIR_ENV}")))
        }
    }
}

fn read_table<T>(path: &Path, parse: fn(BufReader<File>) -> finnet_core::Result<T>) -> Result<T, Failure> {
    let file = File::open(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    parse(BufReader::new(file)).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn rule_of(tag: RuleTag, t: f64) -> Result<ThresholdRule, Failure> {
    Ok(match tag {
        RuleTag::A => ThresholdRule::AboveAverageExposure,
        RuleTag::B => ThresholdRule::gdp_normalized(t)?,
    })
}

fn rule_meta(meta: Meta, rule: ThresholdRule) -> Meta {
    match rule {
        ThresholdRule::AboveAverageExposure => meta.set("rule", "A"),
        ThresholdRule::GdpNormalized { t } => meta.set("rule", "B").set("t", t),
    }
}

fn codes(raw: &[String]) -> Vec<Country> {
    raw.iter().map(|s| Country::from(s.trim())).collect()
}

fn edge_rows(net: &BinaryNetwork) -> Vec<(String, String)> {
    let c = net.countries();
    net.edges().map(|(i, j)| (c[i].to_string(), c[j].to_string())).collect()
}

#[derive(Serialize)]
struct NetworkDoc {
    year: i32,
    n: usize,
    edges: usize,
    mean_degree: f64,
    coverage: f64,
    countries: Vec<Country>,
    edge_list: Vec<(String, String)>,
}

fn build(ctx: &Ctx, a: BuildArgs) -> Result<(), Failure> {
    let rule = rule_of(a.rule.rule, a.rule.t)?;
    let slice = Panels::load(&a.data)?.slice(a.year)?;
    let net = threshold(&slice, rule)?;
    let doc = NetworkDoc {
        year: a.year,
        n: net.n(),
        edges: net.edge_count(),
        mean_degree: net.mean_degree(),
        coverage: slice.coverage(),
        countries: net.countries().to_vec(),
        edge_list: edge_rows(&net),
    };
    eprintln!("n={} edges={} mean_degree={:.4} coverage={:.4}", doc.n, doc.edges, doc.mean_degree, doc.coverage);
    let meta = rule_meta(Meta::new("build", ctx.seed).set("year", a.year), rule);
    let bytes = match a.format {
        TableFormat::Json => document(&meta, "network", &doc)?,
        TableFormat::Csv => {
            let meta = meta
                .set("n", doc.n)
                .set("edges", doc.edges)
                .set("mean_degree", doc.mean_degree)
                .set("coverage", doc.coverage);
            table(&meta, "#", |buf| {
                let mut w = csv::Writer::from_writer(buf);
                w.write_record(["holder", "issuer"]).map_err(csv_err)?;
                for (h, i) in &doc.edge_list {
                    w.write_record([h, i]).map_err(csv_err)?;
                }
                w.flush()?;
                Ok(())
            })?
        }
    };
    ctx.sink.write(&bytes)
}

fn csv_err(e: csv::Error) -> finnet_core::Error {
    finnet_core::Error::Io(e.into())
}

#[derive(Serialize)]
struct FitDoc {
    years: Vec<i32>,
    #[serde(flatten)]
    report: finnet_core::nullmodels::FitReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibrated_correction: Option<f64>,
}

fn fit(ctx: &Ctx, a: FitArgs) -> Result<(), Failure> {
    let divisor = match a.divisor {
        Divisor::ResidualDof => SigmaDivisor::ResidualDof,
        Divisor::Observations => SigmaDivisor::Observations,
    };
    let options = FitOptions { correction_factor: a.correction, divisor };
    let panels = Panels::load(&a.data)?;
    let slices = a.years.0.iter().map(|&y| panels.slice(y)).collect::<Result<Vec<_>, _>>()?;
    let fits = if a.pooled {
        vec![(a.years.0.clone(), fit_lognormal_pooled(&slices, options)?)]
    } else {
        slices.iter().map(|s| Ok((vec![s.year], fit_lognormal(s, options)?))).collect::<Result<Vec<_>, Failure>>()?
    };
    let docs = fits
        .into_iter()
        .enumerate()
        .map(|(k, (years, fit))| {
            let calibrated_correction = match a.calibrate {
                None => None,
                Some(trials) => Some(estimate_sigma_correction(
                    &fit.alpha,
                    &fit.beta,
                    fit.sigma_corrected,
                    Distortion::REPORTED,
                    trials,
                    divisor,
                    &mut sub_rng(ctx.seed, k as u64),
                )?),
            };
            Ok(FitDoc { years, report: fit.report()?, calibrated_correction })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut meta = Meta::new("fit-lognormal", ctx.seed)
        .set("years", &a.years)
        .set("pooled", a.pooled)
        .set("correction", a.correction)
        .set("divisor", format!("{:?}", a.divisor).to_lowercase());
    if let Some(trials) = a.calibrate {
        meta = meta.set("calibrate", trials);
    }
    ctx.sink.write(&document(&meta, "fits", &docs)?)
}

fn null_spec(
    kind: finnet_core::NullModelKind,
    slice: &AssetSlice,
    rule: ThresholdRule,
    swap_factor: usize,
) -> Result<NullModelSpec, Failure> {
    Ok(match NullModelSpec::from_slice(kind, slice, rule, FitOptions::default())? {
        NullModelSpec::Rewiring { template, .. } => NullModelSpec::Rewiring { template, swap_factor },
        spec => spec,
    })
}

#[derive(Serialize)]
struct SampleDoc {
    sample: usize,
    edges: Vec<(String, String)>,
}

fn gen_null(ctx: &Ctx, a: GenNullArgs) -> Result<(), Failure> {
    let rule = rule_of(a.rule.rule, a.rule.t)?;
    let slice = Panels::load(&a.data)?.slice(a.year)?;
    let spec = null_spec(a.model, &slice, rule, a.swap_factor)?;
    let nets = spec.generate_batch(a.count, ctx.seed)?;
    let meta = rule_meta(Meta::new("gen-null", ctx.seed).set("year", a.year), rule)
        .set("model", a.model)
        .set("count", a.count)
        .set("swap_factor", a.swap_factor);
    let bytes = match a.format {
        TableFormat::Json => {
            let docs: Vec<SampleDoc> =
                nets.iter().enumerate().map(|(sample, n)| SampleDoc { sample, edges: edge_rows(n) }).collect();
            document(&meta, "samples", &docs)?
        }
        TableFormat::Csv => table(&meta, "#", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["sample", "holder", "issuer"]).map_err(csv_err)?;
            for (k, net) in nets.iter().enumerate() {
                for (h, i) in edge_rows(net) {
                    w.write_record([k.to_string(), h, i]).map_err(csv_err)?;
                }
            }
            w.flush()?;
            Ok(())
        })?,
    };
    ctx.sink.write(&bytes)
}

fn knockout(ctx: &Ctx, a: KnockoutArgs) -> Result<(), Failure> {
    let rule = rule_of(a.rule.rule, a.rule.t)?;
    let panels = Panels::load(&a.data)?;
    let slices = a.years.0.iter().map(|&y| panels.slice(y)).collect::<Result<Vec<_>, _>>()?;
    let nets = slices.iter().map(|s| threshold(s, rule)).collect::<finnet_core::Result<Vec<_>>>()?;
    let specs = match a.model {
        Some(kind) => Some(
            slices
                .iter()
                .map(|s| null_spec(kind, s, rule, finnet_core::nullmodels::DEFAULT_SWAP_FACTOR))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let curve = match &specs {
        Some(specs) => null_ensemble_knockout(specs, a.strategy, a.trials, ctx.seed)?,
        None => ensemble_knockout(&nets, a.strategy, a.trials, ctx.seed)?,
    };
    let meta = rule_meta(Meta::new("knockout", ctx.seed).set("years", &a.years), rule)
        .set("strategy", a.strategy)
        .set("model", a.model.map_or("empirical".to_string(), |m| m.to_string()))
        .set("trials", a.trials)
        .set("samples", a.samples)
        .set("alpha", a.alpha)
        .set("pairing", a.pairing);

    if let (Some(path), Some(specs)) = (&a.ci_out, &specs) {
        let reports = ci_reports(&a.years.0, &nets, specs, rule, a.samples, a.alpha, a.pairing, |y| {
            derive_seed(ctx.seed, y as u64)
        })?;
        write_file(path, &document(&meta, "reports", &reports)?)?;
    }
    let bytes = match a.format {
        TableFormat::Json => document(&meta, "curve", &curve)?,
        TableFormat::Csv => table(&meta, "#", |buf| curve.write_csv(buf))?,
    };
    ctx.sink.write(&bytes)
}

#[allow(clippy::too_many_arguments)]
fn ci_reports(
    years: &[i32],
    nets: &[BinaryNetwork],
    specs: &[NullModelSpec],
    rule: ThresholdRule,
    samples: usize,
    alpha: f64,
    pairing: finnet_core::DegreePairing,
    seed_for: impl Fn(i32) -> u64,
) -> Result<Vec<CiReport>, Failure> {
    years
        .iter()
        .zip(nets)
        .zip(specs)
        .map(|((&year, net), spec)| {
            let empirical = MeasureVector::compute(net, pairing);
            let mut report = ci_compare(&empirical, spec, samples, alpha, pairing, seed_for(year))?;
            report.rule = Some(rule.tag().to_string());
            report.year = Some(year);
            Ok(report)
        })
        .collect()
}

fn ci_table_cmd(ctx: &Ctx, a: CiTableArgs) -> Result<(), Failure> {
    let panels = Panels::load(&a.data)?;
    let slices = a.years.0.iter().map(|&y| panels.slice(y)).collect::<Result<Vec<_>, _>>()?;
    let mut reports = Vec::new();
    for &tag in &a.rules {
        let rule = rule_of(tag, a.t)?;
        let nets = slices.iter().map(|s| threshold(s, rule)).collect::<finnet_core::Result<Vec<_>>>()?;
        for &kind in &a.models {
            let specs = slices
                .iter()
                .map(|s| null_spec(kind, s, rule, finnet_core::nullmodels::DEFAULT_SWAP_FACTOR))
                .collect::<Result<Vec<_>, _>>()?;
            // Streams depend only on (year, rule, model), not on which other
            // cells were requested.
            let seed_for = |y: i32| derive_seed(derive_seed(derive_seed(ctx.seed, y as u64), tag as u64), kind as u64);
            reports.extend(ci_reports(&a.years.0, &nets, &specs, rule, a.samples, a.alpha, a.pairing, seed_for)?);
        }
    }
    let rows = ci_table(&reports)?;
    let meta = Meta::new("ci-table", ctx.seed)
        .set("years", &a.years)
        .list("rules", &a.rules.iter().map(|r| format!("{r:?}")).collect::<Vec<_>>())
        .set("t", a.t)
        .list("models", &a.models)
        .set("samples", a.samples)
        .set("alpha", a.alpha)
        .set("pairing", a.pairing);
    let bytes = match a.format {
        TableFormat::Json => document(&meta, "rows", &rows)?,
        TableFormat::Csv => table(&meta, "#", |buf| write_ci_table_csv(&rows, buf))?,
    };
    ctx.sink.write(&bytes)
}

fn lgd(ctx: &Ctx, a: LgdArgs) -> Result<(), Failure> {
    if a.pigs_grid {
        return pigs(ctx, a.data, a.year, &a.group, TableFormat::Csv);
    }
    let spec = LgdSpec::with_haircut(a.d1, a.d2, a.threshold.haircut)?;
    let slice = Panels::load(&a.data)?.slice(a.year)?;
    let meta = Meta::new("lgd", ctx.seed)
        .set("year", a.year)
        .set("d1", a.d1)
        .set("d2", a.d2)
        .set("haircut", a.threshold.haircut);
    let bytes = if a.initial.is_empty() {
        let summary = enumerate_impacts(&slice, spec, a.k_max)?;
        document(&meta.set("k_max", a.k_max), "impacts", &summary)?
    } else {
        let trace = cascade(&slice, &codes(&a.initial), spec)?;
        document(&meta.list("initial", &a.initial), "trace", &trace)?
    };
    ctx.sink.write(&bytes)
}

fn lgd_sweep(ctx: &Ctx, a: SweepArgs) -> Result<(), Failure> {
    let panels = Panels::load(&a.data)?;
    let mut summaries = Vec::new();
    for &year in &a.years.0 {
        let slice = panels.slice(year)?;
        summaries.extend(sweep_grid(&slice, &a.d1, &a.d2, a.k_max, a.threshold.haircut)?);
    }
    let meta = Meta::new("lgd-sweep", ctx.seed)
        .set("years", &a.years)
        .list("d1", &a.d1)
        .list("d2", &a.d2)
        .set("k_max", a.k_max)
        .set("haircut", a.threshold.haircut);
    if let Some(path) = &a.ranking {
        let ranking = influence_ranking(&summaries, a.top)?;
        let meta = meta.clone().set("top", a.top);
        write_file(path, &table(&meta, "#", |buf| write_ranking_csv(&ranking, buf))?)?;
    }
    let bytes = match a.format {
        TableFormat::Json => document(&meta, "summaries", &summaries)?,
        TableFormat::Csv => table(&meta, "#", |buf| write_sweep_csv(&summaries, buf))?,
    };
    ctx.sink.write(&bytes)
}

fn pigs(ctx: &Ctx, data: DataArgs, year: i32, group: &[String], format: TableFormat) -> Result<(), Failure> {
    let slice = Panels::load(&data)?.slice(year)?;
    let points = pigs_grid(&slice, &codes(group))?;
    let meta = Meta::new("pigs-grid", ctx.seed).set("year", year).list("group", group);
    let bytes = match format {
        TableFormat::Json => document(&meta, "points", &points)?,
        TableFormat::Csv => table(&meta, "#", |buf| write_pigs_csv(&points, buf))?,
    };
    ctx.sink.write(&bytes)
}

fn export(ctx: &Ctx, a: ExportArgs) -> Result<(), Failure> {
    let rule = rule_of(a.rule.rule, a.rule.t)?;
    let slice = Panels::load(&a.data)?.slice(a.year)?;
    let net = threshold(&slice, rule)?;
    let (format, prefix, name) = match a.format {
        GraphFormat::EdgeList => (ExportFormat::EdgeList, "#", "edge-list"),
        GraphFormat::Dot => (ExportFormat::Dot, "//", "dot"),
    };
    let meta = rule_meta(Meta::new("export", ctx.seed).set("year", a.year), rule).set("format", name);
    ctx.sink.write(&table(&meta, prefix, |buf| export_graph(&net, &slice, format, buf))?)
}
