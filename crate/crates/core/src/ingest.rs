//! Bilateral asset and GDP panels, and per-year core slices.
//!
//! Both panels are flat CSV files with values in millions of USD:
//!
//! ```text
//! year,holder,issuer,value_musd
//! 2009,US,JP,100.5
//! ```
//!
//! ```text
//! year,country,gdp_musd
//! 2007,GR,318000
//! ```
//!
//! GDP inputs given in raw USD must be converted to millions beforehand.
//! Missing (holder, issuer) pairs are read as zero holdings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ASSET_HEADER: [&str; 4] = ["year", "holder", "issuer", "value_musd"];
pub const GDP_HEADER: [&str; 3] = ["year", "country", "gdp_musd"];

/// Opaque, case-sensitive country code. Ordering is lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Country(pub String);

impl Country {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Country {
    fn from(s: &str) -> Self {
        Country(s.to_owned())
    }
}

impl From<String> for Country {
    fn from(s: String) -> Self {
        Country(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssetPanel {
    records: BTreeMap<(i32, Country, Country), f64>,
}

impl AssetPanel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, year: i32, holder: Country, issuer: Country, value: f64) -> Result<()> {
        if holder == issuer {
            return Err(Error::SelfLoop { line: 0, country: holder.0 });
        }
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeValue { line: 0, value });
        }
        let key = (year, holder, issuer);
        if self.records.contains_key(&key) {
            return Err(Error::DuplicateKey { line: 0, key: format!("({},{},{})", key.0, key.1, key.2) });
        }
        self.records.insert(key, value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, year: i32, holder: &Country, issuer: &Country) -> Option<f64> {
        self.records.get(&(year, holder.clone(), issuer.clone())).copied()
    }

    pub fn records(&self) -> impl Iterator<Item = (i32, &Country, &Country, f64)> {
        self.records.iter().map(|((y, h, i), v)| (*y, h, i, *v))
    }

    pub fn years(&self) -> BTreeSet<i32> {
        self.records.keys().map(|k| k.0).collect()
    }

    fn year_records(&self, year: i32) -> impl Iterator<Item = (&Country, &Country, f64)> {
        self.records
            .range((year, Country(String::new()), Country(String::new()))..)
            .take_while(move |(k, _)| k.0 == year)
            .map(|((_, h, i), v)| (h, i, *v))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        parse_asset_table(File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(ASSET_HEADER).map_err(csv_io)?;
        for ((year, holder, issuer), value) in &self.records {
            wtr.write_record([year.to_string(), holder.0.clone(), issuer.0.clone(), value.to_string()])
                .map_err(csv_io)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GdpPanel {
    records: BTreeMap<(i32, Country), f64>,
}

impl GdpPanel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, year: i32, country: Country, gdp: f64) -> Result<()> {
        if !(gdp > 0.0) || !gdp.is_finite() {
            return Err(Error::NonPositiveGdp { line: 0, value: gdp });
        }
        let key = (year, country);
        if self.records.contains_key(&key) {
            return Err(Error::DuplicateKey { line: 0, key: format!("({},{})", key.0, key.1) });
        }
        self.records.insert(key, gdp);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, year: i32, country: &Country) -> Option<f64> {
        self.records.get(&(year, country.clone())).copied()
    }

    pub fn years(&self) -> BTreeSet<i32> {
        self.records.keys().map(|k| k.0).collect()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        parse_gdp_table(File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(GDP_HEADER).map_err(csv_io)?;
        for ((year, country), gdp) in &self.records {
            wtr.write_record([year.to_string(), country.0.clone(), gdp.to_string()]).map_err(csv_io)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Malformed { line, message: format!("{kind:?}") },
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Header {
            line: 1,
            found: header.iter().collect::<Vec<_>>().join(","),
            expected: expected.join(","),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<T> {
    let raw = rec.get(idx).ok_or_else(|| Error::Malformed { line, message: format!("missing field {name}") })?;
    raw.parse().map_err(|_| Error::Malformed { line, message: format!("cannot parse {name} from {raw:?}") })
}

fn finite(value: f64, name: &str, line: u64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Malformed { line, message: format!("{name} is not a finite number") })
    }
}

fn code(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<Country> {
    match rec.get(idx) {
        Some(s) if !s.is_empty() => Ok(Country::from(s)),
        _ => Err(Error::Malformed { line, message: format!("empty {name}") }),
    }
}

/// Parse an `assets.csv` stream.
pub fn parse_asset_table<R: Read>(input: R) -> Result<AssetPanel> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &ASSET_HEADER)?;
    let mut panel = AssetPanel::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let year: i32 = field(&rec, 0, "year", line)?;
        let holder = code(&rec, 1, "holder", line)?;
        let issuer = code(&rec, 2, "issuer", line)?;
        let value = finite(field(&rec, 3, "value_musd", line)?, "value_musd", line)?;
        if value < 0.0 {
            return Err(Error::NegativeValue { line, value });
        }
        if holder == issuer {
            return Err(Error::SelfLoop { line, country: holder.0 });
        }
        let key = (year, holder, issuer);
        if panel.records.contains_key(&key) {
            return Err(Error::DuplicateKey { line, key: format!("({},{},{})", key.0, key.1, key.2) });
        }
        panel.records.insert(key, value);
    }
    Ok(panel)
}

/// Parse a `gdp.csv` stream.
pub fn parse_gdp_table<R: Read>(input: R) -> Result<GdpPanel> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &GDP_HEADER)?;
    let mut panel = GdpPanel::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let year: i32 = field(&rec, 0, "year", line)?;
        let country = code(&rec, 1, "country", line)?;
        let gdp = finite(field(&rec, 2, "gdp_musd", line)?, "gdp_musd", line)?;
        if gdp <= 0.0 {
            return Err(Error::NonPositiveGdp { line, value: gdp });
        }
        let key = (year, country);
        if panel.records.contains_key(&key) {
            return Err(Error::DuplicateKey { line, key: format!("({},{})", key.0, key.1) });
        }
        panel.records.insert(key, gdp);
    }
    Ok(panel)
}

/// One year's self-contained bilateral asset matrix.
///
/// `holdings` is row-major: row = holder, column = issuer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetSlice {
    pub year: i32,
    countries: Vec<Country>,
    holdings: Vec<f64>,
    gdp: Vec<f64>,
    coverage: f64,
}

impl AssetSlice {
    /// Build a slice from a dense matrix. Coverage is set to 1.
    pub fn new(year: i32, countries: Vec<Country>, holdings: Vec<f64>, gdp: Vec<f64>) -> Result<Self> {
        let n = countries.len();
        if n < 2 {
            return Err(Error::TooFewCountries { year, count: n, required: 2 });
        }
        if holdings.len() != n * n || gdp.len() != n {
            return Err(Error::invalid("matrix or GDP vector does not match country count"));
        }
        let distinct: BTreeSet<_> = countries.iter().collect();
        if distinct.len() != n {
            return Err(Error::invalid("duplicate country codes"));
        }
        if holdings.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("holdings must be finite and nonnegative"));
        }
        if (0..n).any(|i| holdings[i * n + i] != 0.0) {
            return Err(Error::invalid("diagonal holdings must be zero"));
        }
        if gdp.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::invalid("GDP values must be positive"));
        }
        Ok(Self { year, countries, holdings, gdp, coverage: 1.0 })
    }

    pub fn n(&self) -> usize {
        self.countries.len()
    }

    pub fn countries(&self) -> &[Country] {
        &self.countries
    }

    pub fn gdp(&self) -> &[f64] {
        &self.gdp
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    #[inline]
    pub fn holding(&self, holder: usize, issuer: usize) -> f64 {
        self.holdings[holder * self.n() + issuer]
    }

    pub fn row(&self, holder: usize) -> &[f64] {
        let n = self.n();
        &self.holdings[holder * n..(holder + 1) * n]
    }

    pub fn holdings(&self) -> &[f64] {
        &self.holdings
    }

    /// Total external holdings of `holder` within the slice.
    pub fn row_total(&self, holder: usize) -> f64 {
        self.row(holder).iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.holdings.iter().sum()
    }

    pub fn index_of(&self, code: &Country) -> Option<usize> {
        self.countries.iter().position(|c| c == code)
    }

    pub fn indices_of(&self, codes: &[Country]) -> Result<Vec<usize>> {
        codes.iter().map(|c| self.index_of(c).ok_or_else(|| Error::UnknownCountry(c.0.clone()))).collect()
    }

    /// Same slice with a different holdings matrix (keeps year, countries, GDP).
    pub fn with_holdings(&self, holdings: Vec<f64>) -> Result<Self> {
        let mut s = Self::new(self.year, self.countries.clone(), holdings, self.gdp.clone())?;
        s.coverage = self.coverage;
        Ok(s)
    }

    /// Restrict to the countries at `keep` (in the given order).
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        let countries = keep.iter().map(|&i| self.countries[i].clone()).collect();
        let holdings =
            keep.iter().flat_map(|&i| keep.iter().map(move |&j| (i, j))).map(|(i, j)| self.holding(i, j)).collect();
        let gdp = keep.iter().map(|&i| self.gdp[i]).collect();
        Self::new(self.year, countries, holdings, gdp)
    }
}

/// Restrict one year of the panels to the reporting holders that also have
/// GDP data.
pub fn core_slice(assets: &AssetPanel, gdp: &GdpPanel, year: i32) -> Result<AssetSlice> {
    if !assets.years().contains(&year) || !gdp.years().contains(&year) {
        return Err(Error::YearAbsent(year));
    }
    let holders: BTreeSet<&Country> = assets.year_records(year).map(|(h, _, _)| h).collect();
    let countries: Vec<Country> = holders.into_iter().filter(|c| gdp.get(year, c).is_some()).cloned().collect();
    let n = countries.len();
    if n < 2 {
        return Err(Error::TooFewCountries { year, count: n, required: 2 });
    }
    let index: BTreeMap<&Country, usize> = countries.iter().enumerate().map(|(i, c)| (c, i)).collect();

    let mut holdings = vec![0.0; n * n];
    let mut reported_total = 0.0;
    for (holder, issuer, value) in assets.year_records(year) {
        let Some(&i) = index.get(holder) else { continue };
        reported_total += value;
        if let Some(&j) = index.get(issuer) {
            holdings[i * n + j] = value;
        }
    }
    let gdp_vec = countries.iter().map(|c| gdp.get(year, c).expect("filtered on GDP presence")).collect();
    let mut slice = AssetSlice::new(year, countries, holdings, gdp_vec)?;
    slice.coverage = if reported_total > 0.0 { (slice.total() / reported_total).min(1.0) } else { 1.0 };
    Ok(slice)
}
