//! Reading and cleaning historical demand CSVs (`store_id,date,demand`).

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Cleaning {
    pub drop_weekends: bool,
    pub detrend_linear: bool,
    /// Calendar months (1-12) to remove after detrending.
    pub drop_months: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreSeries {
    pub id: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl StoreSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Stores in ascending id order, plus the OLS slope removed (per day), if any.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandData {
    pub stores: Vec<StoreSeries>,
    pub trend_per_day: Option<f64>,
}

impl DemandData {
    /// Every distinct date, ascending.
    pub fn all_dates(&self) -> Vec<NaiveDate> {
        let mut d: Vec<NaiveDate> = self.stores.iter().flat_map(|s| s.dates.iter().copied()).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

#[derive(Debug, Deserialize)]
struct Record {
    store_id: String,
    date: String,
    demand: f64,
}

pub fn read_demand_csv(path: &Path) -> Result<Vec<StoreSeries>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_demand_csv(file)
}

/// Parses rows grouped by store. Row numbers in errors count data rows from 1.
pub fn parse_demand_csv<R: Read>(reader: R) -> Result<Vec<StoreSeries>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse { row: 0, msg: e.to_string() })?.clone();
    for col in ["store_id", "date", "demand"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Parse { row: 0, msg: format!("missing column {col:?}") });
        }
    }
    let mut by_store: BTreeMap<String, StoreSeries> = BTreeMap::new();
    for (idx, rec) in rdr.deserialize::<Record>().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        let date = NaiveDate::parse_from_str(&rec.date, "%Y-%m-%d")
            .map_err(|e| Error::Parse { row, msg: format!("bad date {:?}: {e}", rec.date) })?;
        if !(rec.demand.is_finite() && rec.demand >= 0.0) {
            return Err(Error::Parse { row, msg: format!("demand must be a nonnegative number, got {}", rec.demand) });
        }
        let entry = by_store.entry(rec.store_id.clone()).or_insert_with(|| StoreSeries {
            id: rec.store_id.clone(),
            dates: Vec::new(),
            values: Vec::new(),
        });
        if entry.dates.last().is_some_and(|&last| date <= last) {
            return Err(Error::NonMonotoneDates { store: rec.store_id, row });
        }
        entry.dates.push(date);
        entry.values.push(rec.demand);
    }
    Ok(by_store.into_values().collect())
}

fn day_number(d: NaiveDate) -> f64 {
    d.num_days_from_ce() as f64
}

/// Applies weekend removal, a pooled mean-preserving linear detrend, then
/// month removal.
pub fn clean(mut stores: Vec<StoreSeries>, cleaning: &Cleaning) -> DemandData {
    let retain = |s: &mut StoreSeries, keep: &dyn Fn(NaiveDate) -> bool| {
        let (dates, values): (Vec<_>, Vec<_>) =
            s.dates.iter().zip(&s.values).filter(|(d, _)| keep(**d)).map(|(d, v)| (*d, *v)).unzip();
        s.dates = dates;
        s.values = values;
    };
    if cleaning.drop_weekends {
        for s in &mut stores {
            retain(s, &|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun));
        }
    }
    let mut trend = None;
    if cleaning.detrend_linear {
        let pts: Vec<(f64, f64)> =
            stores.iter().flat_map(|s| s.dates.iter().zip(&s.values).map(|(d, v)| (day_number(*d), *v))).collect();
        if pts.len() >= 2 {
            let n = pts.len() as f64;
            let t_bar = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let v_bar = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - t_bar) * (p.0 - t_bar)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - t_bar) * (p.1 - v_bar)).sum();
            let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            for s in &mut stores {
                for (d, v) in s.dates.iter().zip(s.values.iter_mut()) {
                    *v -= b * (day_number(*d) - t_bar);
                }
            }
            trend = Some(b);
        }
    }
    if !cleaning.drop_months.is_empty() {
        for s in &mut stores {
            retain(s, &|d| !cleaning.drop_months.contains(&d.month()));
        }
    }
    DemandData { stores, trend_per_day: trend }
}

pub fn ingest_demand_csv(path: &Path, cleaning: &Cleaning) -> Result<DemandData> {
    Ok(clean(read_demand_csv(path)?, cleaning))
}
