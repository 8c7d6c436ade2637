//! Synthetic daily store demand, written in the same CSV layout the ingest
//! path reads. Used when no real sales history is at hand.

use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::{Distribution as _, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;

use super::ingest::StoreSeries;

/// Knobs of the generator. Store means are log-uniform on `mean_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticDemand {
    pub stores: usize,
    pub start: NaiveDate,
    pub days: usize,
    pub mean_range: [f64; 2],
    /// Range of per-store log-scale noise.
    pub sigma_range: [f64; 2],
    pub promo_prob: f64,
    pub promo_lift: f64,
    /// Relative growth per year, shared by all stores.
    pub yearly_trend: f64,
    pub december_lift: f64,
    /// Fraction of stores open on weekends; the rest have no weekend rows.
    pub weekend_open: f64,
    /// Probability a store-day is missing.
    pub missing_prob: f64,
    /// Fraction of stores whose days go missing with `heavy_missing_prob`
    /// instead.
    pub heavy_missing_frac: f64,
    pub heavy_missing_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticDemand {
    fn default() -> Self {
        Self {
            stores: 1115,
            start: NaiveDate::from_ymd_opt(2013, 1, 1).expect("valid date"),
            days: 942,
            mean_range: [3183.0, 23400.0],
            sigma_range: [0.1, 0.45],
            promo_prob: 0.35,
            promo_lift: 0.3,
            yearly_trend: 0.037,
            december_lift: 0.25,
            weekend_open: 0.025,
            missing_prob: 0.02,
            heavy_missing_frac: 0.16,
            heavy_missing_prob: 0.2,
            seed: 7,
        }
    }
}

impl SyntheticDemand {
    pub fn generate(&self) -> Result<Vec<StoreSeries>> {
        if self.stores == 0 || self.days == 0 {
            return Err(Error::InvalidConfig("need at least one store and one day".into()));
        }
        let [m_lo, m_hi] = self.mean_range;
        let [s_lo, s_hi] = self.sigma_range;
        if !(m_lo > 0.0 && m_hi >= m_lo && s_lo >= 0.0 && s_hi >= s_lo) {
            return Err(Error::InvalidConfig("bad mean or sigma range".into()));
        }
        let digits = self.stores.to_string().len().max(4);
        Ok((0..self.stores)
            .map(|k| {
                let mut rng = stream(self.seed, &[k as u64], "synthetic-store");
                let mean = m_lo * (m_hi / m_lo).powf(rng.random::<f64>());
                let sigma = s_lo + (s_hi - s_lo) * rng.random::<f64>();
                // Stores differ in how strongly they respond to promotions,
                // which makes the demand shapes heterogeneous.
                let lift = self.promo_lift * (0.5 + rng.random::<f64>());
                let open_weekends = rng.random::<f64>() < self.weekend_open;
                let missing = if rng.random::<f64>() < self.heavy_missing_frac {
                    self.heavy_missing_prob
                } else {
                    self.missing_prob
                };
                let weekly = Normal::new(0.0, 0.05).expect("valid normal");
                let dow: Vec<f64> = (0..7).map(|_| weekly.sample(&mut rng)).collect();
                let noise = LogNormal::new(-0.5 * sigma * sigma, sigma).expect("valid lognormal");
                let mut dates = Vec::new();
                let mut values = Vec::new();
                for t in 0..self.days {
                    let date = self.start + chrono::Days::new(t as u64);
                    let wd = date.weekday();
                    let weekend = matches!(wd, Weekday::Sat | Weekday::Sun);
                    if (weekend && !open_weekends) || rng.random::<f64>() < missing {
                        continue;
                    }
                    let mut level = mean * (1.0 + self.yearly_trend * t as f64 / 365.0);
                    level *= (dow[wd.num_days_from_monday() as usize]).exp();
                    if rng.random::<f64>() < self.promo_prob {
                        level *= 1.0 + lift;
                    }
                    if date.month() == 12 {
                        level *= 1.0 + self.december_lift;
                    }
                    if weekend {
                        level *= 0.6;
                    }
                    dates.push(date);
                    values.push((level * noise.sample(&mut rng)).round());
                }
                StoreSeries { id: format!("{:0digits$}", k + 1), dates, values }
            })
            .collect())
    }
}

pub fn write_demand_csv(stores: &[StoreSeries], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e: std::io::Error| Error::Io(e.to_string());
    writeln!(w, "store_id,date,demand").map_err(io)?;
    for s in stores {
        for (d, v) in s.dates.iter().zip(&s.values) {
            writeln!(w, "{},{},{}", s.id, d.format("%Y-%m-%d"), v).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
