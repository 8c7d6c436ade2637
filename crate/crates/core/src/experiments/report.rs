//! Long-format experiment output.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub const CSV_HEADER: &str = "rep,K,policy,alpha,metric,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RepId {
    Index(usize),
    /// Aggregate over all reps.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub rep: RepId,
    pub k: usize,
    pub policy: String,
    /// Selected pooling amount, if the policy has one.
    pub alpha: Option<f64>,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub spec_hash: String,
    pub seed: u64,
    pub started: String,
    pub finished: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub meta: ReportMeta,
}

/// Formats like C's `%.9g`.
pub fn fmt_g9(v: f64) -> String {
    const P: i32 = 9;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, v)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

impl ExperimentReport {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let rep = match r.rep {
                RepId::Index(i) => i.to_string(),
                RepId::All => "all".into(),
            };
            let alpha = r.alpha.map(fmt_g9).unwrap_or_default();
            let _ = writeln!(out, "{rep},{},{},{alpha},{},{}", r.k, r.policy, r.metric, fmt_g9(r.value));
        }
        out
    }

    /// Writes the CSV to `path` and the metadata to `<path>.meta.json`.
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(self.to_csv_string().as_bytes())?;
        let meta = serde_json::to_string_pretty(&self.meta).map_err(|e| crate::error::Error::Io(e.to_string()))?;
        let mut meta_path = path.as_os_str().to_owned();
        meta_path.push(".meta.json");
        std::fs::write(meta_path, meta + "\n")?;
        Ok(())
    }

    /// Rows for `(policy, metric)` in rep order, excluding aggregates.
    pub fn values(&self, policy: &str, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.rep != RepId::All && r.policy == policy && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }

    pub fn alphas(&self, policy: &str, metric: &str) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .filter(|r| r.rep != RepId::All && r.policy == policy && r.metric == metric)
            .map(|r| r.alpha)
            .collect()
    }

    /// Aggregate `<metric>_mean` for a policy.
    pub fn mean(&self, policy: &str, metric: &str) -> Option<f64> {
        let name = format!("{metric}_mean");
        self.rows.iter().find(|r| r.rep == RepId::All && r.policy == policy && r.metric == name).map(|r| r.value)
    }
}

/// Appends `<metric>_mean` and `<metric>_se` rows over reps for every
/// `(K, policy, metric)` present, in first-appearance order.
pub(crate) fn append_aggregates(rows: &mut Vec<ReportRow>) {
    let mut keys: Vec<(usize, String, String)> = Vec::new();
    for r in rows.iter() {
        let key = (r.k, r.policy.clone(), r.metric.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut extra = Vec::with_capacity(2 * keys.len());
    for (k, policy, metric) in keys {
        let vals: Vec<f64> =
            rows.iter().filter(|r| r.k == k && r.policy == policy && r.metric == metric).map(|r| r.value).collect();
        let (mean, se) = mean_se(&vals);
        for (suffix, value) in [("mean", mean), ("se", se)] {
            extra.push(ReportRow {
                rep: RepId::All,
                k,
                policy: policy.clone(),
                alpha: None,
                metric: format!("{metric}_{suffix}"),
                value,
            });
        }
    }
    rows.extend(extra);
}

/// Sample mean and its standard error (zero for a single value).
pub fn mean_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_c_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (2.0 / 3.0, "0.666666667"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-42.5, "-42.5"),
            (1e100, "1e+100"),
            (99999999.95, "100000000"),
            (999999999.5, "1e+09"),
            (f64::INFINITY, "inf"),
        ];
        for (v, want) in cases {
            assert_eq!(fmt_g9(v), want, "{v}");
        }
    }

    #[test]
    fn aggregates_and_csv_layout() {
        let mut rows = vec![
            ReportRow {
                rep: RepId::Index(0),
                k: 2,
                policy: "SAA".into(),
                alpha: Some(0.0),
                metric: "z".into(),
                value: 1.0,
            },
            ReportRow {
                rep: RepId::Index(1),
                k: 2,
                policy: "SAA".into(),
                alpha: Some(0.0),
                metric: "z".into(),
                value: 3.0,
            },
        ];
        append_aggregates(&mut rows);
        let report = ExperimentReport {
            rows,
            meta: ReportMeta {
                spec_hash: String::new(),
                seed: 0,
                started: String::new(),
                finished: String::new(),
                version: String::new(),
            },
        };
        assert_eq!(
            report.to_csv_string(),
            "rep,K,policy,alpha,metric,value\n0,2,SAA,0,z,1\n1,2,SAA,0,z,3\nall,2,SAA,,z_mean,2\nall,2,SAA,,z_se,1\n"
        );
        assert_eq!(report.mean("SAA", "z"), Some(2.0));
    }
}
