use crate::error::{Error, Result};
use crate::measure::Counts;

/// `d` equal-width bins over `[lo, hi]` with midpoints as support points.
#[derive(Debug, Clone, PartialEq)]
pub struct Binning {
    lo: f64,
    hi: f64,
    d: usize,
}

impl Binning {
    pub fn new(lo: f64, hi: f64, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("need at least one bin".into()));
        }
        if hi.is_nan() || lo.is_nan() || hi <= lo {
            return Err(Error::DegenerateRange(lo));
        }
        Ok(Self { lo, hi, d })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn support(&self) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.d as f64;
        (0..self.d).map(|j| self.lo + (j as f64 + 0.5) * w).collect()
    }

    /// `floor(d (v - lo) / (hi - lo))`, clamped to `[0, d - 1]`.
    pub fn bin(&self, v: f64) -> usize {
        let j = (self.d as f64 * (v - self.lo) / (self.hi - self.lo)).floor();
        if j < 0.0 {
            0
        } else {
            (j as usize).min(self.d - 1)
        }
    }

    pub fn counts(&self, values: &[f64]) -> Counts {
        let mut m = vec![0u32; self.d];
        for &v in values {
            m[self.bin(v)] += 1;
        }
        Counts::new(m)
    }
}

/// Bins over the range of `series`. Fails with `DegenerateRange` when all
/// values are equal.
pub fn discretize(series: &[f64], d: usize) -> Result<Binning> {
    if d < 2 {
        return Err(Error::InvalidConfig(format!("discretization needs d >= 2, got {d}")));
    }
    if series.is_empty() {
        return Err(Error::ZeroData);
    }
    let lo = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Binning::new(lo, hi, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_bin_example() {
        let b = discretize(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(b.counts(&[0.0, 1.0, 2.0, 3.0]).as_slice(), &[2, 2]);
        assert_eq!(b.support(), vec![0.75, 2.25]);
        assert_eq!(b.bin(3.0), 1);
        assert_eq!(b.bin(1.5), 1);
        assert_eq!(b.bin(1.4999), 0);
    }

    #[test]
    fn degenerate_range() {
        assert_eq!(discretize(&[2.0, 2.0], 3), Err(Error::DegenerateRange(2.0)));
    }
}
