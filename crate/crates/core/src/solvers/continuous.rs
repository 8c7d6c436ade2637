//! Newsvendor decisions when demand has continuous support: the shrunken
//! measure is the mixture of the empirical CDF and an anchor CDF.

use statrs::function::beta::beta_reg;

use super::plugin::TIE_TOL;

/// A CDF on the real line with mass inside `bounds()`.
pub trait Cdf: Sync {
    fn cdf(&self, x: f64) -> f64;

    /// `(lo, hi)` with `F(x) = 0` below `lo` and `F(hi) = 1`.
    fn bounds(&self) -> (f64, f64);

    /// Smallest `x` in `[lo, hi]` with `F(x) >= t`, or `hi` if none.
    fn inverse_within(&self, t: f64, lo: f64, hi: f64) -> f64 {
        if self.cdf(lo) >= t - TIE_TOL {
            return lo;
        }
        if self.cdf(hi) < t - TIE_TOL {
            return hi;
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.cdf(mid) >= t - TIE_TOL {
                b = mid;
            } else {
                a = mid;
            }
        }
        b
    }

    fn quantile(&self, t: f64) -> f64 {
        let (lo, hi) = self.bounds();
        self.inverse_within(t, lo, hi)
    }

    fn mean(&self) -> f64 {
        // Integrates the survival function on the bounded support.
        let (lo, hi) = self.bounds();
        let n = 4096;
        let h = (hi - lo) / n as f64;
        let tail: f64 = (0..n).map(|i| 1.0 - self.cdf(lo + (i as f64 + 0.5) * h)).sum();
        lo + h * tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformCdf {
    pub lo: f64,
    pub hi: f64,
}

impl Cdf for UniformCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x < self.lo {
            0.0
        } else if x >= self.hi {
            1.0
        } else {
            (x - self.lo) / (self.hi - self.lo)
        }
    }

    fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn inverse_within(&self, t: f64, lo: f64, hi: f64) -> f64 {
        let x = self.lo + t.clamp(0.0, 1.0) * (self.hi - self.lo);
        x.clamp(lo, hi)
    }

    fn mean(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Equal-weight atoms at the given points.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    points: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut points: Vec<f64>) -> Self {
        assert!(!points.is_empty(), "empirical CDF needs at least one point");
        points.sort_by(f64::total_cmp);
        Self { points }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

impl Cdf for EmpiricalCdf {
    fn cdf(&self, x: f64) -> f64 {
        self.points.partition_point(|&p| p <= x) as f64 / self.points.len() as f64
    }

    fn bounds(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }

    fn inverse_within(&self, t: f64, lo: f64, hi: f64) -> f64 {
        let n = self.points.len();
        let need = ((t - TIE_TOL) * n as f64).ceil().max(1.0) as usize;
        let x = if need > n { hi } else { self.points[need - 1] };
        x.clamp(lo, hi)
    }

    fn mean(&self) -> f64 {
        self.points.iter().sum::<f64>() / self.points.len() as f64
    }
}

/// `lo + (hi - lo) * Beta(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledBetaCdf {
    pub a: f64,
    pub b: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Cdf for ScaledBetaCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let u = (x - self.lo) / (self.hi - self.lo);
        if self.a.is_infinite() {
            return 0.0;
        }
        let v = beta_reg(self.a, self.b, u);
        if v.is_finite() {
            v.clamp(0.0, 1.0)
        } else {
            u
        }
    }

    fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn mean(&self) -> f64 {
        let m = if self.a.is_infinite() { 1.0 } else { self.a / (self.a + self.b) };
        self.lo + m * (self.hi - self.lo)
    }
}

/// A CDF on `[0, 1]` mapped affinely onto `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct AffineCdf<C> {
    pub base: C,
    pub lo: f64,
    pub hi: f64,
}

impl<C: Cdf> Cdf for AffineCdf<C> {
    fn cdf(&self, x: f64) -> f64 {
        if self.hi == self.lo {
            return if x >= self.lo { 1.0 } else { 0.0 };
        }
        self.base.cdf((x - self.lo) / (self.hi - self.lo))
    }

    fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn inverse_within(&self, t: f64, lo: f64, hi: f64) -> f64 {
        let w = self.hi - self.lo;
        if w == 0.0 {
            return self.lo.clamp(lo, hi);
        }
        let u = self.base.inverse_within(t, (lo - self.lo) / w, (hi - self.lo) / w);
        (self.lo + u * w).clamp(lo, hi)
    }

    fn mean(&self) -> f64 {
        self.lo + (self.hi - self.lo) * self.base.mean()
    }
}

impl<C: Cdf + Send> Cdf for std::sync::Arc<C> {
    fn cdf(&self, x: f64) -> f64 {
        self.as_ref().cdf(x)
    }

    fn bounds(&self) -> (f64, f64) {
        self.as_ref().bounds()
    }

    fn inverse_within(&self, t: f64, lo: f64, hi: f64) -> f64 {
        self.as_ref().inverse_within(t, lo, hi)
    }

    fn mean(&self) -> f64 {
        self.as_ref().mean()
    }
}

/// Adapts a closure to [`Cdf`].
pub struct FnCdf<F> {
    pub f: F,
    pub lo: f64,
    pub hi: f64,
}

impl<F: Fn(f64) -> f64 + Sync> Cdf for FnCdf<F> {
    fn cdf(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// The `s`-quantile `inf{x : F(x) >= s}` of
/// `F = N/(N+alpha) F_emp + alpha/(N+alpha) F_anchor`.
///
/// `samples` must be sorted ascending.
pub fn continuous_newsvendor(samples: &[f64], anchor: &dyn Cdf, alpha: f64, s: f64) -> f64 {
    debug_assert!(samples.windows(2).all(|w| w[0] <= w[1]));
    let n = samples.len();
    if n == 0 || alpha == f64::INFINITY {
        return anchor.quantile(s);
    }
    let nf = n as f64;
    let w_emp = nf / (nf + alpha);
    let w_anc = alpha / (nf + alpha);
    let (a_lo, a_hi) = anchor.bounds();

    // Distinct jump points with the empirical CDF at each.
    let mut jumps: Vec<(f64, f64)> = Vec::with_capacity(n);
    for (i, &y) in samples.iter().enumerate() {
        let f = (i + 1) as f64 / nf;
        match jumps.last_mut() {
            Some(last) if last.0 == y => last.1 = f,
            _ => jumps.push((y, f)),
        }
    }
    let mixture_at = |j: usize| w_emp * jumps[j].1 + w_anc * anchor.cdf(jumps[j].0);
    let j = {
        let (mut lo, mut hi) = (0usize, jumps.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if mixture_at(mid) >= s - TIE_TOL {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    };
    let (left, emp_left) = if j == 0 { (a_lo.min(jumps[0].0), 0.0) } else { (jumps[j - 1].0, jumps[j - 1].1) };
    if j == jumps.len() {
        let right = a_hi.max(left);
        if w_anc == 0.0 {
            return right;
        }
        return anchor.inverse_within((s - w_emp) / w_anc, left, right);
    }
    let right = jumps[j].0;
    if w_anc == 0.0 {
        return right;
    }
    let target = (s - w_emp * emp_left) / w_anc;
    if anchor.cdf(right) < target - TIE_TOL {
        return right;
    }
    let x = anchor.inverse_within(target, left, right);
    x.min(right)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixture(samples: &[f64], anchor: &dyn Cdf, alpha: f64, x: f64) -> f64 {
        let n = samples.len() as f64;
        let emp = samples.iter().filter(|&&y| y <= x).count() as f64 / n;
        n / (n + alpha) * emp + alpha / (n + alpha) * anchor.cdf(x)
    }

    #[test]
    fn alpha_zero_is_order_statistic() {
        let samples = [1.0, 2.0, 2.0, 5.0, 7.0, 9.0];
        let anchor = UniformCdf { lo: 0.0, hi: 10.0 };
        for &s in &[0.1, 0.5, 0.51, 0.9, 0.95] {
            let idx = (s * samples.len() as f64).ceil() as usize - 1;
            assert_eq!(continuous_newsvendor(&samples, &anchor, 0.0, s), samples[idx], "s={s}");
        }
    }

    #[test]
    fn alpha_infinite_is_anchor_quantile() {
        let anchor = UniformCdf { lo: 0.0, hi: 10.0 };
        assert_eq!(continuous_newsvendor(&[3.0, 4.0], &anchor, f64::INFINITY, 0.9), 9.0);
        assert_eq!(continuous_newsvendor(&[], &anchor, 1.0, 0.25), 2.5);
    }

    #[test]
    fn half_mixture_example_and_grid_scan() {
        let samples = [1.0, 2.0, 3.0, 4.0];
        let anchor = UniformCdf { lo: 0.0, hi: 4.0 };
        let x = continuous_newsvendor(&samples, &anchor, 4.0, 0.5);
        assert_eq!(x, 2.0);
        // Fine grid scan of the mixture CDF.
        let scan = (0..=400_000).map(|i| i as f64 * 1e-5).find(|&t| mixture(&samples, &anchor, 4.0, t) >= 0.5).unwrap();
        assert!((scan - x).abs() <= 1e-5);
    }

    #[test]
    fn matches_grid_scan_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(1..12);
            let mut samples: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            samples.sort_by(f64::total_cmp);
            let anchor =
                ScaledBetaCdf { a: rng.random_range(0.5..3.0), b: rng.random_range(0.5..3.0), lo: 0.0, hi: 10.0 };
            let alpha = rng.random_range(0.0..20.0);
            let s = rng.random_range(0.05..0.95);
            let x = continuous_newsvendor(&samples, &anchor, alpha, s);
            let step = 1e-4;
            let scan =
                (0..=100_000).map(|i| i as f64 * step).find(|&t| mixture(&samples, &anchor, alpha, t) >= s).unwrap();
            assert!((scan - x).abs() <= step + 1e-9, "x={x} scan={scan}");
        }
    }

    #[test]
    fn affine_empirical_anchor() {
        let base = std::sync::Arc::new(EmpiricalCdf::new(vec![0.0, 0.5, 1.0, 0.25]));
        let a = AffineCdf { base, lo: 10.0, hi: 20.0 };
        assert_eq!(a.quantile(0.5), 12.5);
        assert_eq!(a.cdf(15.0), 0.75);
        assert!((a.mean() - 14.375).abs() < 1e-12);
    }

    #[test]
    fn empirical_anchor_inverse_is_exact() {
        let anchor = EmpiricalCdf::new(vec![3.0, 1.0, 2.0, 4.0]);
        assert_eq!(anchor.quantile(0.5), 2.0);
        assert_eq!(anchor.quantile(0.51), 3.0);
        assert_eq!(continuous_newsvendor(&[10.0], &anchor, 1e9, 0.7), 3.0);
    }
}
