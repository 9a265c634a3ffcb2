use crate::error::{Error, Result};
use crate::models::{Distribution, StationaryMarginal};

/// A distribution function that is monotone and continuous between its
/// breakpoints, so that sup-norm distances against a step function can be
/// computed exactly from values and left limits at breakpoints.
pub trait DistributionFunction {
    /// `G(x)`, right-continuous.
    fn value(&self, x: f64) -> f64;
    /// `G(x-)`.
    fn left_limit(&self, x: f64) -> f64;
    /// Jump points, kinks and support edges, strictly increasing.
    fn breakpoints(&self) -> Vec<f64>;
    /// `lim G(x)` as `x -> +inf`; below 1 for defective phantoms that never reach 1.
    fn limit_at_infinity(&self) -> f64 {
        1.0
    }
    /// `G_* = sup { x : G(x) < 1 }`.
    fn right_end(&self) -> f64;
    /// `inf { x : G(x) >= p }`, or `None` if `G` never reaches `p`.
    fn quantile(&self, p: f64) -> Option<f64>;
}

/// Right-continuous step distribution function.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDf {
    jumps: Vec<f64>,
    values: Vec<f64>,
}

impl StepDf {
    /// `values[i]` holds on `[jumps[i], jumps[i+1])`; 0 below the first jump.
    pub fn new(jumps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jumps.len() != values.len() {
            return Err(Error::Contract(format!(
                "{} jump points but {} values",
                jumps.len(),
                values.len()
            )));
        }
        if jumps.is_empty() {
            return Err(Error::Contract("a step df needs at least one jump point".into()));
        }
        if jumps.iter().any(|x| !x.is_finite()) || jumps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract("jump points must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) || values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Contract("df values must be non-decreasing inside [0, 1]".into()));
        }
        Ok(StepDf { jumps, values })
    }

    /// Empirical CDF counting samples `<= x`.
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Contract("empirical df of an empty sample".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Contract("empirical df of a sample containing NaN".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self::from_sorted(&sorted)
    }

    pub(crate) fn from_sorted(sorted: &[f64]) -> Result<Self> {
        let r = sorted.len() as f64;
        let mut jumps = Vec::new();
        let mut values = Vec::new();
        for (i, &x) in sorted.iter().enumerate() {
            if i + 1 == sorted.len() || sorted[i + 1] != x {
                jumps.push(x);
                values.push((i + 1) as f64 / r);
            }
        }
        Self::new(jumps, values)
    }

    pub fn point_mass(c: f64) -> Self {
        StepDf { jumps: vec![c], values: vec![1.0] }
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The same df forced to 1 from `g_star` on; `g_star` must not lie below the last jump.
    pub fn truncated_at(&self, g_star: f64) -> Result<Self> {
        let last = *self.jumps.last().expect("non-empty");
        if !(g_star >= last && g_star.is_finite()) {
            return Err(Error::Contract(format!(
                "truncation point {g_star} must be finite and at least the last jump point {last}"
            )));
        }
        let mut out = self.clone();
        if g_star == last {
            *out.values.last_mut().expect("non-empty") = 1.0;
        } else {
            out.jumps.push(g_star);
            out.values.push(1.0);
        }
        Ok(out)
    }
}

impl DistributionFunction for StepDf {
    fn value(&self, x: f64) -> f64 {
        match self.jumps.partition_point(|&j| j <= x) {
            0 => 0.0,
            i => self.values[i - 1],
        }
    }

    fn left_limit(&self, x: f64) -> f64 {
        match self.jumps.partition_point(|&j| j < x) {
            0 => 0.0,
            i => self.values[i - 1],
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.jumps.clone()
    }

    fn limit_at_infinity(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    fn right_end(&self) -> f64 {
        self.values
            .iter()
            .position(|&v| v >= 1.0)
            .map_or(f64::INFINITY, |i| self.jumps[i])
    }

    fn quantile(&self, p: f64) -> Option<f64> {
        self.values.iter().position(|&v| v >= p).map(|i| self.jumps[i])
    }
}

impl DistributionFunction for StationaryMarginal {
    fn value(&self, x: f64) -> f64 {
        self.cdf(x)
    }

    fn left_limit(&self, x: f64) -> f64 {
        match self.dist {
            Distribution::Constant { value } if x <= value => 0.0,
            _ => self.cdf(x),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.dist {
            Distribution::Constant { value } => vec![*value],
            Distribution::Uniform { low, high } => vec![*low, *high],
            Distribution::Exponential { .. } => vec![0.0],
            Distribution::Pareto { x_min, .. } => vec![*x_min],
            Distribution::CustomTable { points } => points.iter().map(|p| p[0]).collect(),
            Distribution::Gaussian { .. } | Distribution::StudentT { .. } => vec![],
        }
    }

    fn right_end(&self) -> f64 {
        self.dist.upper_end()
    }

    fn quantile(&self, p: f64) -> Option<f64> {
        if p <= 0.0 || p.is_nan() {
            return None;
        }
        if p >= 1.0 {
            let end = self.right_end();
            return end.is_finite().then_some(end);
        }
        Some(StationaryMarginal::quantile(self, p))
    }
}

/// `v^p` for integer `p >= 1`.
#[inline]
pub(crate) fn pow(v: f64, p: u64) -> f64 {
    match i32::try_from(p) {
        Ok(k) => v.powi(k),
        Err(_) => v.powf(p as f64),
    }
}

/// `sup_x |a(x)^p - b(x)^q|`, exact.
///
/// `a` is constant and `b` monotone between consecutive points of the union of
/// both breakpoint sets, so the supremum is attained at a breakpoint value, a
/// breakpoint left limit, or the limit at `+inf`.
pub fn sup_distance<B: DistributionFunction + ?Sized>(a: &StepDf, p: u64, b: &B, q: u64) -> f64 {
    assert!(p >= 1 && q >= 1, "powers must be at least 1");
    let mut points = a.breakpoints();
    points.extend(b.breakpoints());
    points.sort_by(f64::total_cmp);
    points.dedup();
    let gap = |u: f64, v: f64| (pow(u, p) - pow(v, q)).abs();
    let at_points = points
        .iter()
        .map(|&x| gap(a.value(x), b.value(x)).max(gap(a.left_limit(x), b.left_limit(x))))
        .fold(0.0, f64::max);
    at_points
        .max(gap(a.limit_at_infinity(), b.limit_at_infinity()))
        .clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
