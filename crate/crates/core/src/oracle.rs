//! Exact max-distribution quantities for finite-state chains.
//!
//! These are the ground truth every Monte Carlo estimator is checked against.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Row sums and initial-law sums must hit 1 within this tolerance.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;
/// Largest supported state space.
pub const MAX_STATES: usize = 200;
/// Required accuracy of the stationary solve, `||pi P - pi||_inf`.
pub const STATIONARY_RESIDUAL: f64 = 1e-10;

/// A finite-state chain with observable values and an initial law.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteChain {
    transition: Vec<Vec<f64>>,
    values: Vec<f64>,
    initial: Vec<f64>,
}

impl FiniteChain {
    pub fn new(transition: Vec<Vec<f64>>, values: Vec<f64>, initial: Vec<f64>) -> Result<Self> {
        validate_stochastic(&transition)?;
        let m = transition.len();
        if m > MAX_STATES {
            return Err(Error::Chain(format!("{m} states exceeds the supported maximum of {MAX_STATES}")));
        }
        if values.len() != m || initial.len() != m {
            return Err(Error::Chain(format!(
                "dimension mismatch: {m} states, {} values, {} initial weights",
                values.len(),
                initial.len()
            )));
        }
        validate_probability_vector(&initial, "initial law")?;
        Ok(FiniteChain { transition, values, initial })
    }

    /// The same chain started from its stationary law.
    pub fn stationary(transition: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let pi = stationary_distribution(&transition)?;
        Self::new(transition, values, pi)
    }

    /// The same kernel and observable started from a point mass at state `s`.
    pub fn started_at(&self, s: usize) -> Result<Self> {
        if s >= self.len() {
            return Err(Error::Chain(format!("state {s} out of range for {} states", self.len())));
        }
        let mut initial = vec![0.0; self.len()];
        initial[s] = 1.0;
        Ok(FiniteChain { initial, ..self.clone() })
    }

    pub fn with_initial(&self, initial: Vec<f64>) -> Result<Self> {
        Self::new(self.transition.clone(), self.values.clone(), initial)
    }

    pub fn len(&self) -> usize {
        self.transition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transition.is_empty()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// `P_lambda(M_n <= x)` computed as `lambda|_A (P|_A)^{n-1} 1` with `A = {i : values[i] <= x}`.
    pub fn exact_max_cdf(&self, n: u64, x: f64) -> Result<f64> {
        if n < 1 {
            return Err(Error::Contract("horizon n must be at least 1".into()));
        }
        let inside: Vec<bool> = self.values.iter().map(|&v| v <= x).collect();
        if inside.iter().all(|&b| b) {
            return Ok(1.0);
        }
        let mut mass: Vec<f64> = self
            .initial
            .iter()
            .zip(&inside)
            .map(|(&p, &a)| if a { p } else { 0.0 })
            .collect();
        let mut next = vec![0.0; self.len()];
        for _ in 1..n {
            next.iter_mut().for_each(|v| *v = 0.0);
            for (i, row) in self.transition.iter().enumerate() {
                let w = mass[i];
                if w == 0.0 {
                    continue;
                }
                for (j, &p) in row.iter().enumerate() {
                    if inside[j] {
                        next[j] += w * p;
                    }
                }
            }
            std::mem::swap(&mut mass, &mut next);
        }
        Ok(mass.iter().sum::<f64>().clamp(0.0, 1.0))
    }
}

/// Checks that `p` is a non-empty square matrix with non-negative rows summing to 1.
pub fn validate_stochastic(p: &[Vec<f64>]) -> Result<()> {
    let m = p.len();
    if m == 0 {
        return Err(Error::Chain("transition matrix is empty".into()));
    }
    for (i, row) in p.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Chain(format!("row {i} has {} entries, expected {m}", row.len())));
        }
        validate_probability_vector(row, &format!("row {i}"))?;
    }
    Ok(())
}

fn validate_probability_vector(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::Chain(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(Error::Chain(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

/// Stationary law `pi` of an irreducible aperiodic kernel, from a dense solve of
/// `(P^T - I) pi = 0` with one equation replaced by `sum(pi) = 1`.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    validate_stochastic(p)?;
    let m = p.len();
    let support = Support::of(p);
    if !support.irreducible() {
        return Err(Error::Chain("irreducibility check failed: some state cannot reach another".into()));
    }
    if !support.primitive() {
        return Err(Error::Chain(format!(
            "aperiodicity check failed: no power of P up to {} is entrywise positive",
            m * m
        )));
    }

    let mut a = DMatrix::from_fn(m, m, |i, j| p[j][i] - if i == j { 1.0 } else { 0.0 });
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Chain("stationary system is singular".into()))?;
    let mut pi: Vec<f64> = sol.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);

    let residual = (0..m)
        .map(|j| ((0..m).map(|i| pi[i] * p[i][j]).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max);
    if residual >= STATIONARY_RESIDUAL {
        return Err(Error::Chain(format!("stationary solve residual {residual:e} too large")));
    }
    Ok(pi)
}

/// `max_x |P_s(M_n <= x) - P_pi(M_n <= x)|` over `x_grid`.
pub fn exact_quenched_gap(chain: &FiniteChain, s: usize, n: u64, x_grid: &[f64]) -> Result<f64> {
    if x_grid.is_empty() {
        return Err(Error::Contract("x grid is empty".into()));
    }
    let stationary = chain.with_initial(stationary_distribution(chain.transition())?)?;
    let point = chain.started_at(s)?;
    x_grid.iter().try_fold(0.0f64, |acc, &x| {
        Ok(acc.max((point.exact_max_cdf(n, x)? - stationary.exact_max_cdf(n, x)?).abs()))
    })
}

/// Support graph of a kernel as row bitsets.
pub(crate) struct Support {
    m: usize,
    rows: Vec<Vec<u64>>,
}

impl Support {
    pub(crate) fn of(p: &[Vec<f64>]) -> Self {
        let m = p.len();
        let words = m.div_ceil(64);
        let rows = p
            .iter()
            .map(|row| {
                let mut bits = vec![0u64; words];
                for (j, &x) in row.iter().enumerate() {
                    if x > 0.0 {
                        bits[j / 64] |= 1 << (j % 64);
                    }
                }
                bits
            })
            .collect();
        Support { m, rows }
    }

    fn has(bits: &[u64], j: usize) -> bool {
        bits[j / 64] >> (j % 64) & 1 == 1
    }

    /// States reachable from `from` in one or more steps.
    pub(crate) fn reachable_from(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.m];
        let mut stack = vec![from];
        while let Some(i) = stack.pop() {
            for j in 0..self.m {
                if Self::has(&self.rows[i], j) && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    fn irreducible(&self) -> bool {
        (0..self.m).all(|i| self.reachable_from(i).iter().all(|&b| b))
    }

    /// Some power of the kernel is entrywise positive. Checked on repeated squares,
    /// which suffices because positivity persists once reached.
    fn primitive(&self) -> bool {
        let full = |rows: &[Vec<u64>]| rows.iter().all(|r| (0..self.m).all(|j| Self::has(r, j)));
        let mut power = self.rows.clone();
        let mut exponent = 1usize;
        loop {
            if full(&power) {
                return true;
            }
            if exponent >= self.m * self.m {
                return false;
            }
            power = (0..self.m)
                .map(|i| {
                    let mut acc = vec![0u64; power[i].len()];
                    for k in 0..self.m {
                        if Self::has(&power[i], k) {
                            acc.iter_mut().zip(&power[k]).for_each(|(a, b)| *a |= b);
                        }
                    }
                    acc
                })
                .collect();
            exponent *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coin() -> Vec<Vec<f64>> {
        vec![vec![0.5, 0.5], vec![0.5, 0.5]]
    }

    #[test]
    fn max_cdf_examples() {
        let c = FiniteChain::new(coin(), vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(c.exact_max_cdf(3, 0.5).unwrap(), 0.125);
        assert_eq!(c.exact_max_cdf(9, 1.0).unwrap(), 1.0);
        assert!(c.exact_max_cdf(0, 1.0).is_err());
    }

    #[test]
    fn iid_rows_give_powers() {
        let lambda = vec![0.2, 0.3, 0.5];
        let p = vec![lambda.clone(); 3];
        let c = FiniteChain::new(p, vec![1.0, 2.0, 3.0], lambda).unwrap();
        for n in 1..8u64 {
            let got = c.exact_max_cdf(n, 2.0).unwrap();
            assert!((got - 0.5f64.powi(n as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn stationary_examples() {
        let ds = vec![
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.4, 0.1, 0.2, 0.3],
            vec![0.3, 0.4, 0.1, 0.2],
            vec![0.2, 0.3, 0.4, 0.1],
        ];
        for x in stationary_distribution(&ds).unwrap() {
            assert!((x - 0.25).abs() < 1e-12);
        }
        let pi = stationary_distribution(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-12 && (pi[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_kernels_are_rejected_by_name() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let err = stationary_distribution(&eye).unwrap_err().to_string();
        assert!(err.contains("irreducibility"), "{err}");
        let flip = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let err = stationary_distribution(&flip).unwrap_err().to_string();
        assert!(err.contains("aperiodicity"), "{err}");
        assert!(validate_stochastic(&[vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(validate_stochastic(&[vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn quenched_gap_examples() {
        let c = FiniteChain::new(coin(), vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!((exact_quenched_gap(&c, 0, 3, &[0.5]).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(exact_quenched_gap(&c, 1, 5, &[1.0, 4.0]).unwrap(), 0.0);
        assert!(exact_quenched_gap(&c, 0, 3, &[]).is_err());
    }

    #[test]
    fn iid_rows_quenched_gap_matches_hand_expansion() {
        // P_s(M_n <= x) = 1[f(s) <= x] F(x)^{n-1}; P_pi(M_n <= x) = F(x)^n.
        let lambda = vec![0.1, 0.6, 0.3];
        let values = vec![0.0, 1.0, 2.0];
        let c = FiniteChain::new(vec![lambda.clone(); 3], values.clone(), lambda.clone()).unwrap();
        let grid = [0.5, 1.5, 2.5];
        let cdf = |x: f64| values.iter().zip(&lambda).filter(|(v, _)| **v <= x).map(|(_, p)| p).sum::<f64>();
        for s in 0..3 {
            for n in 1..6u64 {
                let hand = grid
                    .iter()
                    .map(|&x| {
                        let ind = if values[s] <= x { 1.0 } else { 0.0 };
                        ((ind - cdf(x)) * cdf(x).powi(n as i32 - 1)).abs()
                    })
                    .fold(0.0, f64::max);
                let got = exact_quenched_gap(&c, s, n, &grid).unwrap();
                assert!((got - hand).abs() < 1e-14, "s={s} n={n}: {got} vs {hand}");
            }
        }
    }

    fn random_chain() -> impl Strategy<Value = FiniteChain> {
        (2usize..=6).prop_flat_map(|m| {
            (
                proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, m), m),
                proptest::collection::vec(-3.0f64..3.0, m),
                proptest::collection::vec(0.01f64..1.0, m),
            )
                .prop_map(|(rows, values, init)| {
                    let rows = rows.into_iter().map(normalize).collect();
                    FiniteChain::new(rows, values, normalize(init)).unwrap()
                })
        })
    }

    pub(crate) fn normalize(v: Vec<f64>) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        let mut out: Vec<f64> = v.iter().map(|x| x / s).collect();
        let drift: f64 = 1.0 - out.iter().sum::<f64>();
        out[0] += drift;
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn max_cdf_monotone_in_n_and_x(chain in random_chain(), n in 1u64..20, x in -3.0f64..3.0, dx in 0.0f64..2.0) {
            let here = chain.exact_max_cdf(n, x).unwrap();
            prop_assert!(chain.exact_max_cdf(n + 1, x).unwrap() <= here + 1e-15);
            prop_assert!(chain.exact_max_cdf(n, x + dx).unwrap() >= here - 1e-15);
            prop_assert_eq!(chain.exact_max_cdf(n, 3.0).unwrap(), 1.0);
        }

        #[test]
        fn stationary_law_is_fixed(chain in random_chain()) {
            let pi = stationary_distribution(chain.transition()).unwrap();
            prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for j in 0..chain.len() {
                let flow: f64 = (0..chain.len()).map(|i| pi[i] * chain.transition()[i][j]).sum();
                prop_assert!((flow - pi[j]).abs() < 1e-10);
            }
        }
    }
}
