//! Small summary statistics used by the experiment harnesses.

use serde::{Deserialize, Serialize};

/// Mean, sample standard deviation (divisor `n − 1`) and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub count: usize,
}

/// Sequential summation in input order, so results are bit-reproducible.
pub fn summarize(values: &[f64]) -> Summary {
    let count = values.len();
    if count == 0 {
        return Summary {
            mean: f64::NAN,
            sd: f64::NAN,
            se: f64::NAN,
            count,
        };
    }
    let n = count as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if count > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Summary {
        mean,
        sd,
        se: sd / n.sqrt(),
        count,
    }
}

/// One-sided exact sign test of "first tends to exceed second".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// `P(Binomial(wins + losses, 1/2) >= wins)`.
    pub p_value: f64,
}

impl SignTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

pub fn sign_test(first: &[f64], second: &[f64]) -> SignTest {
    assert_eq!(first.len(), second.len(), "sign test needs paired samples");
    let mut wins = 0;
    let mut losses = 0;
    let mut ties = 0;
    for (a, b) in first.iter().zip(second) {
        match a.partial_cmp(b) {
            Some(std::cmp::Ordering::Greater) => wins += 1,
            Some(std::cmp::Ordering::Less) => losses += 1,
            _ => ties += 1,
        }
    }
    SignTest {
        wins,
        losses,
        ties,
        p_value: binomial_upper_tail(wins + losses, wins),
    }
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`, summed in log space.
pub fn binomial_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let ln2n = n as f64 * std::f64::consts::LN_2;
    // ln C(n, j) built up from j = 0.
    let mut ln_c = 0.0;
    let mut terms = Vec::with_capacity(n - k + 1);
    for j in 1..=n {
        ln_c += ((n - j + 1) as f64).ln() - (j as f64).ln();
        if j >= k {
            terms.push(ln_c - ln2n);
        }
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()).exp().min(1.0)
}
