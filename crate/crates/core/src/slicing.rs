//! Equal-count slicing of the response and per-slice moments.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::serde_vec;

/// Partition of observations into `H` contiguous slices of sorted `y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceAssignment {
    /// Zero-based slice index of each observation, in input order.
    pub membership: Vec<usize>,
    /// Observation indices sorted by response (stable).
    pub order: Vec<usize>,
    pub counts: Vec<usize>,
}

impl SliceAssignment {
    pub fn num_slices(&self) -> usize {
        self.counts.len()
    }

    pub fn num_obs(&self) -> usize {
        self.membership.len()
    }

    /// Observation indices belonging to each slice, in sorted-response order.
    pub fn members(&self) -> impl Iterator<Item = &[usize]> {
        let mut start = 0;
        self.counts.iter().map(move |&c| {
            let s = &self.order[start..start + c];
            start += c;
            s
        })
    }
}

/// Sorts by response (ties by original index) and deals the sorted
/// observations into `num_slices` slices. The first `n mod H` slices get one
/// extra observation.
pub fn assign_slices(y: &[f64], num_slices: usize) -> Result<SliceAssignment> {
    let n = y.len();
    if num_slices == 0 || num_slices > n {
        return invalid(format!("number of slices must be in 1..={n}, got {num_slices}"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return invalid("response has non-finite values");
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));

    let base = n / num_slices;
    let extra = n % num_slices;
    let counts: Vec<usize> = (0..num_slices)
        .map(|h| base + usize::from(h < extra))
        .collect();

    let mut membership = vec![0; n];
    let mut pos = 0;
    for (h, &c) in counts.iter().enumerate() {
        for &i in &order[pos..pos + c] {
            membership[i] = h;
        }
        pos += c;
    }
    Ok(SliceAssignment {
        membership,
        order,
        counts,
    })
}

/// Slice probabilities `n_h / n` and slice means of the predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceStats {
    pub probs: Vec<f64>,
    #[serde(with = "means_serde")]
    pub means: Vec<DVector<f64>>,
}

impl SliceStats {
    pub fn num_slices(&self) -> usize {
        self.probs.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, DVector::len)
    }
}

mod means_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "serde_vec")] DVector<f64>);

    pub fn serialize<S: Serializer>(v: &[DVector<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|m| m.as_slice()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<DVector<f64>>, D::Error> {
        Ok(Vec::<Wrapped>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

pub fn slice_stats(x: &DMatrix<f64>, assignment: &SliceAssignment) -> Result<SliceStats> {
    let n = x.nrows();
    if assignment.num_obs() != n {
        return invalid(format!(
            "slice assignment covers {} observations but data has {n}",
            assignment.num_obs()
        ));
    }
    let p = x.ncols();
    let mut probs = Vec::with_capacity(assignment.num_slices());
    let mut means = Vec::with_capacity(assignment.num_slices());
    for members in assignment.members() {
        let mut sum = DVector::zeros(p);
        for &i in members {
            sum += x.row(i).transpose();
        }
        probs.push(members.len() as f64 / n as f64);
        means.push(sum / members.len() as f64);
    }
    Ok(SliceStats { probs, means })
}
