//! Harmonic extension of labels over a weighted graph.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, invalid, Error, Result};
use crate::graph::{normalized_laplacian, unnormalized_laplacian, WeightedGraph};

/// Above this estimate the Cholesky solve is replaced by least squares.
const CONDITION_LIMIT: f64 = 1e12;

/// Labeled vertices (0-based) and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl LabelSet {
    pub fn new(indices: Vec<usize>, values: Vec<f64>, n: usize) -> Result<Self> {
        check_dim(indices.len(), values.len())?;
        if indices.is_empty() {
            return Err(invalid("labels", "need at least one labeled vertex"));
        }
        if indices.len() >= n {
            return Err(invalid(
                "labels",
                format!("{} labels leave no unlabeled vertex among {n}", indices.len()),
            ));
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(invalid("labels", format!("index {i} out of range for {n} vertices")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(invalid("labels", format!("index {i} labeled twice")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("labels", "label values must be finite"));
        }
        Ok(Self { indices, values })
    }

    /// The first `values.len()` vertices carry the labels.
    pub fn first(values: Vec<f64>, n: usize) -> Result<Self> {
        Self::new((0..values.len()).collect(), values, n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub values: Vec<f64>,
    pub hard_labels: Vec<i8>,
}

impl Prediction {
    fn from_values(values: Vec<f64>) -> Self {
        let hard_labels = threshold(&values);
        Self {
            values,
            hard_labels,
        }
    }
}

/// `≥ 0 ↦ +1`, otherwise `−1`. Signed zero maps to `+1`.
pub fn threshold(u: &[f64]) -> Vec<i8> {
    u.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect()
}

/// Fraction of unlabeled vertices where `pred` and `truth` disagree.
pub fn error_rate(pred: &[i8], truth: &[i8], labeled: &LabelSet) -> Result<f64> {
    check_dim(truth.len(), pred.len())?;
    let n = pred.len();
    let mask = labeled.mask(n);
    let unlabeled = n - labeled.len();
    if unlabeled == 0 {
        return Err(invalid("labels", "every vertex is labeled"));
    }
    let wrong = (0..n).filter(|&i| !mask[i] && pred[i] != truth[i]).count();
    Ok(wrong as f64 / unlabeled as f64)
}

/// Solves `L_uu u_u = −L_uℓ u_ℓ` with `L = D − W`.
pub fn solve_unnormalized(g: &WeightedGraph, labels: &LabelSet) -> Result<Prediction> {
    let l = unnormalized_laplacian(g);
    let (uu, ul, split) = partition(g, labels, &l)?;
    let rhs = -(&ul * labeled_vector(labels));
    let x = solve_spd(uu, rhs)?;
    Ok(assemble(g.n(), labels, &split, x))
}

/// `u_u = −(L_uuᵀ + L_uu)^{-1} (L_ℓuᵀ + L_uℓ) u_ℓ` with `L = I − 2P + D̃`:
/// the stationary point of `uᵀLu` subject to the labels.
pub fn solve_normalized(g: &WeightedGraph, labels: &LabelSet) -> Result<Prediction> {
    let l = normalized_laplacian(g);
    let (uu, ul, split) = partition(g, labels, &l)?;
    let lu = select(&l, &split.labeled, &split.unlabeled);
    let a = &uu + uu.transpose();
    let b = lu.transpose() + ul;
    let rhs = -(b * labeled_vector(labels));
    let x = solve_spd(a, rhs)?;
    Ok(assemble(g.n(), labels, &split, x))
}

struct Split {
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
}

fn labeled_vector(labels: &LabelSet) -> DVector<f64> {
    DVector::from_column_slice(labels.values())
}

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `(L_uu, L_uℓ)` after checking that every unlabeled vertex reaches a label.
fn partition(
    g: &WeightedGraph,
    labels: &LabelSet,
    l: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, Split)> {
    let n = g.n();
    if let Some(max) = labels.indices().iter().max() {
        if *max >= n {
            return Err(invalid("labels", format!("index {max} out of range for {n} vertices")));
        }
    }
    if labels.len() >= n {
        return Err(invalid("labels", "every vertex is labeled"));
    }
    check_reachable(g, labels)?;
    let mask = labels.mask(n);
    let split = Split {
        labeled: labels.indices().to_vec(),
        unlabeled: (0..n).filter(|&i| !mask[i]).collect(),
    };
    let uu = select(l, &split.unlabeled, &split.unlabeled);
    let ul = select(l, &split.unlabeled, &split.labeled);
    Ok((uu, ul, split))
}

fn check_reachable(g: &WeightedGraph, labels: &LabelSet) -> Result<()> {
    let n = g.n();
    let w = g.weights();
    let mut seen = labels.mask(n);
    let mut queue: VecDeque<usize> = labels.indices().iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for u in 0..n {
            if !seen[u] && w[(v, u)] > 0.0 {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    let component: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
    if component.is_empty() {
        Ok(())
    } else {
        Err(Error::Disconnected { component })
    }
}

fn solve_spd(a: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = a.clone().cholesky() {
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let cond = (hi / lo).powi(2);
        if cond.is_finite() && cond <= CONDITION_LIMIT {
            return Ok(chol.solve(&rhs));
        }
        log::warn!("condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:.0e}; using least squares");
    } else {
        log::warn!("Cholesky factorization failed; using least squares");
    }
    let svd = a.svd(true, true);
    let tol = svd.singular_values.max() * f64::EPSILON * rhs.len() as f64;
    let x = svd
        .solve(&rhs, tol)
        .map_err(|e| Error::Singular(e.to_string()))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Singular("least-squares solution is not finite".into()))
    }
}

fn assemble(n: usize, labels: &LabelSet, split: &Split, x: DVector<f64>) -> Prediction {
    let mut values = vec![0.0; n];
    for (&i, &v) in labels.indices().iter().zip(labels.values()) {
        values[i] = v;
    }
    for (&i, v) in split.unlabeled.iter().zip(x.iter()) {
        values[i] = *v;
    }
    Prediction::from_values(values)
}
