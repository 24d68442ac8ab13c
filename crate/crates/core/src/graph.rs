//! Kernel graphs over sampled points.
//!
//! Distances use a fractional, reweighted or plain Euclidean norm; weights are
//! Gaussian in the distance. Everything is dense: a Gaussian kernel has no
//! exact zeros, and `n` stays in the low thousands.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{check_dim, invalid, Error, Result};
use crate::signals::GridSignal;
use crate::spectrum::{CoefVector, Spectrum, WeightTable};

/// Norm used for pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    /// `‖·‖_{X^γ}` on eigenbasis coefficients.
    Fractional { gamma: f64, spectrum: Spectrum },
    /// `‖·‖_{X,c}` on eigenbasis coefficients.
    Weighted(WeightTable),
    /// Plain `ℓ²` on whatever vector the point carries.
    Euclidean,
}

/// A sample in one of the two supported representations.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Coef(CoefVector),
    Grid(GridSignal),
}

impl Point {
    fn values(&self) -> &[f64] {
        match self {
            Point::Coef(c) => c,
            Point::Grid(g) => g.values(),
        }
    }

    fn is_coef(&self) -> bool {
        matches!(self, Point::Coef(_))
    }
}

impl From<CoefVector> for Point {
    fn from(c: CoefVector) -> Self {
        Point::Coef(c)
    }
}

impl From<GridSignal> for Point {
    fn from(g: GridSignal) -> Self {
        Point::Grid(g)
    }
}

/// `D_ij = ‖x_i − x_j‖` under `norm`.
pub fn pairwise_distances(points: &[Point], norm: &NormSpec) -> Result<DMatrix<f64>> {
    let n = points.len();
    if n < 2 {
        return Err(invalid("points", format!("need at least 2 points, got {n}")));
    }
    let coef = points[0].is_coef();
    if points.iter().any(|p| p.is_coef() != coef) {
        return Err(Error::MixedRepresentation);
    }
    let dim = points[0].values().len();
    for p in points {
        check_dim(dim, p.values().len())?;
    }
    let scale: Option<Vec<f64>> = match norm {
        NormSpec::Euclidean => None,
        _ if !coef => {
            return Err(invalid(
                "norm",
                "fractional and weighted norms need eigenbasis coefficients, not grid values",
            ))
        }
        NormSpec::Fractional { gamma, spectrum } => {
            check_dim(spectrum.dim(), dim)?;
            Some(
                spectrum
                    .eigenvalues()
                    .iter()
                    .map(|l| l.powf(gamma / 2.0))
                    .collect(),
            )
        }
        NormSpec::Weighted(c) => {
            check_dim(c.dim(), dim)?;
            Some(c.weights().iter().map(|c| c.sqrt()).collect())
        }
    };
    // Map to coordinates where the norm is Euclidean, then measure.
    let coords: Vec<Vec<f64>> = points
        .iter()
        .map(|p| match &scale {
            None => p.values().to_vec(),
            Some(s) => p.values().iter().zip(s).map(|(v, s)| v * s).collect(),
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        coords[i]
                            .iter()
                            .zip(&coords[j])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt()
                    }
                })
                .collect()
        })
        .collect();
    let mut d = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            d[(i, j)] = *v;
        }
    }
    // exact symmetry regardless of summation order
    for i in 0..n {
        for j in 0..i {
            d[(j, i)] = d[(i, j)];
        }
    }
    Ok(d)
}

/// Smallest `r` for which the graph with edges `D_ij ≤ r` is connected:
/// the longest edge of a minimum spanning tree (Prim, `O(n²)`).
pub fn select_epsilon(d: &DMatrix<f64>) -> Result<f64> {
    let n = d.nrows();
    check_dim(n, d.ncols())?;
    if n < 2 {
        return Err(invalid("distances", "need at least 2 points"));
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut longest: f64 = 0.0;
    for _ in 0..n {
        let (v, &dist) = best
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_tree[*i])
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("a vertex remains outside the tree");
        in_tree[v] = true;
        longest = longest.max(dist);
        for u in 0..n {
            if !in_tree[u] && d[(v, u)] < best[u] {
                best[u] = d[(v, u)];
            }
        }
    }
    if !(longest > 0.0) || !longest.is_finite() {
        return Err(invalid(
            "distances",
            format!("connectivity threshold is {longest}; points are degenerate"),
        ));
    }
    Ok(longest)
}

/// Kernel profile `η_ε(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelScale {
    /// `exp(−t²/ε²)`
    #[default]
    Full,
    /// `exp(−t²/(2ε²))`
    Half,
}

impl KernelScale {
    pub fn weight(self, dist: f64, eps: f64) -> f64 {
        let r = dist / eps;
        match self {
            KernelScale::Full => (-r * r).exp(),
            KernelScale::Half => (-0.5 * r * r).exp(),
        }
    }
}

/// Symmetric weight matrix with both degree conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: DMatrix<f64>,
    eps: f64,
    kernel_scale: KernelScale,
    /// `Σ_j W_ij`
    row_sums: Vec<f64>,
}

impl WeightedGraph {
    /// Any symmetric nonnegative matrix with positive row sums.
    pub fn from_weights(weights: DMatrix<f64>, eps: f64, kernel_scale: KernelScale) -> Result<Self> {
        let n = weights.nrows();
        check_dim(n, weights.ncols())?;
        if n < 2 {
            return Err(invalid("weights", "graph needs at least 2 vertices"));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid("eps", format!("{eps} must be finite and > 0")));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(invalid("weights", format!("W[{i},{j}] = {w}")));
                }
                if w != weights[(j, i)] {
                    return Err(invalid("weights", format!("W[{i},{j}] != W[{j},{i}]")));
                }
            }
        }
        let row_sums: Vec<f64> = weights.row_iter().map(|r| r.sum()).collect();
        if let Some(i) = row_sums.iter().position(|d| !(*d > 0.0)) {
            return Err(invalid("weights", format!("vertex {i} has zero degree")));
        }
        Ok(Self {
            weights,
            eps,
            kernel_scale,
            row_sums,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn kernel_scale(&self) -> KernelScale {
        self.kernel_scale
    }

    /// `d_i = Σ_j W_ij`, used by the solvers.
    pub fn degrees(&self) -> &[f64] {
        &self.row_sums
    }

    /// `d_i = (1/n) Σ_j W_ij`, used by the energy.
    pub fn mean_degrees(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.row_sums.iter().map(|d| d / n).collect()
    }
}

/// `W_ij = η_ε(D_ij)`, self-loops included.
pub fn weight_matrix(d: &DMatrix<f64>, eps: f64, kernel_scale: KernelScale) -> Result<WeightedGraph> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("{eps} must be finite and > 0")));
    }
    check_dim(d.nrows(), d.ncols())?;
    let w = d.map(|t| kernel_scale.weight(t, eps));
    WeightedGraph::from_weights(w, eps, kernel_scale)
}

/// `E_{ε,n}(u) = (1/(n²ε²)) Σ_i [Σ_j W_ij |u_i − u_j|²] / d_i` with `d_i = (1/n) Σ_j W_ij`.
pub fn dirichlet_energy(g: &WeightedGraph, u: &[f64]) -> Result<f64> {
    let n = g.n();
    check_dim(n, u.len())?;
    let deg = g.mean_degrees();
    let w = g.weights();
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let num: f64 = (0..n).map(|j| w[(i, j)] * (u[i] - u[j]).powi(2)).sum();
            num / deg[i]
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let nf = n as f64;
    Ok(total / (nf * nf * g.eps() * g.eps()))
}

/// `L = D − W` with `D_ii = Σ_j W_ij`.
pub fn unnormalized_laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let mut l = -g.weights().clone();
    for (i, d) in g.degrees().iter().enumerate() {
        l[(i, i)] += d;
    }
    l
}

/// `L = I − 2P + D̃` with `P_ij = W_ij/d_i` and `D̃` the column sums of `P`.
///
/// `uᵀLu = Σ_ij P_ij (u_i − u_j)²`. `L` itself is not symmetric and `L·1`
/// is generally nonzero; `(L + Lᵀ)·1 = 0`.
pub fn normalized_laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.n();
    let mut p = g.weights().clone();
    for (i, d) in g.degrees().iter().enumerate() {
        p.row_mut(i).scale_mut(1.0 / d);
    }
    let col_sums: Vec<f64> = p.column_iter().map(|c| c.sum()).collect();
    let mut l = p * -2.0;
    for i in 0..n {
        l[(i, i)] += 1.0 + col_sums[i];
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn coef_points(v: &[&[f64]]) -> Vec<Point> {
        v.iter().map(|x| Point::Coef(CoefVector::new(x.to_vec()))).collect()
    }

    fn line(xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(xs.len(), xs.len(), |i, j| (xs[i] - xs[j]).abs())
    }

    #[test]
    fn distance_examples() {
        let d = pairwise_distances(&coef_points(&[&[1.0, 2.0], &[1.0, 2.0]]), &NormSpec::Euclidean).unwrap();
        assert_eq!(d[(0, 1)], 0.0);
        let grid = vec![
            Point::Grid(GridSignal::new(vec![0.0, 0.0]).unwrap()),
            Point::Grid(GridSignal::new(vec![3.0, 4.0]).unwrap()),
        ];
        let d = pairwise_distances(&grid, &NormSpec::Euclidean).unwrap();
        assert_eq!(d[(0, 1)], 5.0);
        let norm = NormSpec::Fractional {
            gamma: -1.0,
            spectrum: Spectrum::new(vec![4.0]).unwrap(),
        };
        let d = pairwise_distances(&coef_points(&[&[0.0], &[2.0]]), &norm).unwrap();
        assert_relative_eq!(d[(0, 1)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn distance_errors() {
        let mixed = vec![
            Point::Coef(CoefVector::new(vec![0.0, 1.0])),
            Point::Grid(GridSignal::new(vec![0.0, 1.0]).unwrap()),
        ];
        assert_eq!(
            pairwise_distances(&mixed, &NormSpec::Euclidean).unwrap_err(),
            Error::MixedRepresentation
        );
        let grid = vec![
            Point::Grid(GridSignal::new(vec![0.0, 0.0]).unwrap()),
            Point::Grid(GridSignal::new(vec![3.0, 4.0]).unwrap()),
        ];
        assert!(pairwise_distances(&grid, &NormSpec::Weighted(WeightTable::uniform(2))).is_err());
        assert!(pairwise_distances(&coef_points(&[&[0.0]]), &NormSpec::Euclidean).is_err());
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(select_epsilon(&line(&[0.0, 1.0, 3.0])).unwrap(), 2.0);
        assert_eq!(select_epsilon(&line(&[0.0, 7.0])).unwrap(), 7.0);
        let tri = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(select_epsilon(&tri).unwrap(), 1.0);
        assert!(select_epsilon(&DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn weight_examples() {
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let g = weight_matrix(&d, 0.5, KernelScale::Full).unwrap();
        assert_eq!(g.weights()[(0, 0)], 1.0);
        assert_relative_eq!(g.weights()[(0, 1)], (-1f64).exp(), epsilon = 1e-15);
        let g = weight_matrix(&d, 0.5, KernelScale::Half).unwrap();
        assert_relative_eq!(g.weights()[(0, 1)], (-0.5f64).exp(), epsilon = 1e-15);
        assert!(weight_matrix(&d, 0.0, KernelScale::Half).is_err());
    }

    #[test]
    fn energy_examples() {
        let w = 0.3;
        let g = WeightedGraph::from_weights(
            DMatrix::from_row_slice(2, 2, &[1.0, w, w, 1.0]),
            1.0,
            KernelScale::Full,
        )
        .unwrap();
        assert_eq!(dirichlet_energy(&g, &[2.0, 2.0]).unwrap(), 0.0);
        let e = dirichlet_energy(&g, &[0.0, 1.0]).unwrap();
        assert_relative_eq!(e, w / (1.0 + w), epsilon = 1e-15);
        assert_relative_eq!(dirichlet_energy(&g, &[0.0, 2.0]).unwrap(), 4.0 * e, epsilon = 1e-15);
        assert!(dirichlet_energy(&g, &[0.0]).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let g = WeightedGraph::from_weights(DMatrix::from_element(2, 2, 1.0), 1.0, KernelScale::Full).unwrap();
        let l = unnormalized_laplacian(&g);
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        // P = ½·ones, D̃ = I, so L = 2I − ones and (1,−1) has eigenvalue 2
        let ln = normalized_laplacian(&g);
        assert_eq!(ln, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let v = nalgebra::DVector::from_vec(vec![1.0, -1.0]);
        assert_eq!(&ln * &v, v.scale(2.0));
    }

    fn random_graph() -> impl Strategy<Value = WeightedGraph> {
        (2usize..8).prop_flat_map(|n| {
            prop::collection::vec(0.0f64..1.0, n * n).prop_map(move |v| {
                let w = DMatrix::from_fn(n, n, |i, j| {
                    if i == j { 1.0 } else { v[i.min(j) * n + i.max(j)] }
                });
                WeightedGraph::from_weights(w, 0.7, KernelScale::Full).unwrap()
            })
        })
    }

    fn vec_for(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, n)
    }

    proptest! {
        #[test]
        fn laplacians_annihilate_constants(g in random_graph(), c in -3.0f64..3.0) {
            let ones = nalgebra::DVector::from_element(g.n(), c);
            prop_assert!((unnormalized_laplacian(&g) * &ones).amax() < 1e-12);
            // only the symmetric part of I − 2P + D̃ kills constants
            let l = normalized_laplacian(&g);
            prop_assert!(((&l + l.transpose()) * &ones).amax() < 1e-12);
            prop_assert!(ones.dot(&(&l * &ones)).abs() < 1e-12);
        }

        #[test]
        fn unnormalized_laplacian_is_psd(g in random_graph()) {
            let eig = unnormalized_laplacian(&g).symmetric_eigenvalues();
            prop_assert!(eig.min() > -1e-12);
        }

        #[test]
        fn energy_is_normalized_quadratic_form(
            (g, u) in random_graph().prop_flat_map(|g| { let n = g.n(); (Just(g), vec_for(n)) })
        ) {
            let n = g.n();
            let l = normalized_laplacian(&g);
            let uv = nalgebra::DVector::from_vec(u.clone());
            let q = uv.dot(&(&l * &uv));
            // quadratic form expansion oracle
            let p = |i: usize, j: usize| g.weights()[(i, j)] / g.degrees()[i];
            let mut direct = 0.0;
            for i in 0..n { for j in 0..n { direct += p(i, j) * (u[i] - u[j]).powi(2); } }
            prop_assert!(q >= -1e-12);
            prop_assert!((q - direct).abs() <= 1e-12 * (1.0 + direct));
            let e = dirichlet_energy(&g, &u).unwrap();
            let from_l = q / (n as f64 * g.eps() * g.eps());
            prop_assert!((e - from_l).abs() <= 1e-12 * (1.0 + e));
        }

        #[test]
        fn weights_grow_with_eps(xs in prop::collection::vec(-5.0f64..5.0, 2..7), e in 0.1f64..3.0, de in 0.0f64..3.0) {
            let d = line(&xs);
            let a = weight_matrix(&d, e, KernelScale::Half).unwrap();
            let b = weight_matrix(&d, e + de, KernelScale::Half).unwrap();
            for (x, y) in a.weights().iter().zip(b.weights().iter()) {
                prop_assert!(x <= y);
            }
        }

        #[test]
        fn epsilon_matches_brute_force(pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..=8)) {
            let n = pts.len();
            let d = DMatrix::from_fn(n, n, |i, j| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt());
            prop_assume!(d.iter().any(|v| *v > 0.0));
            let connected = |r: f64| {
                let mut seen = vec![false; n];
                let mut stack = vec![0];
                seen[0] = true;
                while let Some(v) = stack.pop() {
                    for u in 0..n {
                        if !seen[u] && d[(v, u)] <= r { seen[u] = true; stack.push(u); }
                    }
                }
                seen.iter().all(|s| *s)
            };
            // brute force: smallest pairwise distance threshold that connects
            let mut cands: Vec<f64> = d.iter().copied().filter(|v| *v > 0.0).collect();
            cands.sort_by(f64::total_cmp);
            let brute = cands.into_iter().find(|r| connected(*r)).unwrap();
            prop_assert_eq!(select_epsilon(&d).unwrap(), brute);

            // isometric relabeling
            let perm: Vec<usize> = (0..n).rev().collect();
            let dp = DMatrix::from_fn(n, n, |i, j| d[(perm[i], perm[j])]);
            prop_assert_eq!(select_epsilon(&dp).unwrap(), brute);
        }
    }
}
