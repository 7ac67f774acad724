//! Vectorized graph representation and Laplacian algebra.
//!
//! Hollow symmetric adjacency matrices are stored as their strict upper
//! triangle in row-major order, so a graph on `n` nodes is a vector of
//! length `n(n-1)/2`. The degree operator and its adjoint are applied
//! without ever materializing the underlying 0/1 matrix.

use crate::error::{Error, Result};
use crate::scalar::Real;
use num_traits::Float;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Upper-triangular vectorization of a hollow symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeVector<T> {
    values: Vec<T>,
    n: usize,
}

/// Number of edge slots for `n` nodes.
pub fn edge_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Position of edge `(i, j)` in row-major upper-triangle order.
pub fn edge_index(i: usize, j: usize, n: usize) -> Result<usize> {
    if i >= j || j >= n {
        return Err(Error::InvalidIndex { i, j, n });
    }
    Ok(i * n - i * (i + 1) / 2 + (j - i - 1))
}

/// Inverse of [`edge_index`]: recovers the node pair at `idx`.
pub fn edge_pair(idx: usize, n: usize) -> Result<(usize, usize)> {
    if idx >= edge_count(n) {
        return Err(Error::InvalidIndex { i: idx, j: idx, n });
    }
    let mut i = 0;
    let mut row_len = n - 1;
    let mut offset = idx;
    while offset >= row_len {
        offset -= row_len;
        row_len -= 1;
        i += 1;
    }
    Ok((i, i + 1 + offset))
}

/// Iterate `(index, i, j)` over all edge slots in canonical order.
pub(crate) fn edge_slots(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (0, i, j))).enumerate().map(
        |(idx, (_, i, j))| (idx, i, j),
    )
}

impl<T: Real> EdgeVector<T> {
    pub fn new(values: Vec<T>, n: usize) -> Result<Self> {
        if values.len() != edge_count(n) {
            return Err(Error::DimensionMismatch {
                expected: edge_count(n),
                got: values.len(),
            });
        }
        Ok(EdgeVector { values, n })
    }

    pub fn zeros(n: usize) -> Self {
        EdgeVector {
            values: vec![T::zero(); edge_count(n)],
            n,
        }
    }

    pub fn constant(n: usize, c: T) -> Self {
        EdgeVector {
            values: vec![c; edge_count(n)],
            n,
        }
    }

    /// Vectorize the strict upper triangle of a hollow symmetric matrix.
    pub fn from_matrix(m: &DMatrix<T>) -> Self {
        let n = m.nrows();
        let mut values = Vec::with_capacity(edge_count(n));
        for i in 0..n {
            for j in i + 1..n {
                values.push(m[(i, j)]);
            }
        }
        EdgeVector { values, n }
    }

    /// Rebuild the hollow symmetric matrix.
    pub fn to_matrix(&self) -> DMatrix<T> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for (idx, i, j) in edge_slots(n) {
            m[(i, j)] = self.values[idx];
            m[(j, i)] = self.values[idx];
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Result<T> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        Ok(self.values[edge_index(a, b, self.n)?])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        EdgeVector {
            values: self.values.iter().map(|&x| f(x)).collect(),
            n: self.n,
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|x| x * c)
    }

    /// Euclidean norm of the difference with another edge vector.
    pub fn distance(&self, other: &Self) -> T {
        let sum = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>();
        Float::sqrt(sum)
    }

    pub fn norm(&self) -> T {
        Float::sqrt(self.values.iter().map(|&a| a * a).sum::<T>())
    }
}

/// The linear map from vectorized edge weights to node degrees.
///
/// The matrix form is a fixed 0/1 matrix with exactly two ones per column;
/// both directions are applied in O(n^2) straight from the index arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeOperator {
    n: usize,
}

impl DegreeOperator {
    pub fn new(n: usize) -> Self {
        DegreeOperator { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Node degrees `d = S a`.
    pub fn apply<T: Real>(&self, a: &EdgeVector<T>) -> Result<Vec<T>> {
        if a.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: a.n(),
            });
        }
        let mut d = vec![T::zero(); self.n];
        let mut i = 0;
        let mut j = 1;
        for &w in a.values() {
            d[i] = d[i] + w;
            d[j] = d[j] + w;
            j += 1;
            if j == self.n {
                i += 1;
                j = i + 1;
            }
        }
        Ok(d)
    }

    /// Adjoint `(S^T λ)_{ij} = λ_i + λ_j`.
    pub fn apply_adjoint<T: Real>(&self, lambda: &[T]) -> Result<EdgeVector<T>> {
        if lambda.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: lambda.len(),
            });
        }
        let mut values = Vec::with_capacity(edge_count(self.n));
        for i in 0..self.n {
            for j in i + 1..self.n {
                values.push(lambda[i] + lambda[j]);
            }
        }
        Ok(EdgeVector { values, n: self.n })
    }
}

/// Combinatorial Laplacian `L = diag(S a) - devectorize(a)`.
pub fn laplacian<T: Real>(a: &EdgeVector<T>) -> DMatrix<T> {
    let n = a.n();
    let mut l = DMatrix::zeros(n, n);
    for (idx, i, j) in edge_slots(n) {
        let w = a.values()[idx];
        l[(i, j)] = -w;
        l[(j, i)] = -w;
        l[(i, i)] = l[(i, i)] + w;
        l[(j, j)] = l[(j, j)] + w;
    }
    l
}

const EIG_REL_TOL: f64 = 1e-10;

/// Moore-Penrose pseudoinverse of the graph Laplacian.
///
/// Computed through a symmetric eigendecomposition in f64; eigenvalues with
/// magnitude below `1e-10 * λ_max` are treated as zero, which keeps the
/// result symmetric and annihilates the constant vector on connected graphs.
pub fn laplacian_pinv<T: Real>(a: &EdgeVector<T>) -> DMatrix<T> {
    let pinv = laplacian_pinv_f64(&a.map_f64());
    pinv.map(|x| T::of(x))
}

/// Eigenvalues and eigenvectors of the Laplacian pseudoinverse, for callers
/// that also need its square root.
pub(crate) fn laplacian_pinv_eigen(a_f64: &EdgeVector<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let l = laplacian(a_f64);
    let eig = l.symmetric_eigen();
    let lambda_max = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let cutoff = EIG_REL_TOL * lambda_max;
    let inverted: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&x| if x.abs() <= cutoff { 0.0 } else { 1.0 / x })
        .collect();
    (inverted, eig.eigenvectors)
}

fn laplacian_pinv_f64(a: &EdgeVector<f64>) -> DMatrix<f64> {
    let (inv_eigs, u) = laplacian_pinv_eigen(a);
    let scaled = u.clone() * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(inv_eigs));
    scaled * u.transpose()
}

impl<T: Real> EdgeVector<T> {
    pub(crate) fn map_f64(&self) -> EdgeVector<f64> {
        EdgeVector {
            values: self
                .values
                .iter()
                .map(|&x| x.to_f64().unwrap())
                .collect(),
            n: self.n,
        }
    }
}

/// Summary statistics of a weighted graph at a fixed existence threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub edge_density: f64,
    pub n_components: usize,
    /// (min, q25, median, q75, max) of the supra-threshold weights;
    /// all zero when no edge clears the threshold.
    pub weight_quantiles: (f64, f64, f64, f64, f64),
}

/// Default edge-existence threshold masking numerical dust.
pub const EDGE_THRESHOLD: f64 = 1e-5;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Connected components counting edges with weight strictly above `threshold`.
pub fn n_components<T: Real>(a: &EdgeVector<T>, threshold: T) -> usize {
    let n = a.n();
    let mut uf = UnionFind::new(n);
    for (idx, i, j) in edge_slots(n) {
        if a.values()[idx] > threshold {
            uf.union(i, j);
        }
    }
    (0..n).filter(|&v| uf.find(v) == v).count()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Density, component count, and weight quantiles above `threshold`.
pub fn graph_stats<T: Real>(a: &EdgeVector<T>, threshold: f64) -> GraphStats {
    let mut weights: Vec<f64> = a
        .values()
        .iter()
        .map(|x| x.to_f64().unwrap())
        .filter(|&w| w > threshold)
        .collect();
    weights.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let edge_density = weights.len() as f64 / a.len() as f64;
    GraphStats {
        edge_density,
        n_components: n_components(a, T::of(threshold)),
        weight_quantiles: (
            quantile(&weights, 0.0),
            quantile(&weights, 0.25),
            quantile(&weights, 0.5),
            quantile(&weights, 0.75),
            quantile(&weights, 1.0),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn edge_index_first_and_last_pairs() {
        assert_eq!(edge_index(0, 1, 3).unwrap(), 0);
        assert_eq!(edge_index(1, 2, 3).unwrap(), 2);
    }

    #[test]
    fn edge_index_rejects_diagonal_and_out_of_range() {
        assert!(edge_index(2, 2, 5).is_err());
        assert!(edge_index(3, 1, 5).is_err());
        assert!(edge_index(0, 5, 5).is_err());
    }

    #[test]
    fn edge_index_round_trip_n6() {
        let n = 6;
        for i in 0..n {
            for j in i + 1..n {
                let idx = edge_index(i, j, n).unwrap();
                assert_eq!(edge_pair(idx, n).unwrap(), (i, j));
            }
        }
    }

    #[test]
    fn degree_op_hand_example() {
        let a = EdgeVector::new(vec![1.0, 2.0, 3.0], 3).unwrap();
        let d = DegreeOperator::new(3).apply(&a).unwrap();
        assert_eq!(d, vec![3.0, 4.0, 5.0]);
    }

    #[test]
    fn degree_op_zero_and_complete() {
        let n = 7;
        let op = DegreeOperator::new(n);
        let zero = op.apply(&EdgeVector::<f64>::zeros(n)).unwrap();
        assert!(zero.iter().all(|&d| d == 0.0));
        let ones = op.apply(&EdgeVector::constant(n, 1.0)).unwrap();
        assert!(ones.iter().all(|&d| d == (n - 1) as f64));
    }

    #[test]
    fn adjoint_hand_example() {
        let op = DegreeOperator::new(3);
        let st = op.apply_adjoint(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(st.values(), &[3.0, 4.0, 5.0]);
        let c = op.apply_adjoint(&[2.5; 3]).unwrap();
        assert!(c.values().iter().all(|&x| x == 5.0));
    }

    #[test]
    fn adjoint_identity_up_to_n200() {
        let mut rng = StdRng::seed_from_u64(11);
        for &n in &[2, 7, 31, 200] {
            let op = DegreeOperator::new(n);
            let a = EdgeVector::new(
                (0..edge_count(n)).map(|_| rng.gen::<f64>()).collect(),
                n,
            )
            .unwrap();
            let lambda: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let lhs: f64 = op
                .apply(&a)
                .unwrap()
                .iter()
                .zip(lambda.iter())
                .map(|(&d, &l)| d * l)
                .sum();
            let rhs: f64 = op
                .apply_adjoint(&lambda)
                .unwrap()
                .values()
                .iter()
                .zip(a.values().iter())
                .map(|(&s, &w)| s * w)
                .sum();
            assert!(
                (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0),
                "adjoint identity violated at n={n}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn two_node_pinv_closed_form() {
        let a = EdgeVector::new(vec![1.0], 2).unwrap();
        let p = laplacian_pinv(&a);
        let expect = [[0.25, -0.25], [-0.25, 0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[(i, j)] - expect[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_graph_pinv_is_zero() {
        let p = laplacian_pinv(&EdgeVector::<f64>::zeros(4));
        assert!(p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn penrose_identities_on_random_connected_graphs() {
        let mut rng = StdRng::seed_from_u64(3);
        for &n in &[5, 12, 50] {
            // Dense positive weights guarantee connectivity.
            let a = EdgeVector::new(
                (0..edge_count(n)).map(|_| rng.gen_range(0.2..2.0)).collect(),
                n,
            )
            .unwrap();
            let l = laplacian(&a);
            let p = laplacian_pinv(&a);
            let scale = l.norm();
            assert!(((&l * &p * &l) - &l).norm() <= 1e-8 * scale);
            assert!(((&p * &l * &p) - &p).norm() <= 1e-8 * p.norm());
            assert!(((&l * &p).transpose() - (&l * &p)).norm() <= 1e-8 * scale);
            assert!(((&p * &l).transpose() - (&p * &l)).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn stats_complete_empty_and_disjoint() {
        let complete = EdgeVector::constant(4, 1.0);
        let s = graph_stats(&complete, EDGE_THRESHOLD);
        assert_eq!(s.edge_density, 1.0);
        assert_eq!(s.n_components, 1);

        let empty = EdgeVector::<f64>::zeros(4);
        let s = graph_stats(&empty, EDGE_THRESHOLD);
        assert_eq!(s.edge_density, 0.0);
        assert_eq!(s.n_components, 4);

        // Edges (0,1) and (2,3) only.
        let mut two = EdgeVector::<f64>::zeros(4);
        let i01 = edge_index(0, 1, 4).unwrap();
        let i23 = edge_index(2, 3, 4).unwrap();
        two.values_mut()[i01] = 1.0;
        two.values_mut()[i23] = 1.0;
        let s = graph_stats(&two, EDGE_THRESHOLD);
        assert!((s.edge_density - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(s.n_components, 2);
    }

    /// Brute-force component count by breadth-first search.
    fn bfs_components(a: &EdgeVector<f64>, threshold: f64) -> usize {
        let n = a.n();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut queue = vec![start];
            seen[start] = true;
            while let Some(u) = queue.pop() {
                for v in 0..n {
                    if v == u || seen[v] {
                        continue;
                    }
                    let w = a.get(u, v).unwrap();
                    if w > threshold {
                        seen[v] = true;
                        queue.push(v);
                    }
                }
            }
        }
        count
    }

    #[test]
    fn components_match_bfs_on_random_graphs() {
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..40 {
            let n = rng.gen_range(2..=30);
            let a = EdgeVector::new(
                (0..edge_count(n))
                    .map(|_| if rng.gen_bool(0.08) { rng.gen_range(0.1..1.0) } else { 0.0 })
                    .collect(),
                n,
            )
            .unwrap();
            assert_eq!(n_components(&a, 0.0), bfs_components(&a, 0.0));
        }
    }

    proptest! {
        #[test]
        fn vectorize_round_trip(n in 2usize..12, seed in 0u64..1000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let a = EdgeVector::new(
                (0..edge_count(n)).map(|_| rng.gen::<f64>()).collect::<Vec<_>>(),
                n,
            ).unwrap();
            let back = EdgeVector::from_matrix(&a.to_matrix());
            prop_assert_eq!(a, back);
        }

        #[test]
        fn edge_index_bijection(n in 2usize..40) {
            let mut seen = vec![false; edge_count(n)];
            for i in 0..n {
                for j in (i + 1)..n {
                    let idx = edge_index(i, j, n).unwrap();
                    prop_assert!(!seen[idx]);
                    seen[idx] = true;
                    prop_assert_eq!(edge_pair(idx, n).unwrap(), (i, j));
                }
            }
            prop_assert!(seen.iter().all(|&b| b));
        }
    }
}
