use crate::error::{Error, Result};
use crate::graphs::Graph;

/// Cone `{x ∈ ℝ^{n+1} : a_lᵀx ≥ 0}`; coordinate 0 is the homogenizing one.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyhedralCone {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl PolyhedralCone {
    /// Rows must have length `n + 1`; exact duplicates are dropped, first
    /// occurrence kept.
    pub fn new(n: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
        for (l, row) in rows.into_iter().enumerate() {
            if row.len() != n + 1 {
                return Err(Error::Argument(format!("row {l} has length {}, expected {}", row.len(), n + 1)));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument(format!("row {l} has a non-finite entry")));
            }
            if !kept.contains(&row) {
                kept.push(row);
            }
        }
        Ok(PolyhedralCone { n, rows: kept })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Homogenized unit cube: `x_i ≥ 0` and `x_0 − x_i ≥ 0`.
    pub fn cube(n: usize) -> Self {
        let mut rows = Vec::with_capacity(2 * n);
        for i in 1..=n {
            let mut a = vec![0.0; n + 1];
            a[i] = 1.0;
            rows.push(a);
        }
        for i in 1..=n {
            let mut a = vec![0.0; n + 1];
            a[0] = 1.0;
            a[i] = -1.0;
            rows.push(a);
        }
        PolyhedralCone { n, rows }
    }

    /// True if every 0/1 point `(1, x)` with `x` in the cube satisfying the
    /// rows also satisfies the cube rows, i.e. all rows of the cube are
    /// present.
    pub fn contains_cube_rows(&self) -> bool {
        PolyhedralCone::cube(self.n).rows.iter().all(|r| self.rows.contains(r))
    }

    /// `a_lᵀ(1, x)` for every row.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|a| a[0] + a[1..].iter().zip(x).map(|(p, q)| p * q).sum::<f64>()).collect()
    }
}

/// Fractional stable set cone: `x_i ≥ 0` per vertex, `x_0 − x_i − x_j ≥ 0`
/// per edge.
pub fn fr_cone(g: &Graph) -> PolyhedralCone {
    let n = g.n();
    let mut rows = Vec::with_capacity(n + g.num_edges());
    for i in 0..n {
        let mut a = vec![0.0; n + 1];
        a[i + 1] = 1.0;
        rows.push(a);
    }
    for &(i, j) in g.edges() {
        let mut a = vec![0.0; n + 1];
        a[0] = 1.0;
        a[i + 1] = -1.0;
        a[j + 1] = -1.0;
        rows.push(a);
    }
    PolyhedralCone { n, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fr_row_counts() {
        assert_eq!(fr_cone(&Graph::cycle(5).unwrap()).rows().len(), 10);
        assert_eq!(fr_cone(&Graph::complete(2).unwrap()).rows().len(), 3);
        assert_eq!(fr_cone(&Graph::empty(3).unwrap()).rows().len(), 3);
    }

    #[test]
    fn dedup_and_shape() {
        let k = PolyhedralCone::new(1, vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert_eq!(k.rows().len(), 2);
        assert!(k.contains_cube_rows());
        assert!(PolyhedralCone::new(1, vec![vec![1.0]]).is_err());
        assert_eq!(k.evaluate(&[1.0]), vec![1.0, 0.0]);
    }
}
