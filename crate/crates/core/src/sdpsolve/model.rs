use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse symmetric matrix: lower-triangle entries `(row, col, value)` with
/// `row >= col`, sorted, no duplicates, no explicit zeros.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from arbitrary `(i, j, v)` triples. Both triangles may be
    /// given; `(i, j)` and `(j, i)` must then agree, otherwise the input is
    /// rejected as non-symmetric. Repeated positions are an error.
    pub fn from_triples(triples: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut raw: Vec<(usize, usize, f64, bool)> =
            triples.into_iter().map(|(i, j, v)| (i.max(j), i.min(j), v, i < j)).collect();
        raw.sort_by(|a, b| (a.0, a.1, a.3).cmp(&(b.0, b.1, b.3)));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(raw.len());
        let mut k = 0;
        while k < raw.len() {
            let (r, c, v, upper) = raw[k];
            if k + 1 < raw.len() && raw[k + 1].0 == r && raw[k + 1].1 == c {
                let (_, _, w, upper2) = raw[k + 1];
                if upper == upper2 {
                    return Err(Error::Model(format!("entry ({r},{c}) given twice")));
                }
                if v != w {
                    return Err(Error::Model(format!("non-symmetric entry ({r},{c}): {v} vs {w}")));
                }
                k += 1;
            }
            if v != 0.0 {
                entries.push((r, c, v));
            }
            k += 1;
        }
        Ok(SparseSym { entries })
    }

    /// Builds from a dense row-major square matrix, rejecting asymmetry.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Model(format!("row {i} has length {}, expected {k}", row.len())));
            }
            for j in 0..=i {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Model(format!("non-symmetric entry ({i},{j}): {} vs {}", rows[i][j], rows[j][i])));
                }
                if rows[i][j] != 0.0 {
                    entries.push((i, j, rows[i][j]));
                }
            }
        }
        Ok(SparseSym { entries })
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = (i.max(j), i.min(j));
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&key))
            .map_or(0.0, |k| self.entries[k].2)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.2.abs()))
    }

    /// Frobenius norm of the full symmetric matrix.
    pub fn frobenius(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    Dense,
    /// Diagonal block: each diagonal entry is an independent scalar
    /// inequality.
    Diagonal,
}

/// One block of the matrix inequality `Σ_j y_j F_j − F_0 ⪰ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub order: usize,
    /// `F_0`.
    pub constant: SparseSym,
    /// `(j, F_j)` for variables with a nonzero coefficient, sorted by `j`.
    pub coeffs: Vec<(usize, SparseSym)>,
}

impl Block {
    pub fn new(kind: BlockKind, order: usize, constant: SparseSym, mut coeffs: Vec<(usize, SparseSym)>) -> Self {
        coeffs.retain(|(_, f)| !f.is_empty());
        coeffs.sort_by_key(|c| c.0);
        Block { kind, order, constant, coeffs }
    }

    /// Dense block from dense matrices.
    pub fn dense(constant: &[Vec<f64>], coeffs: &[(usize, Vec<Vec<f64>>)]) -> Result<Self> {
        let order = constant.len();
        let c = SparseSym::from_dense(constant)?;
        let f = coeffs
            .iter()
            .map(|(j, m)| {
                if m.len() != order {
                    return Err(Error::Model(format!("coefficient of variable {j} has order {}, expected {order}", m.len())));
                }
                Ok((*j, SparseSym::from_dense(m)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Block::new(BlockKind::Dense, order, c, f))
    }

    /// Scalar inequalities `Σ_j a_kj y_j − b_k >= 0` as a diagonal block.
    pub fn diagonal(rows: &[(Vec<(usize, f64)>, f64)]) -> Self {
        let order = rows.len();
        let constant = SparseSym { entries: rows.iter().enumerate().filter(|(_, r)| r.1 != 0.0).map(|(k, r)| (k, k, r.1)).collect() };
        let mut by_var: std::collections::BTreeMap<usize, Vec<(usize, usize, f64)>> = Default::default();
        for (k, (terms, _)) in rows.iter().enumerate() {
            for &(j, a) in terms {
                if a != 0.0 {
                    by_var.entry(j).or_default().push((k, k, a));
                }
            }
        }
        let coeffs = by_var.into_iter().map(|(j, e)| (j, SparseSym { entries: e })).collect();
        Block::new(BlockKind::Diagonal, order, constant, coeffs)
    }

    pub(crate) fn from_parts(kind: BlockKind, order: usize, constant: Vec<(usize, usize, f64)>, coeffs: Vec<(usize, Vec<(usize, usize, f64)>)>) -> Result<Self> {
        let constant = SparseSym::from_triples(constant)?;
        let coeffs = coeffs
            .into_iter()
            .map(|(j, e)| Ok((j, SparseSym::from_triples(e)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Block::new(kind, order, constant, coeffs))
    }
}

/// Block-diagonal SDP in free-variable form:
///
/// ```text
///   maximize    cᵀy
///   subject to  Σ_j y_j F_j^(b) − F_0^(b) ⪰ 0   for every block b
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSdp {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<Block>,
}

impl BlockSdp {
    pub fn new(objective: Vec<f64>, blocks: Vec<Block>) -> Result<Self> {
        let p = BlockSdp { num_vars: objective.len(), objective, blocks };
        p.validate()?;
        Ok(p)
    }

    /// Checks index ranges, symmetry storage and block shapes.
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::Model(format!("objective has {} entries for {} variables", self.objective.len(), self.num_vars)));
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            if blk.order == 0 {
                return Err(Error::Model(format!("block {b} has order 0")));
            }
            let check = |m: &SparseSym, what: &str| -> Result<()> {
                let mut prev: Option<(usize, usize)> = None;
                for &(r, c, _) in m.entries() {
                    if r >= blk.order || c > r {
                        return Err(Error::Model(format!("block {b} {what}: entry ({r},{c}) outside lower triangle of order {}", blk.order)));
                    }
                    if blk.kind == BlockKind::Diagonal && r != c {
                        return Err(Error::Model(format!("block {b} {what}: off-diagonal entry in a diagonal block")));
                    }
                    if prev.is_some_and(|p| p >= (r, c)) {
                        return Err(Error::Model(format!("block {b} {what}: entries not sorted/unique")));
                    }
                    prev = Some((r, c));
                }
                Ok(())
            };
            check(&blk.constant, "F0")?;
            let mut last: Option<usize> = None;
            for (j, f) in &blk.coeffs {
                if *j >= self.num_vars {
                    return Err(Error::Model(format!("block {b}: variable {j} out of range")));
                }
                if last.is_some_and(|l| l >= *j) {
                    return Err(Error::Model(format!("block {b}: coefficient list not sorted/unique")));
                }
                last = Some(*j);
                check(f, &format!("F{}", j + 1))?;
            }
        }
        Ok(())
    }

    /// Sum of block orders (diagonal blocks count each entry).
    pub fn total_order(&self) -> usize {
        self.blocks.iter().map(|b| b.order).sum()
    }

    /// Per-variable flag: appears in at least one block.
    pub fn used_vars(&self) -> Vec<bool> {
        let mut used = vec![false; self.num_vars];
        for b in &self.blocks {
            for (j, _) in &b.coeffs {
                used[*j] = true;
            }
        }
        used
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triples_symmetry() {
        let s = SparseSym::from_triples([(0, 1, 2.0), (1, 0, 2.0), (2, 2, 1.0)]).unwrap();
        assert_eq!(s.entries(), &[(1, 0, 2.0), (2, 2, 1.0)]);
        assert_eq!(s.get(0, 1), 2.0);
        assert!(SparseSym::from_triples([(0, 1, 2.0), (1, 0, 3.0)]).is_err());
        assert!(SparseSym::from_triples([(0, 1, 2.0), (0, 1, 2.0)]).is_err());
    }

    #[test]
    fn dense_rejects_asymmetry() {
        assert!(Block::dense(&[vec![1.0, 2.0], vec![0.0, 1.0]], &[]).is_err());
        let b = Block::dense(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[(0, vec![vec![0.0, 1.0], vec![1.0, 0.0]])]).unwrap();
        assert_eq!(b.order, 2);
        assert_eq!(b.coeffs[0].1.entries(), &[(1, 0, 1.0)]);
    }

    #[test]
    fn validation() {
        let b = Block::diagonal(&[(vec![(0, -1.0)], -1.0)]);
        assert!(BlockSdp::new(vec![1.0], vec![b.clone()]).is_ok());
        assert!(BlockSdp::new(vec![], vec![b]).is_err());
        let bad = Block { kind: BlockKind::Dense, order: 1, constant: SparseSym { entries: vec![(1, 0, 1.0)] }, coeffs: vec![] };
        assert!(BlockSdp::new(vec![], vec![bad]).is_err());
    }
}
