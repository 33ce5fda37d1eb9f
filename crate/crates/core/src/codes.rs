//! Matrix algebra over GF(q): Vandermonde MDS construction and encoding,
//! Reed-Solomon erasure decoding of coded key shares, and the rank / kernel /
//! column-space primitives the security verifier is built on.
//!
//! Decoding deliberately goes through plain Gaussian elimination: at protocol
//! scale (K in the hundreds at most) exactness and auditability dominate.

use thiserror::Error;

use crate::algebra::{AlgebraError, FieldConfig, FieldElement};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodesError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("evaluation points must be pairwise distinct")]
    DuplicatePoints,
    #[error("evaluation point at index {0} must be nonzero")]
    ZeroEvaluationPoint(usize),
    #[error("duplicate share column index {0}")]
    DuplicateShareIndex(usize),
    #[error("share column index {0} out of range")]
    ShareIndexOutOfRange(usize),
    #[error("need at least {needed} shares, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("selected submatrix is singular")]
    SingularSubmatrix,
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
}

/// Row-major matrix over a single prime field.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<FieldElement>,
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} over {:?} [", self.rows, self.cols, self.field())?;
        for r in 0..self.rows {
            let row: Vec<u64> = self.row(r).iter().map(|e| e.value()).collect();
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<FieldElement>) -> Result<Matrix, CodesError> {
        if rows == 0 || cols == 0 {
            return Err(CodesError::EmptyMatrix);
        }
        if entries.len() != rows * cols {
            return Err(CodesError::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let field = entries[0].field();
        if entries.iter().any(|e| e.field() != field) {
            return Err(CodesError::Algebra(AlgebraError::ModulusMismatch(
                field.modulus(),
                0,
            )));
        }
        Ok(Matrix { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<FieldElement>]) -> Result<Matrix, CodesError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(CodesError::EmptyMatrix);
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(CodesError::DimensionMismatch(
                "ragged rows".to_string(),
            ));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn zero(rows: usize, cols: usize, field: FieldConfig) -> Matrix {
        Matrix {
            rows,
            cols,
            entries: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(n: usize, field: FieldConfig) -> Matrix {
        let mut m = Matrix::zero(n, n, field);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> FieldConfig {
        self.entries[0].field()
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zero(self.cols, self.rows, self.field());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix, CodesError> {
        if self.cols != rhs.rows {
            return Err(CodesError::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let field = self.field();
        let mut out = Matrix::zero(self.rows, rhs.cols, field);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.set(r, c, out.get(r, c) + a * rhs.get(k, c));
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[FieldElement]) -> Result<Vec<FieldElement>, CodesError> {
        if v.len() != self.cols {
            return Err(CodesError::DimensionMismatch(format!(
                "{}x{} matrix times length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let field = self.field();
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(field.zero(), |acc, (&a, &x)| acc + a * x)
            })
            .collect())
    }

    /// Horizontal concatenation [self | rhs].
    pub fn hstack(&self, rhs: &Matrix) -> Result<Matrix, CodesError> {
        if self.rows != rhs.rows {
            return Err(CodesError::DimensionMismatch(format!(
                "hstack of {} and {} rows",
                self.rows, rhs.rows
            )));
        }
        let mut rows = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut row = self.row(r).to_vec();
            row.extend_from_slice(rhs.row(r));
            rows.push(row);
        }
        Matrix::from_rows(&rows)
    }

    /// Submatrix made of the given columns, in the given order.
    pub fn columns_submatrix(&self, cols: &[usize]) -> Result<Matrix, CodesError> {
        if cols.is_empty() {
            return Err(CodesError::EmptyMatrix);
        }
        for &c in cols {
            if c >= self.cols {
                return Err(CodesError::ShareIndexOutOfRange(c));
            }
        }
        let mut rows = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            rows.push(cols.iter().map(|&c| self.get(r, c)).collect());
        }
        Matrix::from_rows(&rows)
    }

    /// Reduced row echelon form together with the pivot column indices.
    fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..m.cols {
            if pivot_row == m.rows {
                break;
            }
            let Some(sel) = (pivot_row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            if sel != pivot_row {
                for c in 0..m.cols {
                    let tmp = m.get(sel, c);
                    m.set(sel, c, m.get(pivot_row, c));
                    m.set(pivot_row, c, tmp);
                }
            }
            let inv = m.get(pivot_row, col).inv().expect("pivot is nonzero");
            for c in 0..m.cols {
                m.set(pivot_row, c, m.get(pivot_row, c) * inv);
            }
            for r in 0..m.rows {
                if r == pivot_row {
                    continue;
                }
                let factor = m.get(r, col);
                if factor.is_zero() {
                    continue;
                }
                for c in 0..m.cols {
                    let v = m.get(r, c) - factor * m.get(pivot_row, c);
                    m.set(r, c, v);
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of {x : Mx = 0}; empty when the kernel is trivial.
    pub fn kernel_basis(&self) -> Vec<Vec<FieldElement>> {
        let field = self.field();
        let (rref, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Vec::with_capacity(free.len());
        for &fc in &free {
            let mut v = vec![field.zero(); self.cols];
            v[fc] = field.one();
            for (prow, &pcol) in pivots.iter().enumerate() {
                v[pcol] = -rref.get(prow, fc);
            }
            basis.push(v);
        }
        basis
    }

    /// Whether `v` is a linear combination of this matrix's columns.
    pub fn in_column_space(&self, v: &[FieldElement]) -> Result<bool, CodesError> {
        if v.len() != self.rows {
            return Err(CodesError::DimensionMismatch(format!(
                "vector length {} vs {} rows",
                v.len(),
                self.rows
            )));
        }
        let col = Matrix::new(self.rows, 1, v.to_vec())?;
        Ok(self.hstack(&col)?.rank() == self.rank())
    }

    /// One solution of Mx = b, or `None` when the system is inconsistent.
    pub fn solve(&self, b: &[FieldElement]) -> Result<Option<Vec<FieldElement>>, CodesError> {
        if b.len() != self.rows {
            return Err(CodesError::DimensionMismatch(format!(
                "rhs length {} vs {} rows",
                b.len(),
                self.rows
            )));
        }
        let field = self.field();
        let aug = self.hstack(&Matrix::new(self.rows, 1, b.to_vec())?)?;
        let (rref, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![field.zero(); self.cols];
        for (prow, &pcol) in pivots.iter().enumerate() {
            x[pcol] = rref.get(prow, self.cols);
        }
        Ok(Some(x))
    }

    /// Inverse of a square matrix.
    pub fn invert(&self) -> Result<Matrix, CodesError> {
        if self.rows != self.cols {
            return Err(CodesError::DimensionMismatch(format!(
                "cannot invert {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let aug = self.hstack(&Matrix::identity(n, self.field()))?;
        let (rref, pivots) = aug.rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return Err(CodesError::SingularSubmatrix);
        }
        rref.columns_submatrix(&(n..2 * n).collect::<Vec<_>>())
    }
}

/// Vandermonde matrix: entry (i, j) = points[j]^i for i in [0, height).
///
/// Any `height` distinct points give a matrix whose every height x height
/// submatrix is invertible, which is the MDS property the key-sharing layer
/// relies on.
pub fn vandermonde(height: usize, points: &[FieldElement]) -> Result<Matrix, CodesError> {
    if height == 0 || points.is_empty() {
        return Err(CodesError::EmptyMatrix);
    }
    if height > points.len() {
        return Err(CodesError::DimensionMismatch(format!(
            "height {} exceeds point count {}",
            height,
            points.len()
        )));
    }
    for (i, &p) in points.iter().enumerate() {
        if points[i + 1..].contains(&p) {
            return Err(CodesError::DuplicatePoints);
        }
    }
    let mut rows = Vec::with_capacity(height);
    for i in 0..height {
        rows.push(points.iter().map(|&p| p.pow(i as u64)).collect());
    }
    Matrix::from_rows(&rows)
}

/// Encodes `u` sub-key vectors into one coded share per column of `m`.
///
/// Share j is the column-j combination of the sub-keys, componentwise over
/// the sub-key symbols.
pub fn mds_encode(
    subkeys: &[Vec<FieldElement>],
    m: &Matrix,
) -> Result<Vec<Vec<FieldElement>>, CodesError> {
    if subkeys.len() != m.rows() {
        return Err(CodesError::DimensionMismatch(format!(
            "{} sub-keys vs {} matrix rows",
            subkeys.len(),
            m.rows()
        )));
    }
    let sub_len = subkeys[0].len();
    if subkeys.iter().any(|s| s.len() != sub_len) {
        return Err(CodesError::DimensionMismatch(
            "sub-keys of unequal length".to_string(),
        ));
    }
    let field = m.field();
    let mut shares = Vec::with_capacity(m.cols());
    for j in 0..m.cols() {
        let mut share = vec![field.zero(); sub_len];
        for (row, subkey) in subkeys.iter().enumerate() {
            let coeff = m.get(row, j);
            if coeff.is_zero() {
                continue;
            }
            for (sym, &s) in subkey.iter().enumerate() {
                share[sym] = share[sym] + coeff * s;
            }
        }
        shares.push(share);
    }
    Ok(shares)
}

/// Recovers the `u` sub-key vectors from any `u` coded shares.
///
/// Shares carry their column index explicitly since dropouts leave gaps; the
/// first `u` shares in column order are used.
pub fn rs_erasure_decode(
    shares: &[(usize, Vec<FieldElement>)],
    m: &Matrix,
) -> Result<Vec<Vec<FieldElement>>, CodesError> {
    let u = m.rows();
    if shares.len() < u {
        return Err(CodesError::InsufficientShares {
            needed: u,
            got: shares.len(),
        });
    }
    let mut sorted: Vec<&(usize, Vec<FieldElement>)> = shares.iter().collect();
    sorted.sort_by_key(|(c, _)| *c);
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(CodesError::DuplicateShareIndex(w[0].0));
        }
    }
    for &&(c, _) in &sorted {
        if c >= m.cols() {
            return Err(CodesError::ShareIndexOutOfRange(c));
        }
    }
    let sub_len = sorted[0].1.len();
    if sorted.iter().any(|(_, s)| s.len() != sub_len) {
        return Err(CodesError::DimensionMismatch(
            "shares of unequal length".to_string(),
        ));
    }
    let chosen = &sorted[..u];
    let cols: Vec<usize> = chosen.iter().map(|(c, _)| *c).collect();
    // share vector = subkey vector * M_sub, so solve with the transpose.
    let m_sub_t = m.columns_submatrix(&cols)?.transpose();
    let inv = m_sub_t.invert()?;
    let mut subkeys = vec![Vec::with_capacity(sub_len); u];
    for sym in 0..sub_len {
        let rhs: Vec<FieldElement> = chosen.iter().map(|(_, s)| s[sym]).collect();
        let x = inv.mul_vec(&rhs)?;
        for (k, subkey) in subkeys.iter_mut().enumerate() {
            subkey.push(x[k]);
        }
    }
    Ok(subkeys)
}

/// The public evaluation points of one retrieval: one nonzero alpha per user
/// and the betas the decoder reads the result from, all pairwise distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationPoints {
    alphas: Vec<FieldElement>,
    betas: Vec<FieldElement>,
}

impl EvaluationPoints {
    pub fn new(
        alphas: Vec<FieldElement>,
        betas: Vec<FieldElement>,
    ) -> Result<EvaluationPoints, CodesError> {
        if alphas.is_empty() {
            return Err(CodesError::EmptyMatrix);
        }
        for (i, a) in alphas.iter().enumerate() {
            if a.is_zero() {
                return Err(CodesError::ZeroEvaluationPoint(i));
            }
        }
        let mut all: Vec<FieldElement> = alphas.iter().chain(betas.iter()).copied().collect();
        let n = all.len();
        all.sort_by_key(|e| e.value());
        all.dedup();
        if all.len() != n {
            return Err(CodesError::DuplicatePoints);
        }
        Ok(EvaluationPoints { alphas, betas })
    }

    /// Deterministic layout: alpha_i = i for users 1..=k, beta_l = k + l.
    /// Collision-free whenever q > k + beta count.
    pub fn standard(k: usize, betas: usize, field: FieldConfig) -> Result<EvaluationPoints, CodesError> {
        let alphas = (1..=k as u64).map(|v| field.element(v)).collect();
        let betas = (1..=betas as u64).map(|v| field.element(k as u64 + v)).collect();
        EvaluationPoints::new(alphas, betas)
    }

    /// Evaluation point of a 1-based user id.
    pub fn alpha(&self, user: usize) -> FieldElement {
        self.alphas[user - 1]
    }

    pub fn alphas(&self) -> &[FieldElement] {
        &self.alphas
    }

    pub fn betas(&self) -> &[FieldElement] {
        &self.betas
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn gf(q: u64) -> FieldConfig {
        FieldConfig::new(q).unwrap()
    }

    fn fe(q: u64, v: u64) -> FieldElement {
        gf(q).element(v)
    }

    #[test]
    fn vandermonde_examples() {
        // Matches the 2x3 encoding matrix used by the running key-sharing example.
        let m = vandermonde(2, &[fe(11, 1), fe(11, 2), fe(11, 4)]).unwrap();
        assert_eq!(m.row(0), &[fe(11, 1), fe(11, 1), fe(11, 1)]);
        assert_eq!(m.row(1), &[fe(11, 1), fe(11, 2), fe(11, 4)]);

        let ones = vandermonde(1, &[fe(11, 3), fe(11, 7), fe(11, 9)]).unwrap();
        assert!(ones.row(0).iter().all(|e| *e == fe(11, 1)));

        let m7 = vandermonde(3, &[fe(7, 1), fe(7, 2), fe(7, 3)]).unwrap();
        assert_eq!(m7.row(0), &[fe(7, 1), fe(7, 1), fe(7, 1)]);
        assert_eq!(m7.row(1), &[fe(7, 1), fe(7, 2), fe(7, 3)]);
        assert_eq!(m7.row(2), &[fe(7, 1), fe(7, 4), fe(7, 2)]);

        assert_eq!(
            vandermonde(2, &[fe(11, 1), fe(11, 1)]),
            Err(CodesError::DuplicatePoints)
        );
    }

    #[test]
    fn mds_encode_example_layout() {
        // U=2 sub-keys, M = [[1,1,1],[1,2,4]]: shares are
        // (z1+z2, z1+2*z2, z1+4*z2) componentwise.
        let f = gf(11);
        let m = vandermonde(2, &[f.element(1), f.element(2), f.element(4)]).unwrap();
        let z1 = vec![f.element(3), f.element(5)];
        let z2 = vec![f.element(7), f.element(2)];
        let shares = mds_encode(&[z1.clone(), z2.clone()], &m).unwrap();
        for sym in 0..2 {
            assert_eq!(shares[0][sym], z1[sym] + z2[sym]);
            assert_eq!(shares[1][sym], z1[sym] + f.element(2) * z2[sym]);
            assert_eq!(shares[2][sym], z1[sym] + f.element(4) * z2[sym]);
        }

        let zero = vec![f.zero(); 2];
        let zshares = mds_encode(&[zero.clone(), zero.clone()], &m).unwrap();
        assert!(zshares.iter().flatten().all(|e| e.is_zero()));
    }

    // Independent oracle: naive matrix-vector product, written without the
    // production encode path.
    fn matmul_oracle(m: &Matrix, v: &[FieldElement]) -> Vec<FieldElement> {
        let f = m.field();
        (0..m.rows())
            .map(|r| {
                let mut acc = f.zero();
                for (c, &x) in v.iter().enumerate() {
                    acc = acc + m.get(r, c) * x;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn mds_encode_matches_matmul_oracle() {
        let f = gf(11);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = vandermonde(2, &[f.element(1), f.element(2), f.element(3)]).unwrap();
            let subkeys: Vec<Vec<FieldElement>> =
                (0..2).map(|_| vec![f.sample(&mut rng)]).collect();
            let shares = mds_encode(&subkeys, &m).unwrap();
            let flat: Vec<FieldElement> = subkeys.iter().map(|s| s[0]).collect();
            let expect = matmul_oracle(&m.transpose(), &flat);
            let got: Vec<FieldElement> = shares.iter().map(|s| s[0]).collect();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn rs_decode_recovers_the_running_example_sums() {
        // Columns {0,1} of the 2x3 Vandermonde over points 1,2,4 solve back to
        // the two aggregated sub-keys.
        let f = gf(11);
        let m = vandermonde(2, &[f.element(1), f.element(2), f.element(4)]).unwrap();
        let s1 = vec![f.element(4)];
        let s2 = vec![f.element(9)];
        let shares = mds_encode(&[s1.clone(), s2.clone()], &m).unwrap();
        let got = rs_erasure_decode(&[(0, shares[0].clone()), (1, shares[1].clone())], &m).unwrap();
        assert_eq!(got, vec![s1, s2]);

        let zeros = rs_erasure_decode(
            &[(0, vec![f.zero()]), (2, vec![f.zero()])],
            &m,
        )
        .unwrap();
        assert!(zeros.iter().flatten().all(|e| e.is_zero()));
    }

    #[test]
    fn rs_decode_insufficient_and_duplicate() {
        let f = gf(11);
        let m = vandermonde(2, &[f.element(1), f.element(2), f.element(4)]).unwrap();
        assert_eq!(
            rs_erasure_decode(&[(0, vec![f.zero()])], &m),
            Err(CodesError::InsufficientShares { needed: 2, got: 1 })
        );
        assert_eq!(
            rs_erasure_decode(&[(1, vec![f.zero()]), (1, vec![f.zero()])], &m),
            Err(CodesError::DuplicateShareIndex(1))
        );
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == k {
                out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
            }
        }
        out
    }

    #[test]
    fn encode_decode_roundtrip_all_column_subsets() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for (k, u) in [(3usize, 2usize), (4, 2), (5, 3), (8, 4)] {
            let f = gf(97);
            let points: Vec<FieldElement> = (1..=k as u64).map(|v| f.element(v)).collect();
            let m = vandermonde(u, &points).unwrap();
            let subkeys: Vec<Vec<FieldElement>> = (0..u)
                .map(|_| (0..3).map(|_| f.sample(&mut rng)).collect())
                .collect();
            let shares = mds_encode(&subkeys, &m).unwrap();
            for subset in subsets(k, u) {
                let picked: Vec<(usize, Vec<FieldElement>)> =
                    subset.iter().map(|&c| (c, shares[c].clone())).collect();
                assert_eq!(rs_erasure_decode(&picked, &m).unwrap(), subkeys);
            }
        }
    }

    #[test]
    fn mds_property_exhaustive() {
        // Every UxU submatrix of a Vandermonde over distinct points is
        // invertible, checked over all column subsets for K <= 8.
        for (k, u) in [(3usize, 2usize), (4, 3), (6, 2), (8, 3), (8, 5)] {
            let f = gf(101);
            let points: Vec<FieldElement> = (1..=k as u64).map(|v| f.element(v)).collect();
            let m = vandermonde(u, &points).unwrap();
            for subset in subsets(k, u) {
                let sub = m.columns_submatrix(&subset).unwrap();
                assert_eq!(sub.rank(), u, "k={k} u={u} subset={subset:?}");
                assert!(sub.invert().is_ok());
            }
        }
    }

    #[test]
    fn rank_kernel_colspace_examples() {
        let f = gf(11);
        let id = Matrix::identity(3, f);
        assert_eq!(id.rank(), 3);
        assert!(id.kernel_basis().is_empty());

        let m = vandermonde(2, &[f.element(1), f.element(2), f.element(4)]).unwrap();
        assert_eq!(m.rank(), 2);
        assert_eq!(m.kernel_basis().len(), 1);

        let v: Vec<FieldElement> = (0..2)
            .map(|r| m.get(r, 0) + m.get(r, 2))
            .collect();
        assert!(m.in_column_space(&v).unwrap());
    }

    #[test]
    fn kernel_vectors_annihilate() {
        let f = gf(13);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..50 {
            let entries: Vec<FieldElement> = (0..12).map(|_| f.sample(&mut rng)).collect();
            let m = Matrix::new(3, 4, entries).unwrap();
            for v in m.kernel_basis() {
                assert!(m.mul_vec(&v).unwrap().iter().all(|e| e.is_zero()));
            }
        }
    }

    #[test]
    fn evaluation_points_standard() {
        let f = gf(11);
        let pts = EvaluationPoints::standard(4, 2, f).unwrap();
        assert_eq!(pts.alpha(1), f.element(1));
        assert_eq!(pts.alpha(4), f.element(4));
        assert_eq!(pts.betas(), &[f.element(5), f.element(6)]);

        // q=7, k=4, two betas fills the nonzero field elements exactly.
        let f7 = gf(7);
        assert!(EvaluationPoints::standard(4, 2, f7).is_ok());
        // a third beta wraps onto 0, which is distinct from every alpha
        assert!(EvaluationPoints::standard(4, 3, f7).is_ok());
        // a fourth wraps onto alpha_1 and collides
        assert_eq!(
            EvaluationPoints::standard(4, 4, f7),
            Err(CodesError::DuplicatePoints)
        );
    }

    proptest! {
        // rank-nullity over random matrices.
        #[test]
        fn rank_plus_nullity(seed in 0u64..2_000) {
            let f = gf(17);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let rows = rng.random_range(1..5usize);
            let cols = rng.random_range(1..6usize);
            let entries: Vec<FieldElement> =
                (0..rows * cols).map(|_| f.sample(&mut rng)).collect();
            let m = Matrix::new(rows, cols, entries).unwrap();
            prop_assert_eq!(m.rank() + m.kernel_basis().len(), cols);
        }

        // Interpolation agrees with solving the Vandermonde linear system.
        #[test]
        fn lagrange_agrees_with_linear_solve(seed in 0u64..2_000) {
            use crate::algebra::Polynomial;
            let f = gf(101);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let n = rng.random_range(1..6usize);
            let mut xs: Vec<u64> = (0..101).collect();
            for i in (1..xs.len()).rev() {
                let j = rng.random_range(0..=i);
                xs.swap(i, j);
            }
            let pts: Vec<(FieldElement, FieldElement)> = xs[..n]
                .iter()
                .map(|&x| (f.element(x), f.sample(&mut rng)))
                .collect();
            let p = Polynomial::lagrange_interpolate(&pts).unwrap();

            // Oracle route: coefficients from the Vandermonde system
            // V c = y with V[i][j] = x_i^j.
            let vrows: Vec<Vec<FieldElement>> = pts
                .iter()
                .map(|&(x, _)| (0..n as u64).map(|j| x.pow(j)).collect())
                .collect();
            let v = Matrix::from_rows(&vrows).unwrap();
            let y: Vec<FieldElement> = pts.iter().map(|&(_, y)| y).collect();
            let c = v.solve(&y).unwrap().expect("system is consistent");
            let oracle = Polynomial::new(c);
            prop_assert_eq!(p, oracle);
        }
    }
}
