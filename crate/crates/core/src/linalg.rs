//! Row-sparse matrices over a [`Scalar`] and an exact kernel solver.
//!
//! Sector blocks are small but products like `P·E` on four-pocket sectors
//! would be cubic in the sector size if stored densely, so every block is a
//! list of sorted `(column, value)` pairs per row with no stored zeros.

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, T)>>,
}

/// First entry where two matrices disagree.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryMismatch<T> {
    pub row: usize,
    pub col: usize,
    pub left: T,
    pub right: T,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            rows: (0..n).map(|i| vec![(i, T::one())]).collect(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates
    /// and dropping exact zeros.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            rows[r].push((c, v));
        }
        for row in rows.iter_mut() {
            *row = compress(std::mem::take(row));
        }
        Self { nrows, ncols, rows }
    }

    pub fn from_dense(dense: &[Vec<T>]) -> Self {
        let nrows = dense.len();
        let ncols = dense.first().map_or(0, Vec::len);
        Self::from_triplets(
            nrows,
            ncols,
            dense
                .iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, v)| (r, c, v.clone()))),
        )
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> &[(usize, T)] {
        &self.rows[r]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        match self.rows[r].binary_search_by_key(&c, |(col, _)| *col) {
            Ok(i) => self.rows[r][i].1.clone(),
            Err(_) => T::zero(),
        }
    }

    pub fn row_sum(&self, r: usize) -> T {
        self.rows[r]
            .iter()
            .fold(T::zero(), |acc, (_, v)| acc + v.clone())
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row {
                out[r][*c] = v.clone();
            }
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SparseMatrix<U> {
        SparseMatrix::from_triplets(
            self.nrows,
            self.ncols,
            self.rows
                .iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, *c, v)))
                .map(|(r, c, v)| (r, c, f(v))),
        )
    }

    pub fn scale(&self, factor: &T) -> Self {
        self.map(|v| v.clone() * factor.clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.rows
                .iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().map(move |(c, v)| (*c, r, v.clone()))),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -T::one())
    }

    fn combine(&self, other: &Self, sign: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut merged: Vec<(usize, T)> = a.clone();
                merged.extend(b.iter().map(|(c, v)| (*c, sign.clone() * v.clone())));
                compress(merged)
            })
            .collect();
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            rows,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.ncols, other.nrows,
            "cannot multiply {}x{} by {}x{}",
            self.nrows, self.ncols, other.nrows, other.ncols
        );
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = Vec::new();
                for (k, a) in row {
                    for (c, b) in &other.rows[*k] {
                        acc.push((*c, a.clone() * b.clone()));
                    }
                }
                compress(acc)
            })
            .collect();
        Self {
            nrows: self.nrows,
            ncols: other.ncols,
            rows,
        }
    }

    /// Matrix-vector product `M v` (the operator applied to a function).
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.ncols, v.len());
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .fold(T::zero(), |acc, (c, a)| acc + a.clone() * v[*c].clone())
            })
            .collect()
    }

    /// First entry (row-major) where `self` and `other` differ beyond `tol`.
    pub fn first_mismatch(&self, other: &Self, tol: f64) -> Option<EntryMismatch<T>> {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for r in 0..self.nrows {
            let (a, b) = (&self.rows[r], &other.rows[r]);
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let ca = a.get(i).map_or(usize::MAX, |e| e.0);
                let cb = b.get(j).map_or(usize::MAX, |e| e.0);
                let (col, left, right) = if ca == cb {
                    i += 1;
                    j += 1;
                    (ca, a[i - 1].1.clone(), b[j - 1].1.clone())
                } else if ca < cb {
                    i += 1;
                    (ca, a[i - 1].1.clone(), T::zero())
                } else {
                    j += 1;
                    (cb, T::zero(), b[j - 1].1.clone())
                };
                if !left.close(&right, tol) {
                    return Some(EntryMismatch {
                        row: r,
                        col,
                        left,
                        right,
                    });
                }
            }
        }
        None
    }
}

fn compress<T: Scalar>(mut entries: Vec<(usize, T)>) -> Vec<(usize, T)> {
    entries.sort_by_key(|(c, _)| *c);
    let mut out: Vec<(usize, T)> = Vec::with_capacity(entries.len());
    for (c, v) in entries {
        match out.last_mut() {
            Some((lc, lv)) if *lc == c => *lv = lv.clone() + v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

/// Basis of the right kernel `{x : A x = 0}` of a dense matrix.
///
/// Gauss-Jordan elimination; pivots are chosen by largest magnitude, which
/// for exact scalars only matters for speed. Entries at or below `tol` are
/// treated as zero on the float path.
pub fn nullspace<T: Scalar>(a: &[Vec<T>], tol: f64) -> Vec<Vec<T>> {
    let nrows = a.len();
    let ncols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let best = (r..nrows)
            .filter(|&i| !m[i][c].is_negligible(tol))
            .max_by(|&i, &j| {
                m[i][c]
                    .abs_f64()
                    .partial_cmp(&m[j][c].abs_f64())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        let Some(p) = best else { continue };
        m.swap(r, p);
        let inv = T::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..nrows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for k in 0..ncols {
                    let delta = f.clone() * m[r][k].clone();
                    m[i][k] = m[i][k].clone() - delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![T::zero(); ncols];
            v[f] = T::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][f].clone();
            }
            v
        })
        .collect()
}
