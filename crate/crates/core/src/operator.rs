//! Operators on functions of sector-indexed states.
//!
//! A [`SectorOperator`] acts on functions from the left: block `N` holds the
//! matrix `A[x][y]` with `x` in row sector `N` and `y` in column sector
//! `N - shift`, so that `(A f)(x) = Σ_y A[x][y] f(y)`. An operator reading
//! `f(n+1)` therefore has shift `-1`. Sectors of negative total are empty;
//! blocks whose column sector lies above the constructed range are absent
//! and reported as excluded.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::scalar::Scalar;
use crate::statespace::{Sector, SectorSpace};

#[derive(Clone, Debug)]
pub struct SectorOperator<T> {
    rows: Arc<SectorSpace>,
    cols: Arc<SectorSpace>,
    shift: i32,
    blocks: BTreeMap<u32, SparseMatrix<T>>,
}

/// First disagreement between two operators, located by states.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMismatch<T> {
    pub sector: u32,
    pub row: Vec<u32>,
    pub col: Vec<u32>,
    pub left: T,
    pub right: T,
}

fn col_len(space: &SectorSpace, total: i64) -> Option<usize> {
    if total < 0 {
        Some(0)
    } else {
        space.sector_at(total).map(Sector::len)
    }
}

impl<T: Scalar> SectorOperator<T> {
    pub fn from_blocks(
        rows: Arc<SectorSpace>,
        cols: Arc<SectorSpace>,
        shift: i32,
        blocks: impl IntoIterator<Item = (u32, SparseMatrix<T>)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, m) in blocks {
            let r = rows
                .sector(n)
                .ok_or_else(|| Error::Shape(format!("row sector {n} outside range")))?
                .len();
            let c = col_len(&cols, n as i64 - shift as i64)
                .ok_or_else(|| Error::Shape(format!("column sector {} outside range", n as i64 - shift as i64)))?;
            if (m.nrows(), m.ncols()) != (r, c) {
                return Err(Error::Shape(format!(
                    "block {n} is {}x{}, sectors need {r}x{c}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            map.insert(n, m);
        }
        Ok(Self { rows, cols, shift, blocks: map })
    }

    /// Builds the operator row by row: `row(x)` lists `(y, A[x][y])`.
    /// Row sectors whose column sector is not constructed are skipped.
    pub fn from_row_fn<F>(rows: &Arc<SectorSpace>, cols: &Arc<SectorSpace>, shift: i32, row: F) -> Result<Self>
    where
        F: Fn(&[u32]) -> Result<Vec<(Vec<u32>, T)>>,
    {
        let mut blocks = Vec::new();
        for sector in rows.sectors() {
            let target_total = sector.total() as i64 - shift as i64;
            let Some(ncols) = col_len(cols, target_total) else { continue };
            let mut triplets = Vec::new();
            for (i, x) in sector.states().iter().enumerate() {
                for (y, v) in row(x)? {
                    if v.is_zero() {
                        continue;
                    }
                    let total: i64 = y.iter().map(|&c| c as i64).sum();
                    if total != target_total {
                        return Err(Error::Shape(format!(
                            "row {x:?} reads {y:?}, outside column sector {target_total}"
                        )));
                    }
                    let j = cols
                        .sector_at(target_total)
                        .and_then(|s| s.position(&y))
                        .ok_or_else(|| {
                            Error::Capacity(format!(
                                "row {x:?} reads {y:?}, outside capacities {:?}",
                                cols.layout().capacities()
                            ))
                        })?;
                    triplets.push((i, j, v));
                }
            }
            blocks.push((sector.total(), SparseMatrix::from_triplets(sector.len(), ncols, triplets)));
        }
        Self::from_blocks(rows.clone(), cols.clone(), shift, blocks)
    }

    pub fn identity(space: &Arc<SectorSpace>) -> Self {
        let blocks = space
            .sectors()
            .map(|s| (s.total(), SparseMatrix::identity(s.len())))
            .collect();
        Self {
            rows: space.clone(),
            cols: space.clone(),
            shift: 0,
            blocks,
        }
    }

    pub fn zero_like(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|(n, b)| (*n, SparseMatrix::zeros(b.nrows(), b.ncols())))
            .collect();
        Self { blocks, ..self.clone() }
    }

    pub fn rows(&self) -> &Arc<SectorSpace> {
        &self.rows
    }

    pub fn cols(&self) -> &Arc<SectorSpace> {
        &self.cols
    }

    pub fn shift(&self) -> i32 {
        self.shift
    }

    pub fn blocks(&self) -> &BTreeMap<u32, SparseMatrix<T>> {
        &self.blocks
    }

    pub fn block(&self, n: u32) -> Option<&SparseMatrix<T>> {
        self.blocks.get(&n)
    }

    /// Column sector of block `n`, if it is non-empty.
    pub fn col_sector(&self, n: u32) -> Option<&Sector> {
        self.cols.sector_at(n as i64 - self.shift as i64)
    }

    /// Row sectors of the constructed range that carry no block.
    pub fn excluded_sectors(&self) -> Vec<u32> {
        self.rows
            .sectors()
            .map(Sector::total)
            .filter(|n| !self.blocks.contains_key(n))
            .collect()
    }

    /// Entry `A[x][y]` by states; zero when either state is out of range.
    pub fn entry(&self, x: &[u32], y: &[u32]) -> T {
        let n: u32 = x.iter().sum();
        let (Some(block), Some(rs), Some(cs)) = (self.blocks.get(&n), self.rows.sector(n), self.col_sector(n)) else {
            return T::zero();
        };
        match (rs.position(x), cs.position(y)) {
            (Some(i), Some(j)) => block.get(i, j),
            _ => T::zero(),
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SectorOperator<U> {
        SectorOperator {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            shift: self.shift,
            blocks: self.blocks.iter().map(|(n, b)| (*n, b.map(&f))).collect(),
        }
    }

    pub fn scale(&self, factor: &T) -> Self {
        self.map(|v| v.clone() * factor.clone())
    }

    fn same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.shift != other.shift
            || self.rows.layout() != other.rows.layout()
            || self.cols.layout() != other.cols.layout()
        {
            return Err(Error::Shape(format!(
                "cannot {what} operators with shifts {} and {} on {:?} and {:?}",
                self.shift,
                other.shift,
                self.rows.layout().kind(),
                other.rows.layout().kind()
            )));
        }
        Ok(())
    }

    fn combine(&self, other: &Self, what: &str, f: impl Fn(&SparseMatrix<T>, &SparseMatrix<T>) -> SparseMatrix<T>) -> Result<Self> {
        self.same_shape(other, what)?;
        let rows = if self.rows.nmax() <= other.rows.nmax() { &self.rows } else { &other.rows };
        let cols = if self.cols.nmax() <= other.cols.nmax() { &self.cols } else { &other.cols };
        let blocks = self
            .blocks
            .iter()
            .filter_map(|(n, a)| other.blocks.get(n).map(|b| (*n, f(a, b))))
            .collect();
        Ok(Self {
            rows: rows.clone(),
            cols: cols.clone(),
            shift: self.shift,
            blocks,
        })
    }

    /// Sum on the sectors where both operators have blocks.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, "add", |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, "subtract", |a, b| a.sub(b))
    }

    /// `self ∘ other`, defined on row sectors where both factors are.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.cols.layout() != other.rows.layout() {
            return Err(Error::Shape(format!(
                "cannot compose: {:?} columns against {:?} rows",
                self.cols.layout(),
                other.rows.layout()
            )));
        }
        let shift = self.shift + other.shift;
        let mut blocks = BTreeMap::new();
        for (&n, a) in &self.blocks {
            let mid = n as i64 - self.shift as i64;
            let Some(ncols) = col_len(&other.cols, mid - other.shift as i64) else { continue };
            let product = if mid < 0 {
                SparseMatrix::zeros(a.nrows(), ncols)
            } else {
                match other.blocks.get(&(mid as u32)) {
                    Some(b) => a.mul(b),
                    None => continue,
                }
            };
            blocks.insert(n, product);
        }
        Ok(Self {
            rows: self.rows.clone(),
            cols: other.cols.clone(),
            shift,
            blocks,
        })
    }

    /// Applies the operator to a function given per column sector.
    pub fn apply(&self, n: u32, f: &[T]) -> Option<Vec<T>> {
        self.blocks.get(&n).map(|b| b.apply(f))
    }

    /// Keeps only row sectors `0..=nmax`.
    pub fn restrict(&self, rows: &Arc<SectorSpace>, cols: &Arc<SectorSpace>) -> Result<Self> {
        if rows.layout() != self.rows.layout() || cols.layout() != self.cols.layout() {
            return Err(Error::Shape("restriction must keep the layouts".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .filter(|(n, _)| rows.sector(**n).is_some() && col_len(cols, **n as i64 - self.shift as i64).is_some())
            .map(|(n, b)| (*n, b.clone()));
        Self::from_blocks(rows.clone(), cols.clone(), self.shift, blocks)
    }

    /// First entry on a common block where the operators differ beyond `tol`.
    pub fn first_mismatch(&self, other: &Self, tol: f64) -> Option<OperatorMismatch<T>> {
        if self.same_shape(other, "compare").is_err() {
            return None;
        }
        for (&n, a) in &self.blocks {
            let Some(b) = other.blocks.get(&n) else { continue };
            if let Some(w) = a.first_mismatch(b, tol) {
                return Some(OperatorMismatch {
                    sector: n,
                    row: self.rows.sector(n).expect("row sector").state(w.row).to_vec(),
                    col: self.col_sector(n).expect("column sector").state(w.col).to_vec(),
                    left: w.left,
                    right: w.right,
                });
            }
        }
        None
    }

    /// Blocks on which both operators are defined.
    pub fn common_sectors(&self, other: &Self) -> Vec<u32> {
        self.blocks
            .keys()
            .filter(|n| other.blocks.contains_key(n))
            .copied()
            .collect()
    }

    /// First row whose entries are not a probability vector, with its sum.
    pub fn first_non_stochastic_row(&self, tol: f64) -> Option<(Vec<u32>, T)> {
        for (&n, b) in &self.blocks {
            for i in 0..b.nrows() {
                let negative = b.row(i).iter().any(|(_, v)| *v < T::zero() && !v.is_negligible(tol));
                let sum = b.row_sum(i);
                if negative || !sum.close(&T::one(), tol) {
                    return Some((self.rows.sector(n).expect("row sector").state(i).to_vec(), sum));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;
    use crate::statespace::Layout;
    use num_rational::BigRational;

    type Q = BigRational;

    fn raise(space: &Arc<SectorSpace>) -> SectorOperator<Q> {
        // f ↦ f(n+1)
        SectorOperator::from_row_fn(space, space, -1, |s| Ok(vec![(vec![s[0] + 1], int(1))])).unwrap()
    }

    fn lower(space: &Arc<SectorSpace>) -> SectorOperator<Q> {
        // f ↦ n f(n-1)
        SectorOperator::from_row_fn(space, space, 1, |s| {
            Ok(if s[0] == 0 { vec![] } else { vec![(vec![s[0] - 1], int(s[0] as i64))] })
        })
        .unwrap()
    }

    #[test]
    fn shifts_and_boundaries() {
        let space = SectorSpace::new(Layout::site(), 5);
        let up = raise(&space);
        assert_eq!(up.excluded_sectors(), vec![5]);
        let down = lower(&space);
        assert!(down.excluded_sectors().is_empty());
        assert_eq!(down.block(0).unwrap().ncols(), 0);
        assert_eq!(up.entry(&[2], &[3]), int(1));
        assert_eq!(down.entry(&[2], &[1]), int(2));
    }

    #[test]
    fn heisenberg_commutator_by_composition() {
        let space = SectorSpace::new(Layout::site(), 6);
        let (up, down) = (raise(&space), lower(&space));
        let c = up.compose(&down).unwrap().sub(&down.compose(&up).unwrap()).unwrap();
        assert_eq!(c.shift(), 0);
        assert_eq!(c.first_mismatch(&SectorOperator::identity(&space), 0.0), None);
        assert_eq!(c.excluded_sectors(), vec![6]);
    }

    #[test]
    fn mismatch_names_states() {
        let space = SectorSpace::new(Layout::pair(), 3);
        let id = SectorOperator::<Q>::identity(&space);
        let twice = id.scale(&int(2));
        let w = id.first_mismatch(&twice, 0.0).unwrap();
        assert_eq!((w.sector, w.row, w.col), (0, vec![0, 0], vec![0, 0]));
        assert!(id.first_non_stochastic_row(0.0).is_none());
        assert_eq!(twice.first_non_stochastic_row(0.0).unwrap().1, int(2));
    }

    #[test]
    fn shape_errors() {
        let site = SectorSpace::new(Layout::site(), 2);
        let pair = SectorSpace::new(Layout::pair(), 2);
        let a = SectorOperator::<Q>::identity(&site);
        let b = SectorOperator::<Q>::identity(&pair);
        assert!(matches!(a.add(&b), Err(Error::Shape(_))));
        assert!(matches!(a.compose(&b), Err(Error::Shape(_))));
    }
}
