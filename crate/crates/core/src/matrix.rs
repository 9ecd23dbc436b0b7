use std::collections::BTreeMap;
use std::ops::AddAssign;

use serde::Serialize;

use crate::mappers::EntityId;

/// Sparse matrix keyed by id pairs with declared dimensions.
///
/// Rows are stored as ordered maps so serialization and iteration are
/// deterministic. Only non-default entries are meant to be stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SparseMatrix<T> {
    #[serde(skip)]
    rows: usize,
    #[serde(skip)]
    cols: usize,
    data: BTreeMap<EntityId, BTreeMap<EntityId, T>>,
}

pub type SparseCountMatrix = SparseMatrix<u64>;

impl<T> SparseMatrix<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            data: BTreeMap::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: EntityId, col: EntityId) -> Option<&T> {
        self.data.get(&row)?.get(&col)
    }

    pub fn row(&self, row: EntityId) -> Option<&BTreeMap<EntityId, T>> {
        self.data.get(&row)
    }

    pub fn row_iter(&self) -> impl Iterator<Item = (EntityId, &BTreeMap<EntityId, T>)> {
        self.data.iter().map(|(r, cols)| (*r, cols))
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityId, EntityId, &T)> {
        self.data
            .iter()
            .flat_map(|(r, cols)| cols.iter().map(move |(c, v)| (*r, *c, v)))
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.data.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Enlarges the declared dimensions to at least `rows` x `cols`.
    pub fn grow(&mut self, rows: usize, cols: usize) {
        self.rows = self.rows.max(rows);
        self.cols = self.cols.max(cols);
    }

    pub fn set(&mut self, row: EntityId, col: EntityId, value: T) {
        debug_assert!((row as usize) < self.rows && (col as usize) < self.cols);
        self.data.entry(row).or_default().insert(col, value);
    }

    pub fn into_rows(self) -> BTreeMap<EntityId, BTreeMap<EntityId, T>> {
        self.data
    }

    pub fn from_rows(rows: usize, cols: usize, data: BTreeMap<EntityId, BTreeMap<EntityId, T>>) -> Self {
        SparseMatrix { rows, cols, data }
    }
}

impl<T: Copy + AddAssign + Default> SparseMatrix<T> {
    pub fn add(&mut self, row: EntityId, col: EntityId, value: T) {
        debug_assert!((row as usize) < self.rows && (col as usize) < self.cols);
        *self
            .data
            .entry(row)
            .or_default()
            .entry(col)
            .or_default() += value;
    }

    /// Entry-wise sum; dimensions grow to cover both operands.
    pub fn merge(&mut self, other: SparseMatrix<T>) {
        self.rows = self.rows.max(other.rows);
        self.cols = self.cols.max(other.cols);
        for (r, cols) in other.data {
            let row = self.data.entry(r).or_default();
            for (c, v) in cols {
                *row.entry(c).or_default() += v;
            }
        }
    }

    pub fn transpose(&self) -> SparseMatrix<T> {
        let mut t = SparseMatrix::new(self.cols, self.rows);
        for (r, c, v) in self.iter() {
            t.set(c, r, *v);
        }
        t
    }
}

impl SparseMatrix<u64> {
    pub fn sum(&self) -> u64 {
        self.iter().map(|(_, _, v)| *v).sum()
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        let mut out = self.clone();
        for cols in out.data.values_mut() {
            for v in cols.values_mut() {
                *v *= factor;
            }
        }
        out
    }
}
