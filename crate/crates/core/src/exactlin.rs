//! Scalar backends and sparse linear algebra.
//!
//! Two scalar backends are provided: exact rationals (arbitrary precision,
//! always reduced) for every dimension count, and `f64` complex numbers for
//! the metric computations. Exact rank and kernels go through fraction-free
//! integer elimination on sparse rows; numeric kernels through the SVD or a
//! hermitian eigendecomposition.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;
pub type Complex = num_complex::Complex64;

/// Default relative threshold for numeric kernels.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-7;

/// A singular value within this factor of the threshold makes a kernel
/// dimension ambiguous.
pub const AMBIGUITY_BAND: f64 = 100.0;

/// Field operations shared by the exact and the numeric backend.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn from_ratio(num: i64, den: i64) -> Self;
    fn conj(&self) -> Self;
    fn to_complex(&self) -> Complex;
    fn magnitude(&self) -> f64 {
        self.to_complex().norm()
    }
}

impl Scalar for Rational {
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn to_complex(&self) -> Complex {
        Complex::new(rational_to_f64(self), 0.0)
    }
}

impl Scalar for Complex {
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(num as f64 / den as f64, 0.0)
    }
    fn conj(&self) -> Self {
        num_complex::Complex::conj(self)
    }
    fn to_complex(&self) -> Complex {
        *self
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::from_ratio(num, den)
}

/// Row-major sparse matrix. Rows are sorted by column, hold no explicit
/// zeros, and every index is in range.
#[derive(Clone, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Vec<(usize, T)>>,
}

impl<T: fmt::Debug> fmt::Debug for SparseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseMatrix {}x{} [", self.rows, self.cols)?;
        for (i, row) in self.data.iter().enumerate() {
            for (j, v) in row {
                write!(f, " ({i},{j})={v:?}")?;
            }
        }
        write!(f, " ]")
    }
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            data: vec![Vec::new(); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for (i, row) in m.data.iter_mut().enumerate() {
            row.push((i, T::one()));
        }
        m
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are
    /// summed and zeros dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut data: Vec<Vec<(usize, T)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            data[r].push((c, v));
        }
        for row in &mut data {
            *row = merge_row(std::mem::take(row));
        }
        Ok(SparseMatrix { rows, cols, data })
    }

    /// Builds from per-row entry lists (unsorted entries allowed).
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let n = rows.len();
        Self::from_triplets(
            n,
            cols,
            rows.into_iter()
                .enumerate()
                .flat_map(|(i, r)| r.into_iter().map(move |(j, v)| (i, j, v))),
        )
    }

    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(j, v)| (j, v.clone()))
                    .collect()
            })
            .collect();
        SparseMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, T)] {
        &self.data[i]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i]
            .binary_search_by_key(&j, |(c, _)| *c)
            .map(|k| self.data[i][k].1.clone())
            .unwrap_or_else(|_| T::zero())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(j, v)| (i, *j, v)))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Vec::is_empty)
    }

    pub fn transpose(&self) -> Self {
        let mut data: Vec<Vec<(usize, T)>> = vec![Vec::new(); self.cols];
        for (i, row) in self.data.iter().enumerate() {
            for (j, v) in row {
                data[*j].push((i, v.clone()));
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn conj_transpose(&self) -> Self {
        let mut t = self.transpose();
        for row in &mut t.data {
            for (_, v) in row.iter_mut() {
                *v = v.conj();
            }
        }
        t
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SparseMatrix<U> {
        let data = self
            .data
            .iter()
            .map(|r| {
                r.iter()
                    .map(|(j, v)| (*j, f(v)))
                    .filter(|(_, v)| !v.is_zero())
                    .collect()
            })
            .collect();
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn to_complex(&self) -> SparseMatrix<Complex> {
        self.map(Scalar::to_complex)
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|v| v.clone() * s.clone())
    }

    /// Scales row `i` by `left[i]` and column `j` by `right[j]`.
    pub fn scale_rows_cols(&self, left: &[T], right: &[T]) -> Self {
        assert_eq!(left.len(), self.rows);
        assert_eq!(right.len(), self.cols);
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .map(|(j, v)| (*j, left[i].clone() * v.clone() * right[*j].clone()))
                    .filter(|(_, v)| !v.is_zero())
                    .collect()
            })
            .collect();
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| {
                let mut r = a.clone();
                r.extend(b.iter().cloned());
                merge_row(r)
            })
            .collect();
        Ok(SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .map(|r| {
                let mut acc = Vec::new();
                for (k, v) in r {
                    for (j, w) in &other.data[*k] {
                        acc.push((*j, v.clone() * w.clone()));
                    }
                }
                merge_row(acc)
            })
            .collect();
        Ok(SparseMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        self.data
            .iter()
            .map(|r| {
                r.iter().fold(T::zero(), |acc, (j, v)| acc + v.clone() * x[*j].clone())
            })
            .collect()
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[&Self]) -> Result<Self> {
        let cols = parts.first().map_or(0, |m| m.cols);
        let mut data = Vec::new();
        for p in parts {
            if p.cols != cols {
                return Err(Error::DimensionMismatch(format!(
                    "vstack of {} and {} columns",
                    cols, p.cols
                )));
            }
            data.extend(p.data.iter().cloned());
        }
        Ok(SparseMatrix {
            rows: data.len(),
            cols,
            data,
        })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().map(|(_, _, v)| v.magnitude()).fold(0.0, f64::max)
    }
}

impl SparseMatrix<Complex> {
    pub fn check_finite(&self) -> Result<()> {
        for (i, j, v) in self.entries() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> DMatrix<Complex> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.entries() {
            m[(i, j)] = *v;
        }
        m
    }

    /// Hermitian adjoint with respect to diagonal metrics on source
    /// (columns) and target (rows): `G_src^{-1} A^H G_tgt`.
    pub fn metric_adjoint(&self, source_gram: &[f64], target_gram: &[f64]) -> Self {
        assert_eq!(source_gram.len(), self.cols);
        assert_eq!(target_gram.len(), self.rows);
        let left: Vec<Complex> = source_gram.iter().map(|g| Complex::new(1.0 / g, 0.0)).collect();
        let right: Vec<Complex> = target_gram.iter().map(|g| Complex::new(*g, 0.0)).collect();
        self.conj_transpose().scale_rows_cols(&left, &right)
    }
}

fn merge_row<T: Scalar>(mut row: Vec<(usize, T)>) -> Vec<(usize, T)> {
    row.sort_by_key(|(j, _)| *j);
    let mut out: Vec<(usize, T)> = Vec::with_capacity(row.len());
    for (j, v) in row {
        match out.last_mut() {
            Some((lj, lv)) if *lj == j => *lv += v,
            _ => out.push((j, v)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

// ---------------------------------------------------------------------------
// Exact elimination

type IntRow = Vec<(usize, BigInt)>;

/// Converts a rational row to a primitive integer row with the same span.
fn primitive_int_row(row: &[(usize, Rational)]) -> IntRow {
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, (_, v)| acc.lcm(v.denom()));
    let mut out: IntRow = row
        .iter()
        .map(|(j, v)| (*j, v.numer() * (&lcm / v.denom())))
        .collect();
    make_primitive(&mut out);
    out
}

fn make_primitive(row: &mut IntRow) {
    let g = row.iter().fold(BigInt::zero(), |acc, (_, v)| acc.gcd(v));
    if !g.is_zero() && !g.is_one() {
        for (_, v) in row.iter_mut() {
            *v /= &g;
        }
    }
}

/// `p * target - a * pivot`, where `a` is `target`'s entry in the pivot column.
fn combine(target: &IntRow, pivot: &IntRow, p: &BigInt, a: &BigInt) -> IntRow {
    let mut out = Vec::with_capacity(target.len() + pivot.len());
    let (mut i, mut k) = (0, 0);
    while i < target.len() || k < pivot.len() {
        let ti = target.get(i).map(|e| e.0);
        let pk = pivot.get(k).map(|e| e.0);
        match (ti, pk) {
            (Some(tj), Some(pj)) if tj == pj => {
                let v = p * &target[i].1 - a * &pivot[k].1;
                if !v.is_zero() {
                    out.push((tj, v));
                }
                i += 1;
                k += 1;
            }
            (Some(tj), Some(pj)) if tj < pj => {
                out.push((tj, p * &target[i].1));
                i += 1;
            }
            (Some(_), None) => {
                out.push((target[i].0, p * &target[i].1));
                i += 1;
            }
            (_, Some(pj)) => {
                out.push((pj, -(a * &pivot[k].1)));
                k += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    make_primitive(&mut out);
    out
}

/// Result of forward elimination: pivot rows in elimination order, each
/// with its pivot column.
struct Echelon {
    pivots: Vec<(usize, IntRow)>,
}

fn eliminate(m: &SparseMatrix<Rational>) -> Echelon {
    let mut rows: Vec<IntRow> = m.data.iter().map(|r| primitive_int_row(r)).collect();
    let mut col_rows: Vec<HashSet<usize>> = vec![HashSet::new(); m.cols];
    let mut active: Vec<usize> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if !r.is_empty() {
            active.push(i);
            for (j, _) in r {
                col_rows[*j].insert(i);
            }
        }
    }
    let mut pivots = Vec::new();
    while !active.is_empty() {
        // Markowitz-style choice: sparsest row, then the sparsest column in
        // it, preferring small pivots.
        let (pos, &r) = active
            .iter()
            .enumerate()
            .min_by_key(|(_, &i)| (rows[i].len(), i))
            .expect("non-empty");
        let (c, _) = rows[r]
            .iter()
            .min_by_key(|(j, v)| (col_rows[*j].len(), v.bits(), *j))
            .map(|(j, v)| (*j, v.clone()))
            .expect("active rows are non-empty");
        active.swap_remove(pos);
        let pivot_row = std::mem::take(&mut rows[r]);
        for (j, _) in &pivot_row {
            col_rows[*j].remove(&r);
        }
        let p = pivot_row
            .iter()
            .find(|(j, _)| *j == c)
            .map(|(_, v)| v.clone())
            .expect("pivot present");
        let targets: Vec<usize> = col_rows[c].iter().copied().collect();
        for s in targets {
            let a = rows[s]
                .iter()
                .find(|(j, _)| *j == c)
                .map(|(_, v)| v.clone())
                .expect("column index consistent");
            let new = combine(&rows[s], &pivot_row, &p, &a);
            for (j, _) in &rows[s] {
                col_rows[*j].remove(&s);
            }
            for (j, _) in &new {
                col_rows[*j].insert(s);
            }
            rows[s] = new;
            if rows[s].is_empty() {
                active.retain(|&x| x != s);
            }
        }
        pivots.push((c, pivot_row));
    }
    Echelon { pivots }
}

/// Rank over the rationals.
pub fn rank_exact(m: &SparseMatrix<Rational>) -> usize {
    eliminate(m).pivots.len()
}

/// Sparse kernel basis: one vector per free column, scaled to primitive
/// integer entries.
pub fn kernel_basis_sparse(m: &SparseMatrix<Rational>) -> Vec<Vec<(usize, Rational)>> {
    let ech = eliminate(m);
    let mut is_pivot = vec![false; m.cols];
    for (c, _) in &ech.pivots {
        is_pivot[*c] = true;
    }
    let mut basis = Vec::new();
    for free in (0..m.cols).filter(|&j| !is_pivot[j]) {
        let mut x: std::collections::HashMap<usize, Rational> = std::collections::HashMap::new();
        x.insert(free, Rational::one());
        for (c, row) in ech.pivots.iter().rev() {
            let mut acc = Rational::zero();
            let mut pv = None;
            for (j, v) in row {
                if j == c {
                    pv = Some(v);
                } else if let Some(xj) = x.get(j) {
                    acc += Rational::from(v.clone()) * xj;
                }
            }
            if !acc.is_zero() {
                let pv = Rational::from(pv.expect("pivot entry").clone());
                x.insert(*c, -acc / pv);
            }
        }
        let mut v: Vec<(usize, Rational)> = x.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        v.sort_by_key(|(j, _)| *j);
        basis.push(primitive_rational_vector(v));
    }
    basis
}

/// Kernel basis as dense vectors.
pub fn kernel_basis_exact(m: &SparseMatrix<Rational>) -> Vec<Vec<Rational>> {
    kernel_basis_sparse(m)
        .into_iter()
        .map(|v| {
            let mut d = vec![Rational::zero(); m.cols];
            for (j, x) in v {
                d[j] = x;
            }
            d
        })
        .collect()
}

fn primitive_rational_vector(v: Vec<(usize, Rational)>) -> Vec<(usize, Rational)> {
    let lcm = v.iter().fold(BigInt::one(), |acc, (_, x)| acc.lcm(x.denom()));
    let mut ints: IntRow = v.iter().map(|(j, x)| (*j, x.numer() * (&lcm / x.denom()))).collect();
    make_primitive(&mut ints);
    if ints.first().is_some_and(|(_, x)| x.is_negative()) {
        for (_, x) in ints.iter_mut() {
            *x = -x.clone();
        }
    }
    ints.into_iter().map(|(j, x)| (j, Rational::from(x))).collect()
}

// ---------------------------------------------------------------------------
// Numeric

/// Singular values of a complex matrix, descending.
pub fn singular_values(m: &SparseMatrix<Complex>) -> Result<Vec<f64>> {
    m.check_finite()?;
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(Vec::new());
    }
    let svd = nalgebra::linalg::SVD::new(m.to_dense(), false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    Ok(sv)
}

/// Number of singular values at or below `tol` times the largest one (or
/// times 1 when the matrix is zero), counted against the column count.
pub fn numeric_kernel_dim(m: &SparseMatrix<Complex>, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let sv = singular_values(m)?;
    let scale = sv.first().copied().filter(|s| *s > 0.0).unwrap_or(1.0);
    let rank = sv.iter().filter(|s| **s > tol * scale).count();
    Ok(m.cols() - rank)
}

/// Hermitian eigendecomposition: ascending eigenvalues and the matching
/// orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &DMatrix<Complex>) -> (Vec<f64>, DMatrix<Complex>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    // Symmetrize against rounding before decomposing.
    let h = (m + m.adjoint()) * Complex::new(0.5, 0.0);
    let eig = nalgebra::linalg::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vecs)
}

/// Counts values `<= tol * scale`; fails when some value falls within a
/// factor `band` of the threshold, where the count would be a guess.
pub fn count_below_threshold(values: &[f64], scale: f64, tol: f64, band: f64) -> Result<usize> {
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut count = 0;
    for v in values {
        let ratio = v.abs() / scale;
        if ratio > tol / band && ratio < tol * band {
            return Err(Error::ToleranceAmbiguity { tol, nearest: ratio });
        }
        if ratio <= tol {
            count += 1;
        }
    }
    Ok(count)
}

/// Orthonormal basis (as columns) of the numeric kernel of a dense matrix:
/// right singular vectors whose singular value is at most `tol` times the
/// largest (or 1 for a zero matrix). Ambiguous thresholds are an error.
pub fn numeric_kernel_basis(m: &DMatrix<Complex>, tol: f64) -> Result<DMatrix<Complex>> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let cols = m.ncols();
    if cols == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    for v in m.iter() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFiniteEntry { row: 0, col: 0 });
        }
    }
    // Pad to at least square so that the full right factor is produced.
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = nalgebra::linalg::SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let scale = sv.iter().copied().fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    count_below_threshold(&sv, scale, tol, AMBIGUITY_BAND)?;
    let kernel: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] / scale <= tol).collect();
    let mut out = DMatrix::zeros(cols, kernel.len());
    for (k, &i) in kernel.iter().enumerate() {
        for j in 0..cols {
            out[(j, k)] = v_t[(i, j)].conj();
        }
    }
    Ok(out)
}

/// Dense Gaussian elimination over the rationals; test oracle only.
#[cfg(test)]
pub(crate) fn naive_dense_rank(m: &[Vec<Rational>]) -> usize {
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let pv = a[rank][c].clone();
        for r in 0..rows {
            if r != rank && !a[r][c].is_zero() {
                let f = a[r][c].clone() / pv.clone();
                for k in 0..cols {
                    let t = a[rank][k].clone() * f.clone();
                    a[r][k] -= t;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn int_matrix(rows: &[&[i64]]) -> SparseMatrix<Rational> {
        let dense: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| rat(x, 1)).collect())
            .collect();
        SparseMatrix::from_dense(&dense)
    }

    #[test]
    fn rank_of_empty_and_identity() {
        assert_eq!(rank_exact(&SparseMatrix::<Rational>::zeros(0, 0)), 0);
        assert_eq!(rank_exact(&SparseMatrix::<Rational>::identity(2)), 2);
    }

    #[test]
    fn rank_of_ad_e_on_sl2() {
        // Columns e, h, f: ad(e)e = 0, ad(e)h = -2e, ad(e)f = h.
        let m = int_matrix(&[&[0, -2, 0], &[0, 0, 1], &[0, 0, 0]]);
        assert_eq!(rank_exact(&m), 2);
        assert_eq!(kernel_basis_exact(&m).len(), 1);
    }

    #[test]
    fn kernels_of_trivial_matrices() {
        assert!(kernel_basis_exact(&SparseMatrix::<Rational>::identity(3)).is_empty());
        let z = SparseMatrix::<Rational>::zeros(2, 3);
        assert_eq!(kernel_basis_exact(&z).len(), 3);
    }

    #[test]
    fn triplets_merge_and_validate() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 1, rat(1, 2)), (0, 1, rat(-1, 2)), (1, 0, rat(3, 1))],
        )
        .unwrap();
        assert_eq!(m.nnz(), 1);
        assert!(SparseMatrix::from_triplets(1, 1, vec![(1, 0, rat(1, 1))]).is_err());
    }

    #[test]
    fn numeric_kernel_of_zero_and_identity() {
        let z = SparseMatrix::<Complex>::zeros(4, 4);
        assert_eq!(numeric_kernel_dim(&z, 1e-9).unwrap(), 4);
        let id = SparseMatrix::<Complex>::identity(4);
        assert_eq!(numeric_kernel_dim(&id, 1e-9).unwrap(), 0);
    }

    #[test]
    fn numeric_kernel_rejects_nan() {
        let m = SparseMatrix::from_triplets(1, 1, vec![(0, 0, Complex::new(f64::NAN, 0.0))]).unwrap();
        assert!(matches!(numeric_kernel_dim(&m, 1e-9), Err(Error::NonFiniteEntry { .. })));
    }

    #[test]
    fn rationals_stay_reduced() {
        let r = rat(6, -4);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(2));
    }

    #[test]
    fn no_overflow_on_large_entries() {
        // Entries near i64::MAX force growth beyond fixed width during elimination.
        let big = i64::MAX / 3;
        let m = int_matrix(&[&[big, big - 1, 7], &[big - 5, big, 11], &[1, 2, 3]]);
        let dense: Vec<Vec<Rational>> = (0..3)
            .map(|i| (0..3).map(|j| m.get(i, j)).collect())
            .collect();
        assert_eq!(rank_exact(&m), naive_dense_rank(&dense));
    }

    #[test]
    fn ambiguity_band() {
        assert_eq!(count_below_threshold(&[1e-15, 1.0], 1.0, 1e-7, 100.0).unwrap(), 1);
        assert!(count_below_threshold(&[1e-7, 1.0], 1.0, 1e-7, 100.0).is_err());
    }

    fn small_matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::collection::vec(-3i64..=3, c), r)
        })
    }

    proptest! {
        #[test]
        fn rank_matches_dense_oracle(rows in small_matrix()) {
            let dense: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect();
            let m = SparseMatrix::from_dense(&dense);
            prop_assert_eq!(rank_exact(&m), naive_dense_rank(&dense));
        }

        #[test]
        fn rank_nullity_and_transpose(rows in small_matrix()) {
            let dense: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|&x| rat(x, 2)).collect()).collect();
            let m = SparseMatrix::from_dense(&dense);
            let r = rank_exact(&m);
            let ker = kernel_basis_exact(&m);
            prop_assert_eq!(r + ker.len(), m.cols());
            prop_assert_eq!(r, rank_exact(&m.transpose()));
            for v in &ker {
                prop_assert!(m.mul_vec(v).iter().all(Zero::is_zero));
            }
            let kmat = SparseMatrix::from_dense(&ker);
            prop_assert_eq!(rank_exact(&kmat), ker.len());
        }

        #[test]
        fn numeric_kernel_agrees_with_exact(rows in small_matrix()) {
            let dense: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect();
            let m = SparseMatrix::from_dense(&dense);
            let numeric = numeric_kernel_dim(&m.to_complex(), 1e-9).unwrap();
            prop_assert_eq!(numeric, m.cols() - rank_exact(&m));
        }
    }
}
