//! Dense complex linear algebra for matrices of size at most 7.
//!
//! Everything here works on small, heap-backed row-major matrices. The
//! kernels favour accuracy over speed: LU with partial pivoting for
//! determinants and solves, one-sided Jacobi for the SVD, and eigenpairs
//! from characteristic-polynomial roots followed by nullspace extraction.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{self, Polynomial};

pub type C64 = Complex64;

/// Default relative tolerance for rank and residual decisions.
pub const DEFAULT_TOL: f64 = 1e-10;

/// A coordinate counts as nonzero for phase fixing when it exceeds this
/// fraction of the vector norm.
pub const PHASE_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    ///
    /// Panics if `entries.len() != rows * cols`.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count does not match shape");
        Self {
            rows,
            cols,
            data: entries.to_vec(),
        }
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count does not match shape");
        Self {
            rows,
            cols,
            data: entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        Self::from_fn(rows, cols, |i, j| columns[j][i])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// The submatrix with one row and one column removed.
    pub fn minor(&self, del_row: usize, del_col: usize) -> Self {
        let rows: Vec<usize> = (0..self.rows).filter(|&i| i != del_row).collect();
        let cols: Vec<usize> = (0..self.cols).filter(|&j| j != del_col).collect();
        self.select(&rows, &cols)
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Largest entry modulus outside the tridiagonal band `|i - j| <= 1`.
    pub fn off_tridiagonal_max(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i.abs_diff(j) >= 2 {
                    worst = worst.max(self[(i, j)].norm());
                }
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Serialized as a list of rows, each entry a `[re, im]` pair.
impl Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("rows have different lengths"));
        }
        let data = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
        Ok(CMatrix { rows: rows.len(), cols, data })
    }
}

// ---------------------------------------------------------------------------
// Vectors

/// Hermitian inner product, conjugate-linear in the first argument.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn scaled(x: &[C64], s: C64) -> Vec<C64> {
    x.iter().map(|z| z * s).collect()
}

pub fn unit_vector(n: usize, k: usize) -> Vec<C64> {
    let mut e = vec![ZERO; n];
    e[k] = ONE;
    e
}

/// Rotates `v` so that its first non-negligible coordinate is real positive.
pub fn fix_phase(v: &mut [C64]) {
    let nv = norm(v);
    if nv == 0.0 {
        return;
    }
    if let Some(c) = v.iter().copied().find(|c| c.norm() > PHASE_TOL * nv) {
        let rot = c.conj() / c.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Removes the components of `v` along the orthonormal vectors in `basis`
/// (two passes of modified Gram-Schmidt).
pub fn project_out(v: &[C64], basis: &[Vec<C64>]) -> Vec<C64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &r);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
    }
    r
}

// ---------------------------------------------------------------------------
// Projective points

/// A nonzero complex vector up to scale, stored with unit norm and the first
/// non-negligible coordinate real positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    coords: Vec<C64>,
}

impl ProjectivePoint {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite projective coordinates".into()));
        }
        let n = norm(&coords);
        if n == 0.0 {
            return Err(Error::InvalidInput("zero vector has no projective class".into()));
        }
        let mut coords = scaled(&coords, C64::new(1.0 / n, 0.0));
        fix_phase(&mut coords);
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Sine of the angle between the two lines.
    pub fn distance(&self, other: &Self) -> f64 {
        // ||b - <a,b> a|| is the sine of the angle, without cancellation
        let ip = dot(&self.coords, &other.coords);
        let r: Vec<C64> = other.coords.iter().zip(&self.coords).map(|(b, a)| b - ip * a).collect();
        norm(&r).min(1.0)
    }
}

impl From<ProjectivePoint> for Vec<C64> {
    fn from(p: ProjectivePoint) -> Self {
        p.coords
    }
}

// ---------------------------------------------------------------------------
// Determinants and solves

struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

fn lu_decompose(m: &CMatrix, rel_pivot_tol: f64) -> Lu {
    assert!(m.is_square(), "LU needs a square matrix");
    let n = m.rows;
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut singular = false;
    let scale = m.norm_max();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&a, &b| lu[(a, k)].norm().total_cmp(&lu[(b, k)].norm()))
            .unwrap_or(k);
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        if pivot.norm() <= rel_pivot_tol * scale || pivot == ZERO {
            singular = true;
            if pivot == ZERO {
                continue;
            }
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f != ZERO {
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
    }
    Lu {
        lu,
        perm,
        sign,
        singular,
    }
}

/// Determinant by LU with partial pivoting.
pub fn det(m: &CMatrix) -> C64 {
    assert!(m.is_square(), "determinant needs a square matrix");
    match m.rows {
        0 => ONE,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => {
            let f = lu_decompose(m, 0.0);
            let mut d = C64::new(f.sign, 0.0);
            for i in 0..m.rows {
                d *= f.lu[(i, i)];
            }
            d
        }
    }
}

/// Solves `m x = b`; fails when a pivot falls below `1e-14 * max|m_ij|`.
pub fn solve(m: &CMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let n = m.rows;
    assert_eq!(b.len(), n);
    let f = lu_decompose(m, 1e-14);
    if f.singular {
        return Err(Error::SingularMatrix);
    }
    let mut x: Vec<C64> = f.perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for k in 0..i {
            let t = f.lu[(i, k)] * x[k];
            x[i] -= t;
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let t = f.lu[(i, k)] * x[k];
            x[i] -= t;
        }
        x[i] /= f.lu[(i, i)];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// SVD

/// Singular value decomposition `m = u * diag(s) * v^H`.
///
/// `singular_values` has one entry per column of `m`, sorted descending
/// (entries beyond `min(rows, cols)` are numerically zero). `v` is the full
/// `cols x cols` unitary, so trailing columns of `v` span the nullspace.
#[derive(Clone, Debug)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

impl Svd {
    /// Right singular vector for the `k`-th largest singular value.
    pub fn right_vector(&self, k: usize) -> Vec<C64> {
        self.v.column(k)
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(m: &CMatrix) -> Svd {
    let (rows, cols) = (m.rows, m.cols);
    let mut w = m.clone();
    let mut v = CMatrix::identity(cols);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for i in 0..rows {
                    let a = w[(i, p)];
                    let b = w[(i, q)];
                    alpha += a.norm_sqr();
                    beta += b.norm_sqr();
                    gamma += a.conj() * b;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let sp = phase * s;
                let sm = phase.conj() * s;
                for i in 0..rows {
                    let a = w[(i, p)];
                    let b = w[(i, q)];
                    w[(i, p)] = a * c - b * sm;
                    w[(i, q)] = a * sp + b * c;
                }
                for i in 0..cols {
                    let a = v[(i, p)];
                    let b = v[(i, q)];
                    v[(i, p)] = a * c - b * sm;
                    v[(i, q)] = a * sp + b * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| norm(&w.column(j))).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut u = CMatrix::zeros(rows, cols);
    let mut vs = CMatrix::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        s.push(sigma);
        if sigma > 0.0 {
            for i in 0..rows {
                u[(i, k)] = w[(i, j)] / sigma;
            }
        }
        for i in 0..cols {
            vs[(i, k)] = v[(i, j)];
        }
    }
    Svd {
        singular_values: s,
        u,
        v: vs,
    }
}

/// Numerical rank relative to the largest singular value, with the
/// `min(rows, cols)` singular values in nonincreasing order.
pub fn rank_svd(m: &CMatrix, tol: f64) -> (usize, Vec<f64>) {
    let mut s = if m.rows < m.cols {
        svd(&m.adjoint()).singular_values
    } else {
        svd(m).singular_values
    };
    s.truncate(m.rows.min(m.cols));
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = if smax == 0.0 {
        0
    } else {
        s.iter().filter(|&&x| x > tol * smax).count()
    };
    (rank, s)
}

/// Singular values of `m` scaled by the largest one (all zero for `m = 0`).
pub fn relative_singular_values(m: &CMatrix) -> Vec<f64> {
    let (_, s) = rank_svd(m, DEFAULT_TOL);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return vec![0.0; s.len()];
    }
    s.iter().map(|x| x / smax).collect()
}

// ---------------------------------------------------------------------------
// Orthonormalization

/// Gram-Schmidt with reorthogonalization; every output vector is
/// phase-fixed. Prefix spans are preserved.
pub fn orthonormalize(vectors: &[Vec<C64>], tol: f64) -> Result<Vec<Vec<C64>>> {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let nv = norm(v);
        let mut r = project_out(v, &out);
        let residual = norm(&r);
        if nv == 0.0 || residual <= tol * nv {
            return Err(Error::DependentInput {
                index,
                residual: if nv == 0.0 { 0.0 } else { residual / nv },
            });
        }
        for z in r.iter_mut() {
            *z /= residual;
        }
        fix_phase(&mut r);
        out.push(r);
    }
    Ok(out)
}

/// Extends an orthonormal prefix to an orthonormal basis of `C^n`, each
/// time adding the standard basis vector with the largest residual.
pub fn complete_basis(prefix: &[Vec<C64>], n: usize) -> Vec<Vec<C64>> {
    let mut basis = prefix.to_vec();
    while basis.len() < n {
        let best = (0..n)
            .map(|k| project_out(&unit_vector(n, k), &basis))
            .max_by(|a, b| norm(a).total_cmp(&norm(b)))
            .expect("n > 0");
        let nb = norm(&best);
        let mut q = scaled(&best, C64::new(1.0 / nb, 0.0));
        fix_phase(&mut q);
        basis.push(q);
    }
    basis
}

// ---------------------------------------------------------------------------
// Eigenvalues

/// Characteristic polynomial `det(z I - m)` by Faddeev-LeVerrier.
pub fn charpoly(m: &CMatrix) -> Polynomial {
    assert!(m.is_square());
    let n = m.rows;
    let mut coeffs = vec![ZERO; n + 1];
    coeffs[n] = ONE;
    let mut mk = CMatrix::zeros(n, n);
    for k in 1..=n {
        let mut next = m.matmul(&mk);
        for i in 0..n {
            next[(i, i)] += coeffs[n - k + 1];
        }
        mk = next;
        coeffs[n - k] = -m.matmul(&mk).trace() / k as f64;
    }
    Polynomial::raw(coeffs)
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: C64,
    pub vector: Vec<C64>,
}

/// Eigenpairs with algebraic multiplicity; `repeated` flags a clustered
/// eigenvalue, `defective` a cluster with fewer independent eigenvectors
/// than its multiplicity (the last vector is then repeated).
#[derive(Clone, Debug)]
pub struct Eigen {
    pub pairs: Vec<EigenPair>,
    pub repeated: bool,
    pub defective: bool,
}

impl Eigen {
    pub fn values(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

/// Residual bound (relative to `||m||_F`) an eigenpair must meet.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;

/// Relative singular value below which a nullspace direction of `m - λI`
/// is taken as an extra eigenvector of a clustered eigenvalue.
const EIGENSPACE_TOL: f64 = 1e-7;

pub fn eigen(m: &CMatrix) -> Result<Eigen> {
    assert!(m.is_square(), "eigen needs a square matrix");
    let n = m.rows;
    let scale = m.norm_fro();
    if n == 0 {
        return Ok(Eigen {
            pairs: vec![],
            repeated: false,
            defective: false,
        });
    }
    if scale == 0.0 {
        return Ok(Eigen {
            pairs: (0..n)
                .map(|k| EigenPair {
                    value: ZERO,
                    vector: unit_vector(n, k),
                })
                .collect(),
            repeated: n > 1,
            defective: false,
        });
    }
    let mhat = m.scale(C64::new(1.0 / scale, 0.0));
    let p = charpoly(&mhat);
    eigen_from(m, &mhat, scale, poly::roots(&p)?).or_else(|e| {
        // a tight pair merged into one multiple root: take the roots separately
        let separate = poly::RootOptions {
            cluster_tol: 0.0,
            multiple_root_radius: 0.0,
            ..Default::default()
        };
        eigen_from(m, &mhat, scale, poly::roots_with(&p, &separate)?).map_err(|_| e)
    })
}

fn eigen_from(m: &CMatrix, mhat: &CMatrix, scale: f64, clusters: Vec<poly::Root>) -> Result<Eigen> {
    let n = m.rows;
    let repeated = clusters.iter().any(|r| r.multiplicity > 1);
    let mut defective = false;
    let mut pairs = Vec::with_capacity(n);
    for (ci, root) in clusters.iter().enumerate() {
        let mut lambda = root.value;
        let shifted = shift(mhat, lambda);
        let dec = svd(&shifted);
        let mut vectors: Vec<Vec<C64>> = Vec::new();
        for k in 0..root.multiplicity {
            let idx = n - 1 - k;
            if k == 0 || dec.singular_values[idx] <= EIGENSPACE_TOL {
                vectors.push(dec.right_vector(idx));
            }
        }
        if root.multiplicity == 1 {
            let gap = clusters
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != ci)
                .map(|(_, r)| (r.value - lambda).norm())
                .fold(f64::INFINITY, f64::min);
            let (l, v) = refine_simple(mhat, lambda, vectors.pop().expect("one vector"), gap);
            lambda = l;
            vectors.push(v);
        }
        if vectors.len() < root.multiplicity {
            defective = true;
        }
        for k in 0..root.multiplicity {
            let mut v = vectors[k.min(vectors.len() - 1)].clone();
            let nv = norm(&v);
            v.iter_mut().for_each(|z| *z /= nv);
            fix_phase(&mut v);
            let value = lambda * scale;
            let res = norm(&sub_vec(&m.mul_vec(&v), &scaled(&v, value)));
            if res > EIGEN_RESIDUAL_TOL * scale {
                return Err(Error::ConvergenceFailure {
                    what: "eigenvector extraction",
                    iterations: 0,
                });
            }
            pairs.push(EigenPair { value, vector: v });
        }
    }
    Ok(Eigen {
        pairs,
        repeated,
        defective,
    })
}

fn shift(m: &CMatrix, lambda: C64) -> CMatrix {
    let mut s = m.clone();
    for i in 0..m.rows {
        s[(i, i)] -= lambda;
    }
    s
}

pub(crate) fn sub_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Two guarded Rayleigh-quotient inverse-iteration steps for a simple
/// eigenvalue; a step is discarded if it moves by more than a tenth of the
/// distance to the nearest other eigenvalue.
fn refine_simple(m: &CMatrix, lambda: C64, v: Vec<C64>, gap: f64) -> (C64, Vec<C64>) {
    let mut lambda = lambda;
    let mut v = v;
    for _ in 0..2 {
        let Ok(x) = solve(&shift(m, lambda), &v) else {
            break;
        };
        let denom = dot(&v, &x);
        if denom == ZERO {
            break;
        }
        let step = 1.0 / denom;
        if !(step.norm() <= 0.1 * gap) {
            break;
        }
        lambda += step;
        let nx = norm(&x);
        v = scaled(&x, C64::new(1.0 / nx, 0.0));
    }
    (lambda, v)
}

/// Free-function form of [`CMatrix::adjoint`].
pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint()
}
