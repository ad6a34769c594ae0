//! Membership tests for the generic set `S = S1 ∩ S2 ∩ S3`:
//!
//! * `S1`: `A` is nonsingular;
//! * `S2`: `A` has distinct eigenvalues;
//! * `S3`: the pencil `t0 I + t1 A + t2 A*` has rank at least `n - 1` for
//!   every `t != 0`.
//!
//! Points where the pencil drops to rank `n - 2` are common zeros of its
//! determinant and of the sum of its principal `(n-1)`-minors, so `S3` is
//! decided by eliminating between those two forms and checking the rank at
//! each common zero. All booleans are relative to the stated tolerances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, charpoly, det, eigen, norm, rank_svd, svd, CMatrix, ProjectivePoint, C64};
use crate::pencil::{base_points, Pencil};
use crate::poly::{self, resultant, TernaryForm};

/// `sigma_min > S1_TOL * sigma_max`.
pub const S1_TOL: f64 = 1e-10;
/// Eigenvalues closer than `S2_TOL * ||A||_F` count as repeated.
pub const S2_TOL: f64 = 1e-6;
/// The pencil counts as rank-deficient where `sigma_{n-1} <= S3_TOL * sigma_1`.
pub const S3_TOL: f64 = 1e-6;
/// `||A* v - mu v|| <= COMMON_TOL * ||A||_F` for a common eigenvector.
pub const COMMON_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct S3Check {
    pub pencil_rank_ok: bool,
    /// A parameter `t` where the rank drops, when one was found.
    pub witness: Option<ProjectivePoint>,
    /// The elimination degenerated and a grid search over `D` was used.
    pub heuristic: bool,
    /// Smallest `sigma_{n-1} / sigma_1` seen among the candidates.
    pub min_margin: f64,
    pub candidates: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenericityReport {
    pub nonsingular: bool,
    pub distinct_eigenvalues: bool,
    pub pencil_rank_ok: bool,
    pub common_eigenvectors: Vec<ProjectivePoint>,
    pub s3_witness: Option<ProjectivePoint>,
    pub s3_heuristic: bool,
    pub sigma_ratio: f64,
    pub min_eigen_gap: f64,
    pub details: String,
}

impl GenericityReport {
    pub fn in_s(&self) -> bool {
        self.nonsingular && self.distinct_eigenvalues && self.pencil_rank_ok
    }
}

fn require_square(a: &CMatrix) -> Result<()> {
    if !a.is_square() || a.rows() == 0 || !a.is_finite() {
        return Err(Error::InvalidInput("expected a non-empty finite square matrix".into()));
    }
    Ok(())
}

/// `sigma_min / sigma_max`, zero for the zero matrix.
pub fn sigma_ratio(a: &CMatrix) -> f64 {
    let (_, sv) = rank_svd(a, 1.0);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn check_s1(a: &CMatrix) -> bool {
    sigma_ratio(a) > S1_TOL
}

/// Smallest pairwise distance between eigenvalues, relative to `||A||_F`.
pub fn min_eigen_gap(a: &CMatrix) -> f64 {
    let scale = a.norm_fro();
    if scale == 0.0 {
        return 0.0;
    }
    let n = a.rows();
    if n < 2 {
        return f64::INFINITY;
    }
    let p = charpoly(&a.scale(C64::new(1.0 / scale, 0.0)));
    let Ok(roots) = poly::roots(&p) else {
        return 0.0;
    };
    let vals = poly::expand(&roots);
    let mut gap = f64::INFINITY;
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            gap = gap.min((vals[i] - vals[j]).norm());
        }
    }
    gap
}

pub fn check_s2(a: &CMatrix) -> bool {
    min_eigen_gap(a) > S2_TOL
}

/// `det` of the pencil with row `i` and column `j` removed, as a ternary
/// form in `t` (indices from zero).
pub fn minor_form(a: &CMatrix, i: usize, j: usize) -> TernaryForm {
    let n = a.rows();
    let astar = a.adjoint();
    TernaryForm::fit(n - 1, |t| det(&pencil(a, &astar, &t).minor(i, j)))
}

/// `det(t0 I + t1 A + t2 A*)`.
pub fn det_form(a: &CMatrix) -> TernaryForm {
    let astar = a.adjoint();
    TernaryForm::fit(a.rows(), |t| det(&pencil(a, &astar, &t)))
}

/// Sum of the principal `(n-1)`-minors of the pencil.
pub fn principal_minor_sum(a: &CMatrix) -> TernaryForm {
    let n = a.rows();
    let astar = a.adjoint();
    TernaryForm::fit(n - 1, |t| {
        let m = pencil(a, &astar, &t);
        (0..n).map(|i| det(&m.minor(i, i))).sum()
    })
}

fn pencil(a: &CMatrix, astar: &CMatrix, t: &[C64; 3]) -> CMatrix {
    let n = a.rows();
    CMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { t[0] } else { ZERO };
        d + t[1] * a[(i, j)] + t[2] * astar[(i, j)]
    })
}

/// `sigma_{n-1} / sigma_1` of the pencil at `t`; zero for the zero matrix.
fn rank_margin(a: &CMatrix, astar: &CMatrix, t: &[C64; 3]) -> f64 {
    let m = pencil(a, astar, t);
    let (_, sv) = rank_svd(&m, 1.0);
    let n = sv.len();
    if n < 2 || sv[0] == 0.0 {
        return 0.0;
    }
    sv[n - 2] / sv[0]
}

pub fn check_s3(a: &CMatrix) -> Result<S3Check> {
    require_square(a)?;
    let n = a.rows();
    let scale = a.norm_fro();
    if n < 2 {
        return Ok(S3Check {
            pencil_rank_ok: true,
            witness: None,
            heuristic: false,
            min_margin: 1.0,
            candidates: 0,
        });
    }
    let an = if scale > 0.0 { a.scale(C64::new(1.0 / scale, 0.0)) } else { a.clone() };
    let ans = an.adjoint();
    let g = det_form(&an);
    let e = principal_minor_sum(&an);
    let mut candidates: Vec<[C64; 3]> = Vec::new();
    let mut degenerate = false;
    for chart in 0..3 {
        let others = [(chart + 1) % 3, (chart + 2) % 3];
        let attempt = others
            .iter()
            .find_map(|&elim| resultant(&g, &e, chart, elim).ok().map(|r| (elim, r)));
        let Some((elim, res)) = attempt else {
            degenerate = true;
            break;
        };
        let rem = 3 - chart - elim;
        if res.degree() == 0 {
            continue;
        }
        let Ok(ys) = poly::roots(&res) else {
            degenerate = true;
            break;
        };
        let parts = g.dehomogenize(chart, elim);
        for y in ys.iter().map(|r| r.value) {
            let coeffs: Vec<C64> = parts.iter().map(|p| p.eval(y)).collect();
            let q = poly::Polynomial::new(coeffs);
            if q.degree() == 0 {
                continue;
            }
            let Ok(xs) = poly::roots(&q) else { continue };
            for x in xs.iter().map(|r| r.value) {
                let mut t = [ZERO; 3];
                t[chart] = ONE;
                t[elim] = x;
                t[rem] = y;
                candidates.push(t);
            }
        }
    }
    if degenerate {
        return Ok(grid_search(&an, &ans, scale));
    }
    let mut best: Option<([C64; 3], f64)> = None;
    for t in &candidates {
        let m = rank_margin(&an, &ans, t);
        if best.as_ref().is_none_or(|b| m < b.1) {
            best = Some((*t, m));
        }
    }
    let (pencil_rank_ok, witness, min_margin) = match best {
        Some((t, m)) if m <= S3_TOL => (false, Some(to_original(&t, scale)?), m),
        Some((_, m)) => (true, None, m),
        None => (true, None, 1.0),
    };
    Ok(S3Check {
        pencil_rank_ok,
        witness,
        heuristic: false,
        min_margin,
        candidates: candidates.len(),
    })
}

fn to_original(t: &[C64; 3], scale: f64) -> Result<ProjectivePoint> {
    let s = if scale > 0.0 { scale } else { 1.0 };
    ProjectivePoint::new(vec![t[0], t[1] / s, t[2] / s])
}

/// Fallback when the two forms share a component: minimise the rank margin
/// over fiber points of `D`.
fn grid_search(an: &CMatrix, ans: &CMatrix, scale: f64) -> S3Check {
    let mut best: Option<([C64; 3], f64)> = None;
    let mut count = 0;
    for b in base_points(720, 0, 0) {
        let m = pencil(an, ans, &[ZERO, b[0], b[1]]);
        let Ok(e) = eigen(&m) else { continue };
        for l in e.values() {
            let t = [-l, b[0], b[1]];
            let margin = rank_margin(an, ans, &t);
            count += 1;
            if best.as_ref().is_none_or(|x| margin < x.1) {
                best = Some((t, margin));
            }
        }
    }
    let (t, m) = best.unwrap_or(([ONE, ZERO, ZERO], 1.0));
    let fail = m <= S3_TOL;
    S3Check {
        pencil_rank_ok: !fail,
        witness: if fail { to_original(&t, scale).ok() } else { None },
        heuristic: true,
        min_margin: m,
        candidates: count,
    }
}

/// Eigenvectors `v` of `A` with `A* v = mu v` for `mu = <v, A* v>`.
/// Repeated eigenvalues are handled on the whole eigenspace.
pub fn common_eigenvectors(a: &CMatrix) -> Result<Vec<ProjectivePoint>> {
    require_square(a)?;
    let n = a.rows();
    let scale = a.norm_fro();
    if scale == 0.0 {
        return (0..n).map(|k| ProjectivePoint::new(linalg::unit_vector(n, k))).collect();
    }
    let astar = a.adjoint();
    let e = eigen(a)?;
    let mut out: Vec<ProjectivePoint> = Vec::new();
    let mut seen: Vec<C64> = Vec::new();
    for pair in &e.pairs {
        if seen.iter().any(|&l| (l - pair.value).norm() <= S2_TOL * scale) {
            continue;
        }
        seen.push(pair.value);
        let basis = eigenspace(a, pair.value, scale);
        let candidates: Vec<Vec<C64>> = if basis.len() <= 1 {
            vec![pair.vector.clone()]
        } else {
            // eigenvectors of A* compressed to the eigenspace
            let q = CMatrix::from_columns(&basis);
            let b = q.adjoint().matmul(&astar).matmul(&q);
            match eigen(&b) {
                Ok(eb) => eb.pairs.iter().map(|p| q.mul_vec(&p.vector)).collect(),
                Err(_) => basis.clone(),
            }
        };
        for v in candidates {
            let nv = norm(&v);
            if nv == 0.0 {
                continue;
            }
            let av = astar.mul_vec(&v);
            let mu = linalg::dot(&v, &av) / (nv * nv);
            let r: Vec<C64> = av.iter().zip(&v).map(|(x, y)| x - mu * y).collect();
            if norm(&r) <= COMMON_TOL * scale * nv {
                let p = ProjectivePoint::new(v)?;
                if out.iter().all(|q| q.distance(&p) > 1e-6) {
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

/// Orthonormal basis of the numerical kernel of `A - lambda I`.
fn eigenspace(a: &CMatrix, lambda: C64, scale: f64) -> Vec<Vec<C64>> {
    let n = a.rows();
    let shifted = CMatrix::from_fn(n, n, |i, j| a[(i, j)] - if i == j { lambda } else { ZERO });
    let d = svd(&shifted);
    (0..n)
        .filter(|&k| d.singular_values[k] <= 1e-7 * scale)
        .map(|k| d.right_vector(k))
        .collect()
}

pub fn classify(a: &CMatrix) -> Result<GenericityReport> {
    require_square(a)?;
    let ratio = sigma_ratio(a);
    let gap = min_eigen_gap(a);
    let s3 = check_s3(a)?;
    let common = common_eigenvectors(a)?;
    let mut details = format!(
        "sigma_min/sigma_max = {ratio:.3e}; min eigenvalue gap / ||A|| = {gap:.3e}; \
         pencil rank margin = {:.3e} over {} candidates",
        s3.min_margin, s3.candidates
    );
    if s3.heuristic {
        details.push_str("; rank test used grid search (elimination degenerate)");
    }
    if let Some(w) = &s3.witness {
        details.push_str(&format!("; rank drops at t = {:?}", w.coords()));
    }
    if !common.is_empty() {
        details.push_str(&format!("; {} common eigenvector(s)", common.len()));
    }
    Ok(GenericityReport {
        nonsingular: ratio > S1_TOL,
        distinct_eigenvalues: gap > S2_TOL,
        pencil_rank_ok: s3.pencil_rank_ok,
        common_eigenvectors: common,
        s3_witness: s3.witness,
        s3_heuristic: s3.heuristic,
        sigma_ratio: ratio,
        min_eigen_gap: gap,
        details,
    })
}

/// Pencil of `A` at a witness point; convenience for callers re-checking
/// the rank.
pub fn pencil_at(a: &CMatrix, t: &ProjectivePoint) -> Result<CMatrix> {
    Ok(Pencil::new(a)?.pencil_matrix(t.coords()))
}
