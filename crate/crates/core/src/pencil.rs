//! The pencil `t0 I + t1 A + t2 A*`, its determinantal quartic `D`, the
//! curve `C` of vectors with `v, Av, A*v` dependent, and zero-finding on `C`.
//!
//! Points of `C` are never solved for directly. A base point `[t1:t2]` of
//! the projective line gives four points of `D` through the eigenvalues of
//! `t1 A + t2 A*`, and each of these gives a point of `C` as the kernel of
//! the pencil matrix. Zeros of a function on `C` are then polished with
//! Newton on the joint system in `(v, t)`:
//!
//! ```text
//! (t0 I + t1 A + t2 A*) v = 0,   phi(v) = 0,   <a, v> = 1,   <b, t> = 1
//! ```
//!
//! which is square (7 x 7) and regular at simple zeros of `phi` on `C`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{charpoly, det, eigen, norm, rank_svd, svd, CMatrix, ProjectivePoint, C64};
use crate::poly::{self, newton_system, NewtonOptions};

/// Relative eigenvalue gap below which a fiber is treated as a branch fiber.
pub const GAP_TOL: f64 = 1e-6;
/// Certification threshold on `sigma4 / sigma1` of the 4 x 7 rank matrix.
pub const SECTION_TOL: f64 = 1e-8;
/// Two zeros closer than this (projective distance of `v`) are the same.
pub const DEDUP_TOL: f64 = 1e-6;
/// Threshold on `sigma3 / sigma1` for the kernel of a pencil matrix to be
/// treated as more than one dimensional.
pub const RANK_TOL: f64 = 1e-10;

/// Points per near-node when seeding from approximate nodes of `D`.
const NODE_RING: usize = 24;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// The pencil of a square matrix. Internally every computation is done on
/// `A / ||A||_F`; parameters `t` are reported for `A` itself.
#[derive(Clone, Debug)]
pub struct Pencil {
    a: CMatrix,
    astar: CMatrix,
    scale: f64,
    an: CMatrix,
    ans: CMatrix,
    an2: CMatrix,
    ans2: CMatrix,
    an_ans: CMatrix,
    ans_an: CMatrix,
    /// Column maps of the two section proxies (after the identity).
    proxies: [[CMatrix; 3]; 2],
}

/// Scalar function on `C` driven to zero by Newton.
///
/// Off the eigenvectors of `A*`, `W(v) = span(v, A*v)` and the section
/// condition reads `det[v, A*v, AA*v, A*^2 v] = 0` (proxy 0); off the
/// eigenvectors of `A` the mirror `det[v, Av, A*Av, A^2 v] = 0` (proxy 1).
/// Each is regular where the other degenerates.
enum Phi<'a> {
    Proxy(usize),
    Linear(&'a [C64]),
}

/// A point `[t]` of `D` with its kernel vector `v`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PencilPoint {
    pub t: ProjectivePoint,
    pub v: ProjectivePoint,
    /// Index of the eigenvalue within its fiber (0..n).
    pub sheet: usize,
    /// The image `[t1:t2]` under the projection to the line.
    pub base: [C64; 2],
    pub near_branch: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionCandidate {
    pub point: PencilPoint,
    pub h_value: C64,
    pub sigma4: f64,
    pub accepted: bool,
    /// `W(v) + A W(v)` or `W(v) + A* W(v)` is only two dimensional.
    pub shortcut: bool,
}

/// A function on `C` whose zeros are sought.
#[derive(Clone, Debug)]
pub enum CurveFunction {
    /// `h(v) = det[v, Av, A^2 v, A*^2 v]`, certified by the rank test.
    Section,
    /// A linear form `l . v` (no conjugation).
    Hyperplane(Vec<C64>),
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    /// Base points on the projective line, laid out on a Fibonacci sphere.
    pub samples: usize,
    /// Extra pseudorandom base points.
    pub restarts: usize,
    /// Polish every seed instead of one per neighbourhood.
    pub exhaustive: bool,
    pub tol_section: f64,
    pub dedup_tol: f64,
    pub gap_tol: f64,
    pub seed: u64,
    /// Cap on Newton runs in non-exhaustive mode.
    pub max_newton: usize,
    /// Stop once this many zeros are certified.
    pub stop_after: Option<usize>,
    /// Return a `dim W3 = 2` point as soon as the sweep meets one.
    pub shortcut: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            samples: 720,
            restarts: 32,
            exhaustive: false,
            tol_section: SECTION_TOL,
            dedup_tol: DEDUP_TOL,
            gap_tol: GAP_TOL,
            seed: 42,
            max_newton: 400,
            stop_after: None,
            shortcut: true,
        }
    }
}

impl SweepOptions {
    /// Settings used for counting experiments.
    pub fn exhaustive() -> Self {
        Self {
            samples: 2880,
            restarts: 64,
            exhaustive: true,
            shortcut: false,
            ..Self::default()
        }
    }
}

/// A zero of a [`CurveFunction`] on `C` after polishing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveZero {
    pub point: PencilPoint,
    /// Residual of the joint Newton system.
    pub residual: f64,
    /// Reciprocal condition number of the Newton Jacobian at the zero.
    pub jacobian_rcond: f64,
}

struct Seed {
    base: usize,
    sheet: usize,
    phi: usize,
    v: Vec<C64>,
    t: [C64; 3],
    score: f64,
}

/// Base points `[cos(theta/2) : sin(theta/2) e^{i phi}]` for a Fibonacci
/// lattice on the sphere, followed by `restarts` Gaussian ones.
pub fn base_points(samples: usize, restarts: usize, seed: u64) -> Vec<[C64; 2]> {
    let golden = std::f64::consts::PI * (1.0 + 5f64.sqrt());
    let mut out: Vec<[C64; 2]> = (0..samples)
        .map(|i| {
            let x = i as f64 + 0.5;
            let theta = (1.0 - 2.0 * x / samples as f64).clamp(-1.0, 1.0).acos();
            let phi = golden * x;
            [
                C64::new((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), phi),
            ]
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let b = [C64::new(g[0], g[1]), C64::new(g[2], g[3])];
        let n = norm(&b);
        out.push([b[0] / n, b[1] / n]);
    }
    out
}

impl Pencil {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if !a.is_square() || a.rows() == 0 {
            return Err(Error::InvalidInput("pencil needs a non-empty square matrix".into()));
        }
        if !a.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let scale = a.norm_fro();
        let s = if scale > 0.0 { 1.0 / scale } else { 1.0 };
        let an = a.scale(C64::new(s, 0.0));
        let ans = an.adjoint();
        let (an2, ans2) = (an.matmul(&an), ans.matmul(&ans));
        let (an_ans, ans_an) = (an.matmul(&ans), ans.matmul(&an));
        let proxies = [
            [ans.clone(), an_ans.clone(), ans2.clone()],
            [an.clone(), ans_an.clone(), an2.clone()],
        ];
        Ok(Self {
            a: a.clone(),
            astar: a.adjoint(),
            scale,
            an2,
            ans2,
            an_ans,
            ans_an,
            an,
            ans,
            proxies,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn adjoint(&self) -> &CMatrix {
        &self.astar
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// `||A||_F`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn s(&self) -> f64 {
        if self.scale > 0.0 {
            self.scale
        } else {
            1.0
        }
    }

    /// `t0 I + t1 A + t2 A*`.
    pub fn pencil_matrix(&self, t: &[C64]) -> CMatrix {
        assert_eq!(t.len(), 3, "pencil parameter has three coordinates");
        combine(&self.a, &self.astar, t)
    }

    /// Pencil matrix of the normalised matrix.
    fn pencil_hat(&self, t: &[C64]) -> CMatrix {
        combine(&self.an, &self.ans, t)
    }

    fn t_from_hat(&self, t: &[C64]) -> Result<ProjectivePoint> {
        let s = self.s();
        ProjectivePoint::new(vec![t[0], t[1] / s, t[2] / s])
    }

    fn t_to_hat(&self, t: &[C64]) -> [C64; 3] {
        let s = self.s();
        [t[0], t[1] * s, t[2] * s]
    }

    /// `det(t0 I + t1 A + t2 A*)`, the defining form of `D`.
    pub fn det_form(&self, t: &[C64]) -> C64 {
        det(&self.pencil_matrix(t))
    }

    /// The `n` points of `D` over `[t1:t2]`.
    pub fn theta_fiber(&self, base: [C64; 2]) -> Result<Vec<PencilPoint>> {
        let s = self.s();
        let fiber = self.fiber_hat([base[0] * s, base[1] * s], GAP_TOL)?;
        fiber
            .into_iter()
            .enumerate()
            .map(|(sheet, (t, v, near))| {
                Ok(PencilPoint {
                    t: self.t_from_hat(&t)?,
                    v: ProjectivePoint::new(v)?,
                    sheet,
                    base,
                    near_branch: near,
                })
            })
            .collect()
    }

    /// Fiber of the normalised pencil: `(t, kernel vector, near_branch)`.
    /// The base is not rescaled.
    fn fiber_hat(&self, base: [C64; 2], gap_tol: f64) -> Result<Vec<([C64; 3], Vec<C64>, bool)>> {
        let m = combine(&self.an, &self.ans, &[ZERO, base[0], base[1]]);
        let e = eigen(&m)?;
        let values = e.values();
        let mnorm = m.norm_fro().max(f64::MIN_POSITIVE);
        let mut gap = f64::INFINITY;
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                gap = gap.min((values[i] - values[j]).norm());
            }
        }
        let near = e.repeated || gap < gap_tol * mnorm;
        Ok(e.pairs
            .into_iter()
            .map(|p| ([-p.value, base[0], base[1]], p.vector, near))
            .collect())
    }

    /// Unit spanning vector of `ker(t0 I + t1 A + t2 A*)` for `[t]` on `D`.
    pub fn kernel_vector(&self, t: &ProjectivePoint) -> Result<ProjectivePoint> {
        let th = self.t_to_hat(t.coords());
        let m = self.pencil_hat(&th);
        let d = svd(&m);
        let n = m.cols();
        let sv = &d.singular_values;
        let top = sv[0].max(f64::MIN_POSITIVE);
        if n >= 2 && sv[n - 2] <= RANK_TOL * top {
            return Err(Error::RankDeficientPencil { sigma: sv[n - 2] / top });
        }
        ProjectivePoint::new(d.right_vector(n - 1))
    }

    /// The inverse direction `C -> D`: the one-dimensional kernel of
    /// `t -> t0 v + t1 Av + t2 A*v`.
    pub fn kernel_parameter(&self, v: &ProjectivePoint) -> Result<(ProjectivePoint, f64)> {
        let x = v.coords();
        let m = CMatrix::from_columns(&[x.to_vec(), self.an.mul_vec(x), self.ans.mul_vec(x)]);
        let d = svd(&m);
        let sv = &d.singular_values;
        let rel = sv[2] / sv[0].max(f64::MIN_POSITIVE);
        Ok((self.t_from_hat(&d.right_vector(2))?, rel))
    }

    /// Largest 3 x 3 minor of `[v, Av, A*v]`, relative to the column norms.
    pub fn curve_c_residual(&self, v: &ProjectivePoint) -> f64 {
        curve_residual_raw(&self.an, &self.ans, v.coords())
    }

    /// `h(v)` and `sigma4 / sigma1` of `[v, Av, A*v, A^2 v, AA* v, A*A v, A*^2 v]`.
    pub fn section_residual(&self, v: &ProjectivePoint) -> (C64, f64) {
        let x = v.coords();
        (self.h_value(x) / norm(x).powi(4), self.sigma4(x))
    }

    fn columns7(&self, x: &[C64]) -> CMatrix {
        CMatrix::from_columns(&[
            x.to_vec(),
            self.an.mul_vec(x),
            self.ans.mul_vec(x),
            self.an2.mul_vec(x),
            self.an_ans.mul_vec(x),
            self.ans_an.mul_vec(x),
            self.ans2.mul_vec(x),
        ])
    }

    fn sigma4(&self, x: &[C64]) -> f64 {
        let (_, sv) = rank_svd(&self.columns7(x), 1.0);
        if sv[0] == 0.0 {
            return 0.0;
        }
        sv[3] / sv[0]
    }

    /// `sigma3 / sigma1` of `[v, Av, A*v, A^2 v, AA* v]` and of its mirror
    /// with `A` and `A*` swapped; the smaller of the two.
    pub fn w3_deficiency(&self, v: &ProjectivePoint) -> f64 {
        self.w3_raw(v.coords())
    }

    fn w3_raw(&self, x: &[C64]) -> f64 {
        let (av, asv) = (self.an.mul_vec(x), self.ans.mul_vec(x));
        let m1 = CMatrix::from_columns(&[
            x.to_vec(),
            av.clone(),
            asv.clone(),
            self.an2.mul_vec(x),
            self.an_ans.mul_vec(x),
        ]);
        let m2 = CMatrix::from_columns(&[x.to_vec(), av, asv, self.ans2.mul_vec(x), self.ans_an.mul_vec(x)]);
        let rel = |m: &CMatrix| {
            let (_, sv) = rank_svd(m, 1.0);
            if sv[0] == 0.0 {
                0.0
            } else {
                sv[2] / sv[0]
            }
        };
        rel(&m1).min(rel(&m2))
    }

    /// `sigma2 / sigma1` and `sigma3 / sigma1` of `[v, Av, A*v]`.
    pub fn w_dimension_margins(&self, v: &ProjectivePoint) -> (f64, f64) {
        let x = v.coords();
        let m = CMatrix::from_columns(&[x.to_vec(), self.an.mul_vec(x), self.ans.mul_vec(x)]);
        let (_, sv) = rank_svd(&m, 1.0);
        (sv[1] / sv[0], sv[2] / sv[0])
    }

    fn h_columns(&self, x: &[C64]) -> [[C64; 4]; 4] {
        [
            to4(x),
            to4(&self.an.mul_vec(x)),
            to4(&self.an2.mul_vec(x)),
            to4(&self.ans2.mul_vec(x)),
        ]
    }

    fn h_value(&self, x: &[C64]) -> C64 {
        det4(&self.h_columns(x))
    }

    /// `det[v, M1 v, M2 v, M3 v]` and its gradient, for one of the two
    /// section proxies.
    fn proxy_gradient(&self, which: usize, x: &[C64]) -> (C64, Vec<C64>) {
        let maps = &self.proxies[which];
        let cols = [to4(x), to4(&maps[0].mul_vec(x)), to4(&maps[1].mul_vec(x)), to4(&maps[2].mul_vec(x))];
        let cof = cofactors4(&cols);
        let mut g: Vec<C64> = (0..4).map(|i| cof[i][0]).collect();
        for (j, m) in maps.iter().enumerate() {
            for i in 0..4 {
                let c = cof[i][j + 1];
                for (k, gk) in g.iter_mut().enumerate() {
                    *gk += m[(i, k)] * c;
                }
            }
        }
        let h = (0..4).map(|i| cols[0][i] * cof[i][0]).sum();
        (h, g)
    }

    fn phi(&self, f: &Phi, x: &[C64]) -> (C64, Vec<C64>) {
        match f {
            Phi::Proxy(k) => self.proxy_gradient(*k, x),
            Phi::Linear(l) => (l.iter().zip(x).map(|(a, b)| a * b).sum(), l.to_vec()),
        }
    }

    fn phi_score(&self, f: &Phi, x: &[C64]) -> f64 {
        let nx = norm(x);
        match f {
            Phi::Proxy(k) => self.proxy_gradient(*k, x).0.norm() / nx.powi(4),
            Phi::Linear(l) => l.iter().zip(x).map(|(a, b)| a * b).sum::<C64>().norm() / (nx * norm(l)),
        }
    }

    /// Newton on the joint system from `(v, t)` in normalised coordinates.
    fn polish(&self, f: &Phi, v: &[C64], t: &[C64; 3]) -> Option<(Vec<C64>, [C64; 3], f64, f64)> {
        let nv = norm(v);
        let nt = norm(t);
        if nv == 0.0 || nt == 0.0 {
            return None;
        }
        let a: Vec<C64> = v.iter().map(|z| z.conj() / (nv * nv)).collect();
        let b: Vec<C64> = t.iter().map(|z| z.conj() / (nt * nt)).collect();
        let system = |z: &[C64]| self.system(f, z, &a, &b);
        let mut start = v.to_vec();
        start.extend_from_slice(t);
        let opts = NewtonOptions {
            max_steps: 20,
            ..NewtonOptions::default()
        };
        let out = newton_system(system, &start, &opts).ok()?;
        let z = out.point;
        let (_, jac) = self.system(f, &z, &a, &b);
        let (_, sv) = rank_svd(&jac, 1.0);
        let rcond = sv[6] / sv[0];
        Some((z[..4].to_vec(), [z[4], z[5], z[6]], out.residual, rcond))
    }

    fn system(&self, f: &Phi, z: &[C64], a: &[C64], b: &[C64]) -> (Vec<C64>, CMatrix) {
        let (v, t) = (&z[..4], &z[4..7]);
        let p = self.pencil_hat(t);
        let mut res = p.mul_vec(v);
        let (phi, grad) = self.phi(f, v);
        res.push(phi);
        res.push(a.iter().zip(v).map(|(x, y)| x * y).sum::<C64>() - ONE);
        res.push(b.iter().zip(t).map(|(x, y)| x * y).sum::<C64>() - ONE);
        let av = self.an.mul_vec(v);
        let asv = self.ans.mul_vec(v);
        let mut jac = CMatrix::zeros(7, 7);
        for i in 0..4 {
            for j in 0..4 {
                jac[(i, j)] = p[(i, j)];
            }
            jac[(i, 4)] = v[i];
            jac[(i, 5)] = av[i];
            jac[(i, 6)] = asv[i];
            jac[(4, i)] = grad[i];
            jac[(5, i)] = a[i];
        }
        for j in 0..3 {
            jac[(6, 4 + j)] = b[j];
        }
        (res, jac)
    }

    fn make_point(&self, v: &[C64], t: &[C64; 3], sheet: usize, near: bool) -> Result<PencilPoint> {
        let tp = self.t_from_hat(t)?;
        let c = tp.coords();
        let nb = norm(&c[1..]);
        let base = if nb > 0.0 { [c[1] / nb, c[2] / nb] } else { [ONE, ZERO] };
        Ok(PencilPoint {
            t: tp,
            v: ProjectivePoint::new(v.to_vec())?,
            sheet,
            base,
            near_branch: near,
        })
    }

    /// Fiber points of the sweep that are local minima of a score against
    /// the nearest neighbouring fibers, per function, ordered by rank
    /// within their function and interleaved across functions.
    fn collect_seeds(&self, phis: &[Phi], opts: &SweepOptions) -> Vec<Seed> {
        let bases = base_points(opts.samples, opts.restarts, opts.seed);
        type Entry = ([C64; 3], Vec<C64>, Vec<f64>);
        let fibers: Vec<Option<Vec<Entry>>> = bases
            .par_iter()
            .map(|&b| {
                let fiber = self.fiber_hat(b, opts.gap_tol).ok()?;
                if fiber.first().is_some_and(|x| x.2) {
                    return None;
                }
                Some(
                    fiber
                        .into_iter()
                        .map(|(t, v, _)| {
                            let sc = phis.iter().map(|f| self.phi_score(f, &v)).collect();
                            (t, v, sc)
                        })
                        .collect(),
                )
            })
            .collect();
        let sphere: Vec<[f64; 3]> = bases.iter().map(bloch).collect();
        let neighbours = nearest(&sphere, NEIGHBOURS);
        let mut per_phi: Vec<Vec<Seed>> = (0..phis.len()).map(|_| Vec::new()).collect();
        for (bi, fiber) in fibers.iter().enumerate() {
            let Some(fiber) = fiber else { continue };
            for (sheet, (t, v, scores)) in fiber.iter().enumerate() {
                // the sheet of a neighbouring fiber is the one with the closest t0
                let matched: Vec<&Entry> = neighbours[bi]
                    .iter()
                    .filter_map(|&bj| fibers[bj].as_ref())
                    .map(|other| {
                        other
                            .iter()
                            .min_by(|x, y| (x.0[0] - t[0]).norm().total_cmp(&(y.0[0] - t[0]).norm()))
                            .expect("fibers are non-empty")
                    })
                    .collect();
                for (k, list) in per_phi.iter_mut().enumerate() {
                    if matched.iter().all(|e| scores[k] <= e.2[k]) {
                        list.push(Seed {
                            base: bi,
                            sheet,
                            phi: k,
                            v: v.clone(),
                            t: *t,
                            score: scores[k],
                        });
                    }
                }
            }
        }
        let limit = if opts.exhaustive { usize::MAX } else { opts.max_newton };
        let mut ranked: Vec<(usize, Seed)> = Vec::new();
        for mut list in per_phi {
            list.sort_by(|x, y| x.score.total_cmp(&y.score).then((x.base, x.sheet).cmp(&(y.base, y.sheet))));
            ranked.extend(list.into_iter().take(limit).enumerate());
        }
        ranked.sort_by_key(|(rank, s)| (*rank, s.phi));
        ranked.into_iter().map(|(_, s)| s).collect()
    }

    /// Polishes `seeds` in batches, appending new accepted zeros.
    fn run_seeds(
        &self,
        seeds: &[Seed],
        phis: &[Phi],
        opts: &SweepOptions,
        accept: &(impl Fn(&[C64], &[C64; 3]) -> bool + Sync),
        zeros: &mut Vec<CurveZero>,
        tried: &mut usize,
    ) {
        if opts.stop_after.is_some_and(|k| zeros.len() >= k) {
            return;
        }
        let batch = if opts.stop_after.is_some() { 16 } else { seeds.len().max(1) };
        for chunk in seeds.chunks(batch) {
            let polished: Vec<_> = chunk
                .par_iter()
                .map(|s| {
                    let (v, t, res, rcond) = self.polish(&phis[s.phi], &s.v, &s.t)?;
                    accept(&v, &t).then_some((v, t, res, rcond, s.sheet))
                })
                .collect();
            *tried += chunk.len();
            for (v, t, res, rcond, sheet) in polished.into_iter().flatten() {
                let Ok(point) = self.make_point(&v, &t, sheet, false) else { continue };
                if zeros.iter().any(|z| z.point.v.distance(&point.v) < opts.dedup_tol) {
                    continue;
                }
                zeros.push(CurveZero {
                    point,
                    residual: res,
                    jacobian_rcond: rcond,
                });
            }
            if opts.stop_after.is_some_and(|k| zeros.len() >= k) {
                break;
            }
        }
    }

    /// Seeds spread over the near-kernel of the pencil at approximate
    /// nodes of `D`. When `A` is close to normal, `C` is close to the six
    /// lines joining pairs of eigenvectors and the kernel map squeezes each
    /// of them into a tiny neighbourhood of a node, which fiber sampling
    /// cannot resolve. The nodes are estimated from pairs of eigenvalues,
    /// as `t0 + t1 λ + t2 conj(λ)` vanishes there for both.
    fn node_seeds(&self, nphi: usize, opts: &SweepOptions) -> Vec<Seed> {
        let Ok(lambdas) = poly::roots(&charpoly(&self.an)).map(|r| poly::expand(&r)) else {
            return Vec::new();
        };
        let ring = base_points(NODE_RING, 0, opts.seed);
        let mut nodes: Vec<(f64, [Vec<C64>; 2])> = Vec::new();
        for i in 0..lambdas.len() {
            for j in i + 1..lambdas.len() {
                let (p, q) = (lambdas[i], lambdas[j]);
                let x = [ONE, p, p.conj()];
                let y = [ONE, q, q.conj()];
                let t = [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]];
                if norm(&t) == 0.0 {
                    continue;
                }
                let d = svd(&self.pencil_hat(&t));
                let sv = &d.singular_values;
                let margin = sv[2] / sv[0].max(f64::MIN_POSITIVE);
                nodes.push((margin, [d.right_vector(2), d.right_vector(3)]));
            }
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut seeds = Vec::new();
        for b in &ring {
            for (sheet, (_, q)) in nodes.iter().enumerate() {
                let v: Vec<C64> = (0..4).map(|k| b[0] * q[0][k] + b[1] * q[1][k]).collect();
                let m = CMatrix::from_columns(&[v.clone(), self.an.mul_vec(&v), self.ans.mul_vec(&v)]);
                let r = svd(&m).right_vector(2);
                let t = [r[0], r[1], r[2]];
                for phi in 0..nphi {
                    seeds.push(Seed {
                        base: usize::MAX,
                        sheet,
                        phi,
                        v: v.clone(),
                        t,
                        score: 0.0,
                    });
                }
            }
        }
        seeds
    }

    /// Zeros of `f` on `C`, deduplicated, in the order they were found.
    pub fn curve_zeros(&self, f: &CurveFunction, opts: &SweepOptions) -> Result<Vec<CurveZero>> {
        Ok(self.curve_zeros_inner(f, opts, |_, _| true)?.0)
    }

    /// Shared driver: returns accepted zeros and the number of Newton runs.
    fn curve_zeros_inner(
        &self,
        f: &CurveFunction,
        opts: &SweepOptions,
        accept: impl Fn(&[C64], &[C64; 3]) -> bool + Sync,
    ) -> Result<(Vec<CurveZero>, usize)> {
        if self.dim() != 4 {
            return Err(Error::InvalidInput("curve zeros are computed for 4 x 4 matrices".into()));
        }
        let phis: Vec<Phi> = match f {
            CurveFunction::Section => vec![Phi::Proxy(0), Phi::Proxy(1)],
            CurveFunction::Hyperplane(l) => vec![Phi::Linear(l)],
        };
        let mut zeros: Vec<CurveZero> = Vec::new();
        let mut tried = 0;
        let seeds = self.collect_seeds(&phis, opts);
        self.run_seeds(&seeds, &phis, opts, &accept, &mut zeros, &mut tried);
        let enough = opts.stop_after.is_some_and(|k| zeros.len() >= k);
        if opts.exhaustive || (!enough && opts.stop_after.is_some()) || zeros.is_empty() {
            let seeds = self.node_seeds(phis.len(), opts);
            self.run_seeds(&seeds, &phis, opts, &accept, &mut zeros, &mut tried);
        }
        Ok((zeros, tried))
    }

    /// Points of `C` where `W(v) + A W(v) = W(v) + A* W(v)`, sorted by
    /// `sigma4`. A seed with `dim W3 = 2` is returned on its own when the
    /// shortcut is enabled.
    pub fn section_zeros(&self, opts: &SweepOptions) -> Result<Vec<SectionCandidate>> {
        if self.dim() != 4 {
            return Err(Error::InvalidInput("section zeros are computed for 4 x 4 matrices".into()));
        }
        if opts.shortcut {
            if let Some(c) = self.find_shortcut(opts)? {
                return Ok(vec![c]);
            }
        }
        let tol = opts.tol_section;
        let (zeros, tried) = self.curve_zeros_inner(&CurveFunction::Section, opts, |v, _| {
            self.sigma4(v) <= tol && curve_residual_raw(&self.an, &self.ans, v) <= 1e-8
        })?;
        let mut out: Vec<SectionCandidate> = zeros
            .into_iter()
            .map(|z| {
                let (h, s4) = self.section_residual(&z.point.v);
                let shortcut = self.w3_deficiency(&z.point.v) <= tol;
                SectionCandidate {
                    point: z.point,
                    h_value: h,
                    sigma4: s4,
                    accepted: true,
                    shortcut,
                }
            })
            .collect();
        if out.is_empty() {
            return Err(Error::NoSectionZero { candidates: tried });
        }
        out.sort_by(|a, b| a.sigma4.total_cmp(&b.sigma4));
        Ok(out)
    }

    /// Polished points of `C` where the section is smallest, certified or
    /// not, sorted by `sigma4`. For matrices close to the non-generic set the
    /// section is uniformly small along `C` and certification at the usual
    /// tolerance can fail even though the flags are nearly exact.
    pub fn near_section_zeros(&self, opts: &SweepOptions, limit: usize) -> Result<Vec<SectionCandidate>> {
        if self.dim() != 4 {
            return Err(Error::InvalidInput("section zeros are computed for 4 x 4 matrices".into()));
        }
        let (zeros, _) = self.curve_zeros_inner(&CurveFunction::Section, opts, |v, _| {
            curve_residual_raw(&self.an, &self.ans, v) <= 1e-8
        })?;
        let mut out: Vec<SectionCandidate> = zeros
            .into_iter()
            .map(|z| {
                let (h, s4) = self.section_residual(&z.point.v);
                SectionCandidate {
                    shortcut: self.w3_deficiency(&z.point.v) <= opts.tol_section,
                    point: z.point,
                    h_value: h,
                    sigma4: s4,
                    accepted: s4 <= opts.tol_section,
                }
            })
            .collect();
        out.sort_by(|a, b| a.sigma4.total_cmp(&b.sigma4));
        out.truncate(limit);
        Ok(out)
    }

    fn find_shortcut(&self, opts: &SweepOptions) -> Result<Option<SectionCandidate>> {
        // a two-dimensional W3 occurs along whole components of C, so a
        // coarse grid suffices
        let bases = base_points((opts.samples / 8).max(64), 0, opts.seed);
        let hits: Vec<Option<(usize, [C64; 3], Vec<C64>, bool, f64)>> = bases
            .par_iter()
            .map(|&b| {
                let fiber = self.fiber_hat(b, opts.gap_tol).ok()?;
                fiber
                    .into_iter()
                    .enumerate()
                    .map(|(k, (t, v, near))| {
                        let d = self.w3_raw(&v);
                        (k, t, v, near, d)
                    })
                    .filter(|x| x.4 <= opts.tol_section && curve_residual_raw(&self.an, &self.ans, &x.2) <= 1e-8)
                    .min_by(|x, y| x.4.total_cmp(&y.4))
            })
            .collect();
        let Some((sheet, t, v, near, _)) = hits.into_iter().flatten().next() else {
            return Ok(None);
        };
        let point = self.make_point(&v, &t, sheet, near)?;
        let (h, s4) = self.section_residual(&point.v);
        Ok(Some(SectionCandidate {
            point,
            h_value: h,
            sigma4: s4,
            accepted: true,
            shortcut: true,
        }))
    }

    /// Polishes a vector near `C` onto a section zero of this pencil.
    pub fn polish_section_zero(&self, v: &ProjectivePoint) -> Option<SectionCandidate> {
        let x = v.coords();
        let (t, _) = self.kernel_parameter(v).ok()?;
        let th = self.t_to_hat(t.coords());
        let (v2, t2, _, _) = [Phi::Proxy(0), Phi::Proxy(1)]
            .iter()
            .filter_map(|f| self.polish(f, x, &th))
            .min_by(|p, q| self.sigma4(&p.0).total_cmp(&self.sigma4(&q.0)))?;
        let point = self.make_point(&v2, &t2, 0, false).ok()?;
        let (h, s4) = self.section_residual(&point.v);
        let shortcut = self.w3_deficiency(&point.v) <= SECTION_TOL;
        Some(SectionCandidate {
            accepted: s4 <= SECTION_TOL,
            point,
            h_value: h,
            sigma4: s4,
            shortcut,
        })
    }
}

const NEIGHBOURS: usize = 6;

/// Point of the unit sphere representing `[t1:t2]`.
fn bloch(b: &[C64; 2]) -> [f64; 3] {
    let c = b[0].conj() * b[1];
    let n = b[0].norm_sqr() + b[1].norm_sqr();
    [2.0 * c.re / n, 2.0 * c.im / n, (b[0].norm_sqr() - b[1].norm_sqr()) / n]
}

/// Indices of the `k` nearest other points, by brute force.
fn nearest(points: &[[f64; 3]], k: usize) -> Vec<Vec<usize>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2), j))
                .collect();
            let k = k.min(d.len());
            if k > 0 {
                d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
            }
            d.truncate(k);
            d.into_iter().map(|x| x.1).collect()
        })
        .collect()
}

fn to4(x: &[C64]) -> [C64; 4] {
    [x[0], x[1], x[2], x[3]]
}

fn det3(a: [C64; 3], b: [C64; 3], c: [C64; 3]) -> C64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1]) + c[0] * (a[1] * b[2] - a[2] * b[1])
}

/// `cof[i][j]` is the signed cofactor of entry `(i, j)` of the matrix whose
/// columns are `cols`.
fn cofactors4(cols: &[[C64; 4]; 4]) -> [[C64; 4]; 4] {
    let mut out = [[ZERO; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        let r: Vec<usize> = (0..4).filter(|&k| k != i).collect();
        for (j, entry) in row.iter_mut().enumerate() {
            let c: Vec<[C64; 3]> = (0..4)
                .filter(|&k| k != j)
                .map(|k| [cols[k][r[0]], cols[k][r[1]], cols[k][r[2]]])
                .collect();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            *entry = det3(c[0], c[1], c[2]) * sign;
        }
    }
    out
}

fn det4(cols: &[[C64; 4]; 4]) -> C64 {
    let cof = cofactors4_first_column(cols);
    (0..4).map(|i| cols[0][i] * cof[i]).sum()
}

fn cofactors4_first_column(cols: &[[C64; 4]; 4]) -> [C64; 4] {
    std::array::from_fn(|i| {
        let r: Vec<usize> = (0..4).filter(|&k| k != i).collect();
        let pick = |k: usize| [cols[k][r[0]], cols[k][r[1]], cols[k][r[2]]];
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        det3(pick(1), pick(2), pick(3)) * sign
    })
}

fn combine(a: &CMatrix, astar: &CMatrix, t: &[C64]) -> CMatrix {
    let n = a.rows();
    CMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { t[0] } else { ZERO };
        d + t[1] * a[(i, j)] + t[2] * astar[(i, j)]
    })
}

fn curve_residual_raw(a: &CMatrix, astar: &CMatrix, x: &[C64]) -> f64 {
    let cols = [x.to_vec(), a.mul_vec(x), astar.mul_vec(x)];
    let scale: f64 = cols.iter().map(|c| norm(c)).product();
    if scale == 0.0 {
        return 0.0;
    }
    let m = CMatrix::from_columns(&cols);
    let n = x.len();
    if n < 3 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for skip in combinations(n, n - 3) {
        let rows: Vec<usize> = (0..n).filter(|r| !skip.contains(r)).collect();
        worst = worst.max(det(&m.select(&rows, &[0, 1, 2])).norm());
    }
    worst / scale
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for mut rest in combinations(n, k - 1) {
            if rest.iter().all(|&r| r > first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
    }
    out
}

/// Free-function form of [`Pencil::pencil_matrix`].
pub fn pencil_matrix(p: &Pencil, t: &ProjectivePoint) -> CMatrix {
    p.pencil_matrix(t.coords())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gaussian, hermitian, jordan, rng, tridiagonal};
    use crate::linalg::{self, unit_vector};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pp(x: &[C64]) -> ProjectivePoint {
        ProjectivePoint::new(x.to_vec()).unwrap()
    }

    #[test]
    fn pencil_matrix_examples() {
        let a = gaussian(4, &mut rng(1));
        let p = Pencil::new(&a).unwrap();
        let id = p.pencil_matrix(&[ONE, ZERO, ZERO]);
        assert!((&id - &CMatrix::identity(4)).norm_fro() == 0.0);
        let m = p.pencil_matrix(&[ZERO, ONE, ZERO]);
        assert!((&m - &a).norm_fro() == 0.0);
    }

    #[test]
    fn pencil_of_jordan_block_is_banded() {
        let p = Pencil::new(&jordan(4)).unwrap();
        let t = [c(0.3, 1.0), c(-2.0, 0.5), c(0.7, -0.1)];
        let m = p.pencil_matrix(&t);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j {
                    t[0]
                } else if j == i + 1 {
                    t[1]
                } else if i == j + 1 {
                    t[2]
                } else {
                    ZERO
                };
                assert_eq!(m[(i, j)], want);
            }
        }
    }

    #[test]
    fn hermitian_fiber_over_one_zero_is_real_spectrum() {
        let a = hermitian(4, &mut rng(2));
        let p = Pencil::new(&a).unwrap();
        let fiber = p.theta_fiber([ONE, ZERO]).unwrap();
        assert_eq!(fiber.len(), 4);
        let mut want: Vec<f64> = linalg::eigen(&a).unwrap().values().iter().map(|z| z.re).collect();
        want.sort_by(f64::total_cmp);
        let mut got: Vec<f64> = fiber
            .iter()
            .map(|q| {
                let t = q.t.coords();
                let l = -t[0] / t[1];
                assert!(l.im.abs() < 1e-10);
                l.re
            })
            .collect();
        got.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn jordan_fiber_is_a_branch_fiber() {
        let p = Pencil::new(&jordan(4)).unwrap();
        let fiber = p.theta_fiber([ONE, ZERO]).unwrap();
        assert_eq!(fiber.len(), 4);
        let target = pp(&[ZERO, ONE, ZERO]);
        for q in &fiber {
            assert!(q.near_branch);
            assert!(q.t.distance(&target) < 1e-12);
        }
    }

    #[test]
    fn random_fiber_points_lie_on_d() {
        let a = gaussian(4, &mut rng(3));
        let p = Pencil::new(&a).unwrap();
        let fiber = p.theta_fiber([ONE, ONE]).unwrap();
        assert_eq!(fiber.len(), 4);
        for q in &fiber {
            assert!(!q.near_branch);
            let m = p.pencil_matrix(q.t.coords());
            let r = linalg::norm(&m.mul_vec(q.v.coords()));
            assert!(r <= 1e-10 * m.norm_fro(), "residual {r}");
            assert!(det(&m).norm() <= 1e-10 * m.norm_fro().powi(4));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(fiber[i].t.distance(&fiber[j].t) > 1e-6);
            }
        }
    }

    #[test]
    fn jordan_kernel_vectors() {
        let p = Pencil::new(&jordan(4)).unwrap();
        let k = p.kernel_vector(&pp(&[ZERO, ONE, ZERO])).unwrap();
        assert!(k.distance(&pp(&unit_vector(4, 0))) < 1e-14);
        let k = p.kernel_vector(&pp(&[ZERO, ZERO, ONE])).unwrap();
        assert!(k.distance(&pp(&unit_vector(4, 3))) < 1e-14);
    }

    #[test]
    fn identity_pencil_is_rank_deficient() {
        let p = Pencil::new(&CMatrix::identity(4)).unwrap();
        let err = p.kernel_vector(&pp(&[-ONE, ONE, ZERO])).unwrap_err();
        assert!(matches!(err, Error::RankDeficientPencil { .. }));
    }

    #[test]
    fn kernel_map_round_trip() {
        let a = gaussian(4, &mut rng(4));
        let p = Pencil::new(&a).unwrap();
        for q in p.theta_fiber([c(0.6, 0.2), c(-0.3, 0.7)]).unwrap() {
            let v = p.kernel_vector(&q.t).unwrap();
            assert!(v.distance(&q.v) < 1e-8);
            let (t, rel) = p.kernel_parameter(&v).unwrap();
            assert!(rel < 1e-10);
            assert!(t.distance(&q.t) < 1e-8);
        }
    }

    #[test]
    fn curve_residual_examples() {
        let a = gaussian(4, &mut rng(5));
        let p = Pencil::new(&a).unwrap();
        for e in linalg::eigen(&a).unwrap().pairs {
            assert!(p.curve_c_residual(&pp(&e.vector)) < 1e-10);
        }
        for q in p.theta_fiber([ONE, c(0.2, -1.0)]).unwrap() {
            assert!(p.curve_c_residual(&q.v) < 1e-10);
        }
        let mut r = rng(6);
        for _ in 0..20 {
            let v: Vec<C64> = (0..4).map(|_| crate::generate::complex_normal(&mut r)).collect();
            assert!(p.curve_c_residual(&pp(&v)) > 1e-3);
        }
    }

    #[test]
    fn minors_are_cubic_in_t() {
        let a = gaussian(4, &mut rng(7));
        let p = Pencil::new(&a).unwrap();
        let t = [c(0.3, 0.1), c(-1.0, 0.4), c(0.2, 0.9)];
        let lam = c(1.7, -0.6);
        let m1 = p.pencil_matrix(&t);
        let m2 = p.pencil_matrix(&t.map(|z| z * lam));
        for (i, j) in [(0, 0), (3, 0), (0, 3), (1, 2)] {
            let d1 = det(&m1.minor(i, j));
            let d2 = det(&m2.minor(i, j));
            assert!((d2 - d1 * lam.powu(3)).norm() < 1e-12 * d2.norm().max(1.0));
        }
    }

    #[test]
    fn tridiagonal_section_residual_at_e1() {
        let a = tridiagonal(4, &mut rng(8));
        let p = Pencil::new(&a).unwrap();
        let (h, s4) = p.section_residual(&pp(&unit_vector(4, 0)));
        assert!(h.norm() < 1e-15);
        assert!(s4 < 1e-15);
    }

    #[test]
    fn eigenvector_makes_h_vanish() {
        let a = gaussian(4, &mut rng(9));
        let p = Pencil::new(&a).unwrap();
        let e = &linalg::eigen(&a).unwrap().pairs[0];
        let (h, s4) = p.section_residual(&pp(&e.vector));
        assert!(h.norm() < 1e-12);
        assert!(s4 > SECTION_TOL);
    }

    #[test]
    fn random_section_zeros_are_certified() {
        let a = gaussian(4, &mut rng(10));
        let p = Pencil::new(&a).unwrap();
        let zeros = p.section_zeros(&SweepOptions::default()).unwrap();
        assert!((1..=12).contains(&zeros.len()));
        for z in &zeros {
            assert!(z.accepted);
            assert!(z.sigma4 <= SECTION_TOL);
            assert!(p.curve_c_residual(&z.point.v) < 1e-8);
            let m = p.pencil_matrix(z.point.t.coords());
            assert!(linalg::norm(&m.mul_vec(z.point.v.coords())) < 1e-9 * m.norm_fro());
            let (w2, w3) = p.w_dimension_margins(&z.point.v);
            assert!(w2 > 1e-6 && w3 < 1e-8);
        }
        for i in 0..zeros.len() {
            for j in i + 1..zeros.len() {
                assert!(zeros[i].point.v.distance(&zeros[j].point.v) >= DEDUP_TOL);
            }
        }
    }

    #[test]
    fn tridiagonal_zeros_include_e1() {
        let a = tridiagonal(4, &mut rng(11));
        let p = Pencil::new(&a).unwrap();
        let zeros = p.section_zeros(&SweepOptions::exhaustive()).unwrap();
        let e1 = pp(&unit_vector(4, 0));
        assert!(zeros.iter().any(|z| z.point.v.distance(&e1) < 1e-6));
    }

    #[test]
    fn hyperplane_meets_c_in_six_points() {
        let a = gaussian(4, &mut rng(12));
        let p = Pencil::new(&a).unwrap();
        let l: Vec<C64> = vec![c(0.3, -1.2), c(0.8, 0.1), c(-0.5, 0.4), c(1.1, 0.9)];
        let zeros = p.curve_zeros(&CurveFunction::Hyperplane(l.clone()), &SweepOptions::default()).unwrap();
        assert_eq!(zeros.len(), 6);
        for z in &zeros {
            let x = z.point.v.coords();
            let lv: C64 = l.iter().zip(x).map(|(a, b)| a * b).sum();
            assert!(lv.norm() < 1e-10);
        }
    }

    #[test]
    fn base_points_are_deterministic_and_normalised() {
        let b1 = base_points(100, 10, 3);
        let b2 = base_points(100, 10, 3);
        assert_eq!(b1, b2);
        for b in &b1 {
            assert!((norm(b) - 1.0).abs() < 1e-14);
        }
    }
}
