//! Unitary tridiagonalisation for `n <= 4`.
//!
//! The 4 x 4 path finds a point `v` of the curve `C` where the section
//! vanishes, grows the flag `Cv ⊂ W(v) ⊂ W(v) + A W(v)` from it and reads the
//! unitary off the flag. Matrices with a common eigenvector of `A` and `A*`
//! are deflated to 3 x 3, where zeros of `det(v, Av, A*v)` on a line suffice.
//! Degenerate inputs are perturbed, solved, and the answer is polished back
//! onto the original matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate;
use crate::genericity::common_eigenvectors;
use crate::linalg::{self, charpoly, complete_basis, det, dot, norm, project_out, scaled, solve, CMatrix, ProjectivePoint, C64};
use crate::pencil::{Pencil, SectionCandidate, SweepOptions};
use crate::poly::{self, Polynomial};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative sizes of the perturbations tried by [`perturb_and_retry`].
pub const PERTURBATION_LADDER: [f64; 3] = [1e-4, 1e-6, 1e-8];

/// Residuals up to this size are handed to the unitary polish instead of
/// being rejected outright.
const REFINE_WINDOW: f64 = 1e-2;

/// Post-projection residual below which a candidate flag vector is
/// considered to lie in the current span.
const SPAN_TOL: f64 = 1e-12;

const LINE_ATTEMPTS: usize = 16;

/// Uncertified section minima handed to the unitary polish.
const NEAR_CANDIDATES: usize = 24;

/// Starting perturbations and step ratio for the continuation fallback.
const CONTINUATION_STARTS: [f64; 2] = [1e-1, 3e-1];
const CONTINUATION_STEP: f64 = 0.3;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug)]
pub struct TridiagOptions {
    /// Required bound on `max |T_ij|, |i - j| >= 2`, relative to `||A||_F`.
    pub tol: f64,
    pub seed: u64,
    pub sweep_samples: usize,
    pub max_restarts: usize,
    /// Skip the direct paths and go straight to the perturbation ladder.
    pub force_perturbation: bool,
    /// Collect a flag for every certified section zero.
    pub all_flags: bool,
}

impl Default for TridiagOptions {
    fn default() -> Self {
        let sweep = SweepOptions::default();
        Self {
            tol: DEFAULT_TOL,
            seed: sweep.seed,
            sweep_samples: sweep.samples,
            max_restarts: sweep.restarts,
            force_perturbation: false,
            all_flags: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SectionZero,
    ShortcutDimW3,
    CommonEigenvectorDeflation,
    CubicCurve3x3,
    Trivial,
    Perturbed,
}

/// Orthonormal vectors `f_1, .., f_n`; the prefix spans form the flag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Flag {
    pub basis: Vec<Vec<C64>>,
    pub provenance: Provenance,
}

impl Flag {
    /// The flag whose unitary is `u`, i.e. `f_i = U* e_i`.
    pub fn from_unitary(u: &CMatrix, provenance: Provenance) -> Self {
        let basis = (0..u.rows()).map(|i| u.row(i).iter().map(|z| z.conj()).collect()).collect();
        Self { basis, provenance }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TridiagResult {
    pub u: CMatrix,
    pub t: CMatrix,
    pub off_residual: f64,
    pub unitarity_residual: f64,
    pub provenance: Provenance,
    /// Relative size of the perturbation that led to the answer, or 0.
    pub perturbation_used: f64,
    pub seed: u64,
    pub flag: Flag,
    /// `sigma4` of the section zero the flag was grown from.
    pub section_sigma4: Option<f64>,
    /// Whether the unitary polish was needed to reach the tolerance.
    pub refined: bool,
    /// Every flag found when [`TridiagOptions::all_flags`] is set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub all_flags: Vec<Flag>,
}

/// `max |T_ij|` over `|i - j| >= 2`, divided by `scale`.
pub fn off_residual(t: &CMatrix, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        t.off_tridiagonal_max() / scale
    }
}

/// `||U U* - I||_F`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    (&u.matmul(&u.adjoint()) - &CMatrix::identity(u.rows())).norm_fro()
}

/// The unitary with rows `f_i*`, so that `U* e_i = f_i`.
pub fn flag_to_unitary(flag: &Flag) -> CMatrix {
    let n = flag.dim();
    CMatrix::from_fn(n, n, |i, j| flag.basis[i][j].conj())
}

fn conjugate(u: &CMatrix, a: &CMatrix) -> CMatrix {
    u.matmul(a).matmul(&u.adjoint())
}

fn assemble(a: &CMatrix, u: CMatrix, provenance: Provenance, seed: u64) -> TridiagResult {
    let t = conjugate(&u, a);
    TridiagResult {
        off_residual: off_residual(&t, a.norm_fro()),
        unitarity_residual: unitarity_residual(&u),
        flag: Flag::from_unitary(&u, provenance),
        u,
        t,
        provenance,
        perturbation_used: 0.0,
        seed,
        section_sigma4: None,
        refined: false,
        all_flags: Vec::new(),
    }
}

/// How well a flag satisfies the two containment characterisations.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FlagResiduals {
    /// `A W_i ⊂ W_{i+1}` and `A* W_i ⊂ W_{i+1}`.
    pub forward: f64,
    /// `A (W_{i+1})^⊥ ⊂ W_i^⊥`.
    pub complement: f64,
    /// `max |<f_i, f_j> - δ_ij|`.
    pub orthonormality: f64,
}

/// Containment residuals of `flag` for `a`, relative to `||A||_F`. Each
/// is the largest norm of the component that should vanish, taken over
/// unit vectors of the relevant subspace.
pub fn flag_residuals(a: &CMatrix, flag: &Flag) -> FlagResiduals {
    let n = flag.dim();
    let scale = a.norm_fro().max(f64::MIN_POSITIVE);
    let astar = a.adjoint();
    let f = &flag.basis;
    let mut forward: f64 = 0.0;
    let mut complement: f64 = 0.0;
    for i in 1..n.saturating_sub(1) {
        let next = &f[..=i];
        for fj in &f[..i] {
            for m in [a, &astar] {
                forward = forward.max(norm(&project_out(&m.mul_vec(fj), next)) / scale);
            }
        }
        let head = &f[..i];
        for x in &f[i + 1..] {
            let ax = a.mul_vec(x);
            let p: f64 = head.iter().map(|q| dot(q, &ax).norm_sqr()).sum();
            complement = complement.max(p.sqrt() / scale);
        }
    }
    let mut orthonormality: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { ONE } else { ZERO };
            orthonormality = orthonormality.max((dot(&f[i], &f[j]) - want).norm());
        }
    }
    FlagResiduals {
        forward,
        complement,
        orthonormality,
    }
}

fn validate(a: &CMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!("matrix is {} x {}, not square", a.rows(), a.cols())));
    }
    if a.rows() == 0 || a.rows() > 4 {
        return Err(Error::InvalidInput(format!("size {} is outside 1..=4", a.rows())));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Finds a unitary `U` with `U A U*` tridiagonal up to `opts.tol`.
pub fn tridiagonalize(a: &CMatrix, opts: &TridiagOptions) -> Result<TridiagResult> {
    validate(a)?;
    if opts.force_perturbation {
        return perturb_and_retry(a, opts);
    }
    match direct(a, opts) {
        Ok(r) => Ok(r),
        Err(Error::InvalidInput(m)) => Err(Error::InvalidInput(m)),
        Err(_) => perturb_and_retry(a, opts),
    }
}

/// Every path except the perturbation fallback.
fn direct(a: &CMatrix, opts: &TridiagOptions) -> Result<TridiagResult> {
    let n = a.rows();
    if n <= 2 || off_residual(a, a.norm_fro()) <= opts.tol {
        return Ok(assemble(a, CMatrix::identity(n), Provenance::Trivial, opts.seed));
    }
    if n == 3 {
        return tridiagonalize3(a, opts);
    }
    let mut last = None;
    for v in common_eigenvectors(a)? {
        match deflate_common_eigenvector(a, &v, opts) {
            Ok(r) if r.off_residual <= opts.tol => return Ok(r),
            Ok(r) => last = Some(Error::Unsolved(format!("deflation residual {:e}", r.off_residual))),
            Err(e) => last = Some(e),
        }
    }
    if let Some(e) = last {
        return Err(e);
    }
    let pencil = Pencil::new(a)?;
    let quick = SweepOptions {
        samples: opts.sweep_samples,
        restarts: opts.max_restarts,
        seed: opts.seed,
        stop_after: if opts.all_flags { None } else { Some(1) },
        ..SweepOptions::default()
    };
    let full = SweepOptions {
        stop_after: None,
        shortcut: false,
        ..quick.clone()
    };
    let passes = [quick, full.clone()];
    let mut tried: Vec<ProjectivePoint> = Vec::new();
    let mut found: Option<TridiagResult> = None;
    let mut flags = Vec::new();
    let mut error = Error::NoSectionZero { candidates: 0 };
    for sweep in passes {
        let candidates = match pencil.section_zeros(&sweep) {
            Ok(c) => c,
            Err(e) => {
                error = e;
                continue;
            }
        };
        for c in candidates {
            if tried.iter().any(|p| p.distance(&c.point.v) <= sweep.dedup_tol) {
                continue;
            }
            tried.push(c.point.v.clone());
            let Some(r) = result_from_candidate(&pencil, &c, opts) else {
                continue;
            };
            if opts.all_flags {
                flags.push(r.flag.clone());
            }
            if found.is_none() {
                found = Some(r);
            }
            if !opts.all_flags {
                break;
            }
        }
        if found.is_some() {
            break;
        }
    }
    if let Some(mut r) = found {
        r.all_flags = flags;
        return Ok(r);
    }
    // close to the non-generic set: no zero certifies, but flags from the
    // smallest values of the section are within reach of the unitary polish
    let near = SweepOptions {
        exhaustive: true,
        ..full
    };
    for c in pencil.near_section_zeros(&near, NEAR_CANDIDATES)? {
        let Ok(flag) = build_flag(a, &c) else { continue };
        let r = assemble(a, flag_to_unitary(&flag), flag.provenance, opts.seed);
        if r.off_residual > REFINE_WINDOW {
            continue;
        }
        if let Some(u) = refine_unitary(a, &r.u, opts.tol) {
            let mut r = assemble(a, u, flag.provenance, opts.seed);
            r.section_sigma4 = Some(c.sigma4);
            r.refined = true;
            return Ok(r);
        }
    }
    Err(error)
}

fn result_from_candidate(pencil: &Pencil, c: &SectionCandidate, opts: &TridiagOptions) -> Option<TridiagResult> {
    let a = pencil.matrix();
    let flag = build_flag(a, c).ok()?;
    let u = flag_to_unitary(&flag);
    let mut r = assemble(a, u, flag.provenance, opts.seed);
    r.section_sigma4 = Some(c.sigma4);
    if r.off_residual > opts.tol && r.off_residual <= REFINE_WINDOW {
        let u = refine_unitary(a, &r.u, opts.tol)?;
        let provenance = r.provenance;
        r = assemble(a, u, provenance, opts.seed);
        r.section_sigma4 = Some(c.sigma4);
        r.refined = true;
    }
    (r.off_residual <= opts.tol).then_some(r)
}

/// Grows the flag `Cv ⊂ W(v) ⊂ W(v) + A W(v) + A* W(v) ⊂ C^4` from a
/// certified section zero.
pub fn build_flag(a: &CMatrix, candidate: &SectionCandidate) -> Result<Flag> {
    let n = a.rows();
    let scale = a.norm_fro();
    if n != 4 || scale == 0.0 {
        return Err(Error::InvalidInput("flags are built for nonzero 4 x 4 matrices".into()));
    }
    let an = a.scale(C64::new(1.0 / scale, 0.0));
    let ans = an.adjoint();
    let v = unit(candidate.point.v.coords());
    let mut basis = vec![v.clone()];

    let second = [an.mul_vec(&v), ans.mul_vec(&v)];
    let f2 = best_extension(&second, &basis)
        .ok_or_else(|| Error::FlagDegenerate("v is a common eigenvector of A and A*".into()))?;
    basis.push(f2);

    let third: Vec<Vec<C64>> = [&an, &ans]
        .iter()
        .flat_map(|m| basis.iter().map(|f| m.mul_vec(f)).collect::<Vec<_>>())
        .collect();
    // none of them leaves W2: it is invariant under both, and any completion works
    if let Some(f3) = best_extension(&third, &basis) {
        basis.push(f3);
    }
    let basis = complete_basis(&basis, n);
    let provenance = if candidate.shortcut {
        Provenance::ShortcutDimW3
    } else {
        Provenance::SectionZero
    };
    Ok(Flag { basis, provenance })
}

/// The candidate with the largest component orthogonal to `basis`,
/// normalised, if that component is not negligible.
fn best_extension(candidates: &[Vec<C64>], basis: &[Vec<C64>]) -> Option<Vec<C64>> {
    let (r, nr) = candidates
        .iter()
        .map(|c| {
            let r = project_out(c, basis);
            let nr = norm(&r);
            (r, nr)
        })
        .max_by(|x, y| x.1.total_cmp(&y.1))?;
    (nr > SPAN_TOL).then(|| scaled(&r, C64::new(1.0 / nr, 0.0)))
}

fn unit(v: &[C64]) -> Vec<C64> {
    scaled(v, C64::new(1.0 / norm(v), 0.0))
}

/// 3 x 3 case: zeros of the cubic `F(v) = det(v, Av, A*v)` restricted to
/// random lines give points of `C`, each of which yields a flag.
pub fn tridiagonalize3(a: &CMatrix, opts: &TridiagOptions) -> Result<TridiagResult> {
    if a.rows() != 3 || !a.is_square() {
        return Err(Error::InvalidInput("tridiagonalize3 needs a 3 x 3 matrix".into()));
    }
    let scale = a.norm_fro();
    if scale == 0.0 {
        return Ok(assemble(a, CMatrix::identity(3), Provenance::Trivial, opts.seed));
    }
    let an = a.scale(C64::new(1.0 / scale, 0.0));
    let ans = an.adjoint();
    let f = |v: &[C64]| det(&CMatrix::from_columns(&[v.to_vec(), an.mul_vec(v), ans.mul_vec(v)]));
    let mut rng = generate::rng(opts.seed ^ 0x3333);
    let mut best: Option<TridiagResult> = None;
    for _ in 0..LINE_ATTEMPTS {
        let p: Vec<C64> = (0..3).map(|_| generate::complex_normal(&mut rng)).collect();
        let q: Vec<C64> = (0..3).map(|_| generate::complex_normal(&mut rng)).collect();
        let at = |s: C64| -> Vec<C64> { p.iter().zip(&q).map(|(x, y)| x + s * y).collect() };
        // F is cubic in s, so four samples on the unit circle determine it
        let samples: Vec<C64> = (0..4).map(|k| f(&at(C64::from_polar(1.0, k as f64 * std::f64::consts::FRAC_PI_2)))).collect();
        let coeffs: Vec<C64> = (0..4)
            .map(|j| {
                samples
                    .iter()
                    .enumerate()
                    .map(|(k, fk)| fk * C64::from_polar(0.25, -((j * k) as f64) * std::f64::consts::FRAC_PI_2))
                    .sum()
            })
            .collect();
        let size = (norm(&p) + norm(&q)).powi(3);
        let cmax = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut points = Vec::new();
        if cmax <= 1e-13 * size {
            // F vanishes on the whole line: every point lies on C
            points.push(p.clone());
        } else {
            let cubic = Polynomial::new(coeffs.clone());
            if cubic.degree() == 0 {
                continue;
            }
            if coeffs[3].norm() <= 1e-13 * cmax {
                points.push(q.clone());
            }
            match poly::roots(&cubic) {
                Ok(rs) => points.extend(rs.iter().map(|r| at(r.value))),
                Err(_) => continue,
            }
        }
        for v in points {
            for flag in flags3(&an, &ans, &v) {
                let r = assemble(a, flag_to_unitary(&flag), Provenance::CubicCurve3x3, opts.seed);
                if best.as_ref().is_none_or(|b| r.off_residual < b.off_residual) {
                    best = Some(r);
                }
            }
            if best.as_ref().is_some_and(|b| b.off_residual <= opts.tol) {
                return Ok(best.unwrap());
            }
        }
    }
    match best {
        Some(b) if b.off_residual <= REFINE_WINDOW => {
            let u = refine_unitary(a, &b.u, opts.tol)
                .ok_or_else(|| Error::Unsolved(format!("3 x 3 residual stuck at {:e}", b.off_residual)))?;
            let mut r = assemble(a, u, Provenance::CubicCurve3x3, opts.seed);
            r.refined = true;
            Ok(r)
        }
        Some(b) => Err(Error::Unsolved(format!("3 x 3 residual stuck at {:e}", b.off_residual))),
        None => Err(Error::Unsolved("no usable line in the 3 x 3 search".into())),
    }
}

/// Both case-2 flags (through `Av` and through `A*v`) and the case-1 flag.
fn flags3(an: &CMatrix, ans: &CMatrix, v: &[C64]) -> Vec<Flag> {
    let v = unit(v);
    let mut out = Vec::new();
    for m in [an, ans] {
        if let Some(f2) = best_extension(&[m.mul_vec(&v)], std::slice::from_ref(&v)) {
            out.push(Flag {
                basis: complete_basis(&[v.clone(), f2], 3),
                provenance: Provenance::CubicCurve3x3,
            });
        }
    }
    out.push(Flag {
        basis: complete_basis(std::slice::from_ref(&v), 3),
        provenance: Provenance::CubicCurve3x3,
    });
    out
}

/// Splits off a common eigenvector and solves the 3 x 3 compression on its
/// orthogonal complement.
pub fn deflate_common_eigenvector(a: &CMatrix, v: &ProjectivePoint, opts: &TridiagOptions) -> Result<TridiagResult> {
    if a.rows() != 4 || !a.is_square() || v.dim() != 4 {
        return Err(Error::InvalidInput("deflation needs a 4 x 4 matrix and a 4-vector".into()));
    }
    let scale = a.norm_fro();
    let x = v.coords().to_vec();
    let ax = a.mul_vec(&x);
    let asx = a.adjoint().mul_vec(&x);
    let bound = 1e-8 * scale.max(f64::MIN_POSITIVE);
    for w in [&ax, &asx] {
        let mu = dot(&x, w);
        let r: Vec<C64> = w.iter().zip(&x).map(|(wi, xi)| wi - mu * xi).collect();
        if norm(&r) > bound {
            return Err(Error::InvalidInput("vector is not a common eigenvector".into()));
        }
    }
    let q = CMatrix::from_columns(&complete_basis(&[x], 4));
    let b = q.adjoint().matmul(a).matmul(&q);
    let b3 = b.select(&[1, 2, 3], &[1, 2, 3]);
    let inner = if off_residual(&b3, b3.norm_fro()) <= opts.tol {
        CMatrix::identity(3)
    } else {
        tridiagonalize3(&b3, opts)?.u
    };
    let mut u1 = CMatrix::identity(4);
    for i in 0..3 {
        for j in 0..3 {
            u1[(i + 1, j + 1)] = inner[(i, j)];
        }
    }
    let mut r = assemble(a, u1.matmul(&q.adjoint()), Provenance::CommonEigenvectorDeflation, opts.seed);
    if r.off_residual > opts.tol && r.off_residual <= REFINE_WINDOW {
        if let Some(u) = refine_unitary(a, &r.u, opts.tol) {
            r = assemble(a, u, Provenance::CommonEigenvectorDeflation, opts.seed);
            r.refined = true;
        }
    }
    Ok(r)
}

/// Solves `A + ε ||A|| E` for a fixed random `E` on a ladder of ε and
/// carries the answer back to `A`: first by re-polishing the section zero
/// on the original pencil, then by polishing the unitary itself.
pub fn perturb_and_retry(a: &CMatrix, opts: &TridiagOptions) -> Result<TridiagResult> {
    validate(a)?;
    let n = a.rows();
    let scale = a.norm_fro();
    if n <= 2 || scale == 0.0 {
        return Ok(assemble(a, CMatrix::identity(n), Provenance::Trivial, opts.seed));
    }
    let mut rng = generate::rng(opts.seed.wrapping_add(0x5eed));
    let e = generate::gaussian(n, &mut rng);
    let e = e.scale(C64::new(1.0 / e.norm_fro(), 0.0));
    let inner = TridiagOptions {
        force_perturbation: false,
        all_flags: false,
        ..opts.clone()
    };
    let pencil = if n == 4 { Pencil::new(a).ok() } else { None };
    let mut log = Vec::new();
    for eps in PERTURBATION_LADDER {
        let ae = a + &e.scale(C64::new(eps * scale, 0.0));
        let solved = match direct(&ae, &inner) {
            Ok(r) => r,
            Err(err) => {
                log.push(format!("eps {eps:e}: {err}"));
                continue;
            }
        };
        let finish = |mut r: TridiagResult, refined: bool| {
            r.provenance = Provenance::Perturbed;
            r.flag.provenance = Provenance::Perturbed;
            r.perturbation_used = eps;
            r.refined = refined;
            r
        };
        if let Some(p) = &pencil {
            let v = ProjectivePoint::new(solved.flag.basis[0].clone())?;
            if let Some(c) = p.polish_section_zero(&v).filter(|c| c.accepted) {
                if let Some(r) = result_from_candidate(p, &c, &inner) {
                    let refined = r.refined;
                    return Ok(finish(r, refined));
                }
            }
        }
        let r = assemble(a, solved.u.clone(), Provenance::Perturbed, opts.seed);
        if r.off_residual <= opts.tol {
            return Ok(finish(r, false));
        }
        match refine_unitary(a, &solved.u, opts.tol) {
            Some(u) => return Ok(finish(assemble(a, u, Provenance::Perturbed, opts.seed), true)),
            None => log.push(format!("eps {eps:e}: polish stalled at {:e}", r.off_residual)),
        }
    }
    match continuation(a, &e, &inner) {
        Some((u, eps)) => {
            let mut r = assemble(a, u, Provenance::Perturbed, opts.seed);
            r.perturbation_used = eps;
            r.refined = true;
            Ok(r)
        }
        None => {
            log.push("continuation failed".into());
            Err(Error::Unsolved(log.join("; ")))
        }
    }
}

/// Solves `A + ε ||A|| E` for a large ε and tracks the unitary down to
/// `ε = 0` with [`refine_unitary`]. Returns the unitary and the starting ε.
fn continuation(a: &CMatrix, e: &CMatrix, opts: &TridiagOptions) -> Option<(CMatrix, f64)> {
    let scale = a.norm_fro();
    let at = |eps: f64| a + &e.scale(C64::new(eps * scale, 0.0));
    for start in CONTINUATION_STARTS {
        let Ok(r) = direct(&at(start), opts) else { continue };
        let mut u = r.u;
        let mut eps = start;
        let mut ok = true;
        while eps > 0.0 {
            eps = if eps < 1e-9 { 0.0 } else { eps * CONTINUATION_STEP };
            match refine_unitary(&at(eps), &u, opts.tol) {
                Some(next) => u = next,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some((u, start));
        }
    }
    None
}

/// Levenberg-Marquardt on `U -> cayley(X) U` over skew-Hermitian `X`,
/// driving the entries of `U A U*` outside the band to zero. Returns the
/// polished unitary once the residual is within `tol`.
pub fn refine_unitary(a: &CMatrix, u: &CMatrix, tol: f64) -> Option<CMatrix> {
    let n = a.rows();
    let scale = a.norm_fro();
    if scale == 0.0 {
        return Some(u.clone());
    }
    let an = a.scale(C64::new(1.0 / scale, 0.0));
    let band: Vec<(usize, usize)> = (0..n)
        .flat_map(|k| (0..n).map(move |l| (k, l)))
        .filter(|&(k, l)| k.abs_diff(l) >= 2)
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let generators: Vec<CMatrix> = pairs
        .iter()
        .flat_map(|&(i, j)| {
            let mut re = CMatrix::zeros(n, n);
            re[(i, j)] = ONE;
            re[(j, i)] = -ONE;
            let mut im = CMatrix::zeros(n, n);
            im[(i, j)] = C64::new(0.0, 1.0);
            im[(j, i)] = C64::new(0.0, 1.0);
            [re, im]
        })
        .collect();
    let residual = |t: &CMatrix| -> Vec<f64> { band.iter().flat_map(|&p| [t[p].re, t[p].im]).collect() };
    let max_abs = |t: &CMatrix| band.iter().map(|&p| t[p].norm()).fold(0.0, f64::max);

    let mut u = u.clone();
    let mut t = conjugate(&u, &an);
    let mut mu = 1e-6;
    for _ in 0..100 {
        if max_abs(&t) <= 0.1 * tol {
            break;
        }
        let r = residual(&t);
        let jac: Vec<Vec<f64>> = generators.iter().map(|x| residual(&(&x.matmul(&t) - &t.matmul(x)))).collect();
        let m = generators.len();
        let mut improved = false;
        for _ in 0..12 {
            let normal = CMatrix::from_fn(m, m, |p, q| {
                let s: f64 = jac[p].iter().zip(&jac[q]).map(|(x, y)| x * y).sum();
                C64::new(if p == q { s * (1.0 + mu) + mu } else { s }, 0.0)
            });
            let rhs: Vec<C64> = jac.iter().map(|c| C64::new(-c.iter().zip(&r).map(|(x, y)| x * y).sum::<f64>(), 0.0)).collect();
            let Ok(delta) = solve(&normal, &rhs) else {
                mu *= 10.0;
                continue;
            };
            let mut x = CMatrix::zeros(n, n);
            for (g, d) in generators.iter().zip(&delta) {
                x = &x + &g.scale(C64::new(d.re, 0.0));
            }
            let trial = cayley(&x).matmul(&u);
            let tt = conjugate(&trial, &an);
            if max_abs(&tt) < max_abs(&t) {
                u = trial;
                t = tt;
                mu = (mu * 0.1).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let u = reorthonormalize(&u)?;
    (max_abs(&conjugate(&u, &an)) <= tol).then_some(u)
}

/// `(I - X/2)^{-1} (I + X/2)`, unitary for skew-Hermitian `X`.
fn cayley(x: &CMatrix) -> CMatrix {
    let n = x.rows();
    let half = x.scale(C64::new(0.5, 0.0));
    let lhs = &CMatrix::identity(n) - &half;
    let rhs = &CMatrix::identity(n) + &half;
    let cols: Vec<Vec<C64>> = (0..n)
        .map(|j| solve(&lhs, &rhs.column(j)).unwrap_or_else(|_| linalg::unit_vector(n, j)))
        .collect();
    CMatrix::from_columns(&cols)
}

/// Gram-Schmidt on the rows, keeping their phases.
fn reorthonormalize(u: &CMatrix) -> Option<CMatrix> {
    let n = u.rows();
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(n);
    for i in 0..n {
        let r: Vec<C64> = u.row(i).iter().map(|z| z.conj()).collect();
        let r = project_out(&r, &rows);
        let nr = norm(&r);
        if nr < 0.5 {
            return None;
        }
        rows.push(scaled(&r, C64::new(1.0 / nr, 0.0)));
    }
    Some(CMatrix::from_fn(n, n, |i, j| rows[i][j].conj()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub off_residual: f64,
    pub unitarity_residual: f64,
    /// `||U A U* - T||_F / ||A||_F` against the stored `T`.
    pub similarity_residual: f64,
    /// Largest matched eigenvalue gap between `A` and `U A U*`, relative to `||A||_F`.
    pub spectrum_gap: f64,
    /// `matching[k]` is the index into `t_eigenvalues` paired with `a_eigenvalues[k]`.
    pub matching: Vec<usize>,
    pub a_eigenvalues: Vec<C64>,
    pub t_eigenvalues: Vec<C64>,
}

/// Recomputes every residual of `result` from scratch.
pub fn verify(result: &TridiagResult, a: &CMatrix) -> VerifyReport {
    let scale = a.norm_fro();
    let rel = |x: f64| if scale == 0.0 { x } else { x / scale };
    let t = conjugate(&result.u, a);
    let mut ea = spectrum(a);
    let et = spectrum(&t);
    ea.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let mut used = vec![false; et.len()];
    let mut matching = Vec::with_capacity(ea.len());
    let mut gap: f64 = 0.0;
    for x in &ea {
        let k = (0..et.len())
            .filter(|&k| !used[k])
            .min_by(|&i, &j| (et[i] - x).norm().total_cmp(&(et[j] - x).norm()));
        match k {
            Some(k) => {
                used[k] = true;
                gap = gap.max((et[k] - x).norm());
                matching.push(k);
            }
            None => gap = f64::INFINITY,
        }
    }
    VerifyReport {
        off_residual: off_residual(&t, scale),
        unitarity_residual: unitarity_residual(&result.u),
        similarity_residual: rel((&t - &result.t).norm_fro()),
        spectrum_gap: rel(gap),
        matching,
        a_eigenvalues: ea,
        t_eigenvalues: et,
    }
}

/// Eigenvalues with multiplicity from the clustered roots of the
/// characteristic polynomial.
fn spectrum(m: &CMatrix) -> Vec<C64> {
    let n = m.rows();
    let scale = m.norm_fro();
    if scale == 0.0 {
        return vec![ZERO; n];
    }
    // for the normalised matrix every coefficient is computed to roughly
    // absolute machine precision, however small it comes out
    let p = charpoly(&m.scale(C64::new(1.0 / scale, 0.0)));
    let opts = poly::RootOptions {
        coefficient_floor: 1e-15,
        ..Default::default()
    };
    match poly::roots_with(&p, &opts) {
        Ok(r) => poly::expand(&r).into_iter().map(|z| z * scale).collect(),
        Err(_) => vec![C64::new(f64::NAN, f64::NAN); n],
    }
}
