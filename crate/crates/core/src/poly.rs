//! Univariate root finding, resultants of ternary forms, and damped Newton
//! for small holomorphic systems.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Coefficients below this fraction of the largest one are trimmed from the
/// top of a [`Polynomial`].
pub const TRIM_TOL: f64 = 1e-14;

/// Complex polynomial with ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    /// Builds a polynomial, trimming leading coefficients that are
    /// negligible relative to the largest one.
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = Self::raw(coeffs);
        let cmax = p.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while p.coeffs.len() > 1 && p.coeffs.last().unwrap().norm() <= TRIM_TOL * cmax {
            p.coeffs.pop();
        }
        p
    }

    /// Builds a polynomial, trimming only exactly-zero leading coefficients.
    pub fn raw(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == ZERO {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut c = vec![ONE];
        for &r in roots {
            let mut next = vec![ZERO; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            c = next;
        }
        Self::raw(c)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == ZERO)
    }

    pub fn leading(&self) -> C64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative by Horner's rule.
    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Sum of `|c_k| r^k`, the natural scale for rounding errors at `|z| = r`.
    pub fn abs_eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::raw(vec![ZERO]);
        }
        Self::raw(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Coefficients of `p(z + c)` (the Taylor coefficients of `p` at `c`).
    pub fn taylor_shift(&self, c: C64) -> Self {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let hi = a[j + 1];
                a[j] += c * hi;
            }
        }
        Self::raw(a)
    }

    /// Coefficients of `p(a z + b)`.
    pub fn compose_affine(&self, a: C64, b: C64) -> Self {
        let shifted = self.taylor_shift(b);
        let mut pow = ONE;
        let coeffs = shifted
            .coeffs
            .iter()
            .map(|&c| {
                let out = c * pow;
                pow *= a;
                out
            })
            .collect();
        Self::raw(coeffs)
    }
}

/// A root together with its estimated multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: C64,
    pub multiplicity: usize,
}

/// Flattens clustered roots into a list with repetitions.
pub fn expand(roots: &[Root]) -> Vec<C64> {
    roots
        .iter()
        .flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity))
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    pub max_iterations: usize,
    /// Roots closer than this (relative to `max(1, |z|)`) are always merged.
    pub cluster_tol: f64,
    /// Radius within which a group of roots is tested as a multiple root.
    pub multiple_root_radius: f64,
    /// Phase offset of the initial circles, in radians.
    pub phase: f64,
    /// Absolute error assumed for every coefficient of the monic polynomial
    /// when judging multiple roots. Useful when the coefficients come out of
    /// cancellation, as for characteristic polynomials.
    pub coefficient_floor: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cluster_tol: 1e-7,
            multiple_root_radius: 1e-3,
            phase: 0.4,
            coefficient_floor: 0.0,
        }
    }
}

/// All roots of `p` with multiplicity estimates.
pub fn roots(p: &Polynomial) -> Result<Vec<Root>> {
    roots_with(p, &RootOptions::default())
}

pub fn roots_with(p: &Polynomial, opts: &RootOptions) -> Result<Vec<Root>> {
    if p.degree() == 0 {
        return Err(Error::InvalidInput("root finding needs degree >= 1".into()));
    }
    let zeros_at_origin = p.coeffs.iter().take_while(|&&c| c == ZERO).count();
    let reduced = Polynomial::raw(p.coeffs[zeros_at_origin..].to_vec());
    let mut out = Vec::new();
    if zeros_at_origin > 0 {
        out.push(Root {
            value: ZERO,
            multiplicity: zeros_at_origin,
        });
    }
    if reduced.degree() == 0 {
        return Ok(out);
    }
    let lead = reduced.leading();
    let monic = Polynomial::raw(reduced.coeffs.iter().map(|c| c / lead).collect());
    let raw = aberth(&monic, opts)?;
    out.extend(cluster(&monic, raw, opts));
    Ok(out)
}

/// Initial approximations on circles given by the upper convex hull of the
/// points `(k, log|c_k|)` (the Newton polygon).
fn initial_guesses(p: &Polynomial, phase: f64) -> Vec<C64> {
    let d = p.degree();
    let pts: Vec<(usize, f64)> = p
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k, c.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            let cross = (x2 as f64 - x1 as f64) * (pt.1 - y1) - (y2 - y1) * (pt.0 as f64 - x1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut guesses = Vec::with_capacity(d);
    for w in hull.windows(2) {
        let (k0, y0) = w[0];
        let (k1, y1) = w[1];
        let m = k1 - k0;
        let radius = ((y0 - y1) / m as f64).exp();
        for j in 0..m {
            let angle = 2.0 * PI * j as f64 / m as f64 + 2.0 * PI * k0 as f64 / d as f64 + phase;
            guesses.push(C64::from_polar(radius, angle));
        }
    }
    guesses
}

/// Aberth-Ehrlich iteration (Gauss-Seidel updates) on a monic polynomial
/// with nonzero constant term. A root is frozen once its backward error is
/// at rounding level or its correction stagnates.
fn aberth(p: &Polynomial, opts: &RootOptions) -> Result<Vec<C64>> {
    let d = p.degree();
    let eps = f64::EPSILON;
    let mut z = initial_guesses(p, opts.phase);
    let mut done = vec![false; d];
    let bound = |zi: C64| 4.0 * d as f64 * eps * p.abs_eval(zi.norm());
    for _ in 0..opts.max_iterations {
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (pv, dpv) = p.eval_with_derivative(z[i]);
            if pv.norm() <= bound(z[i]) {
                done[i] = true;
                continue;
            }
            let ratio = pv / dpv;
            let mut sum = ZERO;
            for j in 0..d {
                if j != i {
                    sum += 1.0 / (z[i] - z[j]);
                }
            }
            let w = ratio / (ONE - ratio * sum);
            if !(w.re.is_finite() && w.im.is_finite()) {
                let kick = C64::new(1e-8, 1e-8) * (1.0 + z[i].norm());
                z[i] += kick;
                continue;
            }
            z[i] -= w;
            if w.norm() <= eps * z[i].norm() {
                done[i] = true;
            }
        }
        if done.iter().all(|&x| x) {
            return Ok(z);
        }
    }
    let lax = z
        .iter()
        .all(|&zi| p.eval(zi).norm() <= 1e3 * bound(zi));
    if lax {
        Ok(z)
    } else {
        Err(Error::ConvergenceFailure {
            what: "Aberth-Ehrlich root finding",
            iterations: opts.max_iterations,
        })
    }
}

/// Groups computed roots. Nearby roots whose centroid annihilates the
/// lower Taylor coefficients to rounding level form a multiple root;
/// otherwise only roots within `cluster_tol` are merged.
fn cluster(p: &Polynomial, z: Vec<C64>, opts: &RootOptions) -> Vec<Root> {
    let groups = link(&z, opts.multiple_root_radius);
    let mut out = Vec::new();
    for g in groups {
        let members: Vec<C64> = g.iter().map(|&i| z[i]).collect();
        if members.len() > 1 && is_multiple_root(p, &members, opts.coefficient_floor) {
            out.push(Root {
                value: polish_multiple(p, centroid(&members), members.len()),
                multiplicity: members.len(),
            });
            continue;
        }
        for sub in link(&members, opts.cluster_tol) {
            let pts: Vec<C64> = sub.iter().map(|&i| members[i]).collect();
            out.push(Root {
                value: centroid(&pts),
                multiplicity: pts.len(),
            });
        }
    }
    out
}

/// An m-fold root is a simple root of the (m-1)-th derivative.
fn polish_multiple(p: &Polynomial, start: C64, m: usize) -> C64 {
    let mut q = p.clone();
    for _ in 1..m {
        q = q.derivative();
    }
    let mut z = start;
    for _ in 0..8 {
        let (f, df) = q.eval_with_derivative(z);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        z -= step;
        if step.norm() <= f64::EPSILON * (1.0 + z.norm()) {
            break;
        }
    }
    if (z - start).norm() <= 1e-2 * (1.0 + start.norm()) { z } else { start }
}

fn centroid(z: &[C64]) -> C64 {
    z.iter().sum::<C64>() / z.len() as f64
}

/// Single-linkage groups with threshold `tol * max(1, |z_i|, |z_j|)`.
fn link(z: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = z.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1f64.max(z[i].norm()).max(z[j].norm());
            if (z[i] - z[j]).norm() <= tol * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut label: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match label[r] {
            Some(g) => groups[g].push(i),
            None => {
                label[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

fn is_multiple_root(p: &Polynomial, members: &[C64], floor: f64) -> bool {
    let m = members.len();
    let c = centroid(members);
    let taylor = p.taylor_shift(c);
    let r = c.norm();
    let d = p.degree();
    let am = match taylor.coeffs.get(m) {
        Some(a) if a.norm() > 0.0 => a.norm(),
        _ => return false,
    };
    // rounding level of p near c, and the spread it induces on an m-fold root
    let noise: f64 = (0..=d)
        .map(|k| (p.coeffs[k].norm() * 8.0 * d as f64 * f64::EPSILON).max(floor) * r.powi(k as i32))
        .sum();
    let expected = (noise / am).powf(1.0 / m as f64);
    let spread = members.iter().map(|z| (z - c).norm()).fold(0.0, f64::max);
    spread <= 100.0 * expected.max(f64::EPSILON * (1.0 + r))
}

// ---------------------------------------------------------------------------
// Ternary forms and resultants

/// A homogeneous polynomial of fixed degree in `(t0, t1, t2)`.
///
/// Coefficients are indexed by exponent triples `(a, b, c)` with
/// `a + b + c = degree`, in the order produced by [`TernaryForm::monomials`].
#[derive(Clone, Debug, PartialEq)]
pub struct TernaryForm {
    degree: usize,
    coeffs: Vec<C64>,
}

/// The cubic forms used for pencil minors.
pub type BivariateCubic = TernaryForm;

impl TernaryForm {
    pub fn monomials(degree: usize) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for a in (0..=degree).rev() {
            for b in (0..=degree - a).rev() {
                out.push([a, b, degree - a - b]);
            }
        }
        out
    }

    pub fn from_coeffs(degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != (degree + 1) * (degree + 2) / 2 {
            return Err(Error::InvalidInput(format!(
                "a ternary form of degree {degree} has {} coefficients",
                (degree + 1) * (degree + 2) / 2
            )));
        }
        Ok(Self { degree, coeffs })
    }

    /// The single monomial `t0^a t1^b t2^c`.
    pub fn monomial(exps: [usize; 3]) -> Self {
        let degree = exps.iter().sum();
        let coeffs = Self::monomials(degree)
            .iter()
            .map(|m| if *m == exps { ONE } else { ZERO })
            .collect();
        Self { degree, coeffs }
    }

    /// Recovers a form of the given degree from an evaluation oracle by a
    /// two-dimensional discrete Fourier transform on the chart `t2 = 1`;
    /// exact up to rounding for forms of at most that degree. Coefficients
    /// below `1e-13` of the largest are set to zero.
    pub fn fit(degree: usize, f: impl Fn([C64; 3]) -> C64) -> Self {
        let n = degree + 1;
        let w = |k: usize| C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
        let mut samples = vec![ZERO; n * n];
        for j in 0..n {
            for k in 0..n {
                samples[j * n + k] = f([w(j), w(k), ONE]);
            }
        }
        let coeff = |a: usize, b: usize| -> C64 {
            let mut s = ZERO;
            for j in 0..n {
                for k in 0..n {
                    s += samples[j * n + k] * w((j * a + k * b) % n).conj();
                }
            }
            s / (n * n) as f64
        };
        let mut coeffs: Vec<C64> = Self::monomials(degree)
            .iter()
            .map(|&[a, b, _]| coeff(a, b))
            .collect();
        let cmax = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for c in coeffs.iter_mut() {
            if c.norm() <= 1e-13 * cmax {
                *c = ZERO;
            }
        }
        Self { degree, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, exps: [usize; 3]) -> C64 {
        Self::monomials(self.degree)
            .iter()
            .position(|m| *m == exps)
            .map_or(ZERO, |i| self.coeffs[i])
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == ZERO)
    }

    pub fn eval(&self, t: [C64; 3]) -> C64 {
        Self::monomials(self.degree)
            .iter()
            .zip(&self.coeffs)
            .map(|(&[a, b, c], &k)| k * t[0].powu(a as u32) * t[1].powu(b as u32) * t[2].powu(c as u32))
            .sum()
    }

    /// Sets variable `chart` to one and returns, for each power of variable
    /// `eliminate`, the coefficient polynomial in the remaining variable.
    pub fn dehomogenize(&self, chart: usize, eliminate: usize) -> Vec<Polynomial> {
        assert!(chart < 3 && eliminate < 3 && chart != eliminate);
        let remaining = 3 - chart - eliminate;
        let mut table = vec![vec![ZERO; self.degree + 1]; self.degree + 1];
        for (m, &c) in Self::monomials(self.degree).iter().zip(&self.coeffs) {
            table[m[eliminate]][m[remaining]] += c;
        }
        table.into_iter().map(Polynomial::raw).collect()
    }
}

/// Degree of the form in the eliminated variable, ignoring coefficient
/// polynomials that are negligible relative to the form.
fn degree_in(parts: &[Polynomial], scale: f64) -> usize {
    parts
        .iter()
        .rposition(|q| q.coeffs().iter().any(|c| c.norm() > 1e-13 * scale))
        .unwrap_or(0)
}

/// Sylvester resultant of two ternary forms with respect to variable
/// `eliminate`, on the affine chart where variable `chart` equals one.
///
/// The result is a polynomial in the remaining variable that vanishes
/// wherever the two forms share a root in the eliminated variable. It is
/// recovered from numeric Sylvester determinants at `deg p * deg q + 1`
/// points on the unit circle.
pub fn resultant(p: &TernaryForm, q: &TernaryForm, chart: usize, eliminate: usize) -> Result<Polynomial> {
    if p.is_zero() || q.is_zero() {
        return Err(Error::InvalidInput("resultant of a zero form".into()));
    }
    let pp = p.dehomogenize(chart, eliminate);
    let qq = q.dehomogenize(chart, eliminate);
    let dp = degree_in(&pp, p.norm());
    let dq = degree_in(&qq, q.norm());
    let n = p.degree * q.degree + 1;
    let size = dp + dq;
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let y = C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
        let a: Vec<C64> = pp[..=dp].iter().map(|c| c.eval(y)).collect();
        let b: Vec<C64> = qq[..=dq].iter().map(|c| c.eval(y)).collect();
        values.push(if size == 0 { ONE } else { linalg::det(&sylvester(&a, &b)) });
    }
    let coeffs: Vec<C64> = (0..n)
        .map(|j| {
            values
                .iter()
                .enumerate()
                .map(|(k, v)| v * C64::from_polar(1.0, -2.0 * PI * ((j * k) % n) as f64 / n as f64))
                .sum::<C64>()
                / n as f64
        })
        .collect();
    let scale = p.norm().powi(dq as i32) * q.norm().powi(dp as i32);
    let cmax = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if cmax <= 1e-10 * scale {
        return Err(Error::DegenerateResultant);
    }
    let chopped = coeffs
        .into_iter()
        .map(|c| if c.norm() <= 1e-13 * cmax { ZERO } else { c })
        .collect();
    Ok(Polynomial::raw(chopped))
}

/// Sylvester matrix of two univariate polynomials given by ascending
/// coefficients.
fn sylvester(a: &[C64], b: &[C64]) -> CMatrix {
    let da = a.len() - 1;
    let db = b.len() - 1;
    let size = da + db;
    let mut s = CMatrix::zeros(size, size);
    for r in 0..db {
        for (k, &c) in a.iter().rev().enumerate() {
            s[(r, r + k)] = c;
        }
    }
    for r in 0..da {
        for (k, &c) in b.iter().rev().enumerate() {
            s[(db + r, r + k)] = c;
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Newton

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Success threshold on the Euclidean norm of the residual.
    pub tol: f64,
    pub max_steps: usize,
    /// Backtracking line search on `||f||^2`.
    pub damping: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_steps: 40,
            damping: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub point: Vec<C64>,
    pub residual: f64,
    pub steps: usize,
}

/// Damped Newton for a square holomorphic system `f: C^n -> C^n` given with
/// its Jacobian. Iterates until the residual stops decreasing and succeeds
/// if it ends at or below `opts.tol`.
pub fn newton_system<F>(f: F, start: &[C64], opts: &NewtonOptions) -> Result<NewtonOutcome>
where
    F: Fn(&[C64]) -> (Vec<C64>, CMatrix),
{
    let mut x = start.to_vec();
    let (mut fx, mut jac) = f(&x);
    let mut res = linalg::norm(&fx);
    let mut steps = 0;
    while steps < opts.max_steps {
        if !res.is_finite() {
            break;
        }
        let rhs: Vec<C64> = fx.iter().map(|v| -v).collect();
        let dx = match linalg::solve(&jac, &rhs) {
            Ok(dx) => dx,
            Err(_) if res <= opts.tol => break,
            Err(_) => return Err(Error::SingularJacobian),
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..if opts.damping { 8 } else { 1 } {
            let trial: Vec<C64> = x.iter().zip(&dx).map(|(a, b)| a + b * lambda).collect();
            let (ft, jt) = f(&trial);
            let rt = linalg::norm(&ft);
            if rt.is_finite() && (rt < res || !opts.damping) {
                accepted = Some((trial, ft, jt, rt));
                break;
            }
            lambda *= 0.5;
        }
        let Some((xt, ft, jt, rt)) = accepted else {
            break;
        };
        steps += 1;
        let step = linalg::norm(&dx) * lambda;
        let progress = rt < 0.9 * res;
        x = xt;
        fx = ft;
        jac = jt;
        res = rt;
        if res <= opts.tol && (!progress || step <= 1e-15 * linalg::norm(&x)) {
            break;
        }
    }
    if res <= opts.tol {
        Ok(NewtonOutcome {
            point: x,
            residual: res,
            steps,
        })
    } else {
        Err(Error::ConvergenceFailure {
            what: "Newton iteration",
            iterations: steps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_root_set(got: &[C64], want: &[C64], tol: f64) {
        assert_eq!(got.len(), want.len());
        let mut used = vec![false; want.len()];
        for g in got {
            let (k, d) = want
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, w)| (k, (g - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d < tol, "root {g} off by {d}");
            used[k] = true;
        }
    }

    #[test]
    fn quadratic_roots() {
        let r = roots(&Polynomial::from_real(&[1.0, 0.0, 1.0])).unwrap();
        assert_root_set(&expand(&r), &[c(0.0, 1.0), c(0.0, -1.0)], 1e-14);
        assert!(r.iter().all(|r| r.multiplicity == 1));
    }

    #[test]
    fn triple_root_is_clustered() {
        let p = Polynomial::from_roots(&[ONE, ONE, ONE]);
        let r = roots(&p).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 3);
        assert!((r[0].value - ONE).norm() < 1e-12);
    }

    #[test]
    fn path_graph_charpoly_roots() {
        // z^4 - 3 z^2 + 1 has roots 2 cos(k pi / 5).
        let r = roots(&Polynomial::from_real(&[1.0, 0.0, -3.0, 0.0, 1.0])).unwrap();
        let want: Vec<C64> = (1..=4).map(|k| c(2.0 * (k as f64 * PI / 5.0).cos(), 0.0)).collect();
        assert_root_set(&expand(&r), &want, 1e-13);
    }

    #[test]
    fn widely_scaled_degree_twelve() {
        let want: Vec<C64> = (0..12)
            .map(|k| C64::from_polar(10f64.powi(k - 6) * 1.3, k as f64 * 0.7))
            .collect();
        let p = Polynomial::from_roots(&want);
        let got = expand(&roots(&p).unwrap());
        for w in &want {
            let best = got.iter().map(|g| (g - w).norm() / w.norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "{w}: {best}");
        }
    }

    #[test]
    fn zero_roots_are_stripped() {
        let r = roots(&Polynomial::raw(vec![ZERO, ZERO, c(-2.0, 0.0), ONE])).unwrap();
        let z = r.iter().find(|r| r.value == ZERO).unwrap();
        assert_eq!(z.multiplicity, 2);
        assert_root_set(&expand(&r), &[ZERO, ZERO, c(2.0, 0.0)], 1e-14);
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(roots(&Polynomial::from_real(&[3.0])).is_err());
    }

    #[test]
    fn fit_recovers_form() {
        let f = TernaryForm::from_coeffs(
            3,
            (0..10).map(|k| c(k as f64 - 3.5, (k * k) as f64 * 0.1)).collect(),
        )
        .unwrap();
        let g = TernaryForm::fit(3, |t| f.eval(t));
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn monomial_resultant() {
        // Res_{t0}(t0^3, t1^3) on t2 = 1 is t1^9.
        let p = TernaryForm::monomial([3, 0, 0]);
        let q = TernaryForm::monomial([0, 3, 0]);
        let r = resultant(&p, &q, 2, 0).unwrap();
        assert_eq!(r.degree(), 9);
        assert!((r.leading().norm() - 1.0).abs() < 1e-12);
        assert!(r.coeffs()[..9].iter().all(|c| c.norm() < 1e-12));
        let zs = roots(&r).unwrap();
        assert_eq!(zs.len(), 1);
        assert_eq!(zs[0].multiplicity, 9);
    }

    #[test]
    fn equal_forms_are_degenerate() {
        let p = TernaryForm::from_coeffs(3, (0..10).map(|k| c(1.0 + k as f64, -0.5)).collect()).unwrap();
        assert_eq!(resultant(&p, &p, 2, 0), Err(Error::DegenerateResultant));
    }

    #[test]
    fn newton_linear_system() {
        let f = |x: &[C64]| (vec![x[0] - 1.0, x[1] - 2.0], CMatrix::identity(2));
        let out = newton_system(f, &[ZERO, ZERO], &NewtonOptions::default()).unwrap();
        assert!((out.point[0] - 1.0).norm() < 1e-14 && (out.point[1] - 2.0).norm() < 1e-14);
    }

    #[test]
    fn newton_nonlinear_system() {
        let f = |x: &[C64]| {
            let jac = CMatrix::from_row_slice(2, 2, &[x[0] * 2.0, ZERO, -ONE, ONE]);
            (vec![x[0] * x[0] - 1.0, x[1] - x[0]], jac)
        };
        let out = newton_system(f, &[c(0.9, 0.0), ZERO], &NewtonOptions::default()).unwrap();
        assert!((out.point[0] - 1.0).norm() < 1e-13 && (out.point[1] - 1.0).norm() < 1e-13);
        assert!(out.residual <= 1e-12);
    }

    #[test]
    fn newton_reports_singular_jacobian() {
        let f = |x: &[C64]| (vec![x[0] * x[0] + 1.0], CMatrix::from_row_slice(1, 1, &[x[0] * 2.0]));
        assert_eq!(
            newton_system(f, &[ZERO], &NewtonOptions::default()).unwrap_err(),
            Error::SingularJacobian
        );
    }
}
