//! Counting experiments: the degrees of `D` and `C` and the number of
//! section zeros, observed numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::{self, complex_normal};
use crate::genericity::{classify, common_eigenvectors};
use crate::linalg::{det, norm, CMatrix, ProjectivePoint, C64};
use crate::pencil::{CurveFunction, Pencil, SweepOptions};
use crate::poly::{self, Polynomial};

/// Expected values, for reports.
pub const EXPECTED_DEG_D: usize = 4;
pub const EXPECTED_DEG_C: usize = 6;
pub const MAX_SECTION_ZEROS: usize = 12;

/// A root of the restricted quartic is accepted when `|det P(t)|` is this
/// small relative to the fourth power of a bound on `||P(t)||_F`.
const DET_TOL: f64 = 1e-10;

/// Hyperplane zeros whose Newton Jacobian has reciprocal condition below
/// this are tangential and count twice.
const TANGENT_RCOND: f64 = 1e-8;

/// Fraction of trials that must agree for a count to be called stable.
const AGREEMENT: f64 = 0.8;

/// Per-trial counts and their mode.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeCount {
    pub observed: usize,
    pub counts: Vec<usize>,
    /// Fraction of trials equal to the mode.
    pub agreement: f64,
    pub stable: bool,
}

impl DegreeCount {
    fn from_counts(counts: Vec<usize>, need: f64) -> Self {
        let mut best = (0, 0);
        for &c in &counts {
            let k = counts.iter().filter(|&&x| x == c).count();
            if k > best.1 || (k == best.1 && c > best.0) {
                best = (c, k);
            }
        }
        let agreement = if counts.is_empty() {
            0.0
        } else {
            best.1 as f64 / counts.len() as f64
        };
        Self {
            observed: best.0,
            stable: agreement >= need,
            counts,
            agreement,
        }
    }

    /// The modal count, or [`Error::UnstableCount`] if trials disagree.
    pub fn require_stable(&self) -> Result<usize> {
        if self.stable {
            Ok(self.observed)
        } else {
            Err(Error::UnstableCount {
                counts: self.counts.clone(),
            })
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LineRoot {
    pub s: C64,
    pub multiplicity: usize,
    /// `|det P(t)| / (2 (|t0| + ||A||_F (|t1| + |t2|)))^4` at `t = p + s q`.
    pub det_residual: f64,
}

/// One line `t(s) = p + s q` in `P^2` and its intersection with `D`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LineTrial {
    pub p: Vec<C64>,
    pub q: Vec<C64>,
    pub roots: Vec<LineRoot>,
    /// Intersections at `s = infinity`, i.e. at `[q]`.
    pub at_infinity: usize,
    /// Verified intersections counted with multiplicity.
    pub count: usize,
}

/// Restricts `det(t0 I + t1 A + t2 A*)` to `t = p + s q` and counts the
/// verified roots with multiplicity, including those at infinity.
pub fn line_intersection(pencil: &Pencil, p: &[C64], q: &[C64]) -> Result<LineTrial> {
    let n = pencil.dim();
    let at = |s: C64| -> Vec<C64> { p.iter().zip(q).map(|(x, y)| x + s * y).collect() };
    // normalise by a bound on ||P(t)||_F, not by ||P(t)|| itself: for a
    // scalar matrix P(t) vanishes entirely on D
    let rel = |t: &[C64]| {
        let bound = (n as f64).sqrt() * (t[0].norm() + pencil.scale() * (t[1].norm() + t[2].norm()));
        let size = bound.powi(n as i32);
        if size == 0.0 {
            0.0
        } else {
            det(&pencil.pencil_matrix(t)).norm() / size
        }
    };
    // det is a polynomial of degree n in s: n + 1 samples on the unit
    // circle give its coefficients exactly
    let k = n + 1;
    let w = std::f64::consts::TAU / k as f64;
    let samples: Vec<C64> = (0..k).map(|j| pencil.det_form(&at(C64::from_polar(1.0, w * j as f64)))).collect();
    let coeffs: Vec<C64> = (0..k)
        .map(|m| {
            samples
                .iter()
                .enumerate()
                .map(|(j, f)| f * C64::from_polar(1.0 / k as f64, -w * (m * j) as f64))
                .sum()
        })
        .collect();
    let g = Polynomial::new(coeffs);
    let mut roots = Vec::new();
    if g.degree() > 0 {
        for r in poly::roots(&g)? {
            roots.push(LineRoot {
                s: r.value,
                multiplicity: r.multiplicity,
                det_residual: rel(&at(r.value)),
            });
        }
    }
    let at_infinity = if g.is_zero() { 0 } else { n - g.degree() };
    let inf_ok = at_infinity == 0 || rel(q) <= DET_TOL;
    let count = roots.iter().filter(|r| r.det_residual <= DET_TOL).map(|r| r.multiplicity).sum::<usize>()
        + if inf_ok { at_infinity } else { 0 };
    Ok(LineTrial {
        p: p.to_vec(),
        q: q.to_vec(),
        roots,
        at_infinity,
        count,
    })
}

/// Degree of `D` from `lines` random lines.
pub fn degree_of_d(pencil: &Pencil, lines: usize, seed: u64) -> Result<(DegreeCount, Vec<LineTrial>)> {
    let mut rng = generate::rng(seed);
    let mut trials = Vec::with_capacity(lines);
    for _ in 0..lines {
        let p: Vec<C64> = (0..3).map(|_| complex_normal(&mut rng)).collect();
        let q: Vec<C64> = (0..3).map(|_| complex_normal(&mut rng)).collect();
        // keep the two coordinate groups comparable in size
        let s = pencil.scale().max(f64::MIN_POSITIVE);
        let fix = |v: Vec<C64>| vec![v[0], v[1] / s, v[2] / s];
        trials.push(line_intersection(pencil, &fix(p), &fix(q))?);
    }
    let counts = trials.iter().map(|t| t.count).collect();
    Ok((DegreeCount::from_counts(counts, 1.0), trials))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperplanePoint {
    pub v: ProjectivePoint,
    pub residual: f64,
    pub jacobian_rcond: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperplaneTrial {
    pub hyperplane: Vec<C64>,
    pub points: Vec<HyperplanePoint>,
    pub count: usize,
}

/// Zeros of `l(v) = sum l_i v_i` on `C`, with tangential ones counted twice.
pub fn hyperplane_intersection(pencil: &Pencil, l: &[C64], opts: &SweepOptions) -> Result<HyperplaneTrial> {
    let zeros = pencil.curve_zeros(&CurveFunction::Hyperplane(l.to_vec()), opts)?;
    let points: Vec<HyperplanePoint> = zeros
        .into_iter()
        .map(|z| HyperplanePoint {
            multiplicity: if z.jacobian_rcond < TANGENT_RCOND { 2 } else { 1 },
            v: z.point.v,
            residual: z.residual,
            jacobian_rcond: z.jacobian_rcond,
        })
        .collect();
    Ok(HyperplaneTrial {
        hyperplane: l.to_vec(),
        count: points.iter().map(|p| p.multiplicity).sum(),
        points,
    })
}

/// A random hyperplane, optionally forced through `through`.
pub fn random_hyperplane(rng: &mut impl rand::Rng, through: Option<&[C64]>) -> Vec<C64> {
    let mut l: Vec<C64> = (0..4).map(|_| complex_normal(rng)).collect();
    if let Some(e) = through {
        let le: C64 = l.iter().zip(e).map(|(a, b)| a * b).sum();
        let ee = norm(e).powi(2);
        for (li, ei) in l.iter_mut().zip(e) {
            *li -= le / ee * ei.conj();
        }
    }
    l
}

/// Degree of `C` from `trials` random hyperplanes.
pub fn degree_of_c(pencil: &Pencil, trials: usize, seed: u64, opts: &SweepOptions) -> Result<(DegreeCount, Vec<HyperplaneTrial>)> {
    let mut rng = generate::rng(seed);
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let l = random_hyperplane(&mut rng, None);
        out.push(hyperplane_intersection(pencil, &l, opts)?);
    }
    let counts = out.iter().map(|t| t.count).collect();
    Ok((DegreeCount::from_counts(counts, AGREEMENT), out))
}

/// Number of certified section zeros under the exhaustive sweep.
pub fn section_zero_count(pencil: &Pencil, seed: u64) -> Result<usize> {
    let opts = SweepOptions {
        seed,
        ..SweepOptions::exhaustive()
    };
    match pencil.section_zeros(&opts) {
        Ok(z) => Ok(z.iter().filter(|c| c.accepted).count()),
        Err(Error::NoSectionZero { .. }) => Ok(0),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialDetail {
    pub trial: usize,
    pub line: LineTrial,
    pub hyperplane: HyperplaneTrial,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeReport {
    pub deg_d_observed: Option<usize>,
    pub deg_c_observed: Option<usize>,
    pub section_zero_count: Option<usize>,
    pub expected_deg_d: usize,
    pub expected_deg_c: usize,
    pub max_section_zeros: usize,
    pub deg_d: Option<DegreeCount>,
    pub deg_c: Option<DegreeCount>,
    pub trials: usize,
    pub per_trial_detail: Vec<TrialDetail>,
    /// Why the experiments did not run, if they did not.
    pub skipped: Option<String>,
}

#[derive(Clone, Debug)]
pub struct DegreeOptions {
    pub trials: usize,
    pub seed: u64,
    /// Run even when the matrix fails the genericity screen.
    pub force: bool,
    pub sweep: SweepOptions,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        Self {
            trials: 10,
            seed: 42,
            force: false,
            sweep: SweepOptions::default(),
        }
    }
}

/// Runs all three experiments on one 4 x 4 matrix.
pub fn run_experiments(a: &CMatrix, opts: &DegreeOptions) -> Result<DegreeReport> {
    if !a.is_square() || a.rows() != 4 {
        return Err(Error::InvalidInput("degree experiments need a 4 x 4 matrix".into()));
    }
    let mut report = DegreeReport {
        deg_d_observed: None,
        deg_c_observed: None,
        section_zero_count: None,
        expected_deg_d: EXPECTED_DEG_D,
        expected_deg_c: EXPECTED_DEG_C,
        max_section_zeros: MAX_SECTION_ZEROS,
        deg_d: None,
        deg_c: None,
        trials: opts.trials,
        per_trial_detail: Vec::new(),
        skipped: None,
    };
    if !opts.force {
        let common = common_eigenvectors(a)?;
        if !common.is_empty() {
            report.skipped = Some(format!(
                "A and A* share {} eigenvector(s); such matrices are handled by deflation",
                common.len()
            ));
            return Ok(report);
        }
        let g = classify(a)?;
        if !g.in_s() {
            report.skipped = Some(format!("matrix fails the genericity screen: {}", g.details));
            return Ok(report);
        }
    }
    let pencil = Pencil::new(a)?;
    let (dd, lines) = degree_of_d(&pencil, opts.trials, opts.seed)?;
    let sweep = SweepOptions {
        seed: opts.seed,
        ..opts.sweep.clone()
    };
    let (dc, planes) = degree_of_c(&pencil, opts.trials, opts.seed.wrapping_add(1), &sweep)?;
    report.section_zero_count = Some(section_zero_count(&pencil, opts.seed)?);
    report.deg_d_observed = Some(dd.observed);
    report.deg_c_observed = Some(dc.observed);
    report.per_trial_detail = lines
        .into_iter()
        .zip(planes)
        .enumerate()
        .map(|(trial, (line, hyperplane))| TrialDetail { trial, line, hyperplane })
        .collect();
    report.deg_d = Some(dd);
    report.deg_c = Some(dc);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gaussian, hermitian, rng};

    #[test]
    fn random_quartic_has_four_roots() {
        for seed in 0..5 {
            let p = Pencil::new(&gaussian(4, &mut rng(seed))).unwrap();
            let (d, trials) = degree_of_d(&p, 10, seed).unwrap();
            assert_eq!(d.observed, 4);
            assert!(d.stable);
            assert!(trials.iter().all(|t| t.count == 4 && t.at_infinity == 0));
        }
    }

    fn scalar(c: C64) -> CMatrix {
        let mut a = CMatrix::zeros(4, 4);
        for i in 0..4 {
            a[(i, i)] = c;
        }
        a
    }

    #[test]
    fn scalar_quartic_is_a_fourth_power() {
        let c = C64::new(1.0, 2.0);
        let p = Pencil::new(&scalar(c)).unwrap();
        let (d, trials) = degree_of_d(&p, 10, 3).unwrap();
        assert_eq!(d.observed, 4, "{:?}", trials[0]);
        assert!(d.stable);
        // det = (t0 + c t1 + conj(c) t2)^4: one fourfold point per line
        let l = |t: &[C64]| t[0] + c * t[1] + c.conj() * t[2];
        for t in &trials {
            assert_eq!(t.roots.len(), 1, "{:?}", t.roots);
            assert_eq!(t.roots[0].multiplicity, 4);
            let want = -l(&t.p) / l(&t.q);
            assert!((t.roots[0].s - want).norm() < 1e-8 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn jordan_block_meets_lines_four_times() {
        let p = Pencil::new(&crate::generate::jordan(4)).unwrap();
        // det = t0^4 - 3 t0^2 t1 t2 + t1^2 t2^2, not a pure power of t0
        let one = C64::new(1.0, 0.0);
        assert!((p.det_form(&[C64::new(0.0, 0.0), one, one]) - one).norm() < 1e-14);
        let (d, _) = degree_of_d(&p, 10, 4).unwrap();
        assert_eq!(d.counts, vec![4; 10]);
    }

    #[test]
    fn root_at_infinity_is_counted() {
        let c = C64::new(1.0, 2.0);
        let p = Pencil::new(&scalar(c)).unwrap();
        // q lies on D, so det(P(p + s q)) is constant in s
        let q1 = C64::new(1.0, 0.0);
        let q2 = C64::new(0.4, -0.3);
        let qt = [-(c * q1 + c.conj() * q2), q1, q2];
        let pt = [C64::new(1.0, 0.0), C64::new(0.3, 0.1), C64::new(-0.2, 0.5)];
        let t = line_intersection(&p, &pt, &qt).unwrap();
        assert_eq!(t.at_infinity, 4);
        assert_eq!(t.count, 4);
    }

    #[test]
    fn random_curve_has_degree_six() {
        let p = Pencil::new(&gaussian(4, &mut rng(8))).unwrap();
        let (d, _) = degree_of_c(&p, 5, 8, &SweepOptions::default()).unwrap();
        assert_eq!(d.observed, 6, "{:?}", d.counts);
    }

    #[test]
    fn hyperplane_through_an_eigenvector() {
        let a = gaussian(4, &mut rng(9));
        let p = Pencil::new(&a).unwrap();
        let e = crate::linalg::eigen(&a).unwrap().pairs[0].vector.clone();
        let l = random_hyperplane(&mut rng(1), Some(&e));
        let t = hyperplane_intersection(&p, &l, &SweepOptions::default()).unwrap();
        assert_eq!(t.count, 6);
        let ep = ProjectivePoint::new(e).unwrap();
        assert!(t.points.iter().any(|z| z.v.distance(&ep) < 1e-8));
    }

    #[test]
    fn section_zeros_at_most_twelve() {
        for seed in 0..3 {
            let p = Pencil::new(&gaussian(4, &mut rng(40 + seed))).unwrap();
            let k = section_zero_count(&p, 42).unwrap();
            assert!((1..=12).contains(&k), "{k}");
        }
    }

    #[test]
    fn modal_count_and_stability() {
        let d = DegreeCount::from_counts(vec![6, 6, 5, 6, 6], AGREEMENT);
        assert_eq!(d.observed, 6);
        assert!(d.stable);
        let d = DegreeCount::from_counts(vec![6, 5, 5, 6, 7], AGREEMENT);
        assert!(!d.stable);
        assert!(matches!(d.require_stable(), Err(Error::UnstableCount { .. })));
    }

    #[test]
    fn hermitian_is_skipped() {
        let r = run_experiments(&hermitian(4, &mut rng(2)), &DegreeOptions::default()).unwrap();
        assert!(r.skipped.is_some());
        assert!(r.deg_d_observed.is_none());
    }

    #[test]
    fn report_has_one_detail_per_trial() {
        let opts = DegreeOptions {
            trials: 3,
            ..Default::default()
        };
        let r = run_experiments(&gaussian(4, &mut rng(5)), &opts).unwrap();
        assert_eq!(r.per_trial_detail.len(), 3);
        assert_eq!(r.deg_d_observed, Some(4));
        assert_eq!(r.deg_c_observed, Some(6));
        assert!(r.section_zero_count.unwrap() <= 12);
    }
}
