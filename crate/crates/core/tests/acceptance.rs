//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::time::Instant;

use rayon::prelude::*;

use tridiag_core::degree::{degree_of_c, degree_of_d, section_zero_count};
use tridiag_core::generate::{gaussian, hermitian, jordan, rng, tridiagonal, unitary};
use tridiag_core::genericity::classify;
use tridiag_core::linalg::{CMatrix, C64};
use tridiag_core::pencil::{Pencil, SweepOptions};
use tridiag_core::tridiag::{
    flag_residuals, off_residual, tridiagonalize, tridiagonalize3, unitarity_residual, verify, Flag, TridiagOptions,
    TridiagResult,
};

const OFF_TOL: f64 = 1e-8;
const UNITARY_TOL: f64 = 1e-10;
const FLAG_TOL: f64 = 1e-8;
const SIGMA4_TOL: f64 = 1e-8;
const SPECTRUM_TOL: f64 = 1e-8;
const MEDIAN_BUDGET_S: f64 = 1.0;

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: String) -> Outcome {
    Outcome { pass, summary }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn conj(v: &CMatrix, a: &CMatrix) -> CMatrix {
    v.matmul(a).matmul(&v.adjoint())
}

/// Independent check of a result against its input.
fn residuals(a: &CMatrix, r: &TridiagResult) -> (f64, f64) {
    let t = conj(&r.u, a);
    (off_residual(&t, a.norm_fro()), unitarity_residual(&r.u))
}

struct Run {
    ok: bool,
    off: f64,
    unit: f64,
    seconds: f64,
    flag: Option<(CMatrix, Flag)>,
    error: Option<String>,
}

fn run_batch(n: usize, count: u64, solve: impl Fn(&CMatrix, &TridiagOptions) -> tridiag_core::Result<TridiagResult> + Sync) -> Vec<Run> {
    (0..count)
        .into_par_iter()
        .map(|seed| {
            let a = gaussian(n, &mut rng(seed));
            let opts = TridiagOptions {
                seed,
                ..Default::default()
            };
            let start = Instant::now();
            let r = solve(&a, &opts);
            let seconds = start.elapsed().as_secs_f64();
            match r {
                Ok(r) => {
                    let (off, unit) = residuals(&a, &r);
                    Run {
                        ok: off <= OFF_TOL && unit <= UNITARY_TOL,
                        off,
                        unit,
                        seconds,
                        flag: Some((a, r.flag)),
                        error: None,
                    }
                }
                Err(e) => Run {
                    ok: false,
                    off: f64::INFINITY,
                    unit: f64::INFINITY,
                    seconds,
                    flag: None,
                    error: Some(format!("seed {seed}: {e}")),
                },
            }
        })
        .collect()
}

fn batch_outcome(runs: &[Run], timed: bool) -> Outcome {
    let fails = runs.iter().filter(|r| !r.ok).count();
    let worst_off = runs.iter().map(|r| r.off).fold(0.0, f64::max);
    let worst_unit = runs.iter().map(|r| r.unit).fold(0.0, f64::max);
    let mut times: Vec<f64> = runs.iter().map(|r| r.seconds).collect();
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    let mut pass = fails == 0;
    if timed {
        pass &= median <= MEDIAN_BUDGET_S;
    }
    let mut s = format!(
        "{}/{} solved, worst off {:.2e}, worst ||UU*-I|| {:.2e}, median {:.3} s",
        runs.len() - fails,
        runs.len(),
        worst_off,
        worst_unit,
        median
    );
    if let Some(e) = runs.iter().find_map(|r| r.error.clone()) {
        s.push_str(&format!(", first error: {e}"));
    }
    outcome(pass, s)
}

fn criterion3() -> Outcome {
    let mut bad = Vec::new();
    for k in 0..10u64 {
        let a = gaussian(4, &mut rng(3000 + k));
        let p = Pencil::new(&a).unwrap();
        match degree_of_d(&p, 10, k) {
            Ok((d, _)) => {
                for (line, &count) in d.counts.iter().enumerate() {
                    if count != 4 {
                        bad.push(format!("A{k} line {line}: {count}"));
                    }
                }
            }
            Err(e) => bad.push(format!("A{k}: {e}")),
        }
    }
    outcome(bad.is_empty(), format!("100 line counts, {} not equal to 4 {:?}", bad.len(), bad))
}

fn criterion4() -> Outcome {
    let counts: Vec<usize> = (0..20u64)
        .into_par_iter()
        .map(|k| {
            let a = gaussian(4, &mut rng(4000 + k));
            let p = Pencil::new(&a).unwrap();
            degree_of_c(&p, 1, k, &SweepOptions::default()).map(|(d, _)| d.observed).unwrap_or(0)
        })
        .collect();
    let sixes = counts.iter().filter(|&&c| c == 6).count();
    let modal = (0..=20).max_by_key(|c| (counts.iter().filter(|&&x| x == *c).count(), *c)).unwrap();
    let pass = modal == 6 && sixes * 5 >= counts.len() * 4;
    outcome(pass, format!("modal count {modal}, {sixes}/20 trials equal 6, counts {counts:?}"))
}

fn criterion5() -> Outcome {
    // screened draws: keep the first 50 matrices that lie in S
    let mut mats = Vec::new();
    let mut seed = 5000u64;
    while mats.len() < 50 {
        let a = gaussian(4, &mut rng(seed));
        if classify(&a).map(|g| g.in_s()).unwrap_or(false) {
            mats.push((seed, a));
        }
        seed += 1;
    }
    let rows: Vec<(usize, f64, usize)> = mats
        .par_iter()
        .map(|(seed, a)| {
            let p = Pencil::new(a).unwrap();
            let count = section_zero_count(&p, *seed).unwrap_or(usize::MAX);
            let opts = SweepOptions {
                seed: *seed,
                ..SweepOptions::exhaustive()
            };
            let zeros = p.section_zeros(&opts).unwrap_or_default();
            let worst = zeros.iter().filter(|z| z.accepted).map(|z| z.sigma4).fold(0.0, f64::max);
            (count, worst, zeros.iter().filter(|z| z.accepted).count())
        })
        .collect();
    let over = rows.iter().filter(|r| r.0 > 12).count();
    let twelve = rows.iter().filter(|r| r.0 == 12).count();
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut hist = [0usize; 14];
    for r in &rows {
        hist[r.0.min(13)] += 1;
    }
    let pass = over == 0 && twelve * 2 > rows.len() && worst <= SIGMA4_TOL;
    outcome(
        pass,
        format!("{twelve}/50 with 12 zeros, {over} above 12, worst sigma4 {worst:.2e}, histogram 0..13 {hist:?}"),
    )
}

fn criterion6() -> Outcome {
    let n4 = classify(&jordan(4)).unwrap();
    let id = classify(&CMatrix::identity(4)).unwrap();
    let randoms = (0..100u64)
        .into_par_iter()
        .filter(|&k| classify(&gaussian(4, &mut rng(6000 + k))).map(|g| g.in_s()).unwrap_or(false))
        .count();
    let n4_ok = !n4.nonsingular && !n4.distinct_eigenvalues && n4.pencil_rank_ok;
    let id_ok = !id.pencil_rank_ok;
    outcome(
        n4_ok && id_ok && randoms == 100,
        format!(
            "N4 {{s1: {}, s2: {}, s3: {}}}, identity s3: {}, {randoms}/100 random in S",
            n4.nonsingular, n4.distinct_eigenvalues, n4.pencil_rank_ok, id.pencil_rank_ok
        ),
    )
}

fn criterion7(runs: &[&Run]) -> Outcome {
    let res: Vec<_> = runs
        .par_iter()
        .filter_map(|r| r.flag.as_ref())
        .map(|(a, f)| flag_residuals(a, f))
        .collect();
    let fwd = res.iter().map(|r| r.forward).fold(0.0, f64::max);
    let comp = res.iter().map(|r| r.complement).fold(0.0, f64::max);
    let missing = runs.len() - res.len();
    outcome(
        missing == 0 && fwd <= FLAG_TOL && comp <= FLAG_TOL,
        format!("{} flags, worst (ii) {fwd:.2e}, worst (iii) {comp:.2e}, {missing} missing", res.len()),
    )
}

fn diag(d: &[C64]) -> CMatrix {
    CMatrix::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { c(0.0, 0.0) })
}

fn structured() -> Vec<(&'static str, CMatrix)> {
    let mut g = rng(8000);
    let v = unitary(4, &mut g);
    let w = unitary(3, &mut g);
    let mut upper = gaussian(4, &mut g);
    for i in 0..4 {
        for j in 0..i {
            upper[(i, j)] = c(0.0, 0.0);
        }
    }
    upper[(2, 2)] = upper[(0, 0)];
    vec![
        ("hermitian 4x4", hermitian(4, &mut g)),
        ("hermitian 3x3", hermitian(3, &mut g)),
        ("unitary 4x4", unitary(4, &mut g)),
        ("normal 4x4", conj(&v, &diag(&[c(1.0, 1.0), c(-2.0, 0.5), c(0.3, -1.0), c(2.0, 2.0)]))),
        ("normal 3x3", conj(&w, &diag(&[c(1.0, 0.0), c(0.0, 2.0), c(-1.0, -1.0)]))),
        ("tridiagonal 4x4", tridiagonal(4, &mut g)),
        ("jordan N4", jordan(4)),
        ("conjugated N4", conj(&v, &jordan(4))),
        ("conjugated N3", conj(&w, &jordan(3))),
        ("repeated normal", conj(&v, &diag(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0)]))),
        ("repeated non-normal", conj(&v, &upper)),
        ("identity", CMatrix::identity(4)),
    ]
}

fn criterion8() -> Outcome {
    let mut bad = Vec::new();
    let mut lines = Vec::new();
    for (name, a) in structured() {
        match tridiagonalize(&a, &TridiagOptions::default()) {
            Ok(r) => {
                let (off, _) = residuals(&a, &r);
                let gap = verify(&r, &a).spectrum_gap;
                lines.push(format!("{name}: {:?} off {off:.1e} gap {gap:.1e}", r.provenance));
                if off > OFF_TOL || gap > SPECTRUM_TOL {
                    bad.push(name);
                }
            }
            Err(e) => {
                lines.push(format!("{name}: {e}"));
                bad.push(name);
            }
        }
    }
    outcome(bad.is_empty(), format!("failed {bad:?}; {}", lines.join("; ")))
}

fn criterion9() -> Outcome {
    let mut a = CMatrix::zeros(4, 4);
    a[(0, 0)] = c(0.5, 0.0);
    a[(0, 1)] = c(1.0, 0.0);
    a[(1, 1)] = c(0.5, 0.0);
    a[(2, 2)] = c(1.0, 1.0);
    a[(2, 3)] = c(2.0, -1.0);
    a[(3, 2)] = c(0.3, 0.0);
    a[(3, 3)] = c(-1.0, 0.5);
    let a = conj(&unitary(4, &mut rng(9000)), &a);
    let common = tridiag_core::genericity::common_eigenvectors(&a).unwrap().len();
    let opts = TridiagOptions {
        force_perturbation: true,
        ..Default::default()
    };
    match tridiagonalize(&a, &opts) {
        Ok(r) => {
            let (off, unit) = residuals(&a, &r);
            outcome(
                common == 0 && off <= OFF_TOL && unit <= UNITARY_TOL && r.perturbation_used > 0.0,
                format!(
                    "{common} common eigenvectors, perturbation {:.0e}, off on original {off:.2e}, ||UU*-I|| {unit:.2e}",
                    r.perturbation_used
                ),
            )
        }
        Err(e) => outcome(false, format!("{e}")),
    }
}

fn main() {
    // cargo passes test-harness flags; a listing request must stay fast
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let four = run_batch(4, 1000, tridiagonalize);
    results.push((1, "1000 random 4x4", batch_outcome(&four, true)));
    let three = run_batch(3, 1000, tridiagonalize3);
    results.push((2, "1000 random 3x3", batch_outcome(&three, false)));
    results.push((3, "deg D = 4 on every line", criterion3()));
    results.push((4, "deg C modal 6", criterion4()));
    results.push((5, "section zeros <= 12", criterion5()));
    results.push((6, "genericity classifier", criterion6()));
    let all: Vec<&Run> = four.iter().chain(&three).collect();
    results.push((7, "flag conditions (ii) and (iii)", criterion7(&all)));
    results.push((8, "structured inputs", criterion8()));
    results.push((9, "perturbation fallback", criterion9()));

    let mut failed = 0;
    for (k, name, o) in &results {
        println!("criterion {k} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
