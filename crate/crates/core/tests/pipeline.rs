use tridiag_core::degree::{run_experiments, DegreeOptions};
use tridiag_core::generate::{self, gaussian, hermitian, jordan, rng, tridiagonal, unitary, MatrixKind};
use tridiag_core::genericity::classify;
use tridiag_core::linalg::{CMatrix, C64};
use tridiag_core::tridiag::{tridiagonalize, verify, Provenance, TridiagOptions, TridiagResult};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn diag(d: &[C64]) -> CMatrix {
    CMatrix::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { c(0.0, 0.0) })
}

fn conj(v: &CMatrix, a: &CMatrix) -> CMatrix {
    v.matmul(a).matmul(&v.adjoint())
}

fn check(a: &CMatrix, opts: &TridiagOptions) -> TridiagResult {
    let r = tridiagonalize(a, opts).unwrap();
    let rep = verify(&r, a);
    assert!(rep.off_residual <= 1e-8, "off {:e}", rep.off_residual);
    assert!(rep.unitarity_residual <= 1e-10);
    assert!(rep.spectrum_gap <= 1e-8, "gap {:e}", rep.spectrum_gap);
    r
}

#[test]
fn hermitian_goes_through_deflation() {
    let r = check(&hermitian(4, &mut rng(1)), &TridiagOptions::default());
    assert_eq!(r.provenance, Provenance::CommonEigenvectorDeflation);
}

#[test]
fn unitary_and_normal_inputs() {
    let mut g = rng(2);
    check(&unitary(4, &mut g), &TridiagOptions::default());
    let v = unitary(4, &mut g);
    let normal = conj(&v, &diag(&[c(1.0, 1.0), c(-2.0, 0.5), c(0.3, -1.0), c(2.0, 2.0)]));
    check(&normal, &TridiagOptions::default());
}

#[test]
fn tridiagonal_input_is_trivial() {
    let r = check(&tridiagonal(4, &mut rng(3)), &TridiagOptions::default());
    assert_eq!(r.provenance, Provenance::Trivial);
}

#[test]
fn conjugated_jordan_block() {
    let v = unitary(4, &mut rng(4));
    check(&conj(&v, &jordan(4)), &TridiagOptions::default());
}

#[test]
fn repeated_eigenvalue() {
    let mut g = rng(5);
    let mut a = gaussian(4, &mut g);
    // upper triangular with a double eigenvalue, then scrambled
    for i in 0..4 {
        for j in 0..i {
            a[(i, j)] = c(0.0, 0.0);
        }
    }
    a[(1, 1)] = a[(0, 0)];
    let v = unitary(4, &mut g);
    check(&conj(&v, &a), &TridiagOptions::default());
}

#[test]
fn forced_perturbation_on_random_input() {
    let a = gaussian(4, &mut rng(6));
    let opts = TridiagOptions {
        force_perturbation: true,
        ..Default::default()
    };
    let r = check(&a, &opts);
    assert!(r.perturbation_used > 0.0);
}

#[test]
fn all_flags_are_valid() {
    let a = gaussian(4, &mut rng(7));
    let opts = TridiagOptions {
        all_flags: true,
        ..Default::default()
    };
    let r = check(&a, &opts);
    assert!(r.all_flags.len() >= 2);
    for f in &r.all_flags {
        let res = tridiag_core::tridiag::flag_residuals(&a, f);
        assert!(res.forward <= 1e-8 && res.complement <= 1e-8);
    }
}

#[test]
fn same_seed_same_answer() {
    let a = gaussian(4, &mut rng(8));
    let x = tridiagonalize(&a, &TridiagOptions::default()).unwrap();
    let y = tridiagonalize(&a, &TridiagOptions::default()).unwrap();
    assert_eq!(x.u, y.u);
}

#[test]
fn result_round_trips_through_json() {
    let a = gaussian(4, &mut rng(9));
    let r = tridiagonalize(&a, &TridiagOptions::default()).unwrap();
    let s = serde_json::to_string(&r).unwrap();
    let back: TridiagResult = serde_json::from_str(&s).unwrap();
    assert_eq!(back.u, r.u);
    assert_eq!(back.provenance, r.provenance);
}

#[test]
fn generator_kinds() {
    assert_eq!(generate::generate(MatrixKind::Jordan, 4, 0), jordan(4));
    let t = generate::generate(MatrixKind::Tridiagonal, 4, 11);
    assert_eq!(t.off_tridiagonal_max(), 0.0);
    assert_eq!(generate::generate(MatrixKind::Gaussian, 4, 3), generate::generate(MatrixKind::Gaussian, 4, 3));
}

#[test]
fn classifier_witness_matrices() {
    let n4 = classify(&jordan(4)).unwrap();
    assert!(!n4.nonsingular && !n4.distinct_eigenvalues && n4.pencil_rank_ok);
    let id = classify(&CMatrix::identity(4)).unwrap();
    assert!(id.nonsingular && !id.distinct_eigenvalues && !id.pencil_rank_ok);
}

#[test]
fn degree_report_for_a_random_matrix() {
    let opts = DegreeOptions {
        trials: 4,
        ..Default::default()
    };
    let r = run_experiments(&gaussian(4, &mut rng(10)), &opts).unwrap();
    assert!(r.skipped.is_none());
    assert_eq!(r.deg_d_observed, Some(4));
    assert_eq!(r.deg_c_observed, Some(6));
    let k = r.section_zero_count.unwrap();
    assert!((1..=12).contains(&k));
    assert_eq!(r.per_trial_detail.len(), 4);
}
