//! Seeded test matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{orthonormalize, CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Gaussian,
    Hermitian,
    Tridiagonal,
    Jordan,
}

impl std::str::FromStr for MatrixKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "hermitian" => Ok(Self::Hermitian),
            "tridiagonal" => Ok(Self::Tridiagonal),
            "jordan" => Ok(Self::Jordan),
            other => Err(format!("unknown matrix kind `{other}`")),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Entries i.i.d. standard complex normal.
pub fn gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| complex_normal(rng))
}

pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = gaussian(n, rng);
    let h = &g + &g.adjoint();
    h.scale(C64::new(0.5, 0.0))
}

/// Gaussian band with exact zeros outside it.
pub fn tridiagonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i.saturating_sub(1)..(i + 2).min(n) {
            m[(i, j)] = complex_normal(rng);
        }
    }
    m
}

/// The nilpotent Jordan block: ones on the superdiagonal.
pub fn jordan(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| if j == i + 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Haar-distributed unitary via Gram-Schmidt on a Gaussian matrix.
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    loop {
        let g = gaussian(n, rng);
        let cols: Vec<Vec<C64>> = (0..n).map(|j| g.column(j)).collect();
        if let Ok(q) = orthonormalize(&cols, 1e-8) {
            // undo the phase normalisation so the distribution stays Haar
            let q: Vec<Vec<C64>> = q
                .into_iter()
                .map(|c| {
                    let phase = C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
                    c.into_iter().map(|z| z * phase).collect()
                })
                .collect();
            return CMatrix::from_columns(&q);
        }
    }
}

pub fn generate(kind: MatrixKind, n: usize, seed: u64) -> CMatrix {
    let mut r = rng(seed);
    match kind {
        MatrixKind::Gaussian => gaussian(n, &mut r),
        MatrixKind::Hermitian => hermitian(n, &mut r),
        MatrixKind::Tridiagonal => tridiagonal(n, &mut r),
        MatrixKind::Jordan => jordan(n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jordan_is_exact() {
        let j = jordan(4);
        for i in 0..4 {
            for k in 0..4 {
                let want = if k == i + 1 { 1.0 } else { 0.0 };
                assert_eq!(j[(i, k)], C64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn same_seed_same_matrix() {
        for kind in [MatrixKind::Gaussian, MatrixKind::Hermitian, MatrixKind::Tridiagonal] {
            assert_eq!(generate(kind, 4, 9), generate(kind, 4, 9));
        }
        assert_ne!(generate(MatrixKind::Gaussian, 4, 9), generate(MatrixKind::Gaussian, 4, 10));
    }

    #[test]
    fn tridiagonal_band_is_exact() {
        let m = generate(MatrixKind::Tridiagonal, 4, 3);
        assert_eq!(m.off_tridiagonal_max(), 0.0);
    }

    #[test]
    fn unitary_is_unitary() {
        let u = unitary(4, &mut rng(5));
        let e = &u.matmul(&u.adjoint()) - &CMatrix::identity(4);
        assert!(e.norm_fro() < 1e-12);
    }
}
