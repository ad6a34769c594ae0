//! Unitary tridiagonalisation of complex matrices of size at most four.
//!
//! For `A` of size `n <= 4` the crate constructs a unitary `U` with
//! `U A U*` tridiagonal. The four-dimensional case goes through the curve
//! `C` of vectors `v` with `v, Av, A*v` dependent, parametrised by the
//! plane quartic `D = { det(t0 I + t1 A + t2 A*) = 0 }` through the kernel
//! map, and locates the finitely many points of `C` where
//! `W(v) + A W(v) = W(v) + A* W(v)` for `W(v) = span(v, Av, A*v)`.
//! Such a point gives a flag `Cv ⊂ W(v) ⊂ W(v) + A W(v) ⊂ C^4` stable under
//! `A` and `A*` one step at a time, and the flag gives the unitary.

pub mod degree;
pub mod error;
pub mod generate;
pub mod genericity;
pub mod linalg;
pub mod pencil;
pub mod poly;
pub mod tridiag;

pub use error::{Error, Result};
pub use linalg::{CMatrix, ProjectivePoint, C64};
