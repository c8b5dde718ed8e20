//! Structured state-space sequence kernels.
//!
//! The crate covers the full computational stack of a structured SSM layer:
//!
//! - [`hippo`]: HiPPO state matrices and their normal-plus-low-rank (NPLR)
//!   decompositions, conjugated into diagonal-plus-low-rank (DPLR) form.
//! - [`discretize`]: bilinear discretization, both dense and in closed DPLR
//!   form with an `O(N)` recurrent step.
//! - [`kernel`]: the length-`L` convolution kernel, computed either by
//!   brute-force Krylov powers or through the truncated generating function,
//!   Woodbury correction and Cauchy kernel followed by an inverse FFT.
//! - [`cauchy`]: the streamed Cauchy matrix-vector primitive.
//! - [`layer`]: a forward-only deep SSM layer with convolutional and
//!   recurrent execution modes.
//! - [`diagnostics`]: exact-integer growth reports showing why naive
//!   diagonalization and characteristic-polynomial methods are unstable.
//! - [`bench`]: the verification and timing harness behind `s4-bench`.
//!
//! Complex vectors use the column convention for `C`: outputs are
//! `y = Re(c^* x)` where `^*` is the conjugate transpose.

pub mod alloc;
pub mod bench;
pub mod cauchy;
pub mod diagnostics;
pub mod discretize;
pub mod error;
pub mod hippo;
pub mod io;
pub mod kernel;
pub mod layer;
pub mod linalg;
mod par;
pub mod random;
pub mod ssm;

pub use error::{Error, Result};

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
