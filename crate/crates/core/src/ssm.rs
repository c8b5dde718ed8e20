//! Core SSM representations.
//!
//! [`ContinuousSsm`] is the dense `(A, B, C, D)` system `x' = Ax + Bu`,
//! `y = Re(C^* x) + Du`. [`DplrSpec`] is the diagonal-plus-low-rank system
//! `A = diag(lambda) - P Q^*` on which the fast algorithms operate, and
//! [`DiscreteDense`] is a discretized dense system used as the reference
//! oracle for everything in the fast path.

use crate::linalg;
use crate::{CMat, CVec, Error, Result, C64};

/// Conjugation rejects changes of basis worse than this.
pub const MAX_CONDITION: f64 = 1e8;

fn check_finite<'a>(field: &'static str, it: impl IntoIterator<Item = &'a C64>) -> Result<()> {
    for (index, z) in it.into_iter().enumerate() {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite { field, index });
        }
    }
    Ok(())
}

fn check_len(field: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            field,
            expected,
            found,
        });
    }
    Ok(())
}

/// Dense continuous-time SSM.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousSsm {
    a: CMat,
    b: CVec,
    c: CVec,
    d: f64,
}

impl ContinuousSsm {
    /// Validating constructor. `c` is a column vector; the output map is `c^* x`.
    pub fn new(a: CMat, b: CVec, c: CVec, d: f64) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::InvalidSize {
                what: "state size",
                value: 0,
            });
        }
        check_len("a (columns)", n, a.ncols())?;
        check_len("b", n, b.len())?;
        check_len("c", n, c.len())?;
        check_finite("a", a.iter())?;
        check_finite("b", b.iter())?;
        check_finite("c", c.iter())?;
        if !d.is_finite() {
            return Err(Error::NonFinite { field: "d", index: 0 });
        }
        Ok(Self { a, b, c, d })
    }

    /// Build from real data, e.g. a HiPPO matrix.
    pub fn from_real(a: &nalgebra::DMatrix<f64>, b: &[f64], c: &[f64], d: f64) -> Result<Self> {
        Self::new(
            a.map(|x| C64::new(x, 0.0)),
            linalg::complexify(b),
            linalg::complexify(c),
            d,
        )
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> &CVec {
        &self.b
    }

    pub fn c(&self) -> &CVec {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Change of state basis `x = V x~`.
    ///
    /// Returns `(V^-1 A V, V^-1 B, V^* C, D)`, which computes the same
    /// input-output map. Rejects `V` whose condition number exceeds
    /// [`MAX_CONDITION`].
    pub fn conjugate(&self, v: &CMat) -> Result<Self> {
        check_len("v (rows)", self.n(), v.nrows())?;
        check_len("v (columns)", self.n(), v.ncols())?;
        check_finite("v", v.iter())?;
        let condition = linalg::condition_number(v);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned {
                condition,
                limit: MAX_CONDITION,
            });
        }
        let lu = linalg::lu_checked(v.clone(), "change of basis")?;
        let a = lu.solve(&(&self.a * v)).expect("checked non-singular");
        let b = lu.solve(&self.b).expect("checked non-singular");
        let c = v.adjoint() * &self.c;
        Ok(Self { a, b, c, d: self.d })
    }
}

/// Diagonal-plus-low-rank system `A = diag(lambda) - P Q^*`.
///
/// `p` and `q` are `N x r` with `r` the rank of the correction. The
/// `conjugate_symmetric` flag records that the system is unitarily
/// equivalent to a real one, so its outputs and kernels are real up to
/// roundoff.
#[derive(Clone, Debug, PartialEq)]
pub struct DplrSpec {
    lambda: CVec,
    p: CMat,
    q: CMat,
    b: CVec,
    c: CVec,
    conjugate_symmetric: bool,
}

impl DplrSpec {
    pub fn new(lambda: CVec, p: CMat, q: CMat, b: CVec, c: CVec, conjugate_symmetric: bool) -> Result<Self> {
        let n = lambda.len();
        if n == 0 {
            return Err(Error::InvalidSize {
                what: "state size",
                value: 0,
            });
        }
        check_len("p (rows)", n, p.nrows())?;
        check_len("q (rows)", n, q.nrows())?;
        check_len("q (columns)", p.ncols(), q.ncols())?;
        check_len("b", n, b.len())?;
        check_len("c", n, c.len())?;
        check_finite("lambda", lambda.iter())?;
        check_finite("p", p.iter())?;
        check_finite("q", q.iter())?;
        check_finite("b", b.iter())?;
        check_finite("c", c.iter())?;
        Ok(Self {
            lambda,
            p,
            q,
            b,
            c,
            conjugate_symmetric,
        })
    }

    /// Diagonal system with no low-rank correction.
    pub fn diagonal(lambda: CVec, b: CVec, c: CVec) -> Result<Self> {
        let n = lambda.len();
        Self::new(lambda, CMat::zeros(n, 0), CMat::zeros(n, 0), b, c, false)
    }

    pub fn lambda(&self) -> &CVec {
        &self.lambda
    }

    pub fn p(&self) -> &CMat {
        &self.p
    }

    pub fn q(&self) -> &CMat {
        &self.q
    }

    pub fn b(&self) -> &CVec {
        &self.b
    }

    pub fn c(&self) -> &CVec {
        &self.c
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn rank(&self) -> usize {
        self.p.ncols()
    }

    pub fn conjugate_symmetric(&self) -> bool {
        self.conjugate_symmetric
    }

    /// True when every diagonal entry has negative real part.
    pub fn is_diagonal_stable(&self) -> bool {
        self.lambda.iter().all(|l| l.re < 0.0)
    }

    /// Replace the output vector; a complex `c` generally breaks the
    /// conjugate-symmetric guarantee, so the flag is set explicitly.
    pub fn with_c(&self, c: CVec, conjugate_symmetric: bool) -> Result<Self> {
        Self::new(self.lambda.clone(), self.p.clone(), self.q.clone(), self.b.clone(), c, conjugate_symmetric)
    }

    pub fn with_b(&self, b: CVec) -> Result<Self> {
        Self::new(self.lambda.clone(), self.p.clone(), self.q.clone(), b, self.c.clone(), self.conjugate_symmetric)
    }

    /// Use `P P^*` instead of `P Q^*` for the correction.
    pub fn tied(&self) -> Self {
        Self {
            q: self.p.clone(),
            ..self.clone()
        }
    }

    /// Materialize `diag(lambda) - P Q^*`.
    pub fn to_dense(&self) -> CMat {
        let mut a = -(&self.p * self.q.adjoint());
        for (i, l) in self.lambda.iter().enumerate() {
            a[(i, i)] += l;
        }
        a
    }

    /// Dense continuous system with skip term `d`.
    pub fn to_continuous(&self, d: f64) -> Result<ContinuousSsm> {
        ContinuousSsm::new(self.to_dense(), self.b.clone(), self.c.clone(), d)
    }
}

/// Dense discretized system `x_k = A x_{k-1} + B u_k`, `y_k = Re(C^* x_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDense {
    pub a_bar: CMat,
    pub b_bar: CVec,
    pub c_bar: CVec,
    pub delta: f64,
}

impl DiscreteDense {
    pub fn n(&self) -> usize {
        self.a_bar.nrows()
    }

    /// Discrete change of basis `x = V x~`, the counterpart of
    /// [`ContinuousSsm::conjugate`].
    pub fn conjugate(&self, v: &CMat) -> Result<Self> {
        let lu = linalg::lu_checked(v.clone(), "change of basis")?;
        Ok(Self {
            a_bar: lu.solve(&(&self.a_bar * v)).expect("checked non-singular"),
            b_bar: lu.solve(&self.b_bar).expect("checked non-singular"),
            c_bar: v.adjoint() * &self.c_bar,
            delta: self.delta,
        })
    }
}
