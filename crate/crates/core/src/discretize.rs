//! Bilinear discretization and recurrent stepping.
//!
//! For `A = Lambda - P Q^*` the bilinear transform factors as
//! `A_bar = A1 A0`, `B_bar = 2 A1 B` with
//!
//! ```text
//! A0 = 2/delta I + Lambda - P Q^*
//! A1 = D - D P (I + Q^* D P)^-1 Q^* D,    D = (2/delta - Lambda)^-1
//! ```
//!
//! Both factors are applied matrix-free, so one step costs `O(N r)`.

use crate::linalg::{self, small_inverse};
use crate::ssm::{ContinuousSsm, DiscreteDense, DplrSpec};
use crate::{CMat, CVec, Error, Result, C64};

/// `|2/delta - lambda_i|` below this is a pole.
pub const POLE_TOL: f64 = 1e-12;
/// `|det(I + Q^* D P)|` below this makes the Woodbury core singular.
pub const WOODBURY_TOL: f64 = 1e-12;

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("step size must be positive and finite, got {delta}")));
    }
    Ok(())
}

/// `(I - delta/2 A)^-1 (I + delta/2 A)`, `(I - delta/2 A)^-1 delta B`, `C`.
pub fn bilinear_discretize_dense(ssm: &ContinuousSsm, delta: f64) -> Result<DiscreteDense> {
    check_delta(delta)?;
    let n = ssm.n();
    let half = C64::new(delta / 2.0, 0.0);
    let id = CMat::identity(n, n);
    let back = &id - ssm.a() * half;
    let fwd = &id + ssm.a() * half;
    let lu = linalg::lu_checked(back, "I - delta/2 A").map_err(|_| nearest_pole(ssm.a(), delta))?;
    let a_bar = lu.solve(&fwd).expect("checked non-singular");
    let b_bar = lu.solve(&(ssm.b() * C64::new(delta, 0.0))).expect("checked non-singular");
    Ok(DiscreteDense {
        a_bar,
        b_bar,
        c_bar: ssm.c().clone(),
        delta,
    })
}

fn nearest_pole(a: &CMat, delta: f64) -> Error {
    let target = C64::new(2.0 / delta, 0.0);
    match linalg::eigenvalues(a) {
        Some(ev) => {
            let (index, eigenvalue) = ev
                .iter()
                .cloned()
                .enumerate()
                .min_by(|x, y| (x.1 - target).norm().total_cmp(&(y.1 - target).norm()))
                .expect("non-empty spectrum");
            Error::Pole { index, eigenvalue }
        }
        None => Error::SingularResolvent {
            what: "I - delta/2 A",
            magnitude: 0.0,
        },
    }
}

/// Hidden state of a discrete SSM.
#[derive(Clone, Debug, PartialEq)]
pub struct SsmState {
    pub x: CVec,
}

impl SsmState {
    pub fn zeros(n: usize) -> Self {
        Self { x: CVec::zeros(n) }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// Discretized DPLR system with the per-step factors precomputed.
#[derive(Clone, Debug)]
pub struct DiscreteDplr {
    lambda: CVec,
    p: CMat,
    q: CMat,
    b: CVec,
    c: CVec,
    delta: f64,
    conjugate_symmetric: bool,
    /// `(2/delta - Lambda)^-1`
    d_vec: CVec,
    /// `(I + Q^* D P)^-1`, row-major `r x r`.
    woodbury_core: Vec<C64>,
    /// `2/delta + Lambda`
    fwd_diag: CVec,
    /// `D P`
    dp: CMat,
}

/// Closed-form discretization of a DPLR system.
pub fn dplr_discretize(spec: &DplrSpec, delta: f64) -> Result<DiscreteDplr> {
    check_delta(delta)?;
    let two_over = C64::new(2.0 / delta, 0.0);
    let mut d_vec = CVec::zeros(spec.n());
    for (i, l) in spec.lambda().iter().enumerate() {
        let gap = two_over - l;
        if gap.norm() < POLE_TOL {
            return Err(Error::Pole { index: i, eigenvalue: *l });
        }
        d_vec[i] = gap.inv();
    }
    let r = spec.rank();
    let mut dp = spec.p().clone();
    for mut col in dp.column_iter_mut() {
        col.component_mul_assign(&d_vec);
    }
    // I + Q^* D P
    let mut core = vec![C64::new(0.0, 0.0); r * r];
    for i in 0..r {
        for j in 0..r {
            let mut s = linalg::dotc(spec.q().column(i).as_slice(), dp.column(j).as_slice());
            if i == j {
                s += 1.0;
            }
            core[i * r + j] = s;
        }
    }
    let (woodbury_core, det) = small_inverse(r, &core);
    if !(det >= WOODBURY_TOL) {
        return Err(Error::RankCorrection { node: None, magnitude: det });
    }
    let fwd_diag = spec.lambda().map(|l| l + two_over);
    Ok(DiscreteDplr {
        lambda: spec.lambda().clone(),
        p: spec.p().clone(),
        q: spec.q().clone(),
        b: spec.b().clone(),
        c: spec.c().clone(),
        delta,
        conjugate_symmetric: spec.conjugate_symmetric(),
        d_vec,
        woodbury_core,
        fwd_diag,
        dp,
    })
}

/// Scratch space for [`DiscreteDplr::step_in_place`]: two length-`r` buffers.
#[derive(Clone, Debug, Default)]
pub struct StepScratch {
    t: Vec<C64>,
    s: Vec<C64>,
}

impl DiscreteDplr {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn rank(&self) -> usize {
        self.p.ncols()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn d_vec(&self) -> &CVec {
        &self.d_vec
    }

    /// `(I + Q^* D P)^-1` as a dense `r x r` matrix.
    pub fn woodbury_core(&self) -> CMat {
        let r = self.rank();
        CMat::from_row_slice(r, r, &self.woodbury_core)
    }

    /// `Q^* v` into `out`.
    fn q_adjoint_into(&self, v: &[C64], out: &mut [C64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = linalg::dotc(self.q.column(k).as_slice(), v);
        }
    }

    /// `W s` for the Woodbury core `W`.
    fn apply_core(&self, s: &mut [C64], tmp: &mut [C64]) {
        let r = s.len();
        for i in 0..r {
            tmp[i] = (0..r).map(|j| self.woodbury_core[i * r + j] * s[j]).sum();
        }
        s.copy_from_slice(tmp);
    }

    /// One recurrence step in place: `x <- A1 (A0 x + 2 B u)`, returns `C^* x`.
    ///
    /// Uses only elementwise products and `2r` inner products.
    pub fn step_in_place(&self, x: &mut [C64], u: f64, scratch: &mut StepScratch) -> C64 {
        let r = self.rank();
        scratch.t.resize(r, C64::default());
        scratch.s.resize(r, C64::default());
        let (t, s) = (&mut scratch.t, &mut scratch.s);
        // A0 x + 2 B u, then D (.)
        self.q_adjoint_into(x, t);
        let two_u = 2.0 * u;
        for i in 0..x.len() {
            let mut v = self.fwd_diag[i] * x[i] + self.b[i] * two_u;
            for k in 0..r {
                v -= self.p[(i, k)] * t[k];
            }
            x[i] = self.d_vec[i] * v;
        }
        // - D P W Q^* D v
        self.q_adjoint_into(x, s);
        self.apply_core(s, t);
        let mut y = C64::new(0.0, 0.0);
        for i in 0..x.len() {
            for k in 0..r {
                x[i] -= self.dp[(i, k)] * s[k];
            }
            y += self.c[i].conj() * x[i];
        }
        y
    }

    /// Imaginary-residue check on a step output of a conjugate-symmetric system.
    pub(crate) fn real_output(&self, y: C64) -> Result<f64> {
        check_real(y, self.conjugate_symmetric)
    }

    /// Materialize `(A1 A0, 2 A1 B, C)` column by column. Oracle use only.
    pub fn to_dense(&self) -> DiscreteDense {
        let n = self.n();
        let mut a_bar = CMat::zeros(n, n);
        let mut scratch = StepScratch::default();
        for j in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            self.step_in_place(&mut e, 0.0, &mut scratch);
            a_bar.set_column(j, &CVec::from_vec(e));
        }
        let mut b = vec![C64::new(0.0, 0.0); n];
        self.step_in_place(&mut b, 1.0, &mut scratch);
        DiscreteDense {
            a_bar,
            b_bar: CVec::from_vec(b),
            c_bar: self.c.clone(),
            delta: self.delta,
        }
    }
}

pub(crate) fn check_real(y: C64, enforce: bool) -> Result<f64> {
    if enforce {
        let bound = 1e-8 * (y.re.abs() + 1.0);
        if y.im.abs() > bound {
            return Err(Error::ImaginaryResidue {
                residue: y.im.abs(),
                bound,
            });
        }
    }
    Ok(y.re)
}

pub(crate) fn check_state(x: &[C64], step: usize) -> Result<()> {
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { step })
    }
}

/// One `O(N r)` step of the DPLR recurrence; returns the new state and
/// `y = Re(C^* x_k)`.
pub fn recurrent_step(disc: &DiscreteDplr, state: &SsmState, u: f64) -> Result<(SsmState, f64)> {
    if state.n() != disc.n() {
        return Err(Error::DimensionMismatch {
            field: "state",
            expected: disc.n(),
            found: state.n(),
        });
    }
    let mut x = state.x.clone();
    let y = disc.step_in_place(x.as_mut_slice(), u, &mut StepScratch::default());
    check_state(x.as_slice(), 0)?;
    Ok((SsmState { x }, disc.real_output(y)?))
}

/// Literal dense recurrence `x_k = A x_{k-1} + B u_k`.
pub fn dense_step(disc: &DiscreteDense, state: &SsmState, u: f64) -> Result<(SsmState, f64)> {
    if state.n() != disc.n() {
        return Err(Error::DimensionMismatch {
            field: "state",
            expected: disc.n(),
            found: state.n(),
        });
    }
    let x = &disc.a_bar * &state.x + &disc.b_bar * C64::new(u, 0.0);
    check_state(x.as_slice(), 0)?;
    let y = disc.c_bar.dotc(&x);
    Ok((SsmState { x }, y.re))
}

/// Run the DPLR recurrence from a zero state over `u`, returning the outputs.
pub fn run_recurrence(disc: &DiscreteDplr, u: &[f64]) -> Result<Vec<f64>> {
    let mut x = vec![C64::new(0.0, 0.0); disc.n()];
    let mut scratch = StepScratch::default();
    let mut out = Vec::with_capacity(u.len());
    for (k, &uk) in u.iter().enumerate() {
        let y = disc.step_in_place(&mut x, uk, &mut scratch);
        check_state(&x, k)?;
        out.push(disc.real_output(y)?);
    }
    Ok(out)
}

/// Dense counterpart of [`run_recurrence`].
pub fn run_dense(disc: &DiscreteDense, u: &[f64]) -> Result<Vec<f64>> {
    let mut state = SsmState::zeros(disc.n());
    let mut out = Vec::with_capacity(u.len());
    for (k, &uk) in u.iter().enumerate() {
        let (next, y) = dense_step(disc, &state, uk).map_err(|e| match e {
            Error::Divergence { .. } => Error::Divergence { step: k },
            other => other,
        })?;
        state = next;
        out.push(y);
    }
    Ok(out)
}
