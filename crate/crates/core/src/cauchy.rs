//! Cauchy kernel `M[i][j] = 1 / (omega_i - lambda_j)`.
//!
//! Only the direct `O(MN)` product is implemented. Rows are streamed, so the
//! matrix is never stored and auxiliary memory is `O(M + N)`. Per node the
//! poles are accumulated in ascending index order.

use crate::{Error, Result, C64};

/// Closer than this, a node and a pole are treated as coincident.
pub const SEPARATION_TOL: f64 = 1e-12;

/// Evaluation strategy. Only the direct product exists today; fast-multipole
/// style backends would slot in here.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CauchyBackend {
    #[default]
    Naive,
}

/// Evaluation nodes and poles.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchyNodes {
    omega: Vec<C64>,
    lambda: Vec<C64>,
}

impl CauchyNodes {
    /// Validates that no node is within [`SEPARATION_TOL`] of a pole.
    pub fn new(omega: Vec<C64>, lambda: Vec<C64>) -> Result<Self> {
        for (i, w) in omega.iter().enumerate() {
            for (j, l) in lambda.iter().enumerate() {
                if (w - l).norm() < SEPARATION_TOL {
                    return Err(Error::CoincidentNode { node: i, pole: j });
                }
            }
        }
        Ok(Self { omega, lambda })
    }

    pub fn omega(&self) -> &[C64] {
        &self.omega
    }

    pub fn lambda(&self) -> &[C64] {
        &self.lambda
    }

    fn check_len(&self, field: &'static str, len: usize) -> Result<()> {
        if len != self.lambda.len() {
            return Err(Error::DimensionMismatch {
                field,
                expected: self.lambda.len(),
                found: len,
            });
        }
        Ok(())
    }
}

/// Several Cauchy products sharing the same poles, evaluated in one sweep
/// per node: one reciprocal per pole feeds every weight vector.
#[derive(Clone, Debug)]
pub struct FusedCauchy<'a> {
    lambda: &'a [C64],
    /// Weight vectors stored pole-major: `weights[j * forms + m]`.
    weights: Vec<C64>,
    forms: usize,
}

impl<'a> FusedCauchy<'a> {
    pub fn new(lambda: &'a [C64], vectors: &[Vec<C64>]) -> Self {
        let forms = vectors.len();
        let n = lambda.len();
        let mut weights = Vec::with_capacity(n * forms);
        for j in 0..n {
            for v in vectors {
                weights.push(v[j]);
            }
        }
        Self { lambda, weights, forms }
    }

    pub fn forms(&self) -> usize {
        self.forms
    }

    /// `out[m] = sum_j weights[m][j] / (omega - lambda_j)`.
    ///
    /// `node` only labels the error.
    #[inline]
    pub fn eval(&self, omega: C64, node: usize, out: &mut [C64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.forms);
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for (j, l) in self.lambda.iter().enumerate() {
            let gap = omega - l;
            let mag2 = gap.norm_sqr();
            if mag2 < SEPARATION_TOL * SEPARATION_TOL {
                return Err(Error::CoincidentNode { node, pole: j });
            }
            let r = C64::new(gap.re / mag2, -gap.im / mag2);
            let w = &self.weights[j * self.forms..(j + 1) * self.forms];
            for (o, wm) in out.iter_mut().zip(w) {
                *o += wm * r;
            }
        }
        Ok(())
    }
}

/// `w_i = sum_j v_j / (omega_i - lambda_j)`.
pub fn cauchy_matvec_naive(nodes: &CauchyNodes, v: &[C64]) -> Result<Vec<C64>> {
    cauchy_matvec(nodes, v, CauchyBackend::Naive)
}

pub fn cauchy_matvec(nodes: &CauchyNodes, v: &[C64], backend: CauchyBackend) -> Result<Vec<C64>> {
    nodes.check_len("v", v.len())?;
    match backend {
        CauchyBackend::Naive => eval_forms(nodes, &[v.to_vec()]).map(|mut f| f.swap_remove(0)),
    }
}

/// Fused quadratic form `sum_j conj(a_j) b_j / (omega - lambda_j)` at every node.
pub fn cauchy_quad(nodes: &CauchyNodes, a: &[C64], b: &[C64]) -> Result<Vec<C64>> {
    nodes.check_len("a", a.len())?;
    nodes.check_len("b", b.len())?;
    let w: Vec<C64> = a.iter().zip(b).map(|(x, y)| x.conj() * y).collect();
    cauchy_matvec_naive(nodes, &w)
}

fn eval_forms(nodes: &CauchyNodes, vectors: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
    let fused = FusedCauchy::new(&nodes.lambda, vectors);
    let m = nodes.omega.len();
    let forms = vectors.len();
    let mut flat = vec![C64::new(0.0, 0.0); m * forms];
    crate::par::try_for_each_chunk(&mut flat, crate::par::CHUNK * forms, |offset, chunk| {
        let first = offset / forms;
        for (k, out) in chunk.chunks_mut(forms).enumerate() {
            fused.eval(nodes.omega[first + k], first + k, out)?;
        }
        Ok(())
    })?;
    Ok((0..forms)
        .map(|f| (0..m).map(|i| flat[i * forms + f]).collect())
        .collect())
}
