//! SSM convolution kernels.
//!
//! The kernel `K_i = Re(C^* A_bar^i B_bar)`, `i < L`, is computed two ways:
//!
//! - [`krylov_kernel_naive`] iterates dense matrix-vector products. It costs
//!   `O(N^2 L)` and is the reference oracle.
//! - [`s4_kernel`] evaluates the truncated generating function
//!   `sum_i K_i z^i` at the `L`-th roots of unity through the resolvent of
//!   the diagonal part, corrects for the low-rank term with the Woodbury
//!   identity, and recovers `K` with one FFT. With the direct Cauchy product
//!   this is `O(N L + L log L)` time and `O(N + L)` memory.
//!
//! Nodes are `omega_k = exp(2 pi i k / L)` and the matching inverse is
//! `K_j = (1/L) sum_k Khat_k exp(-2 pi i j k / L)`. With
//! `theta = 2 pi k / L` the node maps are evaluated in the cancellation-free
//! form `(1 - omega)/(1 + omega) = -i tan(theta/2)` and
//! `2/(1 + omega) = 1 - i tan(theta/2)`. At `omega = -1` (even `L`) both
//! blow up while the generating function stays finite; its value there is
//! `(delta/2) C~^* B`.
//!
//! A node can also land on a pole of the diagonal part while the full `A` is
//! regular there (LegT and LagT at odd `N` have `lambda = 0`, which meets the
//! node `omega = 1`). Such nodes, within [`NEAR_POLE_TOL`], fall back to a
//! dense `O(N^3)` solve.

use rustfft::{FftDirection, FftPlanner};

use crate::cauchy::FusedCauchy;
use crate::discretize::{bilinear_discretize_dense, POLE_TOL};
use crate::linalg::{self, small_inverse};
use crate::ssm::{DiscreteDense, DplrSpec};
use crate::{CVec, Error, Result, C64};

/// `|1 + omega|` below this marks the node `omega = -1`.
pub const SINGULAR_NODE_TOL: f64 = 1e-12;
/// `|det(I + k11)|` below this makes the Woodbury correction singular.
pub const WOODBURY_NODE_TOL: f64 = 1e-12;
/// Bound on the discarded imaginary part, relative to `max |K|`.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;
/// A node closer than this (relative to `max(1, |lambda_j|)`) to a diagonal
/// pole is evaluated with a dense solve instead of the Cauchy reduction.
pub const NEAR_POLE_TOL: f64 = 1e-6;

/// Real length-`L` convolution kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvKernel {
    k: Vec<f64>,
    delta: f64,
}

impl ConvKernel {
    pub fn new(k: Vec<f64>, delta: f64) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidSize {
                what: "kernel length",
                value: 0,
            });
        }
        if let Some(index) = k.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { field: "kernel", index });
        }
        Ok(Self { k, delta })
    }

    pub fn values(&self) -> &[f64] {
        &self.k
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn max_abs(&self) -> f64 {
        self.k.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.k
    }
}

/// Roots of unity and the resolvent nodes derived from them.
#[derive(Clone, Debug)]
pub struct NodeGrid {
    pub omega: Vec<C64>,
    /// `(2/delta) (1 - omega)/(1 + omega)`
    pub g: Vec<C64>,
    /// `2/(1 + omega)`
    pub scale: Vec<C64>,
    pub singular: Vec<bool>,
    pub delta: f64,
}

fn node_maps(k: usize, l: usize, delta: f64) -> (C64, C64) {
    let t = (std::f64::consts::PI * k as f64 / l as f64).tan();
    (C64::new(0.0, -2.0 * t / delta), C64::new(1.0, -t))
}

fn node_is_singular(k: usize, l: usize) -> bool {
    let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / l as f64);
    (omega + 1.0).norm() < SINGULAR_NODE_TOL
}

impl NodeGrid {
    pub fn new(l: usize, delta: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidSize {
                what: "kernel length",
                value: 0,
            });
        }
        let mut grid = NodeGrid {
            omega: Vec::with_capacity(l),
            g: Vec::with_capacity(l),
            scale: Vec::with_capacity(l),
            singular: Vec::with_capacity(l),
            delta,
        };
        for k in 0..l {
            let singular = node_is_singular(k, l);
            let (g, scale) = if singular {
                (C64::new(f64::INFINITY, 0.0), C64::new(f64::INFINITY, 0.0))
            } else {
                node_maps(k, l, delta)
            };
            grid.omega.push(C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / l as f64));
            grid.g.push(g);
            grid.scale.push(scale);
            grid.singular.push(singular);
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn singular_count(&self) -> usize {
        self.singular.iter().filter(|&&s| s).count()
    }
}

/// Truncation-corrected output vector `C~ = (I - A_bar^L)^* C`.
#[derive(Clone, Debug, PartialEq)]
pub struct CTilde(pub CVec);

impl CTilde {
    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }
}

fn dense_of(spec: &DplrSpec, delta: f64) -> Result<DiscreteDense> {
    bilinear_discretize_dense(&spec.to_continuous(0.0)?, delta)
}

/// `C~ = (I - A_bar^L)^* C`, with `A_bar^L` by repeated squaring of the
/// materialized dense `A_bar` (`O(N^3 log L)`, done once per length).
pub fn c_tilde_from_c(spec: &DplrSpec, delta: f64, l: usize) -> Result<CTilde> {
    let power = linalg::matpow(&dense_of(spec, delta)?.a_bar, l);
    Ok(CTilde(spec.c() - power.adjoint() * spec.c()))
}

/// Inverse of [`c_tilde_from_c`]: solve `(I - A_bar^L)^* C = C~`.
pub fn c_from_c_tilde(spec: &DplrSpec, delta: f64, l: usize, c_tilde: &CTilde) -> Result<CVec> {
    let n = spec.n();
    let power = linalg::matpow(&dense_of(spec, delta)?.a_bar, l);
    let m = (crate::CMat::identity(n, n) - power).adjoint();
    let lu = linalg::lu_checked(m, "I - A_bar^L")?;
    Ok(lu.solve(&c_tilde.0).expect("checked non-singular"))
}

/// `K_i = C^* A_bar^i B_bar` by iterated products, before taking the real part.
pub fn krylov_kernel_complex(disc: &DiscreteDense, l: usize) -> Result<Vec<C64>> {
    if l == 0 {
        return Err(Error::InvalidSize {
            what: "kernel length",
            value: 0,
        });
    }
    let mut x = disc.b_bar.clone();
    let mut next = CVec::zeros(disc.n());
    let mut out = Vec::with_capacity(l);
    for i in 0..l {
        if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Divergence { step: i });
        }
        out.push(disc.c_bar.dotc(&x));
        if i + 1 < l {
            next.gemv(C64::new(1.0, 0.0), &disc.a_bar, &x, C64::new(0.0, 0.0));
            std::mem::swap(&mut x, &mut next);
        }
    }
    Ok(out)
}

/// Reference kernel `K_i = Re(C^* A_bar^i B_bar)` in `O(N^2 L)`.
pub fn krylov_kernel_naive(disc: &DiscreteDense, l: usize) -> Result<ConvKernel> {
    let k = krylov_kernel_complex(disc, l)?;
    ConvKernel::new(k.into_iter().map(|z| z.re).collect(), disc.delta)
}

/// Truncated generating function `sum_{i<L} C^* A_bar^i B_bar z^i` via the
/// closed form `C^* (I - A_bar^L z^L)(I - A_bar z)^-1 B_bar`.
pub fn truncated_generating_function(disc: &DiscreteDense, l: usize, z: C64) -> Result<C64> {
    let n = disc.n();
    let resolvent = crate::CMat::identity(n, n) - &disc.a_bar * z;
    let lu = linalg::lu_checked(resolvent, "I - A_bar z")?;
    let x = lu.solve(&disc.b_bar).expect("checked non-singular");
    let power = linalg::matpow(&disc.a_bar, l);
    let y = &x - power * &x * z.powu(l as u32);
    Ok(disc.c_bar.dotc(&y))
}

/// Per-node evaluation of the Woodbury-reduced generating function.
struct GfEvaluator<'a> {
    spec: &'a DplrSpec,
    c_tilde: &'a CTilde,
    fused: FusedCauchy<'a>,
    rank: usize,
    /// Value at `omega = -1`: `(delta/2) C~^* B`.
    patch: C64,
    /// Poles with `|Re lambda|` small enough for an imaginary node to come
    /// near them, as `(Im lambda, lambda)` sorted by imaginary part.
    near_axis: Vec<(f64, C64)>,
}

fn too_close(g: C64, l: C64) -> bool {
    (g - l).norm() <= NEAR_POLE_TOL * l.norm().max(1.0)
}

impl<'a> GfEvaluator<'a> {
    fn new(spec: &'a DplrSpec, delta: f64, c_tilde: &'a CTilde) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive and finite, got {delta}")));
        }
        if c_tilde.0.len() != spec.n() {
            return Err(Error::DimensionMismatch {
                field: "c_tilde",
                expected: spec.n(),
                found: c_tilde.0.len(),
            });
        }
        let two_over = C64::new(2.0 / delta, 0.0);
        if let Some((index, l)) = spec.lambda().iter().enumerate().find(|(_, l)| (two_over - *l).norm() < POLE_TOL) {
            return Err(Error::Pole { index, eigenvalue: *l });
        }
        let r = spec.rank();
        let left: Vec<Vec<C64>> = std::iter::once(c_tilde.as_slice().to_vec())
            .chain((0..r).map(|k| spec.q().column(k).iter().cloned().collect()))
            .collect();
        let right: Vec<Vec<C64>> = std::iter::once(spec.b().as_slice().to_vec())
            .chain((0..r).map(|k| spec.p().column(k).iter().cloned().collect()))
            .collect();
        let mut vectors = Vec::with_capacity((1 + r) * (1 + r));
        for a in &left {
            for b in &right {
                vectors.push(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).collect());
            }
        }
        let patch = linalg::dotc(c_tilde.as_slice(), spec.b().as_slice()) * (delta / 2.0);
        let mut near_axis: Vec<(f64, C64)> = spec
            .lambda()
            .iter()
            .filter(|l| l.re.abs() <= NEAR_POLE_TOL * l.norm().max(1.0))
            .map(|l| (l.im, *l))
            .collect();
        near_axis.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            spec,
            c_tilde,
            fused: FusedCauchy::new(spec.lambda().as_slice(), &vectors),
            rank: r,
            patch,
            near_axis,
        })
    }

    fn near_pole(&self, g: C64) -> bool {
        if g.re != 0.0 {
            return self.spec.lambda().iter().any(|&l| too_close(g, l));
        }
        if self.near_axis.is_empty() {
            return false;
        }
        let i = self.near_axis.partition_point(|(im, _)| *im < g.im);
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(self.near_axis.len());
        self.near_axis[lo..hi].iter().any(|&(_, l)| too_close(g, l))
    }

    /// `scale * C~^* (g - A)^-1 B` by a dense solve, for nodes sitting on a
    /// diagonal pole where the Cauchy sums are not usable. The full `A` is
    /// regular there unless the generating function itself has a pole.
    #[cold]
    fn eval_dense(&self, g: C64, scale: C64, node: usize) -> Result<C64> {
        let n = self.spec.n();
        let m = crate::CMat::identity(n, n) * g - self.spec.to_dense();
        let lu = linalg::lu_checked(m, "g - A").map_err(|_| Error::RankCorrection {
            node: Some(node),
            magnitude: 0.0,
        })?;
        let x = lu.solve(self.spec.b()).expect("checked non-singular");
        Ok(scale * self.c_tilde.0.dotc(&x))
    }

    fn scratch(&self) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); self.fused.forms()]
    }

    /// `scale * [k00 - k01 (I + k11)^-1 k10]` at resolvent node `g`.
    #[inline]
    fn eval(&self, g: C64, scale: C64, node: usize, forms: &mut [C64]) -> Result<C64> {
        if self.near_pole(g) {
            return self.eval_dense(g, scale, node);
        }
        self.fused.eval(g, node, forms)?;
        let r = self.rank;
        let w = 1 + r;
        let k00 = forms[0];
        if r == 0 {
            return Ok(scale * k00);
        }
        let mut core = [C64::new(0.0, 0.0); 4];
        let mut core_vec;
        let core: &mut [C64] = if r <= 2 {
            &mut core[..r * r]
        } else {
            core_vec = vec![C64::new(0.0, 0.0); r * r];
            &mut core_vec
        };
        for a in 0..r {
            for b in 0..r {
                core[a * r + b] = forms[(1 + a) * w + 1 + b];
            }
            core[a * r + a] += 1.0;
        }
        let (inv, det) = small_inverse(r, core);
        if !(det >= WOODBURY_NODE_TOL) {
            return Err(Error::RankCorrection {
                node: Some(node),
                magnitude: det,
            });
        }
        let mut correction = C64::new(0.0, 0.0);
        for a in 0..r {
            for b in 0..r {
                correction += forms[1 + a] * inv[a * r + b] * forms[(1 + b) * w];
            }
        }
        Ok(scale * (k00 - correction))
    }

    fn at_root(&self, k: usize, l: usize, delta: f64, forms: &mut [C64]) -> Result<C64> {
        if node_is_singular(k, l) {
            return Ok(self.patch);
        }
        let (g, scale) = node_maps(k, l, delta);
        self.eval(g, scale, k, forms)
    }
}

/// Woodbury-reduced generating function at every node of `nodes`.
pub fn gf_dplr_eval(spec: &DplrSpec, delta: f64, c_tilde: &CTilde, nodes: &NodeGrid) -> Result<Vec<C64>> {
    if nodes.delta != delta {
        return Err(Error::InvalidParameter(format!(
            "node grid built for delta {} but evaluated at {delta}",
            nodes.delta
        )));
    }
    let ev = GfEvaluator::new(spec, delta, c_tilde)?;
    let mut out = vec![C64::new(0.0, 0.0); nodes.len()];
    crate::par::try_for_each_chunk(&mut out, crate::par::CHUNK, |offset, chunk| {
        let mut forms = ev.scratch();
        for (i, o) in chunk.iter_mut().enumerate() {
            let k = offset + i;
            *o = if nodes.singular[k] {
                ev.patch
            } else {
                ev.eval(nodes.g[k], nodes.scale[k], k, &mut forms)?
            };
        }
        Ok(())
    })?;
    Ok(out)
}

/// The same reduced form at an arbitrary point `z`. For `z` off the roots of
/// unity this is `C~^* (I - A_bar z)^-1 B_bar`.
pub fn gf_dplr_eval_at(spec: &DplrSpec, delta: f64, c_tilde: &CTilde, z: C64) -> Result<C64> {
    let ev = GfEvaluator::new(spec, delta, c_tilde)?;
    let denom = z + 1.0;
    if denom.norm() < SINGULAR_NODE_TOL {
        return Ok(ev.patch);
    }
    let g = (C64::new(1.0, 0.0) - z) / denom * (2.0 / delta);
    let scale = C64::new(2.0, 0.0) / denom;
    ev.eval(g, scale, 0, &mut ev.scratch())
}

/// In-place unnormalized FFT. `Forward` is `sum x_j exp(-2 pi i jk/L)`.
fn fft_in_place(buf: &mut [C64], direction: FftDirection) {
    if buf.len() <= 1 {
        return;
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft(buf.len(), direction);
    fft.process(buf);
}

/// `Khat_k = sum_j K_j omega_k^j` at `omega_k = exp(2 pi i k / L)`, i.e. the
/// generating function of `k` sampled on the node grid.
pub fn dft_at_roots(k: &[C64]) -> Vec<C64> {
    let mut buf = k.to_vec();
    fft_in_place(&mut buf, FftDirection::Inverse);
    buf
}

/// Fast kernel before the real part is taken.
pub fn s4_kernel_complex(spec: &DplrSpec, delta: f64, l: usize, c_tilde: &CTilde) -> Result<Vec<C64>> {
    if l == 0 {
        return Err(Error::InvalidSize {
            what: "kernel length",
            value: 0,
        });
    }
    let ev = GfEvaluator::new(spec, delta, c_tilde)?;
    let mut khat = vec![C64::new(0.0, 0.0); l];
    crate::par::try_for_each_chunk(&mut khat, crate::par::CHUNK, |offset, chunk| {
        let mut forms = ev.scratch();
        for (i, o) in chunk.iter_mut().enumerate() {
            *o = ev.at_root(offset + i, l, delta, &mut forms)?;
        }
        Ok(())
    })?;
    fft_in_place(&mut khat, FftDirection::Forward);
    let inv_l = 1.0 / l as f64;
    khat.iter_mut().for_each(|z| *z *= inv_l);
    Ok(khat)
}

/// Fast convolution kernel from DPLR parameters and a precomputed `C~`.
///
/// For conjugate-symmetric systems the discarded imaginary part is checked
/// against [`IMAG_RESIDUE_TOL`].
pub fn s4_kernel(spec: &DplrSpec, delta: f64, l: usize, c_tilde: &CTilde) -> Result<ConvKernel> {
    let k = s4_kernel_complex(spec, delta, l, c_tilde)?;
    let max_re = k.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if spec.conjugate_symmetric() {
        let residue = k.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let bound = IMAG_RESIDUE_TOL * max_re.max(1e-12);
        if residue > bound {
            return Err(Error::ImaginaryResidue { residue, bound });
        }
    }
    ConvKernel::new(k.into_iter().map(|z| z.re).collect(), delta)
}

/// [`s4_kernel`] with `C~` computed from the stored `C`.
pub fn s4_kernel_from_c(spec: &DplrSpec, delta: f64, l: usize) -> Result<ConvKernel> {
    let ct = c_tilde_from_c(spec, delta, l)?;
    s4_kernel(spec, delta, l, &ct)
}

/// Causal convolution `y_k = sum_{i<=k} K_i u_{k-i}`, truncated to `L`,
/// via zero-padded FFTs.
pub fn convolve(kernel: &ConvKernel, u: &[f64]) -> Result<Vec<f64>> {
    let l = kernel.len();
    if u.len() != l {
        return Err(Error::DimensionMismatch {
            field: "input",
            expected: l,
            found: u.len(),
        });
    }
    let size = (2 * l - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a: Vec<C64> = kernel.values().iter().map(|&x| C64::new(x, 0.0)).collect();
    a.resize(size, C64::new(0.0, 0.0));
    let mut b: Vec<C64> = u.iter().map(|&x| C64::new(x, 0.0)).collect();
    b.resize(size, C64::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    inv.process(&mut a);
    let norm = 1.0 / size as f64;
    Ok(a[..l].iter().map(|z| z.re * norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{dense_step, dplr_discretize, SsmState};
    use crate::hippo::{self, HippoFamily};
    use crate::ssm::ContinuousSsm;
    use nalgebra::{dmatrix, dvector};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn direct_dft(k: &[C64]) -> Vec<C64> {
        let l = k.len();
        (0..l)
            .map(|m| {
                (0..l)
                    .map(|j| k[j] * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j * m) as f64 / l as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn scalar_krylov_literal() {
        let (a, b, cc) = (0.5, 2.0, -1.5);
        let disc = DiscreteDense {
            a_bar: dmatrix![c(a)],
            b_bar: dvector![c(b)],
            c_bar: dvector![c(cc)],
            delta: 1.0,
        };
        let k = krylov_kernel_naive(&disc, 4).unwrap();
        assert_eq!(k.values(), &[cc * b, cc * a * b, cc * a * a * b, cc * a * a * a * b]);
        assert_eq!(krylov_kernel_naive(&disc, 1).unwrap().values(), &[cc * b]);
        assert!(krylov_kernel_naive(&disc, 0).is_err());
    }

    #[test]
    fn krylov_matches_impulse_response() {
        let d = hippo::nplr_decompose(HippoFamily::LegS, 4).unwrap();
        let spec = d.dplr_from_real(&[1.0, 0.5, -0.3, 2.0], &[0.2, -1.0, 1.0, 0.7]).unwrap();
        let disc = bilinear_discretize_dense(&spec.to_continuous(0.0).unwrap(), 0.05).unwrap();
        let k = krylov_kernel_naive(&disc, 16).unwrap();
        let mut state = SsmState::zeros(4);
        for i in 0..16 {
            let (next, y) = dense_step(&disc, &state, if i == 0 { 1.0 } else { 0.0 }).unwrap();
            state = next;
            assert!((y - k.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn node_grid_masks() {
        let even = NodeGrid::new(8, 0.1).unwrap();
        assert_eq!(even.singular_count(), 1);
        assert!(even.singular[4]);
        let odd = NodeGrid::new(9, 0.1).unwrap();
        assert_eq!(odd.singular_count(), 0);
        for w in &even.omega {
            assert!((w.norm() - 1.0).abs() < 1e-14);
        }
        for k in 0..9 {
            let w = odd.omega[k];
            let g = (c(1.0) - w) / (c(1.0) + w) * (2.0 / 0.1);
            assert!((g - odd.g[k]).norm() <= 1e-9 * g.norm().max(1.0));
        }
    }

    #[test]
    fn generating_function_at_zero() {
        let d = hippo::nplr_decompose(HippoFamily::LegS, 3).unwrap();
        let spec = d.dplr_from_real(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        let disc = bilinear_discretize_dense(&spec.to_continuous(0.0).unwrap(), 0.1).unwrap();
        let v = truncated_generating_function(&disc, 8, c(0.0)).unwrap();
        assert!((v - disc.c_bar.dotc(&disc.b_bar)).norm() < 1e-14);
    }

    #[test]
    fn generating_function_power_sum() {
        let ssm = ContinuousSsm::new(
            dmatrix![C64::new(-0.7, 0.2), c(0.3), c(0.0); c(-0.1), C64::new(-1.1, -0.4), c(0.2); c(0.05), c(0.0), c(-0.5)],
            dvector![c(1.0), C64::new(0.5, 0.5), c(-0.2)],
            dvector![C64::new(0.3, -0.1), c(1.0), c(0.4)],
            0.0,
        )
        .unwrap();
        let disc = bilinear_discretize_dense(&ssm, 0.3).unwrap();
        let z = C64::new(0.3, 0.1);
        let k = krylov_kernel_complex(&disc, 8).unwrap();
        let want: C64 = k.iter().enumerate().map(|(i, ki)| ki * z.powu(i as u32)).sum();
        let got = truncated_generating_function(&disc, 8, z).unwrap();
        assert!((got - want).norm() <= 1e-11 * want.norm());
    }

    #[test]
    fn generating_function_at_roots_is_dft() {
        let d = hippo::nplr_decompose(HippoFamily::LegT, 4).unwrap();
        let spec = d.dplr_from_real(&[1.0, -1.0, 0.5, 0.25], &[0.3, 0.3, -1.0, 2.0]).unwrap();
        let disc = bilinear_discretize_dense(&spec.to_continuous(0.0).unwrap(), 0.2).unwrap();
        let l = 12;
        let k = krylov_kernel_complex(&disc, l).unwrap();
        let dft = direct_dft(&k);
        assert!(linalg::rel_linf_err_c(&dft_at_roots(&k), &dft) < 1e-12);
        for (m, want) in dft.iter().enumerate() {
            let z = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / l as f64);
            let got = truncated_generating_function(&disc, l, z).unwrap();
            assert!((got - want).norm() <= 1e-10 * want.norm().max(1.0), "node {m}");
        }
    }

    #[test]
    fn diagonal_closed_form() {
        let lambda = dvector![C64::new(-0.5, 2.0), C64::new(-1.0, -3.0)];
        let b = dvector![C64::new(1.0, 0.5), C64::new(-0.3, 1.0)];
        let cc = dvector![C64::new(0.2, -0.7), C64::new(1.0, 0.1)];
        let spec = DplrSpec::diagonal(lambda.clone(), b.clone(), cc.clone()).unwrap();
        let delta = 0.1;
        let l = 8;
        let ct = c_tilde_from_c(&spec, delta, l).unwrap();
        let got = s4_kernel(&spec, delta, l, &ct).unwrap();
        for i in 0..l {
            let want: f64 = (0..2)
                .map(|n| {
                    let den = c(1.0) - lambda[n] * (delta / 2.0);
                    let abar = (c(1.0) + lambda[n] * (delta / 2.0)) / den;
                    let bbar = b[n] * delta / den;
                    (cc[n].conj() * abar.powu(i as u32) * bbar).re
                })
                .sum();
            assert!((got.values()[i] - want).abs() <= 1e-10 * got.max_abs());
        }
    }

    #[test]
    fn legs_matches_krylov() {
        let d = hippo::nplr_decompose(HippoFamily::LegS, 4).unwrap();
        let spec = d.dplr_from_real(hippo::default_b_vector(HippoFamily::LegS, 4).as_slice(), &[1.0, -0.5, 0.25, 2.0]).unwrap();
        let delta = 0.1;
        let disc = bilinear_discretize_dense(&spec.to_continuous(0.0).unwrap(), delta).unwrap();
        let want = krylov_kernel_naive(&disc, 16).unwrap();
        let got = s4_kernel_from_c(&spec, delta, 16).unwrap();
        assert!(linalg::rel_linf_err(got.values(), want.values()) <= 1e-8);
        let raw = s4_kernel_complex(&spec, delta, 16, &c_tilde_from_c(&spec, delta, 16).unwrap()).unwrap();
        let residue = raw.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(residue <= 1e-8 * want.max_abs());
    }

    #[test]
    fn rank_zero_reduces_to_diagonal_resolvent() {
        let spec = DplrSpec::diagonal(dvector![C64::new(-0.3, 1.0), C64::new(-2.0, 0.0)], dvector![c(1.0), c(2.0)], dvector![c(0.5), C64::new(0.0, 1.0)]).unwrap();
        let delta = 0.2;
        let ct = CTilde(spec.c().clone());
        let z = C64::new(0.0, 1.0);
        let g = (c(1.0) - z) / (c(1.0) + z) * (2.0 / delta);
        let want: C64 = (0..2).map(|j| ct.0[j].conj() * spec.b()[j] / (g - spec.lambda()[j])).sum::<C64>() * (c(2.0) / (c(1.0) + z));
        let got = gf_dplr_eval_at(&spec, delta, &ct, z).unwrap();
        assert!((got - want).norm() < 1e-13 * want.norm());
    }

    #[test]
    fn woodbury_matches_dense_resolvent() {
        // random rank-1 N=4 system at z = i
        let d = hippo::nplr_decompose(HippoFamily::LagT, 4).unwrap();
        let spec = d.dplr_from_real(&[0.4, -1.0, 0.6, 1.2], &[1.0, 0.0, -0.5, 0.3]).unwrap();
        let delta = 0.3;
        let ct = c_tilde_from_c(&spec, delta, 8).unwrap();
        let z = C64::new(0.0, 1.0);
        let a = spec.to_dense();
        let n = 4;
        let m = crate::CMat::identity(n, n) * ((c(1.0) - z) / (c(1.0) + z) * 2.0) - a * c(delta);
        let x = m.lu().solve(spec.b()).unwrap();
        let want = ct.0.dotc(&x) * (c(2.0 * delta) / (c(1.0) + z));
        let got = gf_dplr_eval_at(&spec, delta, &ct, z).unwrap();
        assert!((got - want).norm() <= 1e-10 * want.norm());
    }

    #[test]
    fn singular_node_patch_is_the_limit() {
        let d = hippo::nplr_decompose(HippoFamily::LegS, 4).unwrap();
        let spec = d.dplr_from_real(&[1.0, 0.3, -0.2, 0.9], &[0.5, 1.0, -1.0, 0.4]).unwrap();
        let delta = 0.1;
        let ct = c_tilde_from_c(&spec, delta, 8).unwrap();
        let grid = NodeGrid::new(8, delta).unwrap();
        let vals = gf_dplr_eval(&spec, delta, &ct, &grid).unwrap();
        let patched = vals[4];
        assert!((patched - ct.0.dotc(spec.b()) * (delta / 2.0)).norm() < 1e-15);
        // symmetric perturbation cancels the first-order term
        let eps = 1e-6;
        let lo = gf_dplr_eval_at(&spec, delta, &ct, c(-1.0 - eps)).unwrap();
        let hi = gf_dplr_eval_at(&spec, delta, &ct, c(-1.0 + eps)).unwrap();
        let limit = (lo + hi) * 0.5;
        assert!((patched - limit).norm() <= 1e-9 * patched.norm());
        // one-sided values approach it at first order
        assert!((patched - hi).norm() <= 10.0 * eps * patched.norm());
    }

    #[test]
    fn c_tilde_vanishing_power() {
        // |A_bar| = 1/3 for lambda = -1, delta = 1
        let spec = DplrSpec::diagonal(dvector![c(-1.0), c(-1.0)], dvector![c(1.0), c(1.0)], dvector![c(2.0), C64::new(0.0, -1.0)]).unwrap();
        let ct = c_tilde_from_c(&spec, 1.0, 64).unwrap();
        assert!((&ct.0 - spec.c()).norm() <= 2.0 * 0.5f64.powi(64) * spec.c().norm());
    }

    #[test]
    fn c_tilde_round_trip() {
        let d = hippo::nplr_decompose(HippoFamily::LegS, 8).unwrap();
        let spec = d.dplr_from_real(&[1.0; 8], &[0.5, -1.0, 2.0, 0.1, 0.0, 1.0, -0.3, 0.8]).unwrap();
        let ct = c_tilde_from_c(&spec, 0.05, 32).unwrap();
        let back = c_from_c_tilde(&spec, 0.05, 32, &ct).unwrap();
        assert!((back - spec.c()).norm() <= 1e-10 * spec.c().norm());
    }

    #[test]
    fn squaring_matches_sequential_power() {
        let d = hippo::nplr_decompose(HippoFamily::LegT, 4).unwrap();
        let spec = d.dplr_from_real(&[1.0; 4], &[1.0; 4]).unwrap();
        let a = dense_of(&spec, 0.2).unwrap().a_bar;
        let mut seq = crate::CMat::identity(4, 4);
        for _ in 0..8 {
            seq = &seq * &a;
        }
        assert!((linalg::matpow(&a, 8) - &seq).norm() <= 1e-12 * seq.norm().max(1.0));
    }

    #[test]
    fn convolve_hand_cases() {
        let delta_k = ConvKernel::new(vec![1.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        let u = [0.5, -1.0, 2.0, 3.0];
        let y = convolve(&delta_k, &u).unwrap();
        assert!(linalg::rel_linf_err(&y, &u) < 1e-15);
        let k = ConvKernel::new(vec![1.0, 1.0, 0.0], 1.0).unwrap();
        let y = convolve(&k, &[1.0, 2.0, 3.0]).unwrap();
        assert!(linalg::rel_linf_err(&y, &[1.0, 3.0, 5.0]) < 1e-15);
        assert!(matches!(convolve(&k, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn kernel_rejects_pole_and_bad_lengths() {
        let spec = DplrSpec::diagonal(dvector![c(20.0)], dvector![c(1.0)], dvector![c(1.0)]).unwrap();
        let ct = CTilde(spec.c().clone());
        assert!(matches!(s4_kernel(&spec, 0.1, 8, &ct), Err(Error::Pole { .. })));
        let ok = DplrSpec::diagonal(dvector![c(-1.0)], dvector![c(1.0)], dvector![c(1.0)]).unwrap();
        assert!(s4_kernel(&ok, 0.1, 0, &ct).is_err());
        assert!(matches!(s4_kernel(&ok, 0.1, 4, &CTilde(CVec::zeros(2))), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn recurrence_impulse_equals_kernel() {
        let d = hippo::nplr_decompose(HippoFamily::LegS, 4).unwrap();
        let spec = d.dplr_from_real(&[1.0, 0.2, 0.3, 0.4], &[1.0, -1.0, 1.0, -1.0]).unwrap();
        let delta = 0.1;
        let disc = dplr_discretize(&spec, delta).unwrap();
        let mut u = vec![0.0; 16];
        u[0] = 1.0;
        let y = crate::discretize::run_recurrence(&disc, &u).unwrap();
        let k = krylov_kernel_naive(&bilinear_discretize_dense(&spec.to_continuous(0.0).unwrap(), delta).unwrap(), 16).unwrap();
        assert!(linalg::rel_linf_err(&y, k.values()) < 1e-9);
    }
}
