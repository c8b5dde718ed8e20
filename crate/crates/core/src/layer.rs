//! Forward-only deep SSM layer.
//!
//! `H` single-input single-output SSMs run side by side over a
//! `[batch, L, H]` input, one per feature. All features share the DPLR
//! structure `(Lambda, P, Q)` inherited from the HiPPO initialization; each
//! has its own `B`, `C`, step size `delta` and skip weight `D`. Per feature
//!
//! ```text
//! y_h = K_h * u_h + D_h u_h
//! ```
//!
//! followed by the activation and a position-wise `H x H` mix plus bias.
//! The convolution can run either through the fast kernel or by stepping the
//! recurrence; both give the same function.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, ArrayView1, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::discretize::{check_state, dplr_discretize, DiscreteDplr, StepScratch};
use crate::hippo::{self, HippoFamily};
use crate::kernel::{self, ConvKernel};
use crate::ssm::DplrSpec;
use crate::{CMat, CVec, Error, Result, C64};

/// Log-uniform range for the initial step sizes.
pub const DELTA_INIT_RANGE: (f64, f64) = (1e-3, 1e-1);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// Tanh approximation of GELU.
    #[default]
    Gelu,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => {
                const K: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
                0.5 * x * (1.0 + (K * (x + 0.044_715 * x * x * x)).tanh())
            }
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }
}

/// Per-feature SSM parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureParams {
    /// Own diagonal, when the layer does not share `Lambda`.
    pub lambda: Option<CVec>,
    pub b: CVec,
    pub c: CVec,
    pub delta: f64,
    pub d: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct S4LayerParams {
    pub family: Option<HippoFamily>,
    pub lambda: CVec,
    pub p: CMat,
    pub q: CMat,
    pub features: Vec<FeatureParams>,
    /// `H x H`, applied as `out = mix * a + bias`.
    pub mix: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

/// Nominal parameter counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ParamCount {
    /// `(3 + 2r) N` per feature: `Lambda`, `P`, `Q` (r columns each), `B`, `C`.
    pub complex_per_feature: usize,
    /// `delta` and `D`.
    pub real_per_feature: usize,
    /// `H^2 + H`.
    pub mixing: usize,
    /// Every number above, counting a complex entry as one.
    pub total: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LayerOptions {
    pub activation: Activation,
    /// Give each feature its own copy of `Lambda`.
    pub per_feature_lambda: bool,
}

pub fn layer_init(h: usize, n: usize, family: HippoFamily, seed: u64) -> Result<S4LayerParams> {
    layer_init_with(h, n, family, seed, &LayerOptions::default())
}

pub fn layer_init_with(h: usize, n: usize, family: HippoFamily, seed: u64, opts: &LayerOptions) -> Result<S4LayerParams> {
    if h == 0 {
        return Err(Error::InvalidSize { what: "feature count", value: 0 });
    }
    let decomp = hippo::nplr_decompose(family, n)?;
    let b = decomp.v.adjoint() * crate::linalg::complexify(hippo::default_b_vector(family, n).as_slice());
    let mut rng = crate::random::rng(seed);
    let (lo, hi) = (DELTA_INIT_RANGE.0.ln(), DELTA_INIT_RANGE.1.ln());
    let c_scale = (0.5f64).sqrt();
    let features = (0..h)
        .map(|_| {
            let c = CVec::from_fn(n, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re, im) * c_scale
            });
            let delta = rng.random_range(lo..hi).exp();
            let d: f64 = rng.sample(StandardNormal);
            FeatureParams {
                lambda: opts.per_feature_lambda.then(|| decomp.lambda.clone()),
                b: b.clone(),
                c,
                delta,
                d,
            }
        })
        .collect();
    let mix_scale = 1.0 / (h as f64).sqrt();
    let mix = DMatrix::from_fn(h, h, |_, _| rng.sample::<f64, _>(StandardNormal) * mix_scale);
    Ok(S4LayerParams {
        family: Some(family),
        lambda: decomp.lambda,
        p: decomp.p,
        q: decomp.q,
        features,
        mix,
        bias: DVector::zeros(h),
        activation: opts.activation,
    })
}

impl S4LayerParams {
    pub fn h(&self) -> usize {
        self.features.len()
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn rank(&self) -> usize {
        self.p.ncols()
    }

    /// Validated DPLR system of feature `index`.
    pub fn spec(&self, index: usize) -> Result<DplrSpec> {
        let f = &self.features[index];
        let lambda = f.lambda.clone().unwrap_or_else(|| self.lambda.clone());
        DplrSpec::new(lambda, self.p.clone(), self.q.clone(), f.b.clone(), f.c.clone(), false)
            .map_err(|e| e.in_feature(index))
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.h();
        if h == 0 {
            return Err(Error::InvalidSize { what: "feature count", value: 0 });
        }
        if self.mix.shape() != (h, h) {
            return Err(Error::DimensionMismatch { field: "mix", expected: h, found: self.mix.nrows() });
        }
        if self.bias.len() != h {
            return Err(Error::DimensionMismatch { field: "bias", expected: h, found: self.bias.len() });
        }
        for (i, f) in self.features.iter().enumerate() {
            if !(f.delta > 0.0 && f.delta.is_finite()) {
                return Err(Error::InvalidParameter(format!("delta must be positive, got {}", f.delta)).in_feature(i));
            }
            if !f.d.is_finite() {
                return Err(Error::NonFinite { field: "d", index: i });
            }
            self.spec(i)?;
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> ParamCount {
        let (h, n, r) = (self.h(), self.n(), self.rank());
        let complex_per_feature = (3 + 2 * r) * n;
        let real_per_feature = 2;
        let mixing = h * h + h;
        ParamCount {
            complex_per_feature,
            real_per_feature,
            mixing,
            total: h * (complex_per_feature + real_per_feature) + mixing,
        }
    }

    /// Copy with every `delta` replaced, in feature order.
    pub fn with_deltas(&self, deltas: &[f64]) -> Result<Self> {
        if deltas.len() != self.h() {
            return Err(Error::DimensionMismatch { field: "deltas", expected: self.h(), found: deltas.len() });
        }
        let mut out = self.clone();
        out.features.iter_mut().zip(deltas).for_each(|(f, &d)| f.delta = d);
        Ok(out)
    }

    /// Length-`l` kernel of every feature.
    pub fn kernels(&self, l: usize) -> Result<Vec<ConvKernel>> {
        crate::par::try_map(self.h(), |i| {
            let spec = self.spec(i)?;
            kernel::s4_kernel_from_c(&spec, self.features[i].delta, l).map_err(|e| e.in_feature(i))
        })
    }

    fn check_input(&self, u: &Array3<f64>) -> Result<(usize, usize)> {
        self.validate()?;
        let (batch, l, h) = u.dim();
        if h != self.h() {
            return Err(Error::DimensionMismatch { field: "input features", expected: self.h(), found: h });
        }
        if l == 0 {
            return Err(Error::InvalidSize { what: "sequence length", value: 0 });
        }
        if let Some(index) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { field: "input", index });
        }
        Ok((batch, l))
    }

    /// Activation then position-wise mix, in place on `[batch, L, H]`.
    fn mix_in_place(&self, y: &mut Array3<f64>) {
        let h = self.h();
        let mut a = vec![0.0; h];
        for mut row in y.lanes_mut(Axis(2)) {
            for (ai, yi) in a.iter_mut().zip(row.iter()) {
                *ai = self.activation.apply(*yi);
            }
            for i in 0..h {
                let mut s = self.bias[i];
                for (j, aj) in a.iter().enumerate() {
                    s += self.mix[(i, j)] * aj;
                }
                row[i] = s;
            }
        }
    }
}

/// Per-feature output columns, one per `(batch, feature)` pair, assembled
/// into `[batch, L, H]`.
fn assemble(columns: Vec<Vec<f64>>, batch: usize, l: usize, h: usize) -> Array3<f64> {
    let mut y = Array3::zeros((batch, l, h));
    for (idx, col) in columns.into_iter().enumerate() {
        let (b, f) = (idx / h, idx % h);
        for (t, v) in col.into_iter().enumerate() {
            y[(b, t, f)] = v;
        }
    }
    y
}

fn column(u: &Array3<f64>, b: usize, f: usize) -> ArrayView1<'_, f64> {
    u.index_axis(Axis(0), b).index_axis_move(Axis(1), f)
}

/// Convolutional mode: fast kernels, FFT convolution, skip, activation, mix.
pub fn layer_forward_conv(params: &S4LayerParams, u: &Array3<f64>) -> Result<Array3<f64>> {
    let (batch, l) = params.check_input(u)?;
    let h = params.h();
    let kernels = params.kernels(l)?;
    let columns = crate::par::try_map(batch * h, |idx| {
        let (b, f) = (idx / h, idx % h);
        let uc: Vec<f64> = column(u, b, f).to_vec();
        let mut y = kernel::convolve(&kernels[f], &uc).map_err(|e| e.in_feature(f))?;
        let d = params.features[f].d;
        y.iter_mut().zip(&uc).for_each(|(yi, ui)| *yi += d * ui);
        Ok(y)
    })?;
    let mut y = assemble(columns, batch, l, h);
    params.mix_in_place(&mut y);
    Ok(y)
}

/// Constant-memory stepper for one sequence: holds the `H` discretized
/// systems and their states.
#[derive(Clone, Debug)]
pub struct LayerStepper<'a> {
    params: &'a S4LayerParams,
    discs: Vec<DiscreteDplr>,
    states: Vec<Vec<C64>>,
    scratch: StepScratch,
    pre: Vec<f64>,
    steps: usize,
}

impl<'a> LayerStepper<'a> {
    pub fn new(params: &'a S4LayerParams) -> Result<Self> {
        params.validate()?;
        let discs = (0..params.h())
            .map(|i| dplr_discretize(&params.spec(i)?, params.features[i].delta).map_err(|e| e.in_feature(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            states: vec![vec![C64::new(0.0, 0.0); params.n()]; params.h()],
            discs,
            scratch: StepScratch::default(),
            pre: vec![0.0; params.h()],
            steps: 0,
        })
    }

    pub fn reset(&mut self) {
        self.states.iter_mut().for_each(|s| s.fill(C64::new(0.0, 0.0)));
        self.steps = 0;
    }

    /// Advance one token `u_t` (length `H`), writing the layer output to `out`.
    pub fn step(&mut self, u_t: &[f64], out: &mut [f64]) -> Result<()> {
        let h = self.params.h();
        if u_t.len() != h || out.len() != h {
            return Err(Error::DimensionMismatch { field: "token", expected: h, found: u_t.len().min(out.len()) });
        }
        for f in 0..h {
            let y = self.discs[f].step_in_place(&mut self.states[f], u_t[f], &mut self.scratch);
            check_state(&self.states[f], self.steps).map_err(|e| e.in_feature(f))?;
            self.pre[f] = self.params.activation.apply(y.re + self.params.features[f].d * u_t[f]);
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = self.params.bias[i];
            for (j, a) in self.pre.iter().enumerate() {
                s += self.params.mix[(i, j)] * a;
            }
            *o = s;
        }
        self.steps += 1;
        Ok(())
    }
}

/// Recurrent mode: the same function as [`layer_forward_conv`], one token at
/// a time with memory independent of `L`.
pub fn layer_forward_recurrent(params: &S4LayerParams, u: &Array3<f64>) -> Result<Array3<f64>> {
    let (batch, l) = params.check_input(u)?;
    let h = params.h();
    let rows = crate::par::try_map(batch, |b| {
        let mut stepper = LayerStepper::new(params)?;
        let mut out = vec![0.0; l * h];
        let mut tok = vec![0.0; h];
        for t in 0..l {
            for f in 0..h {
                tok[f] = u[(b, t, f)];
            }
            stepper.step(&tok, &mut out[t * h..(t + 1) * h])?;
        }
        Ok(out)
    })?;
    let mut y = Array3::zeros((batch, l, h));
    for (b, row) in rows.into_iter().enumerate() {
        for t in 0..l {
            for f in 0..h {
                y[(b, t, f)] = row[t * h + f];
            }
        }
    }
    Ok(y)
}

/// Adapt to a new sampling frequency: `delta_h <- delta_h / ratio`.
/// Sampling at half the frequency (`ratio = 0.5`) doubles every step size.
pub fn resample_delta(params: &S4LayerParams, frequency_ratio: f64) -> Result<S4LayerParams> {
    if !(frequency_ratio > 0.0 && frequency_ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("frequency ratio must be positive, got {frequency_ratio}")));
    }
    let mut out = params.clone();
    out.features.iter_mut().for_each(|f| f.delta /= frequency_ratio);
    Ok(out)
}
