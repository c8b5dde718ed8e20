//! HiPPO state matrices and their normal-plus-low-rank decompositions.
//!
//! Each family matrix `A` is written as `A = V diag(lambda) V^* - P Q^T`
//! with unitary `V` and a real rank-1 or rank-2 factor `P = Q`. The normal
//! part `A + P Q^T` is always `shift * I + S` with `S` real skew-symmetric,
//! so it is diagonalized through the Hermitian matrix `iS`, which keeps `V`
//! unitary to working precision.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ssm::DplrSpec;
use crate::{CMat, CVec, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HippoFamily {
    LegS,
    LegT,
    LagT,
}

impl HippoFamily {
    pub const ALL: [HippoFamily; 3] = [HippoFamily::LegS, HippoFamily::LegT, HippoFamily::LagT];

    /// Rank of the low-rank correction.
    pub fn rank(self) -> usize {
        match self {
            HippoFamily::LegT => 2,
            HippoFamily::LegS | HippoFamily::LagT => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HippoFamily::LegS => "legs",
            HippoFamily::LegT => "legt",
            HippoFamily::LagT => "lagt",
        }
    }
}

impl fmt::Display for HippoFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HippoFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "legs" => Ok(HippoFamily::LegS),
            "legt" => Ok(HippoFamily::LegT),
            "lagt" => Ok(HippoFamily::LagT),
            other => Err(Error::InvalidParameter(format!("unknown HiPPO family `{other}`"))),
        }
    }
}

/// Knobs for [`nplr_decompose_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NplrOptions {
    /// Diagonal entry of the LagT matrix. `-1/2` is plain LagT; other values
    /// give the generalized-Laguerre variant, which only shifts the real part
    /// of the spectrum.
    pub lagt_diagonal: f64,
    /// Replace `Q` by `P` after decomposing (the `Lambda - P P^*` variant).
    pub tie_low_rank: bool,
}

impl Default for NplrOptions {
    fn default() -> Self {
        Self {
            lagt_diagonal: -0.5,
            tie_low_rank: false,
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidSize {
            what: "state size",
            value: 0,
        });
    }
    Ok(())
}

fn sqrt_odd(n: usize) -> f64 {
    ((2 * n + 1) as f64).sqrt()
}

/// Dense family matrix with indices `n, k` in `0..N`.
pub fn hippo_matrix(family: HippoFamily, n: usize) -> Result<DMatrix<f64>> {
    hippo_matrix_with(family, n, &NplrOptions::default())
}

pub fn hippo_matrix_with(family: HippoFamily, n: usize, opts: &NplrOptions) -> Result<DMatrix<f64>> {
    check_size(n)?;
    Ok(match family {
        HippoFamily::LegS => DMatrix::from_fn(n, n, |i, k| {
            if i > k {
                -sqrt_odd(i) * sqrt_odd(k)
            } else if i == k {
                -((i + 1) as f64)
            } else {
                0.0
            }
        }),
        HippoFamily::LegT => DMatrix::from_fn(n, n, |i, k| {
            let sign = if i >= k || (k - i) % 2 == 0 { 1.0 } else { -1.0 };
            -sqrt_odd(i) * sqrt_odd(k) * sign
        }),
        HippoFamily::LagT => DMatrix::from_fn(n, n, |i, k| {
            if i > k {
                -1.0
            } else if i == k {
                opts.lagt_diagonal
            } else {
                0.0
            }
        }),
    })
}

/// Real low-rank factor `P` (`N x r`) with `A + P P^T` normal.
pub fn low_rank_factor(family: HippoFamily, n: usize) -> Result<DMatrix<f64>> {
    check_size(n)?;
    Ok(match family {
        HippoFamily::LegS => DMatrix::from_fn(n, 1, |i, _| (i as f64 + 0.5).sqrt()),
        HippoFamily::LagT => DMatrix::from_element(n, 1, 0.5_f64.sqrt()),
        HippoFamily::LegT => DMatrix::from_fn(n, 2, |i, col| if i % 2 == col { sqrt_odd(i) } else { 0.0 }),
    })
}

/// Split `A + P P^T` into `shift * I + S` with `S` exactly skew-symmetric.
pub fn normal_part(family: HippoFamily, n: usize, opts: &NplrOptions) -> Result<(f64, DMatrix<f64>)> {
    let a = hippo_matrix_with(family, n, opts)?;
    let p = low_rank_factor(family, n)?;
    let normal = a + &p * p.transpose();
    let shift = match family {
        HippoFamily::LegS => -0.5,
        HippoFamily::LegT => 0.0,
        HippoFamily::LagT => opts.lagt_diagonal + 0.5,
    };
    let skew = DMatrix::from_fn(n, n, |i, k| if i == k { 0.0 } else { 0.5 * (normal[(i, k)] - normal[(k, i)]) });
    Ok((shift, skew))
}

/// Unitary diagonalization of `shift * I + skew`.
///
/// Returns `(V, lambda)` sorted by imaginary part ascending (ties by real
/// part). Each eigenvector's largest-magnitude entry is rotated to be real
/// and positive so the output is deterministic.
pub fn diagonalize_normal(shift: f64, skew: &DMatrix<f64>) -> Result<(CMat, CVec)> {
    let n = skew.nrows();
    let herm = skew.map(|x| C64::new(0.0, x));
    let eig = SymmetricEigen::new(herm);
    // i S u = mu u  =>  S u = -i mu u
    let mut order: Vec<usize> = (0..n).collect();
    let lam = |k: usize| C64::new(shift, -eig.eigenvalues[k]);
    order.sort_by(|&x, &y| {
        let (a, b) = (lam(x), lam(y));
        a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re))
    });
    let lambda = CVec::from_iterator(n, order.iter().map(|&k| lam(k)));
    let mut v = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let phase = col[pivot].conj() / col[pivot].norm();
        v.set_column(dst, &(col * phase));
    }

    let skew_c = skew.map(|x| C64::new(x, 0.0));
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = lambda[i] - C64::new(shift, 0.0);
    }
    let residual = (&skew_c * &v - &v * d).norm();
    let scale = skew.norm().max(1.0);
    if !(residual <= 1e-10 * scale * n as f64) {
        return Err(Error::Eigensolver { residual });
    }
    Ok((v, lambda))
}

/// `A = V diag(lambda) V^* - P_real Q_real^T`, plus the conjugated factors
/// `p = V^* P_real`, `q = V^* Q_real` of the DPLR form.
#[derive(Clone, Debug)]
pub struct NplrDecomposition {
    pub family: HippoFamily,
    pub v: CMat,
    pub lambda: CVec,
    pub p: CMat,
    pub q: CMat,
    pub p_real: DMatrix<f64>,
    pub q_real: DMatrix<f64>,
}

impl NplrDecomposition {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn rank(&self) -> usize {
        self.p.ncols()
    }

    /// `V diag(lambda) V^* - P_real Q_real^T` as a dense matrix.
    pub fn reconstruct(&self) -> CMat {
        let mut scaled = self.v.clone();
        for (j, l) in self.lambda.iter().enumerate() {
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= l);
        }
        let low = (&self.p_real * self.q_real.transpose()).map(|x| C64::new(x, 0.0));
        scaled * self.v.adjoint() - low
    }

    /// DPLR system for real `b` and `c` given in the original basis. The
    /// result is conjugate-symmetric: its kernel is real.
    pub fn dplr_from_real(&self, b: &[f64], c: &[f64]) -> Result<DplrSpec> {
        let vh = self.v.adjoint();
        let b = &vh * crate::linalg::complexify(b);
        let c = &vh * crate::linalg::complexify(c);
        DplrSpec::new(self.lambda.clone(), self.p.clone(), self.q.clone(), b, c, true)
    }

    /// DPLR system for real `b` in the original basis and an arbitrary
    /// complex `c` already in the diagonal basis.
    pub fn dplr_with_c(&self, b: &[f64], c: CVec) -> Result<DplrSpec> {
        let b = self.v.adjoint() * crate::linalg::complexify(b);
        DplrSpec::new(self.lambda.clone(), self.p.clone(), self.q.clone(), b, c, false)
    }
}

pub fn nplr_decompose(family: HippoFamily, n: usize) -> Result<NplrDecomposition> {
    nplr_decompose_with(family, n, &NplrOptions::default())
}

pub fn nplr_decompose_with(family: HippoFamily, n: usize, opts: &NplrOptions) -> Result<NplrDecomposition> {
    let (shift, skew) = normal_part(family, n, opts)?;
    let (v, lambda) = diagonalize_normal(shift, &skew)?;
    let p_real = low_rank_factor(family, n)?;
    let q_real = p_real.clone();
    let vh = v.adjoint();
    let p = &vh * p_real.map(|x| C64::new(x, 0.0));
    let q = if opts.tie_low_rank {
        p.clone()
    } else {
        &vh * q_real.map(|x| C64::new(x, 0.0))
    };
    Ok(NplrDecomposition {
        family,
        v,
        lambda,
        p,
        q,
        p_real,
        q_real,
    })
}

/// Lower-triangular matrix `V[i][j] = binom(i + j, i - j)` whose columns
/// are eigenvectors of the sign-variant LegS matrix.
///
/// Entries are exact; any needed entry beyond `u128` is reported.
pub fn legs_eigenvector_matrix(n: usize) -> Result<Vec<Vec<u128>>> {
    check_size(n)?;
    let rows = 2 * n - 1;
    // Pascal's triangle with overflow tracked per entry.
    let mut pascal: Vec<Vec<Option<u128>>> = Vec::with_capacity(rows);
    for m in 0..rows {
        let mut row = vec![Some(1u128); m + 1];
        for k in 1..m {
            let prev = &pascal[m - 1];
            row[k] = match (prev[k - 1], prev[k]) {
                (Some(a), Some(b)) => a.checked_add(b),
                _ => None,
            };
        }
        pascal.push(row);
    }
    let mut out = vec![vec![0u128; n]; n];
    for i in 0..n {
        for j in 0..=i {
            out[i][j] = pascal[i + j][i - j].ok_or(Error::Overflow { i, j })?;
        }
    }
    Ok(out)
}

/// Default input vector: `(2n+1)^{1/2}` for LegS and LegT, ones for LagT.
///
/// These follow the usual HiPPO conventions; nothing about the fast
/// algorithms depends on them.
pub fn default_b_vector(family: HippoFamily, n: usize) -> DVector<f64> {
    match family {
        HippoFamily::LegS | HippoFamily::LegT => DVector::from_fn(n, |i, _| sqrt_odd(i)),
        HippoFamily::LagT => DVector::from_element(n, 1.0),
    }
}

/// Standard-normal complex output vector, deterministic in `seed`.
pub fn default_c_vector(n: usize, seed: u64) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVec::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn legs_small_matrices() {
        assert_eq!(hippo_matrix(HippoFamily::LegS, 1).unwrap(), dmatrix![-1.0]);
        let a = hippo_matrix(HippoFamily::LegS, 2).unwrap();
        assert_eq!(a[(0, 0)], -1.0);
        assert_eq!(a[(0, 1)], 0.0);
        assert!((a[(1, 0)] + 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(a[(1, 1)], -2.0);
    }

    #[test]
    fn lagt_small_matrix() {
        assert_eq!(
            hippo_matrix(HippoFamily::LagT, 3).unwrap(),
            dmatrix![-0.5, 0.0, 0.0; -1.0, -0.5, 0.0; -1.0, -1.0, -0.5]
        );
    }

    #[test]
    fn legt_unit_pattern() {
        let a = hippo_matrix(HippoFamily::LegT, 4).unwrap();
        let unit = DMatrix::from_fn(4, 4, |i, k| a[(i, k)] / (sqrt_odd(i) * sqrt_odd(k)));
        let want = dmatrix![
            -1.0, 1.0, -1.0, 1.0;
            -1.0, -1.0, 1.0, -1.0;
            -1.0, -1.0, -1.0, 1.0;
            -1.0, -1.0, -1.0, -1.0
        ];
        assert!((unit - want).abs().max() < 1e-15);
    }

    #[test]
    fn zero_size_rejected() {
        assert!(matches!(hippo_matrix(HippoFamily::LegS, 0), Err(Error::InvalidSize { .. })));
        assert!(nplr_decompose(HippoFamily::LagT, 0).is_err());
    }

    #[test]
    fn legs_rank_one_factor() {
        let d = nplr_decompose(HippoFamily::LegS, 2).unwrap();
        assert_eq!(d.rank(), 1);
        assert!((d.p_real[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((d.p_real[(1, 0)] - 1.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn legs_real_parts_are_minus_half() {
        let d = nplr_decompose(HippoFamily::LegS, 4).unwrap();
        for l in d.lambda.iter() {
            assert!((l.re + 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn reconstruction_all_families() {
        for family in HippoFamily::ALL {
            for n in [1, 2, 3, 8, 17] {
                let d = nplr_decompose(family, n).unwrap();
                let a = hippo_matrix(family, n).unwrap().map(|x| C64::new(x, 0.0));
                let rel = (d.reconstruct() - &a).norm() / a.norm();
                assert!(rel <= 1e-9, "{family} n={n}: {rel:e}");
                let id = CMat::identity(n, n);
                assert!((d.v.adjoint() * &d.v - id).norm() <= 1e-10 * n as f64);
            }
        }
    }

    #[test]
    fn eigenvalues_sorted() {
        let d = nplr_decompose(HippoFamily::LegT, 9).unwrap();
        for w in d.lambda.as_slice().windows(2) {
            assert!(w[0].im <= w[1].im);
        }
    }

    #[test]
    fn lagt_normal_part_exact() {
        let opts = NplrOptions::default();
        for n in [1, 2, 5, 12] {
            let a = hippo_matrix(HippoFamily::LagT, n).unwrap();
            let p = low_rank_factor(HippoFamily::LagT, n).unwrap();
            let normal = a + &p * p.transpose();
            for i in 0..n {
                for k in 0..n {
                    let want = if i == k {
                        0.0
                    } else if i > k {
                        -0.5
                    } else {
                        0.5
                    };
                    // -1/2 I + S with the -1/2 cancelled by the all-1/2 correction
                    assert!((normal[(i, k)] - want).abs() < 1e-15);
                }
            }
            let (shift, skew) = normal_part(HippoFamily::LagT, n, &opts).unwrap();
            assert_eq!(shift, 0.0);
            assert_eq!(skew.transpose(), -skew.clone());
        }
    }

    #[test]
    fn generalized_lagt_shifts_real_part() {
        let opts = NplrOptions {
            lagt_diagonal: -1.5,
            ..Default::default()
        };
        let d = nplr_decompose_with(HippoFamily::LagT, 6, &opts).unwrap();
        assert!(d.lambda.iter().all(|l| (l.re + 1.0).abs() < 1e-12));
        let a = hippo_matrix_with(HippoFamily::LagT, 6, &opts).unwrap().map(|x| C64::new(x, 0.0));
        assert!((d.reconstruct() - &a).norm() / a.norm() < 1e-9);
    }

    #[test]
    fn tied_low_rank_sets_q_to_p() {
        let opts = NplrOptions {
            tie_low_rank: true,
            ..Default::default()
        };
        let d = nplr_decompose_with(HippoFamily::LegS, 5, &opts).unwrap();
        assert_eq!(d.p, d.q);
    }

    #[test]
    fn skew_spectrum_purely_imaginary() {
        for family in HippoFamily::ALL {
            let (_, skew) = normal_part(family, 64, &NplrOptions::default()).unwrap();
            let ev = crate::linalg::eigenvalues(&skew.map(|x| C64::new(x, 0.0))).unwrap();
            let worst = ev.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
            assert!(worst <= 1e-12 * skew.norm().max(1.0), "{family}: {worst:e}");
        }
    }

    #[test]
    fn eigenvector_matrix_rows() {
        let v = legs_eigenvector_matrix(4).unwrap();
        assert_eq!(v[3], vec![1, 6, 5, 1]);
        assert_eq!(v[3][1], 6);
        assert_eq!(legs_eigenvector_matrix(1).unwrap(), vec![vec![1]]);
        assert_eq!(v[0][3], 0);
    }

    #[test]
    fn eigenvector_matrix_overflow_names_entry() {
        match legs_eigenvector_matrix(100) {
            Err(Error::Overflow { i, j }) => assert!(i >= j && i < 100),
            other => panic!("expected overflow, got {other:?}"),
        }
        assert!(legs_eigenvector_matrix(64).is_ok());
    }

    #[test]
    fn default_vectors() {
        let b = default_b_vector(HippoFamily::LegS, 3);
        assert_eq!(b.as_slice(), &[1.0, 3f64.sqrt(), 5f64.sqrt()]);
        assert_eq!(default_b_vector(HippoFamily::LegS, 1).as_slice(), &[1.0]);
        assert_eq!(default_c_vector(4, 42), default_c_vector(4, 42));
        assert_ne!(default_c_vector(4, 42), default_c_vector(4, 43));
    }

    #[test]
    fn family_parse_roundtrip() {
        for f in HippoFamily::ALL {
            assert_eq!(f.name().parse::<HippoFamily>().unwrap(), f);
        }
        assert!("legx".parse::<HippoFamily>().is_err());
    }
}
