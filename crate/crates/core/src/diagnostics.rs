//! Exact-integer demonstrations of two unstable alternatives to the DPLR
//! route.
//!
//! - Diagonalizing the LegS matrix directly needs the eigenvector matrix
//!   `V[i][j] = binom(i + j, i - j)`, whose entries grow exponentially in `N`.
//! - Inverting the characteristic polynomial of `A_bar = I`, i.e.
//!   `(1 - x)^-N mod x^L`, produces coefficients `binom(N + k - 1, k)`.
//!
//! Everything here is exact: growth past `2^53` is the point, so floating
//! point is only used to report `log2` magnitudes.

use num_bigint::{BigInt, BigUint};
use serde::{Serialize, Serializer};

use crate::{Error, Result};

/// Largest integer below which every `f64` integer is exact.
pub const F64_EXACT_BITS: u64 = 53;
/// Largest `n` accepted by [`verify_legs_eigenpairs_exact`].
pub const MAX_EXACT_N: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthContext {
    EigvecMatrix,
    CharpolyInverse,
}

fn as_decimal<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

fn as_decimal_opt<S: Serializer>(v: &Option<BigUint>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_some(&v.to_str_radix(10)),
        None => s.serialize_none(),
    }
}

/// Size of the largest exact integer a method needs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub context: GrowthContext,
    pub n: usize,
    /// Truncation length, for the characteristic-polynomial context.
    pub l: Option<usize>,
    #[serde(serialize_with = "as_decimal")]
    pub max_entry: BigUint,
    pub log2_max: f64,
    /// `max_entry > 2^53`.
    pub threshold_exceeded: bool,
    /// Where the maximum sits: `(i, j)` in `V`, or `(k, 0)` for a series index.
    pub argmax: (usize, usize),
    /// Largest coefficient of `(1 - x)^N`, i.e. `binom(N, N/2)`.
    #[serde(serialize_with = "as_decimal_opt")]
    pub charpoly_max: Option<BigUint>,
}

/// `log2(v)` to double precision; `-inf` for zero.
pub fn log2_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        return (v.iter_u64_digits().next().unwrap_or(0) as f64).log2();
    }
    let shift = bits - 64;
    let top: BigUint = v >> shift;
    (top.iter_u64_digits().next().unwrap_or(0) as f64).log2() + shift as f64
}

fn exceeds_f64_exact(v: &BigUint) -> bool {
    v.bits() > F64_EXACT_BITS
}

/// Exact binomial coefficient by the multiplicative formula.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `V[i][j] = binom(i + j, i - j)` for `j <= i < n`, zero above the diagonal.
pub fn legs_eigenvector_matrix_exact(n: usize) -> Vec<Vec<BigUint>> {
    if n == 0 {
        return Vec::new();
    }
    // Pascal rows 0 ..= 2n - 2
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(2 * n - 1);
    rows.push(vec![BigUint::from(1u32)]);
    for m in 1..2 * n - 1 {
        let prev = &rows[m - 1];
        let mut row = Vec::with_capacity(m + 1);
        row.push(BigUint::from(1u32));
        for k in 1..m {
            row.push(&prev[k - 1] + &prev[k]);
        }
        row.push(BigUint::from(1u32));
        rows.push(row);
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if j <= i { rows[i + j][i - j].clone() } else { BigUint::ZERO })
                .collect()
        })
        .collect()
}

/// Exact maximum entry of the LegS eigenvector matrix.
pub fn eigvec_growth(n: usize) -> Result<GrowthReport> {
    if n == 0 {
        return Err(Error::InvalidSize { what: "state size", value: 0 });
    }
    let v = legs_eigenvector_matrix_exact(n);
    let mut best = (0usize, 0usize);
    for i in 0..n {
        for j in 0..=i {
            if v[i][j] > v[best.0][best.1] {
                best = (i, j);
            }
        }
    }
    let max_entry = v[best.0][best.1].clone();
    Ok(GrowthReport {
        context: GrowthContext::EigvecMatrix,
        n,
        l: None,
        log2_max: log2_big(&max_entry),
        threshold_exceeded: exceeds_f64_exact(&max_entry),
        max_entry,
        argmax: best,
        charpoly_max: None,
    })
}

/// Coefficients of `(1 - x)^-N mod x^L` by `c_k = c_{k-1} (N + k - 1) / k`.
pub fn charpoly_inverse_series(n: usize, l: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(l);
    let mut c = BigUint::from(1u32);
    for k in 0..l {
        if k > 0 {
            c *= (n + k - 1) as u64;
            c /= k as u64;
        }
        out.push(c.clone());
    }
    out
}

/// Largest coefficient of `(1 - x)^-N mod x^L`, which is the last one,
/// `binom(N + L - 2, L - 1)`, alongside `binom(N, N/2)` for `(1 - x)^N`.
pub fn lssl_charpoly_inverse_coeffs(n: usize, l: usize) -> Result<GrowthReport> {
    if n < 2 {
        return Err(Error::InvalidSize { what: "state size", value: n });
    }
    if l == 0 {
        return Err(Error::InvalidSize { what: "truncation length", value: 0 });
    }
    let series = charpoly_inverse_series(n, l);
    let max_entry = series[l - 1].clone();
    Ok(GrowthReport {
        context: GrowthContext::CharpolyInverse,
        n,
        l: Some(l),
        log2_max: log2_big(&max_entry),
        threshold_exceeded: exceeds_f64_exact(&max_entry),
        max_entry,
        argmax: (l - 1, 0),
        charpoly_max: Some(binomial(n as u64, n as u64 / 2)),
    })
}

/// Sign-variant LegS matrix: `(-1)^(n-k) (2k+1)` below the diagonal,
/// `k + 1` on it. Its eigenvalues are `1, 2, ..., N`.
pub fn legs_sign_variant(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|r| {
            (0..n)
                .map(|k| {
                    if r > k {
                        let v = BigInt::from(2 * k as i64 + 1);
                        if (r - k) % 2 == 0 {
                            v
                        } else {
                            -v
                        }
                    } else if r == k {
                        BigInt::from(k as i64 + 1)
                    } else {
                        BigInt::ZERO
                    }
                })
                .collect()
        })
        .collect()
}

/// Whether column `j` of `v` satisfies `A v = (j + 1) v` for every `j`,
/// with `A` the sign-variant LegS matrix. Exact.
pub fn verify_eigenpairs(v: &[Vec<BigInt>]) -> bool {
    let n = v.len();
    let a = legs_sign_variant(n);
    (0..n).all(|j| {
        let scale = BigInt::from(j as i64 + 1);
        (0..n).all(|k| {
            let lhs: BigInt = (0..n).map(|i| &a[k][i] * &v[i][j]).sum();
            lhs == &scale * &v[k][j]
        })
    })
}

/// Exact check that the columns of the `u128` eigenvector matrix are
/// eigenvectors of the sign-variant LegS matrix with eigenvalue `j + 1`.
pub fn verify_legs_eigenpairs_exact(n: usize) -> Result<bool> {
    if n > MAX_EXACT_N {
        return Err(Error::InvalidSize { what: "exact eigenpair size", value: n });
    }
    if n == 0 {
        return Ok(true);
    }
    let v = crate::hippo::legs_eigenvector_matrix(n)?;
    let v: Vec<Vec<BigInt>> = v
        .into_iter()
        .map(|row| row.into_iter().map(BigInt::from).collect())
        .collect();
    Ok(verify_eigenpairs(&v))
}

/// Least-squares slope of `log2_max` against `n`.
pub fn growth_slope(reports: &[GrowthReport]) -> f64 {
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.n as f64, r.log2_max)).collect();
    crate::bench::fit_slope(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let r = eigvec_growth(4).unwrap();
        assert_eq!(r.max_entry, BigUint::from(6u32));
        assert_eq!(r.argmax, (3, 1));
        let v = legs_eigenvector_matrix_exact(4);
        assert_eq!(v[3][1], BigUint::from(6u32));
        let one = eigvec_growth(1).unwrap();
        assert_eq!(one.max_entry, BigUint::from(1u32));
        assert!(!one.threshold_exceeded);
    }

    #[test]
    fn binomial_matches_pascal() {
        let v = legs_eigenvector_matrix_exact(12);
        for i in 0..12 {
            for j in 0..=i {
                assert_eq!(v[i][j], binomial((i + j) as u64, (i - j) as u64));
            }
        }
    }

    #[test]
    fn log2_is_accurate() {
        assert_eq!(log2_big(&BigUint::from(1u32)), 0.0);
        let big = BigUint::from(1u32) << 200;
        assert!((log2_big(&big) - 200.0).abs() < 1e-12);
        let mixed = (BigUint::from(3u32) << 100) + 1u32;
        assert!((log2_big(&mixed) - (100.0 + 3f64.log2())).abs() < 1e-12);
    }

    #[test]
    fn series_of_two() {
        let s = charpoly_inverse_series(2, 6);
        let want: Vec<BigUint> = (1u32..=6).map(BigUint::from).collect();
        assert_eq!(s, want);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(lssl_charpoly_inverse_coeffs(1, 4).is_err());
        assert!(lssl_charpoly_inverse_coeffs(4, 0).is_err());
        assert!(eigvec_growth(0).is_err());
        assert!(verify_legs_eigenpairs_exact(65).is_err());
    }

    #[test]
    fn report_serializes_decimal() {
        let r = lssl_charpoly_inverse_coeffs(5, 4).unwrap();
        let js = serde_json::to_value(&r).unwrap();
        assert_eq!(js["max_entry"], "35");
        assert_eq!(js["charpoly_max"], "10");
        assert_eq!(js["context"], "charpoly_inverse");
    }
}
