//! Small dense helpers shared by the oracles and the fast paths.

use nalgebra::linalg::{Schur, LU};

use crate::{CMat, CVec, Error, Result, C64};

/// Pivots below this magnitude (relative to the matrix scale) count as singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// LU-factorize `m`, rejecting numerically singular matrices.
pub fn lu_checked(m: CMat, what: &'static str) -> Result<LU<C64, nalgebra::Dyn, nalgebra::Dyn>> {
    let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let lu = m.lu();
    let u = lu.u();
    let min_pivot = u
        .diagonal()
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);
    if !(min_pivot >= PIVOT_TOL * scale) {
        return Err(Error::SingularResolvent {
            what,
            magnitude: min_pivot,
        });
    }
    Ok(lu)
}

/// `m^p` by repeated squaring.
pub fn matpow(m: &CMat, mut p: usize) -> CMat {
    let n = m.nrows();
    let mut acc = CMat::identity(n, n);
    let mut base = m.clone();
    while p > 0 {
        if p & 1 == 1 {
            acc = &acc * &base;
        }
        p >>= 1;
        if p > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// 2-norm condition number `sigma_max / sigma_min`.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMat) -> Option<Vec<C64>> {
    Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .and_then(|s| s.eigenvalues())
        .map(|v| v.iter().cloned().collect())
}

/// Spectral radius of a complex matrix.
pub fn spectral_radius(m: &CMat) -> Option<f64> {
    eigenvalues(m).map(|ev| ev.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Inverse of a small `r x r` row-major complex matrix.
///
/// Returns the inverse together with `|det|`; callers decide what counts
/// as singular. Ranks 1 and 2 are closed form.
pub fn small_inverse(r: usize, m: &[C64]) -> (Vec<C64>, f64) {
    debug_assert_eq!(m.len(), r * r);
    match r {
        0 => (Vec::new(), 1.0),
        1 => (vec![m[0].inv()], m[0].norm()),
        2 => {
            let det = m[0] * m[3] - m[1] * m[2];
            let inv = det.inv();
            (vec![m[3] * inv, -m[1] * inv, -m[2] * inv, m[0] * inv], det.norm())
        }
        _ => {
            let mat = CMat::from_row_slice(r, r, m);
            let lu = mat.lu();
            let det = lu.determinant().norm();
            let inv = lu
                .try_inverse()
                .unwrap_or_else(|| CMat::from_element(r, r, C64::new(f64::NAN, f64::NAN)));
            (inv.transpose().as_slice().to_vec(), det)
        }
    }
}

/// Conjugate-transpose inner product `a^* b`.
#[inline]
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Max-norm relative error of `got` against `want`, with absolute floor `1e-12`.
pub fn rel_linf_err(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Complex analogue of [`rel_linf_err`].
pub fn rel_linf_err_c(got: &[C64], want: &[C64]) -> f64 {
    let scale = want.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-12);
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale
}

/// Lift a real vector into a complex one.
pub fn complexify(v: &[f64]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matpow_matches_repeated_products() {
        let m = CMat::from_fn(3, 3, |i, j| C64::new(0.1 * (i + 2 * j) as f64, 0.05 * i as f64));
        let mut want = CMat::identity(3, 3);
        for _ in 0..11 {
            want = &want * &m;
        }
        assert!((matpow(&m, 11) - want).norm() < 1e-12);
        assert_eq!(matpow(&m, 0), CMat::identity(3, 3));
    }

    #[test]
    fn small_inverse_closed_forms() {
        let m = [C64::new(2.0, 1.0), C64::new(0.5, 0.0), C64::new(-1.0, 0.3), C64::new(1.0, -2.0)];
        let (inv, det) = small_inverse(2, &m);
        assert!(det > 0.0);
        let a = CMat::from_row_slice(2, 2, &m);
        let b = CMat::from_row_slice(2, 2, &inv);
        assert!((a * b - CMat::identity(2, 2)).norm() < 1e-14);

        let m3: Vec<C64> = (0..9).map(|k| C64::new((k * k % 7) as f64 + 1.0, k as f64 * 0.1)).collect();
        let (inv3, _) = small_inverse(3, &m3);
        let a3 = CMat::from_row_slice(3, 3, &m3);
        let b3 = CMat::from_row_slice(3, 3, &inv3);
        assert!((a3 * b3 - CMat::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn singular_lu_is_rejected() {
        let m = CMat::from_element(2, 2, C64::new(1.0, 0.0));
        assert!(matches!(lu_checked(m, "test"), Err(Error::SingularResolvent { .. })));
    }
}
