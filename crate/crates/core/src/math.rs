//! Scalar and small-vector helpers usable without `std`.

use alloc::vec::Vec;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

/// `log(1 + exp(z))` without overflow.
pub fn log1p_exp(z: f64) -> f64 {
    if z > 35.0 {
        z + exp(-z)
    } else if z < -35.0 {
        exp(z)
    } else {
        ln_1p(exp(z))
    }
}

/// Logistic function `1 / (1 + exp(-z))`.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Hard sign with the convention `sign(0) = +1`.
#[inline]
pub fn hard_sign(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Orthonormal basis (modified Gram-Schmidt) of the span of `vectors`.
/// Vectors whose residual falls below `rel_tol` times their norm are dropped.
pub fn orthonormal_basis(vectors: &[Vec<f64>], rel_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let n0 = norm(v);
        if n0 == 0.0 || !n0.is_finite() {
            continue;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&r, q);
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= c * qi);
            }
        }
        let n = norm(&r);
        if n > rel_tol * n0 {
            r.iter_mut().for_each(|ri| *ri /= n);
            basis.push(r);
        }
    }
    basis
}
