//! Closed-form integrals of decreasing step functions.
//!
//! Both the rearrangement of a grid function and the singular value function
//! of a matrix with an atomic trace are step functions `mu(t) = levels[k]` on
//! `[k w, (k+1) w)`. Every Lebesgue and Lorentz quantity on such a function is
//! a finite sum, evaluated here without secondary quadrature.

use crate::error::{Error, Result};

/// `(k+1)^e - k^e`, accurate for large `k`.
fn power_increment(k: usize, e: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        let kf = k as f64;
        kf.powf(e) * (e * (1.0 / kf).ln_1p()).exp_m1()
    }
}

pub(crate) fn check_exponent(name: &str, v: f64, min: f64, inclusive: bool) -> Result<()> {
    let ok = if v.is_nan() {
        false
    } else if inclusive {
        v >= min
    } else {
        v > min
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} out of range")))
    }
}

/// `(sum_k w * levels[k]^p)^(1/p)`, or the top level for `p = inf`.
pub(crate) fn lp_norm(levels: &[f64], weight: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return levels.iter().copied().fold(0.0, f64::max);
    }
    let s: f64 = levels.iter().map(|&l| l.powf(p)).sum();
    (weight * s).powf(1.0 / p)
}

/// Lorentz quasinorm `(int_0^inf (t^(1/p) mu(t))^q dt/t)^(1/q)` of a decreasing
/// step function with uniform cell weight.
///
/// `levels` must be sorted in decreasing order. For `q = inf` the supremum of
/// `t^(1/p) mu(t)` over each constancy interval is the limit at its right end.
pub(crate) fn lorentz_norm(levels: &[f64], weight: f64, p: f64, q: f64) -> f64 {
    let top = levels.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        if p.is_infinite() {
            return top;
        }
        let inv_p = 1.0 / p;
        return levels
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                // both endpoints; the left one only matters when k = 0
                let left = ((k as f64) * weight).powf(inv_p) * l;
                let right = (((k + 1) as f64) * weight).powf(inv_p) * l;
                left.max(right)
            })
            .fold(0.0, f64::max);
    }
    if p.is_infinite() {
        // int mu^q dt/t diverges at 0 for any non-zero function
        return f64::INFINITY;
    }
    let e = q / p;
    let scale = (p / q) * weight.powf(e);
    let sum: f64 = levels
        .iter()
        .enumerate()
        .take_while(|(_, &l)| l > 0.0)
        .map(|(k, &l)| l.powf(q) * power_increment(k, e))
        .sum();
    (scale * sum).powf(1.0 / q)
}
