//! Generalized singular values and the Schatten, Lorentz and entropy
//! functionals they determine. With the atomic trace `c Tr`, `mu(t, x)` is the
//! step function `sigma_k` on `[c k, c (k+1))`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::step;
use crate::weyl::QuantizedOperator;

/// Singular values below this fraction of the largest are set to zero.
pub const SNAP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularValueProfile {
    sigmas: Vec<f64>,
    weight: f64,
}

impl SingularValueProfile {
    /// Sorts `sigmas` in decreasing order.
    pub fn new(mut sigmas: Vec<f64>, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidParameter(format!("level weight must be positive, got {weight}")));
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidParameter("singular values must be finite and non-negative".into()));
        }
        sigmas.sort_by(|a, b| b.total_cmp(a));
        Ok(SingularValueProfile { sigmas, weight })
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.sigmas.first().copied().unwrap_or(0.0)
    }

    /// Number of non-zero levels.
    pub fn rank(&self) -> usize {
        self.sigmas.iter().take_while(|&&s| s > 0.0).count()
    }

    /// `mu(t)`, right-continuous and zero beyond `N c`.
    pub fn mu(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.max();
        }
        let mut k = (t / self.weight).floor();
        // keep mu(c j) = sigma_j when the division rounds down
        if (k + 1.0) * self.weight <= t {
            k += 1.0;
        }
        if k >= self.sigmas.len() as f64 {
            0.0
        } else {
            self.sigmas[k as usize]
        }
    }

    pub fn scale(&self, a: f64) -> SingularValueProfile {
        let a = a.abs();
        SingularValueProfile { sigmas: self.sigmas.iter().map(|s| s * a).collect(), weight: self.weight }
    }

    /// Rows `k,sigma_k,c`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,sigma_k,c")?;
        for (k, s) in self.sigmas.iter().enumerate() {
            writeln!(w, "{k},{s:e},{:e}", self.weight)?;
        }
        Ok(())
    }
}

pub fn singular_profile(x: &QuantizedOperator) -> Result<SingularValueProfile> {
    let svd = x
        .matrix()
        .clone()
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let mut sigmas: Vec<f64> = svd.singular_values.iter().copied().collect();
    let top = sigmas.iter().copied().fold(0.0, f64::max);
    for s in &mut sigmas {
        if *s < SNAP_TOLERANCE * top {
            *s = 0.0;
        }
    }
    SingularValueProfile::new(sigmas, x.trace_weight())
}

/// `n(s) = c #{k : sigma_k > s}`.
pub fn distribution_function(profile: &SingularValueProfile, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("level must be >= 0, got {s}")));
    }
    Ok(profile.weight * profile.sigmas.partition_point(|&v| v > s) as f64)
}

/// `(c sum sigma_k^p)^{1/p}`, or `sigma_max` for `p = inf`.
pub fn schatten_norm(profile: &SingularValueProfile, p: f64) -> Result<f64> {
    step::check_exponent("p", p, 1.0, true)?;
    Ok(step::lp_norm(&profile.sigmas, profile.weight, p))
}

/// `(int (t^{1/p} mu(t))^q dt/t)^{1/q}` as a finite sum; `q = inf` gives
/// `sup_t t^{1/p} mu(t)`.
pub fn nc_lorentz_norm(profile: &SingularValueProfile, p: f64, q: f64) -> Result<f64> {
    step::check_exponent("p", p, 1.0, true)?;
    step::check_exponent("q", q, 1.0, true)?;
    Ok(step::lorentz_norm(&profile.sigmas, profile.weight, p, q))
}

/// `c sum phi(sigma_k)`.
pub fn spectral_trace(profile: &SingularValueProfile, phi: impl Fn(f64) -> f64) -> Result<f64> {
    let mut total = 0.0;
    for &s in &profile.sigmas {
        let v = phi(s);
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("function undefined at singular value {s}")));
        }
        total += v;
    }
    Ok(profile.weight * total)
}

/// `tau(u log u)` with `u = |x|^p / ||x||_p^p` and `0 log 0 = 0`.
pub fn normalized_entropy(profile: &SingularValueProfile, p: f64) -> Result<f64> {
    let np = schatten_norm(profile, p)?.powf(p);
    if np == 0.0 {
        return Err(Error::InvalidParameter("entropy of the zero operator".into()));
    }
    spectral_trace(profile, |s| {
        let u = s.powf(p) / np;
        if u == 0.0 {
            0.0
        } else {
            u * u.ln()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::C64;
    use crate::weyl::DeformationMatrix;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn theta() -> DeformationMatrix {
        DeformationMatrix::canonical(1.0).unwrap()
    }

    fn random_op(rng: &mut ChaCha8Rng, n: usize) -> QuantizedOperator {
        let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        QuantizedOperator::new(m, theta()).unwrap()
    }

    fn random_profile(rng: &mut ChaCha8Rng) -> SingularValueProfile {
        let n = rng.gen_range(1..12);
        let mut s: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        if rng.gen_bool(0.3) {
            s.push(s[0]);
        }
        SingularValueProfile::new(s, rng.gen_range(0.05..1.0)).unwrap()
    }

    #[test]
    fn projection_profile() {
        let n = 8;
        let m = DMatrix::from_fn(n, n, |i, j| if i == j && i < 3 { C64::new(2.0, 0.0) } else { C64::new(0.0, 0.0) });
        let x = QuantizedOperator::new(m, theta()).unwrap();
        let p = singular_profile(&x).unwrap();
        assert_eq!(&p.sigmas()[..3], &[2.0, 2.0, 2.0]);
        assert!(p.sigmas()[3..].iter().all(|&s| s == 0.0));
        assert_eq!(p.rank(), 3);
        let c = x.trace_weight();
        assert!((schatten_norm(&p, 3.0).unwrap() - 2.0 * (3.0 * c).powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn homogeneity_and_unitary_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_op(&mut rng, 10);
        let p = singular_profile(&x).unwrap();
        let q = singular_profile(&x.scale(C64::new(0.0, -2.5))).unwrap();
        for (a, b) in p.sigmas().iter().zip(q.sigmas()) {
            assert!((2.5 * a - b).abs() < 1e-12 * (1.0 + b));
        }
        let q = random_op(&mut rng, 16).matrix().clone().qr().q();
        let prof = singular_profile(&QuantizedOperator::new(q, theta()).unwrap()).unwrap();
        assert!(prof.sigmas().iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_op(&mut rng, 12);
        let qr = random_op(&mut rng, 12).matrix().clone().qr();
        let v = qr.q();
        let w = random_op(&mut rng, 12).matrix().clone().qr().q();
        let y = QuantizedOperator::new(&v * x.matrix() * &w, theta()).unwrap();
        let (a, b) = (singular_profile(&x).unwrap(), singular_profile(&y).unwrap());
        for (s, t) in a.sigmas().iter().zip(b.sigmas()) {
            assert!((s - t).abs() < 1e-10);
        }
    }

    #[test]
    fn distribution_function_edges_and_galois() {
        let p = SingularValueProfile::new(vec![3.0, 1.0, 1.0, 0.5], 0.25).unwrap();
        assert_eq!(distribution_function(&p, 3.0).unwrap(), 0.0);
        assert_eq!(distribution_function(&p, 0.0).unwrap(), 1.0);
        assert!(distribution_function(&p, -1.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = random_profile(&mut rng);
            // every step boundary and every level
            let mut ts: Vec<f64> = (0..=p.len()).map(|k| k as f64 * p.weight()).collect();
            ts.push(0.5 * p.weight());
            for t in ts {
                let nt = distribution_function(&p, p.mu(t)).unwrap();
                assert!(nt <= t + 1e-12);
            }
            for &s in p.sigmas() {
                assert!(p.mu(distribution_function(&p, s).unwrap()) <= s);
            }
        }
    }

    #[test]
    fn lorentz_cases() {
        let p = SingularValueProfile::new(vec![1.0, 0.0, 0.0], 0.3).unwrap();
        for &(pp, q) in &[(1.5, 2.0), (2.0, 1.0), (3.0, 4.0)] {
            let want = 0.3f64.powf(1.0 / pp) * (pp / q).powf(1.0 / q);
            assert!((nc_lorentz_norm(&p, pp, q).unwrap() - want).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let prof = random_profile(&mut rng);
            for &pp in &[1.0, 2.0, 3.5] {
                let a = nc_lorentz_norm(&prof, pp, pp).unwrap();
                let b = schatten_norm(&prof, pp).unwrap();
                assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
                // monotone embedding L^{p,1} into L^{p,inf}
                let lo = nc_lorentz_norm(&prof, pp, 1.0).unwrap();
                let hi = nc_lorentz_norm(&prof, pp, f64::INFINITY).unwrap();
                if lo > 0.0 {
                    worst = worst.max(hi / lo);
                }
            }
        }
        assert!(worst.is_finite() && worst <= 1.0 + 1e-12);
        assert!(nc_lorentz_norm(&p, 0.5, 1.0).is_err());
    }

    #[test]
    fn spectral_trace_consistency() {
        let p = SingularValueProfile::new(vec![2.0, 1.5, 0.25, 0.0], 0.4).unwrap();
        let a = spectral_trace(&p, |s| s.powf(2.5)).unwrap();
        assert!((a - schatten_norm(&p, 2.5).unwrap().powf(2.5)).abs() < 1e-12);
        let b = spectral_trace(&p, |s| if s > 0.3 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(b, distribution_function(&p, 0.3).unwrap());
        assert!(spectral_trace(&p, |s| s.ln()).is_err());
        // step function integrates to the trace norm
        let integral: f64 = p.sigmas().iter().map(|s| s * p.weight()).sum();
        assert!((integral - schatten_norm(&p, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn flat_spectrum_entropy() {
        for &(k, c) in &[(3usize, 0.2), (10, 1.0 / (2.0 * std::f64::consts::PI)), (1, 0.5)] {
            let mut s = vec![1.7; k];
            s.extend([0.0; 4]);
            let p = SingularValueProfile::new(s, c).unwrap();
            for &pp in &[1.2, 2.0] {
                let e = normalized_entropy(&p, pp).unwrap();
                assert!((e + (c * k as f64).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triangle_and_holder() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = random_op(&mut rng, 6);
            let y = random_op(&mut rng, 6);
            let (px, py) = (singular_profile(&x).unwrap(), singular_profile(&y).unwrap());
            let s = singular_profile(&x.combine(C64::new(1.0, 0.0), &y, C64::new(1.0, 0.0)).unwrap()).unwrap();
            for &p in &[1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
                let lhs = schatten_norm(&s, p).unwrap();
                assert!(lhs <= schatten_norm(&px, p).unwrap() + schatten_norm(&py, p).unwrap() + 1e-12);
            }
            let p: f64 = rng.gen_range(1.1..4.0);
            let pd = p / (p - 1.0);
            let tau = crate::weyl::trace_tau(&x.product(&y).unwrap()).norm();
            assert!(tau <= schatten_norm(&px, p).unwrap() * schatten_norm(&py, pd).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn csv_export() {
        let p = SingularValueProfile::new(vec![1.0, 0.5], 0.25).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("k,sigma_k,c\n0,1e0,2.5e-1"));
    }
}
