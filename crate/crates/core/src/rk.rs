//! Runge-Kutta tableaux and the eigen-decomposition of (dt A)^{-1} that turns
//! matrix-argument operator evaluations into independent scalar-frequency
//! applications.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CMat, Lu};

/// Butcher tableau of an A- and L-stable Runge-Kutta method.
#[derive(Debug, Clone)]
pub struct ButcherTableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub stages: usize,
}

impl ButcherTableau {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let m = b.len();
        if a.len() != m || a.iter().any(|r| r.len() != m) || c.len() != m {
            return Err(Error::Dimension("tableau blocks must share the stage count"));
        }
        let t = ButcherTableau { a, b, c, stages: m };
        // L-stability structure: b^T A^{-1} = (0, ..., 0, 1) and c_m = 1
        let bta = t.bt_a_inv()?;
        for (i, v) in bta.iter().enumerate() {
            let expect = if i + 1 == m { 1.0 } else { 0.0 };
            if (v - expect).abs() > 1e-13 {
                return Err(Error::Invalid("tableau violates b^T A^{-1} = (0,...,0,1)"));
            }
        }
        if (t.c[m - 1] - 1.0).abs() > 1e-14 {
            return Err(Error::Invalid("tableau requires c_m = 1"));
        }
        Ok(t)
    }

    /// 2-stage Radau IIA (order 3).
    pub fn radau_iia_2() -> Self {
        ButcherTableau::new(
            vec![vec![5.0 / 12.0, -1.0 / 12.0], vec![3.0 / 4.0, 1.0 / 4.0]],
            vec![3.0 / 4.0, 1.0 / 4.0],
            vec![1.0 / 3.0, 1.0],
        )
        .expect("Radau IIA tableau is valid")
    }

    /// Implicit Euler as the 1-stage member of the family.
    pub fn implicit_euler() -> Self {
        ButcherTableau::new(vec![vec![1.0]], vec![1.0], vec![1.0]).expect("implicit Euler tableau is valid")
    }

    fn a_cmat(&self) -> CMat {
        CMat::from_fn(self.stages, self.stages, |i, j| Complex64::new(self.a[i][j], 0.0))
    }

    /// b^T A^{-1} as a real vector.
    pub fn bt_a_inv(&self) -> Result<Vec<f64>> {
        let m = self.stages;
        let a = self.a_cmat();
        // solve A^T y = b
        let at = CMat::from_fn(m, m, |i, j| a.get(j, i));
        let lu = Lu::factor(&at).map_err(|_| Error::Singular("tableau matrix A is singular"))?;
        let b: Vec<Complex64> = self.b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(lu.solve(&b).iter().map(|z| z.re).collect())
    }

    /// Moduli of the eigenvalues of A (analytic for 1 and 2 stages).
    pub fn eigenvalue_moduli(&self) -> Result<Vec<f64>> {
        Ok(self.eigenvalues()?.iter().map(|z| z.norm()).collect())
    }

    fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        match self.stages {
            1 => Ok(vec![Complex64::new(self.a[0][0], 0.0)]),
            2 => {
                let tr = self.a[0][0] + self.a[1][1];
                let det = self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0];
                let disc = tr * tr - 4.0 * det;
                if disc >= 0.0 {
                    let r = disc.sqrt();
                    Ok(vec![
                        Complex64::new(0.5 * (tr + r), 0.0),
                        Complex64::new(0.5 * (tr - r), 0.0),
                    ])
                } else {
                    let r = (-disc).sqrt();
                    Ok(vec![
                        Complex64::new(0.5 * tr, 0.5 * r),
                        Complex64::new(0.5 * tr, -0.5 * r),
                    ])
                }
            }
            _ => Err(Error::Invalid("only 1- and 2-stage tableaux are supported")),
        }
    }

    /// Stability function R(z) = 1 + z b^T (I - z A)^{-1} 1.
    pub fn stability_function(&self, z: Complex64) -> Result<Complex64> {
        let m = self.stages;
        let sys = CMat::from_fn(m, m, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            Complex64::new(delta, 0.0) - z * self.a[i][j]
        });
        let lu = Lu::factor(&sys)?;
        let ones = vec![Complex64::new(1.0, 0.0); m];
        let w = lu.solve(&ones);
        let mut acc = Complex64::new(0.0, 0.0);
        for (bi, wi) in self.b.iter().zip(w.iter()) {
            acc += wi * *bi;
        }
        Ok(Complex64::new(1.0, 0.0) + z * acc)
    }
}

/// Eigen-decomposition of (dt A)^{-1}: (dt A)^{-1} = T diag(mu) T^{-1}.
#[derive(Debug, Clone)]
pub struct StageSpectrum {
    pub mu: Vec<Complex64>,
    pub t: CMat,
    pub t_inv: CMat,
    pub dt: f64,
}

pub fn stage_spectrum(tableau: &ButcherTableau, dt: f64) -> Result<StageSpectrum> {
    if dt <= 0.0 {
        return Err(Error::Domain("time step must be positive"));
    }
    let m = tableau.stages;
    let lam = tableau.eigenvalues()?;
    if m == 2 && (lam[0] - lam[1]).norm() < 1e-14 * lam[0].norm() {
        return Err(Error::Singular("tableau matrix A is defective"));
    }
    // eigenvectors of A; (dt A)^{-1} shares them with eigenvalues 1/(dt lambda)
    let t = match m {
        1 => CMat::from_fn(1, 1, |_, _| Complex64::new(1.0, 0.0)),
        2 => {
            let a = &tableau.a;
            CMat::from_fn(2, 2, |i, j| {
                // column j: eigenvector (a01, lambda_j - a00) or fallback
                if a[0][1].abs() > 1e-300 {
                    if i == 0 {
                        Complex64::new(a[0][1], 0.0)
                    } else {
                        lam[j] - a[0][0]
                    }
                } else if i == 0 {
                    lam[j] - a[1][1]
                } else {
                    Complex64::new(a[1][0], 0.0)
                }
            })
        }
        _ => return Err(Error::Invalid("only 1- and 2-stage tableaux are supported")),
    };
    let t_inv = match m {
        1 => CMat::from_fn(1, 1, |_, _| Complex64::new(1.0, 0.0) / t.get(0, 0)),
        _ => {
            let det = t.get(0, 0) * t.get(1, 1) - t.get(0, 1) * t.get(1, 0);
            if det.norm() < 1e-300 {
                return Err(Error::Singular("tableau matrix A is defective"));
            }
            CMat::from_fn(2, 2, |i, j| {
                let v = match (i, j) {
                    (0, 0) => t.get(1, 1),
                    (0, 1) => -t.get(0, 1),
                    (1, 0) => -t.get(1, 0),
                    _ => t.get(0, 0),
                };
                v / det
            })
        }
    };
    let mu = lam.iter().map(|l| Complex64::new(1.0, 0.0) / (l * dt)).collect();
    Ok(StageSpectrum { mu, t, t_inv, dt })
}

/// Cache of stage spectra keyed by dt quantized to 12 significant digits,
/// so variable schedules with repeated steps factor only once.
#[derive(Debug, Default)]
pub struct SpectrumCache {
    map: BTreeMap<u64, StageSpectrum>,
}

pub fn quantize_dt(dt: f64) -> u64 {
    let exp = dt.abs().log10().floor() as i32;
    let mantissa = (dt / 10f64.powi(exp - 11)).round() as u64;
    (mantissa << 12) ^ (exp + 2048) as u64
}

impl SpectrumCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, tableau: &ButcherTableau, dt: f64) -> Result<&StageSpectrum> {
        let key = quantize_dt(dt);
        if !self.map.contains_key(&key) {
            let sp = stage_spectrum(tableau, dt)?;
            self.map.insert(key, sp);
        }
        Ok(self.map.get(&key).unwrap())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radau_tableau_structure() {
        let t = ButcherTableau::radau_iia_2();
        let bta = t.bt_a_inv().unwrap();
        assert!(bta[0].abs() < 1e-14 && (bta[1] - 1.0).abs() < 1e-14);
        // row sums of A equal c
        for i in 0..2 {
            let s: f64 = t.a[i].iter().sum();
            assert!((s - t.c[i]).abs() < 1e-15);
        }
        // eigenvalues 1/3 +- i sqrt(2)/6, modulus sqrt(1/6)
        let moduli = t.eigenvalue_moduli().unwrap();
        let expect = (1.0f64 / 6.0).sqrt();
        assert!((moduli[0] - expect).abs() < 1e-14);
        assert!((moduli[1] - expect).abs() < 1e-14);
    }

    #[test]
    fn stability_a_and_l() {
        let t = ButcherTableau::radau_iia_2();
        // |R(iy)| <= 1 on the imaginary axis
        for i in 0..50 {
            let y = -40.0 + 80.0 * (i as f64) / 49.0;
            let r = t.stability_function(Complex64::new(0.0, y)).unwrap();
            assert!(r.norm() <= 1.0 + 1e-12, "|R({y}i)| = {}", r.norm());
        }
        // R(z) -> 0 deep in the left half-plane
        let r = t.stability_function(Complex64::new(-1e6, 0.0)).unwrap();
        assert!(r.norm() < 1e-5);
    }

    #[test]
    fn spectrum_reconstructs_inverse() {
        let tab = ButcherTableau::radau_iia_2();
        for &dt in &[1.0, 0.15, 3.7e-3] {
            let sp = stage_spectrum(&tab, dt).unwrap();
            // T diag(mu) T^{-1} == (dt A)^{-1}
            let d = CMat::from_fn(2, 2, |i, j| if i == j { sp.mu[i] } else { Complex64::new(0.0, 0.0) });
            let recon = sp.t.matmul(&d).matmul(&sp.t_inv);
            // (dt A)^{-1} directly
            let a = CMat::from_fn(2, 2, |i, j| Complex64::new(dt * tab.a[i][j], 0.0));
            let lu = Lu::factor(&a).unwrap();
            let inv = CMat::from_fn(2, 2, |i, j| {
                let mut e = vec![Complex64::new(0.0, 0.0); 2];
                e[j] = Complex64::new(1.0, 0.0);
                lu.solve(&e)[i]
            });
            for (x, y) in recon.data.iter().zip(inv.data.iter()) {
                assert!((x - y).norm() < 1e-12 * inv.frobenius_norm());
            }
        }
    }

    #[test]
    fn spectrum_radau_dt1() {
        // eigenvalues of A^{-1} are 2 -+ i sqrt(2)
        let sp = stage_spectrum(&ButcherTableau::radau_iia_2(), 1.0).unwrap();
        let mut mu = sp.mu.clone();
        mu.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((mu[0] - Complex64::new(2.0, -(2.0f64).sqrt())).norm() < 1e-13);
        assert!((mu[1] - Complex64::new(2.0, (2.0f64).sqrt())).norm() < 1e-13);
    }

    #[test]
    fn spectrum_scaling_in_dt() {
        let tab = ButcherTableau::radau_iia_2();
        let s1 = stage_spectrum(&tab, 1.0).unwrap();
        let s2 = stage_spectrum(&tab, 0.25).unwrap();
        for (a, b) in s1.mu.iter().zip(s2.mu.iter()) {
            assert!((a / b - 0.25).norm() < 1e-14);
        }
    }

    #[test]
    fn implicit_euler_spectrum() {
        let sp = stage_spectrum(&ButcherTableau::implicit_euler(), 0.5).unwrap();
        assert_eq!(sp.mu.len(), 1);
        assert!((sp.mu[0] - 2.0).norm() < 1e-15);
        assert!((sp.t.get(0, 0) * sp.t_inv.get(0, 0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn identity_roundtrip_through_stages() {
        // applying the identity operator at matrix argument returns the input
        let tab = ButcherTableau::radau_iia_2();
        let sp = stage_spectrum(&tab, 0.3).unwrap();
        let x = vec![Complex64::new(1.7, -0.3), Complex64::new(0.2, 2.2)];
        let u = sp.t_inv.matvec(&x);
        let y = sp.t.matvec(&u);
        for (a, b) in x.iter().zip(y.iter()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn cache_hits_on_quantized_dt() {
        let tab = ButcherTableau::radau_iia_2();
        let mut cache = SpectrumCache::new();
        cache.get(&tab, 0.1).unwrap();
        cache.get(&tab, 0.1 * (1.0 + 1e-14)).unwrap();
        assert_eq!(cache.len(), 1);
        cache.get(&tab, 0.2).unwrap();
        assert_eq!(cache.len(), 2);
    }
}
