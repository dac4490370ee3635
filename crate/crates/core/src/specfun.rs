//! Complete elliptic integrals and Jacobi elliptic functions.
//!
//! All routines take the parameter m = k^2 (not the modulus k). The integral
//! K(m) is computed by the arithmetic-geometric mean, the Jacobi triple by the
//! descending Landen transformation; complex arguments are split with the
//! addition theorem for a real shift plus an imaginary shift.

use num_complex::Complex64;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};

/// Parameter m = k^2 of the elliptic functions, valid on [0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus(f64);

impl EllipticModulus {
    pub fn new(m: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&m) {
            return Err(Error::Domain("elliptic parameter m must satisfy 0 <= m < 1"));
        }
        Ok(EllipticModulus(m))
    }

    #[inline]
    pub fn m(&self) -> f64 {
        self.0
    }
}

/// Complete elliptic integral of the first kind,
/// K(m) = Integral_0^1 dx / sqrt((1 - x^2)(1 - m x^2)).
pub fn complete_elliptic_k(m: f64) -> Result<f64> {
    let _ = EllipticModulus::new(m)?;
    // AGM: K(m) = pi / (2 agm(1, sqrt(1-m)))
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        a = an;
        b = bn;
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
    }
    Ok(core::f64::consts::PI / (2.0 * a))
}

/// Complementary integral K'(m) = K(1 - m); diverges for m = 0.
pub fn complete_elliptic_k_complementary(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) || m == 0.0 {
        return Err(Error::Domain("complementary integral requires 0 < m <= 1"));
    }
    complete_elliptic_k(1.0 - m)
}

/// Jacobi sn, cn, dn at real argument u with parameter m (descending Landen,
/// Numerical Recipes style; emmc = 1 - m).
fn sncndn_real(u: f64, m: f64) -> (f64, f64, f64) {
    const CA: f64 = 1.0e-9; // accuracy is ~CA^2
    let emc = 1.0 - m;
    if emc.abs() < 1e-300 {
        // m = 1 limit
        let c = 1.0 / u.cosh();
        return (u.tanh(), c, c);
    }
    let mut emc = emc;
    let mut uu = u;
    let mut em = [0.0f64; 16];
    let mut en = [0.0f64; 16];
    let mut a = 1.0f64;
    let mut dn = 1.0f64;
    let mut c = 0.0f64;
    let mut l = 0usize;
    for i in 0..15 {
        l = i;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (a - emc).abs() <= CA * a {
            break;
        }
        emc *= a;
        a = c;
    }
    uu *= c;
    let mut sn = uu.sin();
    let mut cn = uu.cos();
    if sn != 0.0 {
        let mut aa = cn / sn;
        c *= aa;
        for ii in (0..=l).rev() {
            let b = em[ii];
            aa *= c;
            c *= dn;
            dn = (en[ii] + aa) / (b + aa);
            aa = c / b;
        }
        aa = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn >= 0.0 { aa } else { -aa };
        cn = c * sn;
    }
    (sn, cn, dn)
}

/// Jacobi elliptic functions (sn, cn, dn) at complex argument sigma with
/// parameter m. The argument must stay inside the fundamental strip,
/// |Im sigma| < K'(m).
pub fn jacobi_sn_cn_dn(sigma: Complex64, m: f64) -> Result<(Complex64, Complex64, Complex64)> {
    let _ = EllipticModulus::new(m)?;
    if !sigma.re.is_finite() || !sigma.im.is_finite() {
        return Err(Error::Domain("jacobi argument must be finite"));
    }
    let x = sigma.re;
    let y = sigma.im;
    if y != 0.0 {
        let kp = complete_elliptic_k(1.0 - m)?;
        if y.abs() >= kp {
            return Err(Error::Domain("jacobi argument outside the strip |Im| < K'(m)"));
        }
    }
    let (s, c, d) = sncndn_real(x, m);
    if y == 0.0 {
        return Ok((
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
            Complex64::new(d, 0.0),
        ));
    }
    // addition theorem with imaginary shift: functions of y carry parameter 1-m
    let (s1, c1, d1) = sncndn_real(y, 1.0 - m);
    let denom = c1 * c1 + m * (s * s1) * (s * s1);
    if denom.abs() < 1e-300 {
        return Err(Error::Convergence("jacobi evaluation too close to a pole"));
    }
    let sn = Complex64::new(s * d1, c * d * s1 * c1) / denom;
    let cn = Complex64::new(c * c1, -s * d * s1 * d1) / denom;
    let dn = Complex64::new(d * c1 * d1, -m * s * c * s1) / denom;
    Ok((sn, cn, dn))
}
