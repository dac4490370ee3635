//! Construction of the complex integration nodes s_l and weights w_l of the
//! generalized convolution quadrature from the time-step schedule and the
//! Runge-Kutta stability function.
//!
//! The elliptic machinery (step ratio q, modulus k, Jacobi functions on the
//! sigma grid) distributes nodes zeta_l on the unit circle, optimally for the
//! spread between the smallest and largest step. Each zeta_l is mapped to the
//! frequency plane by solving R(z) zeta = 1 on the boundary of the stability
//! region, so the history recursion multiplier R(dt s) has modulus close to
//! one at every node; for implicit Euler this inversion is z = 1 - zeta and
//! the construction reduces to the plain circle through 0 and 2/dt_min. A
//! small positive shift keeps the contour clear of s = 0. Nodes come in
//! conjugate pairs and only one representative per pair is stored.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::rk::ButcherTableau;
use crate::specfun::{complete_elliptic_k, jacobi_sn_cn_dn};

/// Ordered list of positive time-step sizes.
#[derive(Debug, Clone)]
pub struct StepSchedule {
    steps: Vec<f64>,
}

impl StepSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Invalid("schedule needs at least one step"));
        }
        if steps.iter().any(|&dt| !(dt > 0.0) || !dt.is_finite()) {
            return Err(Error::Invalid("all step sizes must be positive and finite"));
        }
        Ok(StepSchedule { steps })
    }

    pub fn uniform(total_time: f64, n: usize) -> Result<Self> {
        if n == 0 || !(total_time > 0.0) {
            return Err(Error::Invalid("uniform schedule needs n >= 1 and T > 0"));
        }
        Self::new(alloc::vec![total_time / n as f64; n])
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt_min(&self) -> f64 {
        self.steps.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn dt_max(&self) -> f64 {
        self.steps.iter().cloned().fold(0.0, f64::max)
    }

    pub fn total_time(&self) -> f64 {
        self.steps.iter().sum()
    }

    /// Times t_n = sum of the first n steps.
    pub fn times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.steps
            .iter()
            .map(|dt| {
                t += dt;
                t
            })
            .collect()
    }
}

/// Integration contour: conjugate-pair representatives of the N_Q nodes.
#[derive(Debug, Clone)]
pub struct Contour {
    /// One node per conjugate pair (the low-index half of the sigma grid,
    /// ordered from small to large real part).
    pub nodes: Vec<Complex64>,
    /// Weights w_l matching `nodes`.
    pub weights: Vec<Complex64>,
    /// Full node count N_Q (twice the stored count).
    pub n_q: usize,
    /// True when only half of the node set is stored (always the case here).
    pub stored_half: bool,
    pub q: f64,
    pub k: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Positive real shift applied to all nodes.
    pub shift: f64,
}

impl Contour {
    pub fn n_half(&self) -> usize {
        self.nodes.len()
    }

    /// Reconstruct the full node set in grid order (diagnostic helper).
    pub fn full_nodes(&self) -> Vec<Complex64> {
        let mut all = self.nodes.clone();
        for s in self.nodes.iter().rev() {
            all.push(s.conj());
        }
        all
    }

    pub fn full_weights(&self) -> Vec<Complex64> {
        let mut all = self.weights.clone();
        for w in self.weights.iter().rev() {
            all.push(w.conj());
        }
        all
    }
}

/// Number of contour nodes: ceil(N ln(N)^2) for multi-stage methods,
/// ceil(N ln N) for one stage; at least 4 and rounded up to even so the
/// conjugate pairing stays exact.
pub fn quadrature_count(n_steps: usize, stages: usize) -> usize {
    let n = n_steps as f64;
    let ln = n.ln();
    let raw = if stages > 1 { n * ln * ln } else { n * ln };
    let mut count = raw.ceil() as usize;
    if count < 4 {
        count = 4;
    }
    if count % 2 == 1 {
        count += 1;
    }
    count
}

/// Step-size ratio parameter q. For multi-stage methods
/// q = 5 (dt_max max|lambda|) / (dt_min min|lambda|); the factor 5 is dropped
/// for implicit Euler. A degenerate q = 1 is perturbed to 1.05.
pub fn step_ratio_q(schedule: &StepSchedule, tableau: &ButcherTableau) -> Result<f64> {
    let moduli = tableau.eigenvalue_moduli()?;
    let lmax = moduli.iter().cloned().fold(0.0, f64::max);
    let lmin = moduli.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmin <= 0.0 {
        return Err(Error::Singular("tableau has a zero eigenvalue"));
    }
    let ratio = (schedule.dt_max() * lmax) / (schedule.dt_min() * lmin);
    let q = if tableau.stages > 1 { 5.0 * ratio } else { ratio };
    Ok(if q <= 1.0 { 1.05 } else { q })
}

/// Elliptic modulus k = (q - sqrt(2q-1)) / (q + sqrt(2q-1)), q > 1.
pub fn modulus_k(q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::Domain("step ratio q must exceed 1"));
    }
    let r = (2.0 * q - 1.0).sqrt();
    Ok((q - r) / (q + r))
}

/// Rational stability function R(z) = P(z)/Q(z) as polynomial coefficients
/// (supports 1 and 2 stages; Q = det(I - zA), P = Q + z b^T adj(I - zA) 1).
struct StabilityRational {
    // P(z) = 1 + p1 z + p2 z^2, Q(z) = 1 + q1 z + q2 z^2
    p1: f64,
    p2: f64,
    q1: f64,
    q2: f64,
}

impl StabilityRational {
    fn from_tableau(t: &ButcherTableau) -> Result<Self> {
        match t.stages {
            1 => Ok(StabilityRational { p1: t.b[0] - t.a[0][0], p2: 0.0, q1: -t.a[0][0], q2: 0.0 }),
            2 => {
                let a = &t.a;
                let tr = a[0][0] + a[1][1];
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                let (b1, b2) = (t.b[0], t.b[1]);
                Ok(StabilityRational {
                    p1: b1 + b2 - tr,
                    p2: det + b1 * a[0][1] + b2 * a[1][0] - b1 * a[1][1] - b2 * a[0][0],
                    q1: -tr,
                    q2: det,
                })
            }
            _ => Err(Error::Invalid("only 1- and 2-stage tableaux are supported")),
        }
    }

    fn p(&self, z: Complex64) -> Complex64 {
        Complex64::new(1.0, 0.0) + z * self.p1 + z * z * self.p2
    }

    fn q(&self, z: Complex64) -> Complex64 {
        Complex64::new(1.0, 0.0) + z * self.q1 + z * z * self.q2
    }

    /// Solve R(z) zeta = 1, i.e. Q(z) - zeta P(z) = 0; roots of a quadratic
    /// (or linear) polynomial in z.
    fn invert(&self, zeta: Complex64) -> Vec<Complex64> {
        let c2 = Complex64::new(self.q2, 0.0) - zeta * self.p2;
        let c1 = Complex64::new(self.q1, 0.0) - zeta * self.p1;
        let c0 = Complex64::new(1.0, 0.0) - zeta;
        if c2.norm() < 1e-14 * (c1.norm() + c0.norm()).max(1.0) {
            return alloc::vec![-c0 / c1];
        }
        let disc = (c1 * c1 - 4.0 * c2 * c0).sqrt();
        // numerically stable quadratic roots
        let sgn = if (c1.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
        let big = -(c1 + disc * sgn) / 2.0;
        alloc::vec![big / c2, c0 / big]
    }

    /// dz/dzeta on the solution branch: P^2 / (P Q' - Q P').
    fn dz_dzeta(&self, z: Complex64) -> Complex64 {
        let p = self.p(z);
        let q = self.q(z);
        let pp = Complex64::new(self.p1, 0.0) + z * (2.0 * self.p2);
        let qp = Complex64::new(self.q1, 0.0) + z * (2.0 * self.q2);
        p * p / (p * qp - q * pp)
    }
}

/// Build the contour for a given schedule and node count (n_q even).
pub fn build_contour(schedule: &StepSchedule, tableau: &ButcherTableau, n_q: usize) -> Result<Contour> {
    if n_q < 2 || n_q % 2 != 0 {
        return Err(Error::Invalid("node count must be even and at least 2"));
    }
    let q = step_ratio_q(schedule, tableau)?;
    let k = modulus_k(q)?;
    let m = k * k;
    let dt_min = schedule.dt_min();
    let dt_max = schedule.dt_max();
    let kk = complete_elliptic_k(m)?;
    let kp = complete_elliptic_k(1.0 - m)?;
    let sqrt2q1 = (2.0 * q - 1.0).sqrt();
    let k_inv = 1.0 / k;
    let rational = StabilityRational::from_tableau(tableau)?;
    // the zeta -> z inversion has `stages` sheets, so one sigma period covers
    // 1/stages of the closed frequency curve; the stored representatives are
    // always N_Q/2 nodes and the conjugate half completes the curve
    let stages = tableau.stages;
    let n_rep = n_q / 2;
    let grid = if stages > 1 { n_rep } else { n_q };
    let dsigma = 4.0 * kk / grid as f64;
    // clockwise parametrization absorbs the orientation of the closed path:
    // w_l = (ds/dsigma) * dsigma / (2 pi i)
    let wfac = Complex64::new(0.0, -dsigma / (2.0 * core::f64::consts::PI));
    // keep the contour clear of s = 0 (kernels may be singular there); the
    // history growth this shift induces is bounded by exp(shift * T)
    let shift = 2.0 / schedule.total_time();

    let eval_zeta = |sigma: Complex64| -> Result<(Complex64, Complex64)> {
        let (sn, cn, dn) = jacobi_sn_cn_dn(sigma, m)?;
        let denom = k_inv - sn;
        if denom.norm() < 1e-10 {
            return Err(Error::Singular("contour node too close to the sn pole"));
        }
        // nodes on the unit circle, clustered for the step-size spread
        let gamma_unit = (sqrt2q1 * (k_inv + sn) / denom - Complex64::new(1.0, 0.0)) / (q - 1.0);
        let dgamma_unit = (2.0 * cn * dn / (k * denom * denom)) * (sqrt2q1 / (q - 1.0));
        Ok((Complex64::new(1.0, 0.0) - gamma_unit, -dgamma_unit))
    };
    let track = |zeta: Complex64, z_prev: Complex64| -> Complex64 {
        *rational
            .invert(zeta)
            .iter()
            .min_by(|a, b| (*a - z_prev).norm().partial_cmp(&(*b - z_prev).norm()).unwrap())
            .unwrap()
    };

    let mut nodes = Vec::with_capacity(n_rep);
    let mut weights = Vec::with_capacity(n_rep);
    // branch tracking starts at z = 0 (zeta = 1 at sigma = -K + i K'/2)
    let mut z_prev = Complex64::new(0.0, 0.0);
    let mut sigma_prev = -kk;
    for ell in 1..=n_rep {
        let sigma_x = -kk + (ell as f64 - 0.5) * dsigma;
        // refine the tracking path so the closest-root continuation cannot
        // hop between sheets on coarse grids
        const SUBSTEPS: usize = 4;
        for sub in 1..=SUBSTEPS {
            let x = sigma_prev + (sigma_x - sigma_prev) * sub as f64 / SUBSTEPS as f64;
            let (zeta, _) = eval_zeta(Complex64::new(x, 0.5 * kp))?;
            z_prev = track(zeta, z_prev);
        }
        sigma_prev = sigma_x;
        let (zeta, dzeta) = eval_zeta(Complex64::new(sigma_x, 0.5 * kp))?;
        let z = track(zeta, z_prev);
        z_prev = z;
        let s = z / dt_min + shift;
        let ds_dsigma = rational.dz_dzeta(z) * dzeta / dt_min;
        nodes.push(s);
        weights.push(ds_dsigma * wfac);
    }
    Ok(Contour { nodes, weights, n_q, stored_half: true, q, k, dt_min, dt_max, shift })
}
