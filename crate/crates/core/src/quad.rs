//! Triangle quadrature: regular Gauss rules with a distance-based order
//! heuristic and Duffy-transformed rules for the weakly singular collocation
//! integrals.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::{Triangle, V3};

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev initial guess
        let mut t = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, t);
        x[n - 1 - i] = 0.5 * (t + 1.0);
        w[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

/// Quadrature rule on the reference triangle {x >= 0, y >= 0, x + y <= 1}.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Rule exact for polynomials up to the requested degree; positive weights
/// summing to the reference area 1/2. Order 1 is the centroid rule; higher
/// orders use a collapsed Gauss-Legendre product.
pub fn gauss_triangle(order: usize) -> Result<TriangleRule> {
    if !(1..=10).contains(&order) {
        return Err(Error::Domain("triangle rule order must be in 1..=10"));
    }
    if order == 1 {
        return Ok(TriangleRule {
            points: vec![(1.0 / 3.0, 1.0 / 3.0)],
            weights: vec![0.5],
            degree: 1,
        });
    }
    // map (u, v) in [0,1]^2 to (u, v(1-u)); the Jacobian (1-u) raises the
    // u-degree by one
    let nu = (order + 2).div_ceil(2);
    let nv = (order + 1).div_ceil(2);
    let (xu, wu) = gauss_legendre_unit(nu);
    let (xv, wv) = gauss_legendre_unit(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (u, cu) in xu.iter().zip(wu.iter()) {
        for (v, cv) in xv.iter().zip(wv.iter()) {
            points.push((*u, v * (1.0 - u)));
            weights.push(cu * cv * (1.0 - u));
        }
    }
    Ok(TriangleRule { points, weights, degree: order })
}

/// Precomputed family of rules up to a base order, used by the assembly loop.
#[derive(Debug, Clone)]
pub struct RuleTable {
    rules: Vec<TriangleRule>,
    pub base: usize,
}

impl RuleTable {
    pub fn new(base: usize) -> Result<Self> {
        let rules = (1..=base).map(gauss_triangle).collect::<Result<Vec<_>>>()?;
        Ok(RuleTable { rules, base })
    }

    pub fn rule(&self, order: usize) -> &TriangleRule {
        &self.rules[order.clamp(1, self.base) - 1]
    }
}

/// Heuristic quadrature order for a regular integral: full order for near
/// interactions, decaying with the distance/size ratio, clamped to [2, base].
pub fn select_order(dist: f64, h_elem: f64, base: usize) -> usize {
    let ratio = (dist.max(h_elem)) / h_elem;
    let drop = ratio.log2().floor() as i64;
    let order = base as i64 - drop;
    order.clamp(2, base as i64) as usize
}

/// Where a collocation point sits relative to a triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularSite {
    Vertex(usize),
    Edge(usize),
    Interior,
}

/// Classify whether `x` lies on the (closed) triangle, within a relative
/// tolerance; `None` means the point is off the element and a regular rule
/// applies.
pub fn locate_on_triangle(tri: &Triangle, x: &V3) -> Option<SingularSite> {
    let h = tri.max_edge();
    let (lam, d_plane) = tri.barycentric(x);
    let tol = 1e-9;
    if d_plane.abs() > tol * h {
        return None;
    }
    if lam.iter().any(|&l| l < -tol) {
        return None;
    }
    let zeros: Vec<usize> = (0..3).filter(|&i| lam[i] <= tol).collect();
    match zeros.len() {
        2 => {
            // at the vertex opposite the two vanishing coordinates
            let v = (0..3).find(|i| !zeros.contains(i)).unwrap();
            Some(SingularSite::Vertex(v))
        }
        // lam[i] = 0 on the edge opposite vertex i
        1 => Some(SingularSite::Edge(zeros[0])),
        0 => Some(SingularSite::Interior),
        _ => None,
    }
}

/// Integrate `f` (evaluated at physical points, weakly singular like 1/r at
/// `x0`) over the triangle by splitting at the singular point and applying
/// the Duffy substitution on each subtriangle. `n` Gauss points per
/// direction.
pub fn duffy_singular(
    tri: &Triangle,
    x0: &V3,
    site: SingularSite,
    n: usize,
    mut f: impl FnMut(&V3) -> Complex64,
) -> Complex64 {
    let subs: Vec<(V3, V3)> = match site {
        SingularSite::Vertex(v) => {
            vec![(tri.v[(v + 1) % 3], tri.v[(v + 2) % 3])]
        }
        SingularSite::Edge(opposite) => {
            // split along the connection x0 -> opposite vertex
            let a = tri.v[(opposite + 1) % 3];
            let b = tri.v[(opposite + 2) % 3];
            let o = tri.v[opposite];
            vec![(a, o), (o, b)]
        }
        SingularSite::Interior => {
            vec![
                (tri.v[0], tri.v[1]),
                (tri.v[1], tri.v[2]),
                (tri.v[2], tri.v[0]),
            ]
        }
    };
    let (xs, ws) = gauss_legendre_unit(n);
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in subs {
        let ea = a - *x0;
        let eb = b - *x0;
        let jac2 = ea.cross(&eb).norm(); // twice the subtriangle area
        if jac2 < 1e-300 {
            continue;
        }
        for (u, cu) in xs.iter().zip(ws.iter()) {
            for (v, cv) in xs.iter().zip(ws.iter()) {
                // y = x0 + u ((1-v) ea + v eb); jacobian u * jac2
                let e = ea.scale(1.0 - v) + eb.scale(*v);
                let y = *x0 + e.scale(*u);
                acc += f(&y) * (cu * cv * u * jac2);
            }
        }
    }
    acc
}
