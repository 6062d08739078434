//! Quadrature on the reference edge, triangle and tetrahedron.
//!
//! Points are stored in barycentric coordinates, weights sum to the measure of
//! the reference simplex (1, 1/2, 1/6). Low degrees use the classical
//! symmetric rules; higher degrees use collapsed Gauss-Legendre products,
//! which keep every weight positive. Each rule is checked against all
//! monomials up to its degree when first built.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use thiserror::Error;

pub const MAX_DEGREE: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Simplex {
    Edge,
    Triangle,
    Tet,
}

impl Simplex {
    pub fn dim(self) -> usize {
        match self {
            Simplex::Edge => 1,
            Simplex::Triangle => 2,
            Simplex::Tet => 3,
        }
    }

    pub fn reference_measure(self) -> f64 {
        match self {
            Simplex::Edge => 1.0,
            Simplex::Triangle => 0.5,
            Simplex::Tet => 1.0 / 6.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature degree {0} is not supported (max {MAX_DEGREE})")]
    UnsupportedDegree(usize),
    #[error(
        "{simplex:?} rule of degree {degree} fails on monomial {exponents:?}: error {error:e}"
    )]
    NotExact {
        simplex: Simplex,
        degree: usize,
        exponents: [usize; 3],
        error: f64,
    },
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub simplex: Simplex,
    pub degree: usize,
    /// Barycentric coordinates; only the first `dim + 1` entries are used.
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weights rescaled to a simplex of the given measure.
    pub fn scaled_weights(&self, measure: f64) -> impl Iterator<Item = f64> + '_ {
        let s = measure / self.simplex.reference_measure();
        self.weights.iter().map(move |w| w * s)
    }

    /// Integral over the reference simplex of `f(x, y, z)`, with reference
    /// coordinates taken from the trailing barycentric entries.
    pub fn integrate_reference(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| {
                let x = [b[1], b[2], b[3]];
                w * f(&x)
            })
            .sum()
    }

    fn verify(&self) -> Result<(), QuadratureError> {
        let dim = self.simplex.dim();
        let d = self.degree;
        for a in 0..=d {
            for b in 0..=(if dim > 1 { d - a } else { 0 }) {
                for c in 0..=(if dim > 2 { d - a - b } else { 0 }) {
                    let exact = monomial_integral(dim, [a, b, c]);
                    let approx = self.integrate_reference(|x| {
                        x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32)
                    });
                    let error = (approx - exact).abs();
                    if error > 1e-13 * exact.abs().max(1e-3) {
                        return Err(QuadratureError::NotExact {
                            simplex: self.simplex,
                            degree: d,
                            exponents: [a, b, c],
                            error,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// `int x^a y^b z^c` over the reference simplex of dimension `dim`.
pub fn monomial_integral(dim: usize, e: [usize; 3]) -> f64 {
    let fact = |n: usize| (1..=n).fold(1.0f64, |acc, k| acc * k as f64);
    let num: f64 = e[..dim].iter().map(|&k| fact(k)).product();
    let total: usize = e[..dim].iter().sum();
    num / fact(total + dim)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like guess
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (t * pn - pn1) / (t * t - 1.0);
            let step = pn / dp;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - t);
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn points_for(degree: usize) -> usize {
    degree / 2 + 1
}

fn edge_rule(degree: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre(points_for(degree));
    QuadratureRule {
        simplex: Simplex::Edge,
        degree,
        points: x.iter().map(|&t| [1.0 - t, t, 0.0, 0.0]).collect(),
        weights: w,
    }
}

fn triangle_rule(degree: usize) -> QuadratureRule {
    let sym = |pts: &[([f64; 3], f64)]| {
        let points = pts.iter().map(|(b, _)| [b[0], b[1], b[2], 0.0]).collect();
        let weights = pts.iter().map(|(_, w)| *w).collect();
        (points, weights)
    };
    let (points, weights) = match degree {
        0 | 1 => sym(&[([1.0 / 3.0; 3], 0.5)]),
        2 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            sym(&[
                ([a, b, b], 1.0 / 6.0),
                ([b, a, b], 1.0 / 6.0),
                ([b, b, a], 1.0 / 6.0),
            ])
        }
        3 | 4 => {
            // Dunavant, degree 4
            let (a1, b1, w1) = (
                0.108_103_018_168_070,
                0.445_948_490_915_965,
                0.223_381_589_678_011 / 2.0,
            );
            let (a2, b2, w2) = (
                0.816_847_572_980_459,
                0.091_576_213_509_771,
                0.109_951_743_655_322 / 2.0,
            );
            sym(&[
                ([a1, b1, b1], w1),
                ([b1, a1, b1], w1),
                ([b1, b1, a1], w1),
                ([a2, b2, b2], w2),
                ([b2, a2, b2], w2),
                ([b2, b2, a2], w2),
            ])
        }
        _ => {
            let (x1, w1) = gauss_legendre(points_for(degree + 1));
            let (x2, w2) = gauss_legendre(points_for(degree));
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (s, ws) in x1.iter().zip(&w1) {
                for (t, wt) in x2.iter().zip(&w2) {
                    let x = *s;
                    let y = (1.0 - s) * t;
                    points.push([1.0 - x - y, x, y, 0.0]);
                    weights.push(ws * wt * (1.0 - s));
                }
            }
            (points, weights)
        }
    };
    QuadratureRule {
        simplex: Simplex::Triangle,
        degree,
        points,
        weights,
    }
}

fn tet_rule(degree: usize) -> QuadratureRule {
    let (points, weights) = match degree {
        0 | 1 => (vec![[0.25; 4]], vec![1.0 / 6.0]),
        2 => {
            let (a, b) = (0.585_410_196_624_968_5, 0.138_196_601_125_010_5);
            (
                vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]],
                vec![1.0 / 24.0; 4],
            )
        }
        _ => {
            let (x1, w1) = gauss_legendre(points_for(degree + 2));
            let (x2, w2) = gauss_legendre(points_for(degree + 1));
            let (x3, w3) = gauss_legendre(points_for(degree));
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (r, wr) in x1.iter().zip(&w1) {
                for (s, ws) in x2.iter().zip(&w2) {
                    for (t, wt) in x3.iter().zip(&w3) {
                        let x = *r;
                        let y = (1.0 - r) * s;
                        let z = (1.0 - r) * (1.0 - s) * t;
                        points.push([1.0 - x - y - z, x, y, z]);
                        weights.push(wr * ws * wt * (1.0 - r) * (1.0 - r) * (1.0 - s));
                    }
                }
            }
            (points, weights)
        }
    };
    QuadratureRule {
        simplex: Simplex::Tet,
        degree,
        points,
        weights,
    }
}

/// Builds a rule exact for polynomials of total degree `degree`.
pub fn make_quadrature(simplex: Simplex, degree: usize) -> Result<QuadratureRule, QuadratureError> {
    if degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    let rule = match simplex {
        Simplex::Edge => edge_rule(degree),
        Simplex::Triangle => triangle_rule(degree),
        Simplex::Tet => tet_rule(degree),
    };
    rule.verify()?;
    Ok(rule)
}

/// Process-wide cached rule. Panics only if a built-in rule fails its own
/// exactness check.
pub fn rule(simplex: Simplex, degree: usize) -> &'static QuadratureRule {
    static CACHE: OnceLock<Mutex<HashMap<(Simplex, usize), &'static QuadratureRule>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().unwrap();
    guard.entry((simplex, degree)).or_insert_with(|| {
        let r = make_quadrature(simplex, degree)
            .unwrap_or_else(|e| panic!("built-in quadrature rule is broken: {e}"));
        Box::leak(Box::new(r))
    })
}
