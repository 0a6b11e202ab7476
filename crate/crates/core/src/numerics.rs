//! Real roots of quadratics, cubics and quartics.
//!
//! The quartic goes through Ferrari's resolvent-cubic factorisation on a
//! rescaled monic polynomial, then every root is Newton-polished against the
//! original coefficients.

use crate::error::{PowerError, Result};

/// Leading coefficients below this fraction of the largest coefficient are
/// treated as zero and the degree is reduced.
pub const DEGREE_REDUCTION_THRESHOLD: f64 = 1e-12;

/// Real roots in ascending order, repeated roots collapsed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialRealRoots {
    pub roots: Vec<f64>,
}

impl PolynomialRealRoots {
    fn from_unsorted(mut roots: Vec<f64>) -> Self {
        roots.retain(|x| x.is_finite());
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300));
        Self { roots }
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.roots.iter()
    }
}

/// Horner evaluation; `coeffs` start at the highest degree.
pub fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn eval_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// `|p(x)| / Σ |c_k| |x|^k`: the residual relative to the size of the terms
/// that produced it.
pub fn scaled_residual(coeffs: &[f64], x: f64) -> f64 {
    let magnitude = coeffs.iter().fold(0.0, |acc, &c| acc * x.abs() + c.abs());
    if magnitude == 0.0 {
        return 0.0;
    }
    eval_poly(coeffs, x).abs() / magnitude
}

fn polish(coeffs: &[f64], mut x: f64) -> f64 {
    let mut best = eval_poly(coeffs, x).abs();
    for _ in 0..12 {
        let (p, dp) = eval_with_derivative(coeffs, x);
        if p == 0.0 || dp == 0.0 || !dp.is_finite() {
            break;
        }
        let next = x - p / dp;
        let val = eval_poly(coeffs, next).abs();
        if val.is_nan() || val >= best {
            break;
        }
        let moved = (next - x).abs();
        x = next;
        best = val;
        if moved <= 1e-16 * x.abs() {
            break;
        }
    }
    x
}

fn max_abs(coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

/// Real roots of `a x² + b x + c`.
///
/// `a = 0` falls back to the linear root; `a = b = 0, c ≠ 0` has no roots;
/// the all-zero polynomial is rejected.
pub fn solve_quadratic_real(a: f64, b: f64, c: f64) -> Result<PolynomialRealRoots> {
    if a == 0.0 && b == 0.0 {
        return if c == 0.0 {
            Err(PowerError::DegeneratePolynomial)
        } else {
            Ok(PolynomialRealRoots::default())
        };
    }
    if a == 0.0 {
        return Ok(PolynomialRealRoots::from_unsorted(vec![-c / b]));
    }
    let disc = b * b - 4.0 * a * c;
    let noise = 8.0 * f64::EPSILON * (b * b + 4.0 * (a * c).abs());
    if disc < -noise {
        return Ok(PolynomialRealRoots::default());
    }
    if disc <= noise {
        return Ok(PolynomialRealRoots::from_unsorted(vec![-b / (2.0 * a)]));
    }
    // Cancellation-free form.
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    } else {
        roots.push(-roots[0]);
    }
    Ok(PolynomialRealRoots::from_unsorted(roots))
}

/// Real roots of `a x³ + b x² + c x + d`.
pub fn solve_cubic_real(a: f64, b: f64, c: f64, d: f64) -> Result<PolynomialRealRoots> {
    let coeffs = [a, b, c, d];
    let scale = max_abs(&coeffs);
    if scale == 0.0 {
        return Err(PowerError::DegeneratePolynomial);
    }
    if a.abs() < DEGREE_REDUCTION_THRESHOLD * scale {
        return solve_quadratic_real(b, c, d);
    }
    let (b, c, d) = (b / a, c / a, d / a);
    // Depressed form t³ + p t + q with x = t - b/3.
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let mut ts = Vec::with_capacity(3);
    if p == 0.0 && q == 0.0 {
        ts.push(0.0);
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-half_q + if half_q <= 0.0 { sq } else { -sq }).cbrt();
        let t = if u != 0.0 { u - third_p / u } else { (-q).cbrt() };
        ts.push(t);
    } else {
        // Three real roots (possibly repeated).
        let r = (-third_p).sqrt();
        let cos_arg = if r > 0.0 {
            (-half_q / (r * r * r)).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let phi = cos_arg.acos();
        for k in 0..3 {
            ts.push(2.0 * r * ((phi + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos());
        }
    }
    let roots = ts.into_iter().map(|t| polish(&coeffs, t - shift)).collect();
    Ok(PolynomialRealRoots::from_unsorted(roots))
}

fn real_quadratic_roots_tolerant(b: f64, c: f64, out: &mut Vec<f64>) {
    // Monic z² + b z + c with a slightly more forgiving double-root test,
    // since b and c carry the error of the resolvent root.
    let disc = b * b - 4.0 * c;
    let noise = 64.0 * f64::EPSILON * (b * b + 4.0 * c.abs()).max(f64::MIN_POSITIVE);
    if disc < -noise {
        return;
    }
    if disc <= noise {
        out.push(-b / 2.0);
        return;
    }
    let q = -0.5 * (b + if b >= 0.0 { 1.0 } else { -1.0 } * disc.sqrt());
    out.push(q);
    if q != 0.0 {
        out.push(c / q);
    }
}

/// Real roots of `a x⁴ + b x³ + c x² + d x + e` by Ferrari's method.
///
/// A negligible leading coefficient hands the problem to the cubic solver.
pub fn solve_quartic_real(a: f64, b: f64, c: f64, d: f64, e: f64) -> Result<PolynomialRealRoots> {
    let coeffs = [a, b, c, d, e];
    let norm = max_abs(&coeffs);
    if norm == 0.0 {
        return Err(PowerError::DegeneratePolynomial);
    }
    if a.abs() < DEGREE_REDUCTION_THRESHOLD * norm {
        return solve_cubic_real(b, c, d, e);
    }

    // Rescale x = s·y so the monic coefficients are O(1).
    let ratios = [b / a, c / a, d / a, e / a];
    let s = ratios
        .iter()
        .enumerate()
        .map(|(k, r)| r.abs().powf(1.0 / (k + 1) as f64))
        .fold(0.0f64, f64::max);
    if s == 0.0 {
        return Ok(PolynomialRealRoots::from_unsorted(vec![0.0]));
    }
    let bb = ratios[0] / s;
    let cc = ratios[1] / (s * s);
    let dd = ratios[2] / (s * s * s);
    let ee = ratios[3] / (s * s * s * s);
    let monic = [1.0, bb, cc, dd, ee];

    // Depressed quartic z⁴ + p z² + q z + r with y = z - bb/4.
    let shift = bb / 4.0;
    let bb2 = bb * bb;
    let p = cc - 3.0 * bb2 / 8.0;
    let q = dd - bb * cc / 2.0 + bb2 * bb / 8.0;
    let r = ee - bb * dd / 4.0 + bb2 * cc / 16.0 - 3.0 * bb2 * bb2 / 256.0;

    let mut zs = Vec::with_capacity(4);
    if q.abs() <= 1e-14 {
        // Biquadratic: w² + p w + r = 0, z = ±√w.
        let mut ws = Vec::new();
        real_quadratic_roots_tolerant(p, r, &mut ws);
        for w in ws {
            if w > 0.0 {
                zs.push(w.sqrt());
                zs.push(-w.sqrt());
            } else if w > -1e-14 {
                zs.push(0.0);
            }
        }
    } else {
        // Resolvent cubic 8m³ + 8p m² + (2p² - 8r) m - q² = 0 has a positive root.
        let resolvent = solve_cubic_real(8.0, 8.0 * p, 2.0 * p * p - 8.0 * r, -q * q)?;
        let m = resolvent.roots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m > 0.0 {
            let s2 = (2.0 * m).sqrt();
            let k = q / (2.0 * s2);
            real_quadratic_roots_tolerant(-s2, p / 2.0 + m + k, &mut zs);
            real_quadratic_roots_tolerant(s2, p / 2.0 + m - k, &mut zs);
        }
    }

    let roots = zs
        .into_iter()
        .map(|z| polish(&monic, z - shift) * s)
        .map(|x| polish(&coeffs, x))
        .collect();
    Ok(PolynomialRealRoots::from_unsorted(roots))
}

/// Keeps roots within `[lo - ε, hi + ε]`, `ε = 1e-9·max(1, |hi|)`, and clamps
/// them into `[lo, hi]`.
pub fn filter_roots_in_interval(roots: &PolynomialRealRoots, lo: f64, hi: f64) -> PolynomialRealRoots {
    debug_assert!(lo <= hi);
    let eps = 1e-9 * hi.abs().max(1.0);
    let kept = roots
        .roots
        .iter()
        .filter(|&&x| x >= lo - eps && x <= hi + eps)
        .map(|&x| x.clamp(lo, hi))
        .collect();
    PolynomialRealRoots::from_unsorted(kept)
}
