//! Closed-form real cubic roots with compensated Newton polishing.

use num_complex::Complex64;

/// |Im z| ≤ 1e-8·(1 + |Re z|) counts as a real root.
pub const REALNESS_TOL: f64 = 1e-8;

pub fn is_effectively_real(z: Complex64) -> bool {
    z.im.abs() <= REALNESS_TOL * (1.0 + z.re.abs())
}

/// All complex roots of `a x³ + b x² + c x + d`, lowering the degree when
/// leading coefficients vanish. Returns an empty list for the zero
/// polynomial or a non-zero constant.
pub fn roots(a: f64, b: f64, c: f64, d: f64) -> Vec<Complex64> {
    if a != 0.0 {
        cubic(b / a, c / a, d / a)
    } else if b != 0.0 {
        quadratic(b, c, d)
    } else if c != 0.0 {
        vec![Complex64::new(-d / c, 0.0)]
    } else {
        Vec::new()
    }
}

fn quadratic(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        // avoid cancellation between -b and the square root
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return vec![Complex64::new(0.0, 0.0); 2];
        }
        vec![Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a);
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Roots of the monic cubic x³ + b x² + c x + d.
fn cubic(b: f64, c: f64, d: f64) -> Vec<Complex64> {
    let shift = b / 3.0;
    // depressed form t³ + p t + q with x = t - b/3
    let p = c - b * shift;
    let q = 2.0 * shift * shift * shift - shift * c + d;
    let half_q = 0.5 * q;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    if disc < 0.0 {
        // three distinct real roots: trigonometric form
        let m = 2.0 * (-third_p).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| {
                let t = m * (theta - std::f64::consts::TAU * k as f64 / 3.0).cos();
                Complex64::new(t - shift, 0.0)
            })
            .collect()
    } else {
        let s = disc.sqrt();
        // pick the sign that avoids cancellation
        let big = -(half_q + half_q.signum() * s);
        let u = big.cbrt();
        let v = if u != 0.0 { -third_p / u } else { 0.0 };
        let real = u + v - shift;
        let re = -0.5 * (u + v) - shift;
        let im = 0.5 * 3f64.sqrt() * (u - v);
        vec![
            Complex64::new(real, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Horner evaluation with error-free transformations; the result is as
/// accurate as if computed in twice the working precision. Coefficients
/// are ordered from the highest degree down.
pub fn compensated_horner(coeffs: &[f64], x: f64) -> f64 {
    let Some((&first, rest)) = coeffs.split_first() else {
        return 0.0;
    };
    let mut s = first;
    let mut err = 0.0;
    for &c in rest {
        let (p, pe) = two_prod(s, x);
        let (sum, se) = two_sum(p, c);
        s = sum;
        err = err * x + (pe + se);
    }
    s + err
}

fn derivative(coeffs: &[f64], x: f64) -> f64 {
    let n = coeffs.len();
    let mut acc = 0.0;
    for (i, &c) in coeffs.iter().take(n.saturating_sub(1)).enumerate() {
        acc = acc * x + c * (n - 1 - i) as f64;
    }
    acc
}

/// Newton steps on the polynomial, evaluating the residual with
/// [`compensated_horner`]. Stops when a step no longer shrinks the
/// residual; never returns a worse point than `x`.
pub fn polish(coeffs: &[f64], mut x: f64) -> f64 {
    let mut r = compensated_horner(coeffs, x);
    for _ in 0..8 {
        if r == 0.0 {
            break;
        }
        let dp = derivative(coeffs, x);
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let next = x - r / dp;
        let rn = compensated_horner(coeffs, next);
        if !(rn.abs() < r.abs()) {
            break;
        }
        x = next;
        r = rn;
    }
    x
}
