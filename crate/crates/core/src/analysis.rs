//! Dressed mechanical-microwave modes and transparency-window detection.
//!
//! On resonance (Δ_c = ω_b, so λ_c = λ_b = λ) the mechanical self-energy
//! splits into two poles,
//!
//! ```text
//! |G|²/(γ_b/2 − iλ + g_em²/(κ_c/2 − iλ)) = A₊/(λ₊ − iλ) + A₋/(λ₋ − iλ)
//! ```
//!
//! with λ± the roots of z² − (γ_b/2 + κ_c/2)z + g_em² + γ_bκ_c/4.
//! Each pole opens one transparency window; for g_em ≫ γ_b, κ_c the
//! windows sit at λ ≈ ±g_em.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::response::ProbeResponse;
use crate::steady_state::SteadyState;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedModes {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Residue weights. When `confluent` is set the poles coincide and
    /// `a_plus` multiplies 1/(λ₀ − iλ) while `a_minus` multiplies
    /// 1/(λ₀ − iλ)².
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    /// 2g_em, rad/s.
    pub splitting: f64,
    /// 4g_em² > (γ_b/2 − κ_c/2)²
    pub underdamped: bool,
    /// Exact critical damping: λ₊ = λ₋.
    pub confluent: bool,
}

pub fn dressed_modes(p: &SystemParams, ss: &SteadyState) -> DressedModes {
    let g2 = ss.g_om_enhanced.norm_sqr();
    let hg = p.gamma_b / 2.0;
    let hk = p.kappa_c / 2.0;
    let s = hg + hk;
    let d = hg - hk;
    let prod = p.g_em * p.g_em + hg * hk;
    let disc = 4.0 * p.g_em * p.g_em - d * d;

    if disc == 0.0 {
        let l0 = Complex64::new(s / 2.0, 0.0);
        return DressedModes {
            lambda_plus: l0,
            lambda_minus: l0,
            a_plus: Complex64::new(g2, 0.0),
            a_minus: Complex64::new(g2 * (hk - s / 2.0), 0.0),
            splitting: 2.0 * p.g_em,
            underdamped: false,
            confluent: true,
        };
    }

    // q = λ₊ − λ₋ = i√disc with the principal root
    let q = I * Complex64::new(disc, 0.0).sqrt();
    let (lambda_plus, lambda_minus) = if disc > 0.0 {
        ((s + q) / 2.0, (s - q) / 2.0)
    } else {
        // both real and λ₊ is the smaller; take it from the product to
        // avoid cancellation
        let big = (s - q.re) / 2.0;
        (Complex64::new(prod / big, 0.0), Complex64::new(big, 0.0))
    };
    // λ± − κ_c/2 = (d ± q)/2
    let half = g2 / 2.0;
    let ratio = d / q;
    DressedModes {
        lambda_plus,
        lambda_minus,
        a_plus: half * (1.0 + ratio),
        a_minus: half * (1.0 - ratio),
        splitting: 2.0 * p.g_em,
        underdamped: disc > 0.0,
        confluent: false,
    }
}

impl DressedModes {
    /// Mechanical self-energy rebuilt from poles and residues at λ.
    pub fn self_energy(&self, lambda: f64) -> Complex64 {
        let z = I * lambda;
        if self.confluent {
            let r = self.lambda_plus - z;
            self.a_plus / r + self.a_minus / (r * r)
        } else {
            self.a_plus / (self.lambda_plus - z) + self.a_minus / (self.lambda_minus - z)
        }
    }
}

/// Probe response through the dressed-mode decomposition. Exact only when
/// Δ_c = ω_b; the pole expansion is evaluated at λ_b.
pub fn eps_t_partial_fraction(modes: &DressedModes, ss: &SteadyState, p: &SystemParams, delta: f64) -> Complex64 {
    let la = delta - ss.delta_a_eff;
    let lb = delta - p.omega_b;
    2.0 * p.kappa_a / (p.kappa_a / 2.0 - I * la + modes.self_energy(lb))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    /// Refined position, (δ − ω_b)/ω_b.
    pub delta_over_omega_b: f64,
    /// Refined Re ε_T.
    pub absorption: f64,
    /// Grid index of the raw extremum.
    pub index: usize,
    /// Spectrum maximum minus this value for minima; this value minus the
    /// spectrum minimum for maxima.
    pub depth: f64,
    /// Full width at half prominence, axis units; see [`find_windows_in`].
    pub fwhm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub minima: Vec<Extremum>,
    pub maxima: Vec<Extremum>,
    /// Indices into `minima` of the two lowest, in axis order.
    pub deepest: Option<[usize; 2]>,
    /// Distance between the two deepest minima, rad/s.
    pub separation: Option<f64>,
    pub asymmetry: Option<f64>,
    /// Highest maximum strictly between the two deepest minima.
    pub central_peak: Option<Extremum>,
    /// FWHM of `central_peak`, rad/s.
    pub central_linewidth: Option<f64>,
}

impl WindowReport {
    pub fn window_count(&self) -> usize {
        self.minima.len()
    }

    /// Midpoint of the two deepest minima, axis units.
    pub fn midpoint(&self) -> Option<f64> {
        self.deepest
            .map(|[a, b]| 0.5 * (self.minima[a].delta_over_omega_b + self.minima[b].delta_over_omega_b))
    }

    /// Lowest minimum, if any.
    pub fn lowest(&self) -> Option<&Extremum> {
        self.minima.iter().min_by(|a, b| a.absorption.total_cmp(&b.absorption))
    }
}

pub fn find_windows(spec: &[ProbeResponse]) -> Result<WindowReport> {
    let Some(first) = spec.first() else {
        return Err(too_coarse(0));
    };
    let axis: Vec<f64> = spec.iter().map(ProbeResponse::delta_over_omega_b).collect();
    let absorption: Vec<f64> = spec.iter().map(|r| r.absorption).collect();
    find_windows_in(&axis, &absorption, first.omega_b())
}

fn too_coarse(n: usize) -> Error {
    Error::Invalid(format!("window detection needs at least 5 grid points, got {n}"))
}

/// Window detection on a sampled absorption curve.
///
/// Strict interior extrema are refined by the vertex of the parabola
/// through the point and its two neighbours. Widths are measured at half
/// prominence: for a minimum the reference level is the lower of the
/// nearest maxima on either side (the grid edge when none exists), and the
/// half-level crossings are linearly interpolated. Maxima are treated
/// symmetrically.
pub fn find_windows_in(axis: &[f64], absorption: &[f64], omega_b: f64) -> Result<WindowReport> {
    let n = axis.len();
    if absorption.len() != n {
        return Err(Error::Invalid(format!(
            "axis has {n} points but absorption has {}",
            absorption.len()
        )));
    }
    if n < 5 {
        return Err(too_coarse(n));
    }
    if axis.iter().chain(absorption).any(|v| !v.is_finite()) || !omega_b.is_finite() {
        return Err(Error::NonFinite("spectrum"));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("spectrum axis is not strictly increasing".into()));
    }

    let y = absorption;
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_idx: Vec<usize> = (1..n - 1).filter(|&i| y[i] < y[i - 1] && y[i] < y[i + 1]).collect();
    let max_idx: Vec<usize> = (1..n - 1).filter(|&i| y[i] > y[i - 1] && y[i] > y[i + 1]).collect();

    let extremum = |i: usize, is_min: bool| {
        let (xv, yv) = parabolic_vertex(axis[i - 1], axis[i], axis[i + 1], y[i - 1], y[i], y[i + 1]);
        let others = if is_min { &max_idx } else { &min_idx };
        Extremum {
            delta_over_omega_b: xv,
            absorption: yv,
            index: i,
            depth: if is_min { hi - yv } else { yv - lo },
            fwhm: half_prominence_width(axis, y, i, others, is_min),
        }
    };
    let minima: Vec<Extremum> = min_idx.iter().map(|&i| extremum(i, true)).collect();
    let maxima: Vec<Extremum> = max_idx.iter().map(|&i| extremum(i, false)).collect();

    let mut report = WindowReport {
        minima,
        maxima,
        deepest: None,
        separation: None,
        asymmetry: None,
        central_peak: None,
        central_linewidth: None,
    };
    if report.minima.len() >= 2 {
        let mut order: Vec<usize> = (0..report.minima.len()).collect();
        order.sort_by(|&a, &b| report.minima[a].absorption.total_cmp(&report.minima[b].absorption));
        let (a, b) = (order[0].min(order[1]), order[0].max(order[1]));
        let (ma, mb) = (report.minima[a], report.minima[b]);
        report.deepest = Some([a, b]);
        report.separation = Some((mb.delta_over_omega_b - ma.delta_over_omega_b).abs() * omega_b.abs());
        let top = ma.depth.max(mb.depth);
        report.asymmetry = Some(if top > 0.0 { (ma.depth - mb.depth).abs() / top } else { 0.0 });
        report.central_peak = report
            .maxima
            .iter()
            .filter(|m| m.index > ma.index && m.index < mb.index)
            .max_by(|p, q| p.absorption.total_cmp(&q.absorption))
            .copied();
        report.central_linewidth = report
            .central_peak
            .and_then(|c| c.fwhm)
            .map(|w| w * omega_b.abs());
    }
    Ok(report)
}

/// Vertex of the parabola through three points with x0 < x1 < x2.
fn parabolic_vertex(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> (f64, f64) {
    let (a, b) = (x1 - x0, x1 - x2);
    let num = a * a * (y1 - y2) - b * b * (y1 - y0);
    let den = a * (y1 - y2) - b * (y1 - y0);
    if den == 0.0 {
        return (x1, y1);
    }
    let xv = (x1 - 0.5 * num / den).clamp(x0, x2);
    // Lagrange form at the vertex
    let l0 = (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1));
    (xv, y0 * l0 + y1 * l1 + y2 * l2)
}

fn half_prominence_width(axis: &[f64], y: &[f64], i: usize, others: &[usize], is_min: bool) -> Option<f64> {
    let n = y.len();
    let left = others.iter().rev().find(|&&j| j < i).copied().unwrap_or(0);
    let right = others.iter().find(|&&j| j > i).copied().unwrap_or(n - 1);
    // work on a sign-flipped copy so every case is a minimum
    let s = if is_min { 1.0 } else { -1.0 };
    let v = |k: usize| s * y[k];
    let reference = v(left).min(v(right));
    let level = v(i) + 0.5 * (reference - v(i));
    if !(level > v(i)) {
        return None;
    }
    let cross = |a: usize, b: usize| {
        let t = (level - v(a)) / (v(b) - v(a));
        axis[a] + t * (axis[b] - axis[a])
    };
    let l = (left..i).rev().find(|&k| v(k) >= level).map(|k| cross(k + 1, k))?;
    let r = (i + 1..=right).find(|&k| v(k) >= level).map(|k| cross(k - 1, k))?;
    Some(r - l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::tests::fig2;
    use crate::response::{eps_t_closed_form, spectrum, DeltaGrid};
    use crate::steady_state::OperatingPoint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn fig2_point() -> OperatingPoint {
        let p = fig2();
        OperatingPoint::effective(&p, p.omega_b).unwrap()
    }

    fn check_identities(m: &DressedModes, p: &SystemParams, g2: f64) {
        let sum = Complex64::new(p.gamma_b / 2.0 + p.kappa_c / 2.0, 0.0);
        let prod = Complex64::new(p.g_em * p.g_em + p.gamma_b * p.kappa_c / 4.0, 0.0);
        assert!(rel(m.lambda_plus + m.lambda_minus, sum) < 1e-12);
        assert!(rel(m.lambda_plus * m.lambda_minus, prod) < 1e-12);
        assert!(rel(m.a_plus + m.a_minus, Complex64::new(g2, 0.0)) < 1e-12);
    }

    #[test]
    fn fig2_modes_are_split_by_twice_g_em() {
        let op = fig2_point();
        let p = op.params;
        let m = dressed_modes(&p, op.steady());
        assert!(m.underdamped && !m.confluent);
        assert!((m.lambda_plus.im / p.g_em - 1.0).abs() < 1e-5);
        assert!((m.lambda_minus.im / p.g_em + 1.0).abs() < 1e-5);
        assert_eq!(m.splitting, 2.0 * p.g_em);
        check_identities(&m, &p, op.steady().g_om_enhanced.norm_sqr());
    }

    #[test]
    fn decoupled_microwave_leaves_bare_poles() {
        let mut op = fig2_point();
        op.params.g_em = 0.0;
        let p = op.params;
        let m = dressed_modes(&p, op.steady());
        assert!(!m.underdamped);
        assert_eq!(m.lambda_plus, Complex64::new(p.kappa_c / 2.0, 0.0));
        assert_eq!(m.lambda_minus, Complex64::new(p.gamma_b / 2.0, 0.0));
        // weight on the κ_c/2 pole vanishes
        assert!(m.a_plus.norm() < 1e-15 * m.a_minus.norm());
        for k in -20..=20 {
            let d = p.omega_b * (1.0 + k as f64 * 1e-3);
            let a = eps_t_partial_fraction(&m, op.steady(), &p, d);
            let b = eps_t_closed_form(op.steady(), &p, d);
            assert!(rel(a, b) < 1e-12);
        }
    }

    #[test]
    fn critical_damping_is_flagged_and_reconstructs() {
        let mut op = fig2_point();
        op.params.g_em = (op.params.gamma_b - op.params.kappa_c) / 4.0;
        let p = op.params;
        let m = dressed_modes(&p, op.steady());
        assert!(m.confluent && !m.underdamped);
        assert_eq!(m.lambda_plus, m.lambda_minus);
        for k in -20..=20 {
            let d = p.omega_b + k as f64 * p.gamma_b;
            let a = eps_t_partial_fraction(&m, op.steady(), &p, d);
            let b = eps_t_closed_form(op.steady(), &p, d);
            assert!(rel(a, b) < 1e-12);
        }
    }

    #[test]
    fn partial_fractions_reconstruct_self_energy() {
        let op = fig2_point();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut p = op.params;
            p.g_em *= 10f64.powf(rng.random_range(-2.0..2.0));
            p.gamma_b *= 10f64.powf(rng.random_range(-2.0..2.0));
            p.kappa_c *= 10f64.powf(rng.random_range(-2.0..2.0));
            let m = dressed_modes(&p, op.steady());
            if !m.underdamped {
                continue;
            }
            let g2 = op.steady().g_om_enhanced.norm_sqr();
            check_identities(&m, &p, g2);
            for _ in 0..100 {
                let l = rng.random_range(-5.0..5.0) * p.g_em;
                let direct = g2 / (p.gamma_b / 2.0 - I * l + p.g_em * p.g_em / (p.kappa_c / 2.0 - I * l));
                assert!(rel(m.self_energy(l), direct) < 1e-10);
            }
        }
    }

    #[test]
    fn overdamped_roots_keep_relative_accuracy() {
        let op = fig2_point();
        let mut p = op.params;
        p.g_em = 0.0;
        p.gamma_b *= 1e4;
        p.kappa_c *= 1e-4;
        let m = dressed_modes(&p, op.steady());
        check_identities(&m, &p, op.steady().g_om_enhanced.norm_sqr());
    }

    #[test]
    fn monotone_spectrum_has_no_extrema() {
        let axis: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = axis.iter().map(|x| x * x).collect();
        let r = find_windows_in(&axis, &y, 1.0).unwrap();
        assert!(r.minima.is_empty() && r.maxima.is_empty());
        assert_eq!(r.separation, None);
        assert_eq!(r.asymmetry, None);
    }

    #[test]
    fn coarse_or_malformed_grids_are_rejected() {
        let ax = [0.0, 1.0, 2.0, 3.0];
        assert!(find_windows_in(&ax, &[1.0, 0.0, 1.0, 2.0], 1.0).is_err());
        let ax = [0.0, 1.0, 1.0, 3.0, 4.0];
        assert!(find_windows_in(&ax, &[1.0, 0.0, 1.0, 2.0, 3.0], 1.0).is_err());
        assert!(find_windows_in(&[0.0, 1.0, 2.0, 3.0, 4.0], &[1.0; 4], 1.0).is_err());
        assert!(find_windows(&[]).is_err());
    }

    #[test]
    fn parabolic_refinement_is_exact_for_quadratics() {
        let axis: Vec<f64> = (0..11).map(|i| i as f64 * 0.1 + 0.013 * (i as f64).sin()).collect();
        let y: Vec<f64> = axis.iter().map(|x| 3.0 * (x - 0.437) * (x - 0.437) + 0.25).collect();
        let r = find_windows_in(&axis, &y, 1.0).unwrap();
        assert_eq!(r.minima.len(), 1);
        assert!((r.minima[0].delta_over_omega_b - 0.437).abs() < 1e-12);
        assert!((r.minima[0].absorption - 0.25).abs() < 1e-12);
    }

    #[test]
    fn half_prominence_width_of_triangle() {
        let axis: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let y = [4.0, 3.0, 2.0, 1.0, 0.0, 1.0, 2.0, 3.0, 4.0];
        let r = find_windows_in(&axis, &y, 1.0).unwrap();
        assert_eq!(r.minima[0].fwhm, Some(4.0));
        assert_eq!(r.minima[0].depth, 4.0);
    }

    #[test]
    fn fig2_has_two_symmetric_windows() {
        let op = fig2_point();
        let g = DeltaGrid::around_mechanical(op.params.omega_b, -0.02, 0.02, 4001).unwrap();
        let r = find_windows(&spectrum(op.steady(), &op.params, &g)).unwrap();
        assert_eq!(r.window_count(), 2);
        let sep = r.separation.unwrap();
        assert!((sep / (2.0 * op.params.g_em) - 1.0).abs() < 0.02);
        assert!(r.asymmetry.unwrap() < 0.01);
        assert!(r.midpoint().unwrap().abs() < 1e-5);
        let c = r.central_peak.unwrap();
        assert!(c.absorption > 3.9);
        assert!(r.central_linewidth.unwrap() > 0.0);
    }

    #[test]
    fn refinement_is_stable_under_grid_doubling() {
        let op = fig2_point();
        let wb = op.params.omega_b;
        let coarse = DeltaGrid::around_mechanical(wb, -0.02, 0.02, 4001).unwrap();
        let fine = DeltaGrid::around_mechanical(wb, -0.02, 0.02, 8001).unwrap();
        let a = find_windows(&spectrum(op.steady(), &op.params, &coarse)).unwrap();
        let b = find_windows(&spectrum(op.steady(), &op.params, &fine)).unwrap();
        assert_eq!(a.window_count(), b.window_count());
        let sep = a.separation.unwrap();
        for (x, y) in a.minima.iter().zip(&b.minima) {
            assert!((x.delta_over_omega_b - y.delta_over_omega_b).abs() * wb < 1e-3 * sep);
        }
    }
}
