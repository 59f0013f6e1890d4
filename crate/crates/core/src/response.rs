//! Linear response of the cavity to the weak probe.
//!
//! The canonical observable is the output quadrature ε_T = 2κ_a⟨δa₊⟩/ε_pr,
//! with absorption Re ε_T and dispersion Im ε_T. Because the input-output
//! relation carries a 2κ_a prefactor, the bare cavity on resonance gives
//! ε_T = 4, not 1. The transmission coefficient is T_pr = ε_T − 1.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::steady_state::SteadyState;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResponse {
    /// δ = ω_pr − ω_pu, rad/s.
    pub delta: f64,
    /// δ − Δ′_a
    pub lambda_a: f64,
    /// δ − Δ_c
    pub lambda_c: f64,
    /// δ − ω_b
    pub lambda_b: f64,
    pub eps_t: Complex64,
    pub t_pr: Complex64,
    pub absorption: f64,
    pub dispersion: f64,
}

impl ProbeResponse {
    pub fn new(ss: &SteadyState, p: &SystemParams, delta: f64, eps_t: Complex64) -> Self {
        let (lambda_a, lambda_c, lambda_b) = lambdas(ss, p, delta);
        Self {
            delta,
            lambda_a,
            lambda_c,
            lambda_b,
            eps_t,
            t_pr: eps_t - 1.0,
            absorption: eps_t.re,
            dispersion: eps_t.im,
        }
    }

    /// ω_b, recovered from δ and λ_b.
    pub fn omega_b(&self) -> f64 {
        self.delta - self.lambda_b
    }

    /// (δ − ω_b)/ω_b, the plotting axis.
    pub fn delta_over_omega_b(&self) -> f64 {
        self.lambda_b / self.omega_b()
    }

    /// Output probe amplitude ε_out = ε_pr·T_pr.
    pub fn eps_out(&self, eps_probe: f64) -> Complex64 {
        self.t_pr * eps_probe
    }
}

fn lambdas(ss: &SteadyState, p: &SystemParams, delta: f64) -> (f64, f64, f64) {
    (delta - ss.delta_a_eff, delta - p.delta_c, delta - p.omega_b)
}

/// Nested closed form, evaluated innermost fraction first.
pub fn eps_t_closed_form(ss: &SteadyState, p: &SystemParams, delta: f64) -> Complex64 {
    let (la, lc, lb) = lambdas(ss, p, delta);
    let g2 = ss.g_om_enhanced.norm_sqr();
    let micro = p.g_em * p.g_em / (p.kappa_c / 2.0 - I * lc);
    let mech = g2 / (p.gamma_b / 2.0 - I * lb + micro);
    2.0 * p.kappa_a / (p.kappa_a / 2.0 - I * la + mech)
}

/// Single-window form that ignores the microwave mode entirely.
pub fn eps_t_single_omit(ss: &SteadyState, p: &SystemParams, delta: f64) -> Complex64 {
    let (la, _, lb) = lambdas(ss, p, delta);
    let g2 = ss.g_om_enhanced.norm_sqr();
    2.0 * p.kappa_a / (p.kappa_a / 2.0 - I * la + g2 / (p.gamma_b / 2.0 - I * lb))
}

/// Solves the 3×3 sideband system for a unit probe amplitude.
pub fn eps_t_oracle(ss: &SteadyState, p: &SystemParams, delta: f64) -> Result<Complex64> {
    eps_t_oracle_with_probe(ss, p, delta, 1.0)
}

/// Solves
///
/// ```text
/// (iλ_a − κ_a/2)⟨δa₊⟩ + iG_om⟨δb₊⟩                = −ε_pr
/// (iλ_c − κ_c/2)⟨δc₊⟩ + i g_em⟨δb₊⟩               = 0
/// iG_om*⟨δa₊⟩ + i g_em⟨δc₊⟩ + (iλ_b − γ_b/2)⟨δb₊⟩ = 0
/// ```
///
/// by Gaussian elimination with partial pivoting and returns
/// 2κ_a⟨δa₊⟩/ε_pr.
pub fn eps_t_oracle_with_probe(ss: &SteadyState, p: &SystemParams, delta: f64, eps_probe: f64) -> Result<Complex64> {
    if !(eps_probe > 0.0) {
        return Err(Error::Invalid("probe amplitude must be positive".into()));
    }
    let (la, lc, lb) = lambdas(ss, p, delta);
    let g = ss.g_om_enhanced;
    let zero = Complex64::new(0.0, 0.0);
    let mut m = [
        [I * la - p.kappa_a / 2.0, zero, I * g],
        [zero, I * lc - p.kappa_c / 2.0, I * p.g_em],
        [I * g.conj(), I * p.g_em, I * lb - p.gamma_b / 2.0],
    ];
    let mut rhs = [Complex64::new(-eps_probe, 0.0), zero, zero];
    let x = solve3(&mut m, &mut rhs)?;
    Ok(2.0 * p.kappa_a * x[0] / eps_probe)
}

fn solve3(m: &mut [[Complex64; 3]; 3], rhs: &mut [Complex64; 3]) -> Result<[Complex64; 3]> {
    for k in 0..3 {
        let piv = (k..3)
            .max_by(|&a, &b| m[a][k].norm().total_cmp(&m[b][k].norm()))
            .expect("non-empty range");
        if m[piv][k].norm() == 0.0 {
            return Err(Error::Singular("sideband system has a zero pivot".into()));
        }
        m.swap(k, piv);
        rhs.swap(k, piv);
        for i in k + 1..3 {
            let f = m[i][k] / m[k][k];
            for j in k..3 {
                let t = m[k][j];
                m[i][j] -= f * t;
            }
            let t = rhs[k];
            rhs[i] -= f * t;
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 3];
    for i in (0..3).rev() {
        let mut s = rhs[i];
        for j in i + 1..3 {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("sideband solve produced non-finite values".into()));
    }
    Ok(x)
}

/// Which expression a spectrum is evaluated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    #[default]
    Closed,
    Oracle,
    Single,
}

impl std::str::FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(Form::Closed),
            "oracle" => Ok(Form::Oracle),
            "single" => Ok(Form::Single),
            other => Err(Error::InvalidValue {
                key: "form".into(),
                reason: format!("expected closed|oracle|single, got {other:?}"),
            }),
        }
    }
}

pub fn eps_t(form: Form, ss: &SteadyState, p: &SystemParams, delta: f64) -> Result<Complex64> {
    match form {
        Form::Closed => Ok(eps_t_closed_form(ss, p, delta)),
        Form::Oracle => eps_t_oracle(ss, p, delta),
        Form::Single => Ok(eps_t_single_omit(ss, p, delta)),
    }
}

/// Strictly increasing probe detunings δ, rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid {
    deltas: Vec<f64>,
}

impl DeltaGrid {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        if deltas.len() < 2 {
            return Err(Error::Invalid(format!(
                "probe grid needs at least 2 points, got {}",
                deltas.len()
            )));
        }
        if deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("probe grid"));
        }
        if let Some(i) = deltas.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid(format!(
                "probe grid not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self { deltas })
    }

    /// `points` uniform samples of δ = ω_b(1 + x) for x in
    /// [`min_over_omega_b`, `max_over_omega_b`].
    pub fn around_mechanical(omega_b: f64, min_over_omega_b: f64, max_over_omega_b: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Invalid(format!(
                "probe grid needs at least 2 points, got {points}"
            )));
        }
        if !(max_over_omega_b > min_over_omega_b) {
            return Err(Error::Invalid(format!(
                "delta range [{min_over_omega_b}, {max_over_omega_b}] is empty"
            )));
        }
        let step = (max_over_omega_b - min_over_omega_b) / (points - 1) as f64;
        let deltas = (0..points)
            .map(|i| {
                let x = if i == points - 1 {
                    max_over_omega_b
                } else {
                    min_over_omega_b + step * i as f64
                };
                omega_b * (1.0 + x)
            })
            .collect();
        Self::new(deltas)
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

/// Closed-form spectrum over a grid, in grid order.
pub fn spectrum(ss: &SteadyState, p: &SystemParams, grid: &DeltaGrid) -> Vec<ProbeResponse> {
    grid.deltas
        .par_iter()
        .map(|&d| ProbeResponse::new(ss, p, d, eps_t_closed_form(ss, p, d)))
        .collect()
}

/// Spectrum with a chosen expression.
pub fn spectrum_with(form: Form, ss: &SteadyState, p: &SystemParams, grid: &DeltaGrid) -> Result<Vec<ProbeResponse>> {
    grid.deltas
        .par_iter()
        .map(|&d| eps_t(form, ss, p, d).map(|e| ProbeResponse::new(ss, p, d, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::tests::fig2;
    use crate::steady_state::OperatingPoint;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fig2_point() -> OperatingPoint {
        let p = fig2();
        OperatingPoint::effective(&p, p.omega_b).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn bare_cavity_on_resonance_is_four() {
        let op = fig2_point();
        let mut ss = *op.steady();
        ss.g_om_enhanced = Complex64::new(0.0, 0.0);
        let e = eps_t_closed_form(&ss, &op.params, ss.delta_a_eff);
        assert_eq!(e, Complex64::new(4.0, 0.0));
    }

    #[test]
    fn far_detuned_response_vanishes() {
        let op = fig2_point();
        let e = eps_t_closed_form(op.steady(), &op.params, 1e22);
        assert!(e.norm() < 1e-10);
    }

    #[test]
    fn response_fields_are_consistent() {
        let op = fig2_point();
        let r = ProbeResponse::new(op.steady(), &op.params, op.params.omega_b * 1.001, Complex64::new(1.5, -0.25));
        assert_eq!(r.t_pr, r.eps_t - 1.0);
        assert_eq!(r.absorption, r.eps_t.re);
        assert_eq!(r.dispersion, r.eps_t.im);
        assert!((r.delta_over_omega_b() - 0.001).abs() < 1e-12);
    }

    #[test]
    fn decoupled_microwave_matches_single_form() {
        let mut op = fig2_point();
        op.params.g_em = 0.0;
        let p = op.params;
        for k in -50..=50 {
            let d = p.omega_b * (1.0 + k as f64 * 4e-4);
            let a = eps_t_closed_form(op.steady(), &p, d);
            let b = eps_t_single_omit(op.steady(), &p, d);
            assert!(rel(a, b) < 1e-14);
            let o = eps_t_oracle(op.steady(), &p, d).unwrap();
            assert!(rel(o, b) < 1e-10);
        }
    }

    #[test]
    fn vanishing_coupling_recovers_lorentzian() {
        let op = fig2_point();
        let mut ss = *op.steady();
        ss.g_om_enhanced = Complex64::new(0.0, 0.0);
        let p = op.params;
        for k in -10..=10 {
            let d = p.omega_b * (1.0 + k as f64 * 0.05);
            let lor = 2.0 * p.kappa_a / (p.kappa_a / 2.0 - I * (d - ss.delta_a_eff));
            assert!(rel(eps_t_single_omit(&ss, &p, d), lor) < 1e-15);
        }
    }

    #[test]
    fn oracle_matches_closed_form_on_random_points() {
        let op = fig2_point();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..17 {
            let d = op.params.omega_b * (1.0 + rng.random_range(-0.02..0.02));
            let a = eps_t_closed_form(op.steady(), &op.params, d);
            let b = eps_t_oracle(op.steady(), &op.params, d).unwrap();
            assert!(rel(b, a) < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn grid_validation() {
        assert!(DeltaGrid::new(vec![]).is_err());
        assert!(DeltaGrid::new(vec![1.0]).is_err());
        assert!(DeltaGrid::new(vec![1.0, 1.0]).is_err());
        assert!(DeltaGrid::new(vec![2.0, 1.0]).is_err());
        assert!(DeltaGrid::new(vec![1.0, f64::NAN]).is_err());
        let g = DeltaGrid::new(vec![1.0, 2.0]).unwrap();
        let op = fig2_point();
        assert_eq!(spectrum(op.steady(), &op.params, &g).len(), 2);
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let wb = 1.5e10;
        let g = DeltaGrid::around_mechanical(wb, -0.02, 0.02, 4001).unwrap();
        assert_eq!(g.len(), 4001);
        assert_eq!(g.deltas()[0], wb * 0.98);
        assert_eq!(g.deltas()[4000], wb * 1.02);
        assert_eq!(g.deltas()[2000], wb);
    }

    #[test]
    fn spectrum_is_thread_count_independent() {
        let op = fig2_point();
        let g = DeltaGrid::around_mechanical(op.params.omega_b, -0.02, 0.02, 4001).unwrap();
        let a = spectrum(op.steady(), &op.params, &g);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| spectrum(op.steady(), &op.params, &g));
        assert_eq!(a, b);
    }

    #[test]
    fn far_wing_decays_monotonically() {
        let op = fig2_point();
        let p = op.params;
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let d = op.steady().delta_a_eff + p.kappa_a * 10.0 * k as f64;
            let m = eps_t_closed_form(op.steady(), &p, d).norm();
            assert!(m < last);
            last = m;
        }
    }

    proptest! {
        #[test]
        fn response_is_independent_of_probe_amplitude(decade in -3.0f64..3.0, x in -0.02f64..0.02) {
            let op = fig2_point();
            let d = op.params.omega_b * (1.0 + x);
            let unit = eps_t_oracle(op.steady(), &op.params, d).unwrap();
            let scaled = eps_t_oracle_with_probe(op.steady(), &op.params, d, 10f64.powf(decade)).unwrap();
            prop_assert!(rel(scaled, unit) < 1e-12);
        }
    }
}
