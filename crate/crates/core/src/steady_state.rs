//! Mean-field steady state of the driven three-mode system.
//!
//! With only the pump and microwave drives on, the steady amplitudes obey
//!
//! ```text
//! a_s = ε_pu / (iΔ′_a + κ_a/2)
//! c_s = (i g_em b_s + ε_k) / (iΔ_c + κ_c/2)
//! b_s = (i g_om |a_s|² + i g_em c_s) / (iω_b + γ_b/2)
//! Δ′_a = Δ_a − g_om (b_s* + b_s)
//! ```
//!
//! For a fixed photon number x = |a_s|² the last two lines are linear in
//! (b_s, c_s), so Re b_s = r0 + r1·x and the self-consistency condition
//! x·(Δ′_a² + κ_a²/4) = ε_pu² becomes a real cubic in x.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cubic;
use crate::error::{Error, Result};
use crate::params::{drive_amplitudes, DetuningMode, DriveAmplitudes, ModelConfig, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Maximum relative residual accepted for a returned branch.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub a_s: Complex64,
    pub c_s: Complex64,
    pub b_s: Complex64,
    /// Δ′_a, rad/s.
    pub delta_a_eff: f64,
    /// G_om = g_om·a_s, rad/s.
    pub g_om_enhanced: Complex64,
    /// |a_s|².
    pub n_cavity: f64,
}

/// Relative residuals of the steady-state relations, each normalized by
/// the largest term of its own equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub optical: f64,
    pub microwave: f64,
    pub mechanical: f64,
    pub detuning: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.optical
            .max(self.microwave)
            .max(self.mechanical)
            .max(self.detuning)
    }
}

fn relative(terms: &[Complex64]) -> f64 {
    let sum: Complex64 = terms.iter().sum();
    let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        sum.norm() / scale
    }
}

impl SteadyState {
    pub fn residuals(&self, p: &SystemParams, d: &DriveAmplitudes) -> Residuals {
        let c = |v: f64| Complex64::new(v, 0.0);
        let optical = relative(&[
            self.a_s * I * self.delta_a_eff,
            self.a_s * (p.kappa_a / 2.0),
            c(-d.eps_pump),
        ]);
        let microwave = relative(&[
            self.c_s * I * p.delta_c,
            self.c_s * (p.kappa_c / 2.0),
            -I * p.g_em * self.b_s,
            c(-d.eps_microwave),
        ]);
        let mechanical = relative(&[
            self.b_s * I * p.omega_b,
            self.b_s * (p.gamma_b / 2.0),
            -I * p.g_om * self.a_s.norm_sqr(),
            -I * p.g_em * self.c_s,
        ]);
        let detuning = relative(&[
            c(self.delta_a_eff),
            c(-p.delta_a),
            c(2.0 * p.g_om * self.b_s.re),
        ]);
        Residuals {
            optical,
            microwave,
            mechanical,
            detuning,
        }
    }
}

/// All physical steady states, ascending in photon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyBranches {
    pub branches: Vec<SteadyState>,
    pub bistable: bool,
}

/// The cubic in x = |a_s|² together with the affine map x ↦ b_s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyCubic {
    /// (c3, c2, c1, c0) of c3 x³ + c2 x² + c1 x + c0.
    pub coefficients: [f64; 4],
    /// b_s = b_offset + b_slope·x
    pub b_offset: Complex64,
    pub b_slope: Complex64,
    /// Re b_s = r0 + r1·x
    pub r0: f64,
    pub r1: f64,
}

impl SteadyCubic {
    pub fn b_s(&self, x: f64) -> Complex64 {
        self.b_offset + self.b_slope * x
    }
}

/// Reduces the steady-state relations to a real cubic in |a_s|².
pub fn reduce_to_cubic(p: &SystemParams, d: &DriveAmplitudes) -> Result<SteadyCubic> {
    let mech = I * p.omega_b + p.gamma_b / 2.0;
    let micro = I * p.delta_c + p.kappa_c / 2.0;
    let den = mech * micro + p.g_em * p.g_em;
    if den.norm() == 0.0 || !den.is_finite() {
        return Err(Error::Singular(
            "(i omega_b + gamma_b/2)(i delta_c + kappa_c/2) + g_em^2 vanishes".into(),
        ));
    }
    let b_offset = I * p.g_em * d.eps_microwave / den;
    let b_slope = I * p.g_om * micro / den;
    let r0 = b_offset.re;
    let r1 = b_slope.re;
    let d0 = p.delta_a - 2.0 * p.g_om * r0;
    let d1 = 2.0 * p.g_om * r1;
    let k = p.kappa_a * p.kappa_a / 4.0;
    let e2 = d.eps_pump * d.eps_pump;
    Ok(SteadyCubic {
        coefficients: [d1 * d1, -2.0 * d0 * d1, d0 * d0 + k, -e2],
        b_offset,
        b_slope,
        r0,
        r1,
    })
}

fn reconstruct(p: &SystemParams, d: &DriveAmplitudes, cubic: &SteadyCubic, x: f64) -> SteadyState {
    let b_s = cubic.b_s(x);
    let c_s = (I * p.g_em * b_s + d.eps_microwave) / (I * p.delta_c + p.kappa_c / 2.0);
    let delta_a_eff = p.delta_a - 2.0 * p.g_om * b_s.re;
    let a_s = d.eps_pump / (I * delta_a_eff + p.kappa_a / 2.0);
    SteadyState {
        a_s,
        c_s,
        b_s,
        delta_a_eff,
        g_om_enhanced: a_s * p.g_om,
        n_cavity: a_s.norm_sqr(),
    }
}

/// Real non-negative roots of the steady-state cubic, ascending.
///
/// The closed form is applied to the equivalent cubic in the effective
/// detuning u = Δ′_a (scaled by κ_a/2), whose coefficients stay O(1)
/// however small the optomechanical feedback is; each root maps back
/// through x = ε_pu²/(u² + κ_a²/4) and is then Newton-polished on the
/// cubic in x.
fn physical_roots(p: &SystemParams, d: &DriveAmplitudes, cubic: &SteadyCubic) -> Vec<f64> {
    let e2 = d.eps_pump * d.eps_pump;
    if e2 == 0.0 {
        return vec![0.0];
    }
    let h = p.kappa_a / 2.0;
    let d0 = p.delta_a - 2.0 * p.g_om * cubic.r0;
    let d1 = 2.0 * p.g_om * cubic.r1;
    // v³ − (d0/h) v² + v − d0/h + d1 ε²/h³ = 0 with u = h v
    let s = d0 / h;
    let feedback = d1 * e2 / (h * h * h);
    let mut xs: Vec<f64> = cubic::roots(1.0, -s, 1.0, feedback - s)
        .into_iter()
        .filter(|z| cubic::is_effectively_real(*z))
        .map(|z| {
            let u = h * z.re;
            let x = e2 / (u * u + h * h);
            cubic::polish(&cubic.coefficients, x)
        })
        .filter(|x| x.is_finite() && *x >= 0.0)
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()));
    xs
}

/// Solves for every physical steady state.
pub fn solve_steady(p: &SystemParams, d: &DriveAmplitudes) -> Result<SteadyBranches> {
    let cubic = reduce_to_cubic(p, d)?;
    let xs = physical_roots(p, d, &cubic);
    if xs.is_empty() {
        return Err(Error::NoPhysicalRoot(
            "steady-state cubic has no non-negative real root".into(),
        ));
    }
    let mut branches = Vec::with_capacity(xs.len());
    for x in xs {
        let ss = reconstruct(p, d, &cubic, x);
        let r = ss.residuals(p, d);
        for (name, v) in [
            ("optical", r.optical),
            ("microwave", r.microwave),
            ("mechanical", r.mechanical),
            ("detuning", r.detuning),
        ] {
            if !(v < RESIDUAL_TOL) {
                return Err(Error::ResidualBreach {
                    equation: name,
                    residual: v,
                    tolerance: RESIDUAL_TOL,
                });
            }
        }
        branches.push(ss);
    }
    Ok(SteadyBranches {
        bistable: branches.len() > 1,
        branches,
    })
}

/// Returns a copy of `p` whose bare Δ_a makes the steady Δ′_a equal
/// `target`.
///
/// Pinning Δ′_a fixes |a_s|² = ε_pu²/(Δ′_a² + κ_a²/4) up to the weak
/// dependence of ε_pu on the pump frequency, so the bare detuning is the
/// fixed point of Δ_a = target + 2 g_om Re b_s(Δ_a).
pub fn pin_effective_detuning(p: &SystemParams, target: f64) -> Result<SystemParams> {
    let mut q = *p;
    q.delta_a = target;
    for _ in 0..100 {
        let d = drive_amplitudes(&q)?;
        let cubic = reduce_to_cubic(&q, &d)?;
        let x = d.eps_pump * d.eps_pump / (target * target + q.kappa_a * q.kappa_a / 4.0);
        let next = target + 2.0 * q.g_om * cubic.b_s(x).re;
        if !next.is_finite() {
            break;
        }
        let step = (next - q.delta_a).abs();
        q.delta_a = next;
        if step <= 4.0 * f64::EPSILON * next.abs().max(target.abs()) {
            return Ok(q);
        }
    }
    Err(Error::NoConvergence(format!(
        "could not pin the effective detuning to {target:e} rad/s"
    )))
}

/// Parameters, drives and steady branches for one configuration, with the
/// branch that downstream response calculations use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Parameters with the bare Δ_a actually used.
    pub params: SystemParams,
    pub drives: DriveAmplitudes,
    pub branches: SteadyBranches,
    /// Index into `branches.branches`.
    pub selected: usize,
}

impl OperatingPoint {
    /// Solves a configuration. In effective mode the configured `delta_a`
    /// is the target Δ′_a and the branch realizing it is selected;
    /// otherwise the lowest-photon-number branch is.
    pub fn resolve(cfg: &ModelConfig) -> Result<Self> {
        match cfg.detuning_mode {
            DetuningMode::Bare => Self::bare(&cfg.params),
            DetuningMode::Effective => Self::effective(&cfg.params, cfg.params.delta_a),
        }
    }

    pub fn bare(p: &SystemParams) -> Result<Self> {
        let drives = drive_amplitudes(p)?;
        let branches = solve_steady(p, &drives)?;
        Ok(Self {
            params: *p,
            drives,
            branches,
            selected: 0,
        })
    }

    pub fn effective(p: &SystemParams, target: f64) -> Result<Self> {
        let params = pin_effective_detuning(p, target)?;
        let drives = drive_amplitudes(&params)?;
        let branches = solve_steady(&params, &drives)?;
        let (selected, miss) = branches
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| (i, (b.delta_a_eff - target).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one branch");
        if miss > 1e-9 * target.abs().max(params.kappa_a) {
            return Err(Error::NoConvergence(format!(
                "no steady branch realizes delta_a_eff = {target:e} (closest misses by {miss:e})"
            )));
        }
        Ok(Self {
            params,
            drives,
            branches,
            selected,
        })
    }

    pub fn with_branch(mut self, index: usize) -> Result<Self> {
        if index >= self.branches.branches.len() {
            return Err(Error::Invalid(format!(
                "branch {index} requested but only {} exist",
                self.branches.branches.len()
            )));
        }
        self.selected = index;
        Ok(self)
    }

    pub fn steady(&self) -> &SteadyState {
        &self.branches.branches[self.selected]
    }
}
