//! System parameters, configuration ingestion and derived drive quantities.
//!
//! Every quantity is stored internally as an angular frequency (rad/s).
//! Configuration files quote frequencies either as ordinary frequencies
//! with a `_hz` suffix (`omega_b_hz = 2.4e9` means ω_b = 2π·2.4 GHz) or as
//! angular values under the bare key (`omega_b = 1.508e10`).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::{hz_to_angular, HBAR, K_B};
use crate::error::{Error, Result};

/// Physical constants of the three-mode system, all angular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Optical cavity frequency ω_a.
    pub omega_a: f64,
    /// Microwave cavity frequency ω_c.
    pub omega_c: f64,
    /// Mechanical frequency ω_b.
    pub omega_b: f64,
    /// Optical decay rate κ_a.
    pub kappa_a: f64,
    /// Microwave decay rate κ_c.
    pub kappa_c: f64,
    /// Intrinsic mechanical damping γ_b.
    pub gamma_b: f64,
    /// Single-photon optomechanical coupling g_om.
    pub g_om: f64,
    /// Piezomechanical coupling g_em.
    pub g_em: f64,
    /// Pump detuning Δ_a = ω_a − ω_pu.
    pub delta_a: f64,
    /// Microwave drive detuning Δ_c = ω_c − ω_k.
    pub delta_c: f64,
    /// Optical pump power, W.
    pub power_pump: f64,
    /// Optical probe power, W. The normalized response does not depend on it.
    pub power_probe: f64,
    /// Microwave drive power, W.
    pub power_microwave: f64,
}

/// Non-fatal warnings about the parameter regime.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "advisory", rename_all = "snake_case")]
pub enum Advisory {
    /// ω_b ≤ κ_a: the single-sideband ansatz is outside its strict regime.
    SidebandUnresolved { omega_b: f64, kappa_a: f64 },
    /// ε_pr is not small compared with ε_pu.
    WeakProbeViolated { ratio: f64 },
}

impl fmt::Display for Advisory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Advisory::SidebandUnresolved { omega_b, kappa_a } => write!(
                f,
                "not sideband resolved: omega_b = {omega_b:e} rad/s <= kappa_a = {kappa_a:e} rad/s"
            ),
            Advisory::WeakProbeViolated { ratio } => write!(
                f,
                "weak-probe condition violated: eps_probe/eps_pump = {ratio:.3} >= 0.1"
            ),
        }
    }
}

impl SystemParams {
    /// Checks the hard invariants and returns the soft ones as advisories.
    pub fn validate(&self) -> Result<Vec<Advisory>> {
        let finite = [
            (self.omega_a, "omega_a"),
            (self.omega_c, "omega_c"),
            (self.omega_b, "omega_b"),
            (self.kappa_a, "kappa_a"),
            (self.kappa_c, "kappa_c"),
            (self.gamma_b, "gamma_b"),
            (self.g_om, "g_om"),
            (self.g_em, "g_em"),
            (self.delta_a, "delta_a"),
            (self.delta_c, "delta_c"),
            (self.power_pump, "p_pump_w"),
            (self.power_probe, "p_probe_w"),
            (self.power_microwave, "p_microwave_w"),
        ];
        for (v, name) in finite {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        for (v, name) in [
            (self.omega_a, "omega_a"),
            (self.omega_c, "omega_c"),
            (self.omega_b, "omega_b"),
        ] {
            if v <= 0.0 {
                return Err(Error::NonPositive {
                    quantity: "frequency",
                    field: name,
                });
            }
        }
        for (v, name) in [
            (self.kappa_a, "kappa_a"),
            (self.kappa_c, "kappa_c"),
            (self.gamma_b, "gamma_b"),
        ] {
            if v <= 0.0 {
                return Err(Error::NonPositive {
                    quantity: "decay rate",
                    field: name,
                });
            }
        }
        for (v, name) in [(self.g_om, "g_om"), (self.g_em, "g_em")] {
            if v < 0.0 {
                return Err(Error::Negative {
                    quantity: "coupling",
                    field: name,
                });
            }
        }
        for (v, name) in [
            (self.power_pump, "p_pump_w"),
            (self.power_probe, "p_probe_w"),
            (self.power_microwave, "p_microwave_w"),
        ] {
            if v < 0.0 {
                return Err(Error::Negative {
                    quantity: "power",
                    field: name,
                });
            }
        }
        if self.omega_a <= self.omega_b {
            return Err(Error::Invalid(format!(
                "omega_a ({:e}) must exceed omega_b ({:e})",
                self.omega_a, self.omega_b
            )));
        }
        let mut advisories = Vec::new();
        if self.omega_b <= self.kappa_a {
            advisories.push(Advisory::SidebandUnresolved {
                omega_b: self.omega_b,
                kappa_a: self.kappa_a,
            });
        }
        Ok(advisories)
    }

    /// Pump frequency ω_pu = ω_a − Δ_a.
    pub fn omega_pump(&self) -> f64 {
        self.omega_a - self.delta_a
    }

    /// Microwave drive frequency ω_k = ω_c − Δ_c.
    pub fn omega_microwave(&self) -> f64 {
        self.omega_c - self.delta_c
    }
}

/// Drive field amplitudes ε_pu, ε_pr, ε_k in s⁻¹ (√photons per second).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveAmplitudes {
    pub eps_pump: f64,
    pub eps_probe: f64,
    pub eps_microwave: f64,
}

impl DriveAmplitudes {
    pub fn advisories(&self) -> Vec<Advisory> {
        if self.eps_probe > 0.0 && self.eps_probe >= 0.1 * self.eps_pump {
            let ratio = if self.eps_pump > 0.0 {
                self.eps_probe / self.eps_pump
            } else {
                f64::INFINITY
            };
            vec![Advisory::WeakProbeViolated { ratio }]
        } else {
            Vec::new()
        }
    }
}

fn amplitude(power: f64, decay: f64, omega: f64) -> f64 {
    (power * decay / (HBAR * omega)).sqrt()
}

/// Converts drive powers into field amplitudes ε = √(P κ / ħω).
///
/// The probe amplitude is evaluated at the nominal probe frequency
/// ω_pr = ω_pu + ω_b.
pub fn drive_amplitudes(p: &SystemParams) -> Result<DriveAmplitudes> {
    let omega_pu = p.omega_pump();
    let omega_k = p.omega_microwave();
    if !(omega_pu > 0.0) {
        return Err(Error::Invalid(format!(
            "non-positive pump frequency omega_a - delta_a = {omega_pu:e}"
        )));
    }
    if !(omega_k > 0.0) {
        return Err(Error::Invalid(format!(
            "non-positive microwave drive frequency omega_c - delta_c = {omega_k:e}"
        )));
    }
    let omega_pr = omega_pu + p.omega_b;
    Ok(DriveAmplitudes {
        eps_pump: amplitude(p.power_pump, p.kappa_a, omega_pu),
        eps_probe: amplitude(p.power_probe, p.kappa_a, omega_pr),
        eps_microwave: amplitude(p.power_microwave, p.kappa_c, omega_k),
    })
}

/// Bose–Einstein occupation N(ω) = 1/(exp(ħω/k_B T) − 1).
///
/// Expects ω > 0 and T ≥ 0; T = 0 returns the limit 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * temperature)).exp_m1()
}

/// g_om = (ω_a/L)·√(ħ/(m ω_b)) from cavity length `cavity_length` (m) and
/// effective mass `mass` (kg).
///
/// The coupling is between the optical field and the mechanical mode.
pub fn g_om_from_geometry(omega_a: f64, cavity_length: f64, mass: f64, omega_b: f64) -> Result<f64> {
    for (v, name) in [
        (omega_a, "omega_a"),
        (cavity_length, "cavity_length"),
        (mass, "mass"),
        (omega_b, "omega_b"),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidValue {
                key: name.to_string(),
                reason: "must be positive and finite".into(),
            });
        }
    }
    Ok(omega_a / cavity_length * (HBAR / (mass * omega_b)).sqrt())
}

/// How the pump detuning in the configuration is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningMode {
    /// `delta_a` is the bare detuning; Δ′_a follows from the steady state.
    #[default]
    Bare,
    /// `delta_a` is the target for Δ′_a; the bare Δ_a is solved for.
    Effective,
}

impl std::str::FromStr for DetuningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bare" => Ok(DetuningMode::Bare),
            "effective" => Ok(DetuningMode::Effective),
            other => Err(Error::InvalidValue {
                key: "detuning_mode".into(),
                reason: format!("expected \"bare\" or \"effective\", got {other:?}"),
            }),
        }
    }
}

/// A scalar configuration entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for ConfigValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigValue::Number(v) => write!(f, "{v:e}"),
            ConfigValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

/// Field groups of the flat schema: each field may be spelled by exactly
/// one of its keys.
const FIELDS: &[(&str, &[&str])] = &[
    ("omega_a", &["omega_a_hz", "omega_a"]),
    ("omega_c", &["omega_c_hz", "omega_c"]),
    ("omega_b", &["omega_b_hz", "omega_b"]),
    ("kappa_a", &["kappa_a_hz", "kappa_a"]),
    ("kappa_c", &["kappa_c_hz", "kappa_c"]),
    ("gamma_b", &["gamma_b_hz", "gamma_b"]),
    ("g_om", &["g_om_hz", "g_om"]),
    ("g_em", &["g_em_hz", "g_em"]),
    ("delta_a", &["delta_a", "delta_a_over_omega_b"]),
    ("delta_c", &["delta_c", "delta_c_over_omega_b"]),
    ("p_pump_w", &["p_pump_w"]),
    ("p_probe_w", &["p_probe_w"]),
    ("p_microwave_w", &["p_microwave_w"]),
    ("temperature_k", &["temperature_k"]),
    ("detuning_mode", &["detuning_mode"]),
];

fn field_of(key: &str) -> Option<&'static (&'static str, &'static [&'static str])> {
    FIELDS.iter().find(|(_, keys)| keys.contains(&key))
}

/// Flat key → value configuration, before validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RawConfig(pub BTreeMap<String, ConfigValue>);

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: ConfigValue) {
        self.0.insert(key.into(), value);
    }

    pub fn get(&self, key: &str) -> Option<&ConfigValue> {
        self.0.get(key)
    }

    /// Layers `other` on top of `self`. A key in `other` replaces every
    /// spelling of the same field in `self`.
    pub fn overlay(&mut self, other: &RawConfig) {
        for (key, value) in &other.0 {
            if let Some((_, keys)) = field_of(key) {
                for k in keys.iter() {
                    self.0.remove(*k);
                }
            }
            self.0.insert(key.clone(), value.clone());
        }
    }

    /// Parses a `key=value` override. Values that parse as numbers become
    /// numbers, everything else text.
    pub fn parse_assignment(text: &str) -> Result<(String, ConfigValue)> {
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {text:?}")))?;
        let k = k.trim();
        let v = v.trim();
        if k.is_empty() {
            return Err(Error::Parse(format!("empty key in {text:?}")));
        }
        let value = match v.parse::<f64>() {
            Ok(n) => ConfigValue::Number(n),
            Err(_) => ConfigValue::Text(v.trim_matches('"').to_string()),
        };
        Ok((k.to_string(), value))
    }
}

/// Parses the flat TOML configuration schema into a [`RawConfig`].
pub fn parse_config_str(text: &str) -> Result<RawConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    raw_from_table(&table)
}

/// Converts a TOML table of scalars into a [`RawConfig`].
pub fn raw_from_table(table: &toml::Table) -> Result<RawConfig> {
    let mut raw = RawConfig::new();
    for (key, value) in table {
        let v = match value {
            toml::Value::Float(f) => ConfigValue::Number(*f),
            toml::Value::Integer(i) => ConfigValue::Number(*i as f64),
            toml::Value::String(s) => ConfigValue::Text(s.clone()),
            _ => {
                return Err(Error::InvalidValue {
                    key: key.clone(),
                    reason: "expected a number or a string".into(),
                })
            }
        };
        raw.set(key.clone(), v);
    }
    Ok(raw)
}

/// Validated configuration: parameters plus how to interpret them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub params: SystemParams,
    pub detuning_mode: DetuningMode,
    pub temperature_k: Option<f64>,
}

impl ModelConfig {
    /// Regime warnings for the parameters and their drive amplitudes.
    pub fn advisories(&self) -> Vec<Advisory> {
        let mut out = self.params.validate().unwrap_or_default();
        if let Ok(d) = drive_amplitudes(&self.params) {
            out.extend(d.advisories());
        }
        out
    }

    /// Canonical key/value form (angular units); the resolved configuration
    /// that output manifests hash.
    pub fn to_raw(&self) -> RawConfig {
        let p = &self.params;
        let mut raw = RawConfig::new();
        let n = ConfigValue::Number;
        raw.set("omega_a", n(p.omega_a));
        raw.set("omega_c", n(p.omega_c));
        raw.set("omega_b", n(p.omega_b));
        raw.set("kappa_a", n(p.kappa_a));
        raw.set("kappa_c", n(p.kappa_c));
        raw.set("gamma_b", n(p.gamma_b));
        raw.set("g_om", n(p.g_om));
        raw.set("g_em", n(p.g_em));
        raw.set("delta_a", n(p.delta_a));
        raw.set("delta_c", n(p.delta_c));
        raw.set("p_pump_w", n(p.power_pump));
        raw.set("p_probe_w", n(p.power_probe));
        raw.set("p_microwave_w", n(p.power_microwave));
        if let Some(t) = self.temperature_k {
            raw.set("temperature_k", n(t));
        }
        let mode = match self.detuning_mode {
            DetuningMode::Bare => "bare",
            DetuningMode::Effective => "effective",
        };
        raw.set("detuning_mode", ConfigValue::Text(mode.into()));
        raw
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
}

impl Reader<'_> {
    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.raw.get(key) {
            None => Ok(None),
            Some(ConfigValue::Number(v)) => {
                if v.is_finite() {
                    Ok(Some(*v))
                } else {
                    Err(Error::InvalidValue {
                        key: key.into(),
                        reason: "must be finite".into(),
                    })
                }
            }
            Some(ConfigValue::Text(_)) => Err(Error::InvalidValue {
                key: key.into(),
                reason: "expected a number".into(),
            }),
        }
    }

    /// Looks a field up under each of its spellings, converting to the
    /// internal unit with `convert[i]`.
    fn field(&self, name: &str, convert: &[&dyn Fn(f64) -> f64]) -> Result<Option<f64>> {
        let (_, keys) = field_of(name).expect("known field");
        let mut found: Option<(&str, f64)> = None;
        for (key, conv) in keys.iter().zip(convert) {
            if let Some(v) = self.number(key)? {
                if let Some((first, _)) = found {
                    return Err(Error::ConflictingKeys {
                        key: name.into(),
                        first: first.into(),
                        second: (*key).into(),
                    });
                }
                found = Some((key, conv(v)));
            }
        }
        Ok(found.map(|(_, v)| v))
    }

    fn required(&self, name: &str, convert: &[&dyn Fn(f64) -> f64]) -> Result<f64> {
        self.field(name, convert)?
            .ok_or_else(|| Error::MissingKey(field_of(name).expect("known field").1[0].to_string()))
    }
}

/// Validates a raw configuration into a [`ModelConfig`].
pub fn build_config(raw: &RawConfig) -> Result<ModelConfig> {
    for key in raw.0.keys() {
        if field_of(key).is_none() {
            return Err(Error::UnknownKey(key.clone()));
        }
    }
    let r = Reader { raw };
    let hz = |v: f64| hz_to_angular(v);
    let id = |v: f64| v;
    let freq: [&dyn Fn(f64) -> f64; 2] = [&hz, &id];
    let ident: [&dyn Fn(f64) -> f64; 1] = [&id];

    let omega_b = r.required("omega_b", &freq)?;
    let scaled = |v: f64| v * omega_b;
    let detuning: [&dyn Fn(f64) -> f64; 2] = [&id, &scaled];

    let params = SystemParams {
        omega_a: r.required("omega_a", &freq)?,
        omega_c: r.required("omega_c", &freq)?,
        omega_b,
        kappa_a: r.required("kappa_a", &freq)?,
        kappa_c: r.required("kappa_c", &freq)?,
        gamma_b: r.required("gamma_b", &freq)?,
        g_om: r.required("g_om", &freq)?,
        g_em: r.required("g_em", &freq)?,
        delta_a: r.required("delta_a", &detuning)?,
        delta_c: r.required("delta_c", &detuning)?,
        power_pump: r.required("p_pump_w", &ident)?,
        power_probe: r.required("p_probe_w", &ident)?,
        power_microwave: r.required("p_microwave_w", &ident)?,
    };
    params.validate()?;

    let temperature_k = r.field("temperature_k", &ident)?;
    if let Some(t) = temperature_k {
        if t < 0.0 {
            return Err(Error::Negative {
                quantity: "temperature",
                field: "temperature_k",
            });
        }
    }
    let detuning_mode = match raw.get("detuning_mode") {
        None => DetuningMode::Bare,
        Some(ConfigValue::Text(s)) => s.parse()?,
        Some(ConfigValue::Number(_)) => {
            return Err(Error::InvalidValue {
                key: "detuning_mode".into(),
                reason: "expected \"bare\" or \"effective\"".into(),
            })
        }
    };
    Ok(ModelConfig {
        params,
        detuning_mode,
        temperature_k,
    })
}

/// Validates a raw configuration and returns only the system parameters.
pub fn build_params(raw: &RawConfig) -> Result<SystemParams> {
    build_config(raw).map(|c| c.params)
}
