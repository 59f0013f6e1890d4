//! Figure-family sweeps: a probe spectrum repeated over one secondary
//! parameter, with the steady state re-solved for every curve.
//!
//! Scenarios are described by bundled TOML presets with a `[system]`
//! table (the flat parameter schema) and a `[sweep]` table:
//!
//! ```toml
//! [sweep]
//! scenario = "fig5_gem"
//! values = [0.0, 3.0, 6.0, 9.0, 12.0]
//! delta_min = -0.02
//! delta_max = 0.02
//! points = 4001
//! ```

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{find_windows, WindowReport};
use crate::constants::hz_to_angular;
use crate::error::{Error, Result};
use crate::params::{build_config, raw_from_table, ModelConfig, RawConfig, SystemParams};
use crate::response::{spectrum, DeltaGrid, ProbeResponse};
use crate::steady_state::OperatingPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig2Baseline,
    Fig3GemZero,
    Fig5Gem,
    Fig6Ppump,
    Fig7Deltac,
    Fig8PkResonant,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Fig2Baseline,
        Scenario::Fig3GemZero,
        Scenario::Fig5Gem,
        Scenario::Fig6Ppump,
        Scenario::Fig7Deltac,
        Scenario::Fig8PkResonant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig2Baseline => "fig2_baseline",
            Scenario::Fig3GemZero => "fig3_gem_zero",
            Scenario::Fig5Gem => "fig5_gem",
            Scenario::Fig6Ppump => "fig6_ppump",
            Scenario::Fig7Deltac => "fig7_deltac",
            Scenario::Fig8PkResonant => "fig8_pk_resonant",
        }
    }

    pub fn figure(self) -> u8 {
        match self {
            Scenario::Fig2Baseline => 2,
            Scenario::Fig3GemZero => 3,
            Scenario::Fig5Gem => 5,
            Scenario::Fig6Ppump => 6,
            Scenario::Fig7Deltac => 7,
            Scenario::Fig8PkResonant => 8,
        }
    }

    pub fn from_figure(n: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.figure() == n)
            .ok_or_else(|| Error::InvalidValue {
                key: "figure".into(),
                reason: format!("expected one of 2, 3, 5, 6, 7, 8, got {n}"),
            })
    }

    /// Name and unit of the secondary value.
    pub fn secondary_label(self) -> &'static str {
        match self {
            Scenario::Fig2Baseline | Scenario::Fig3GemZero | Scenario::Fig5Gem => "g_em/2π (MHz)",
            Scenario::Fig6Ppump => "P_pu (W)",
            Scenario::Fig7Deltac => "Δ_c/ω_b",
            Scenario::Fig8PkResonant => "P_k (W)",
        }
    }

    pub fn preset(self) -> &'static str {
        match self {
            Scenario::Fig2Baseline => include_str!("../presets/fig2.toml"),
            Scenario::Fig3GemZero => include_str!("../presets/fig3.toml"),
            Scenario::Fig5Gem => include_str!("../presets/fig5.toml"),
            Scenario::Fig6Ppump => include_str!("../presets/fig6.toml"),
            Scenario::Fig7Deltac => include_str!("../presets/fig7.toml"),
            Scenario::Fig8PkResonant => include_str!("../presets/fig8.toml"),
        }
    }

    /// Secondary value as shown in legends and logs.
    pub fn format_value(self, v: f64) -> String {
        match self {
            Scenario::Fig6Ppump | Scenario::Fig8PkResonant => format!("{v:e}"),
            _ => format!("{v}"),
        }
    }

    /// Writes the secondary value into the parameters.
    pub fn apply(self, p: &mut SystemParams, value: f64) {
        match self {
            Scenario::Fig2Baseline | Scenario::Fig3GemZero | Scenario::Fig5Gem => {
                p.g_em = hz_to_angular(value * 1e6)
            }
            Scenario::Fig6Ppump => p.power_pump = value,
            Scenario::Fig7Deltac => p.delta_c = value * p.omega_b,
            Scenario::Fig8PkResonant => p.power_microwave = value,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::InvalidValue {
            key: "scenario".into(),
            reason: format!(
                "unknown scenario {s:?}; expected one of {}",
                Self::ALL.map(Scenario::name).join(", ")
            ),
        })
    }
}

/// The `[sweep]` table; every field optional so that layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTable {
    pub scenario: Option<String>,
    pub values: Option<Vec<f64>>,
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub points: Option<usize>,
}

impl SweepTable {
    pub fn overlay(&mut self, other: &SweepTable) {
        if other.scenario.is_some() {
            self.scenario.clone_from(&other.scenario);
        }
        if other.values.is_some() {
            self.values.clone_from(&other.values);
        }
        self.delta_min = other.delta_min.or(self.delta_min);
        self.delta_max = other.delta_max.or(self.delta_max);
        self.points = other.points.or(self.points);
    }
}

/// A parsed configuration file: system keys at the top level or under
/// `[system]`, and an optional `[sweep]` table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    pub system: RawConfig,
    pub sweep: SweepTable,
}

pub fn parse_document(text: &str) -> Result<Document> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let system_tab = match table.remove("system") {
        None => None,
        Some(toml::Value::Table(t)) => Some(t),
        Some(_) => {
            return Err(Error::InvalidValue {
                key: "system".into(),
                reason: "expected a table".into(),
            })
        }
    };
    let sweep = match table.remove("sweep") {
        None => SweepTable::default(),
        Some(v @ toml::Value::Table(_)) => v
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidValue { key: "sweep".into(), reason: e.message().to_string() })?,
        Some(_) => {
            return Err(Error::InvalidValue {
                key: "sweep".into(),
                reason: "expected a table".into(),
            })
        }
    };
    let mut system = raw_from_table(&table)?;
    if let Some(t) = system_tab {
        for (k, v) in raw_from_table(&t)?.0 {
            if system.0.contains_key(&k) {
                return Err(Error::ConflictingKeys {
                    key: k.clone(),
                    first: k.clone(),
                    second: format!("system.{k}"),
                });
            }
            system.0.insert(k, v);
        }
    }
    Ok(Document { system, sweep })
}

/// Probe axis in units of ω_b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AxisRange {
    pub fn grid(&self, omega_b: f64) -> Result<DeltaGrid> {
        DeltaGrid::around_mechanical(omega_b, self.min, self.max, self.points)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points.max(2) - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub secondary_values: Vec<f64>,
    pub grid: AxisRange,
    pub base: ModelConfig,
}

impl SweepSpec {
    /// The bundled preset for a scenario.
    pub fn preset(scenario: Scenario) -> Result<Self> {
        Self::layered(Some(scenario), &[])
    }

    /// Resolves a spec from the scenario preset with `layers` applied on
    /// top in order. The scenario comes from `scenario` or, failing that,
    /// the last layer naming one.
    pub fn layered(scenario: Option<Scenario>, layers: &[&Document]) -> Result<Self> {
        let scenario = match scenario {
            Some(s) => s,
            None => layers
                .iter()
                .rev()
                .find_map(|d| d.sweep.scenario.as_deref())
                .ok_or_else(|| Error::MissingKey("scenario".into()))?
                .parse()?,
        };
        let mut doc = parse_document(scenario.preset())?;
        for layer in layers {
            doc.system.overlay(&layer.system);
            doc.sweep.overlay(&layer.sweep);
        }
        if let Some(named) = doc.sweep.scenario.as_deref() {
            if named.parse::<Scenario>()? != scenario && layers.iter().all(|l| l.sweep.scenario.is_none()) {
                return Err(Error::Invalid(format!("preset for {} names {named}", scenario.name())));
            }
        }
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| Error::MissingKey(format!("sweep.{k}")));
        let spec = SweepSpec {
            scenario,
            secondary_values: doc.sweep.values.ok_or_else(|| Error::MissingKey("sweep.values".into()))?,
            grid: AxisRange {
                min: need(doc.sweep.delta_min, "delta_min")?,
                max: need(doc.sweep.delta_max, "delta_max")?,
                points: doc.sweep.points.ok_or_else(|| Error::MissingKey("sweep.points".into()))?,
            },
            base: build_config(&doc.system)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let v = &self.secondary_values;
        if v.is_empty() {
            return Err(Error::InvalidValue {
                key: "sweep.values".into(),
                reason: "must not be empty".into(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("sweep.values"));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidValue {
                key: "sweep.values".into(),
                reason: "must be strictly increasing".into(),
            });
        }
        if self.scenario != Scenario::Fig7Deltac && v[0] < 0.0 {
            return Err(Error::InvalidValue {
                key: "sweep.values".into(),
                reason: format!("{} must be non-negative", self.scenario.secondary_label()),
            });
        }
        if self.scenario == Scenario::Fig8PkResonant && self.base.params.delta_c != 0.0 {
            return Err(Error::InvalidValue {
                key: "delta_c".into(),
                reason: "fig8_pk_resonant requires a resonant microwave drive (delta_c = 0)".into(),
            });
        }
        if !(self.grid.min.is_finite() && self.grid.max.is_finite()) {
            return Err(Error::NonFinite("sweep.delta_min/delta_max"));
        }
        self.grid.grid(self.base.params.omega_b)?;
        Ok(())
    }

    /// Parameters of one curve.
    pub fn curve_config(&self, value: f64) -> Result<ModelConfig> {
        let mut cfg = self.base;
        self.scenario.apply(&mut cfg.params, value);
        cfg.params.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadySummary {
    pub branch_count: usize,
    pub bistable: bool,
    pub selected: usize,
    /// Bare Δ_a used, rad/s.
    pub delta_a: f64,
    /// Δ′_a of the selected branch, rad/s.
    pub delta_a_eff: f64,
    pub n_cavity: f64,
    pub g_om_enhanced_abs: f64,
    pub max_residual: f64,
}

impl SteadySummary {
    pub fn of(op: &OperatingPoint) -> Self {
        let ss = op.steady();
        Self {
            branch_count: op.branches.branches.len(),
            bistable: op.branches.bistable,
            selected: op.selected,
            delta_a: op.params.delta_a,
            delta_a_eff: ss.delta_a_eff,
            n_cavity: ss.n_cavity,
            g_om_enhanced_abs: ss.g_om_enhanced.norm(),
            max_residual: ss.residuals(&op.params, &op.drives).max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub secondary_value: f64,
    pub params: SystemParams,
    pub steady: SteadySummary,
    pub spectrum: Vec<ProbeResponse>,
    pub windows: WindowReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: Scenario,
    pub curves: Vec<Curve>,
}

impl SweepResult {
    /// Per-curve window reports and steady summaries, without spectra.
    pub fn windows_json(&self) -> serde_json::Value {
        serde_json::json!({
            "scenario": self.scenario.name(),
            "secondary": self.scenario.secondary_label(),
            "curves": self.curves.iter().map(|c| serde_json::json!({
                "secondary_value": c.secondary_value,
                "steady": c.steady,
                "windows": c.windows,
            })).collect::<Vec<_>>(),
        })
    }
}

fn run_curve(spec: &SweepSpec, value: f64) -> Result<Curve> {
    let cfg = spec.curve_config(value)?;
    let op = OperatingPoint::resolve(&cfg)?;
    let grid = spec.grid.grid(op.params.omega_b)?;
    let spectrum = spectrum(op.steady(), &op.params, &grid);
    let windows = find_windows(&spectrum)?;
    Ok(Curve {
        secondary_value: value,
        params: op.params,
        steady: SteadySummary::of(&op),
        spectrum,
        windows,
    })
}

/// Runs every curve, in parallel, keeping spec order. The first failing
/// curve in spec order is reported.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let results: Vec<Result<Curve>> = spec.secondary_values.par_iter().map(|&v| run_curve(spec, v)).collect();
    let curves = results
        .into_iter()
        .zip(&spec.secondary_values)
        .map(|(r, &value)| {
            r.map_err(|e| Error::Curve {
                value,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        scenario: spec.scenario,
        curves,
    })
}

pub const CSV_HEADER: &str = "scenario,secondary_value,delta_over_omega_b,re_eps_t,im_eps_t";

/// Long-format CSV, rows ordered by (secondary value, δ), 17 significant
/// digits.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{CSV_HEADER}")?;
    let mut curves: Vec<&Curve> = result.curves.iter().collect();
    curves.sort_by(|a, b| a.secondary_value.total_cmp(&b.secondary_value));
    let name = result.scenario.name();
    for c in curves {
        for r in &c.spectrum {
            writeln!(
                w,
                "{name},{:.16e},{:.16e},{:.16e},{:.16e}",
                c.secondary_value,
                r.delta_over_omega_b(),
                r.absorption,
                r.dispersion
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_csv(result, File::create(path)?)
}

const PALETTE: [&str; 8] = [
    "#1f3b99", "#2e8b3d", "#c0392b", "#17a2b8", "#8e44ad", "#d68910", "#5d6d7e", "#000000",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Self-contained SVG line chart of Re ε_T, one polyline per curve.
pub fn render_svg(result: &SweepResult) -> Result<String> {
    if result.curves.is_empty() {
        return Err(Error::Invalid("cannot plot a sweep with no curves".into()));
    }
    let (w, h) = (800.0, 500.0);
    let (left, right, top, bottom) = (80.0, 190.0, 30.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let xs = result.curves.iter().flat_map(|c| c.spectrum.iter().map(ProbeResponse::delta_over_omega_b));
    let ys = result.curves.iter().flat_map(|c| c.spectrum.iter().map(|r| r.absorption));
    let (x0, x1) = bounds(xs);
    let (mut y0, mut y1) = bounds(ys);
    let pad = if y1 > y0 { 0.05 * (y1 - y0) } else { 0.5 };
    y0 -= pad;
    y1 += pad;
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let px = sx(xv);
        let py = sy(yv);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle">{xv:.4}</text>"#,
            top + ph,
            top + ph + 5.0,
            top + ph + 18.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{yv:.3}</text>"#,
            left - 5.0,
            left - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">(δ−ω_b)/ω_b</text>"#,
        left + pw / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.2})">Re[ε_T]</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, c) in result.curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        s.push_str(&format!(r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points=""#));
        for (j, r) in c.spectrum.iter().enumerate() {
            if j > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", sx(r.delta_over_omega_b()), sy(r.absorption));
        }
        s.push_str("\"/>\n");
    }
    let lx = left + pw + 15.0;
    let _ = writeln!(
        s,
        r#"<text x="{lx}" y="{}" font-size="12">{}</text>"#,
        top + 10.0,
        escape(result.scenario.secondary_label())
    );
    for (i, c) in result.curves.iter().enumerate() {
        let y = top + 30.0 + 18.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="12">{}</text>"#,
            lx + 25.0,
            lx + 32.0,
            y + 4.0,
            escape(&result.scenario.format_value(c.secondary_value))
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

pub fn emit_svg(result: &SweepResult, path: &Path) -> Result<()> {
    let svg = render_svg(result)?;
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TWO_PI;
    use num_complex::Complex64;

    fn small(scenario: Scenario, values: Vec<f64>, points: usize) -> SweepSpec {
        let mut s = SweepSpec::preset(scenario).unwrap();
        s.secondary_values = values;
        s.grid.points = points;
        s
    }

    #[test]
    fn presets_resolve() {
        for s in Scenario::ALL {
            let spec = SweepSpec::preset(s).unwrap();
            assert_eq!(spec.scenario, s);
            assert_eq!(Scenario::from_figure(s.figure()).unwrap(), s);
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!(Scenario::from_figure(4).is_err());
        assert!("fig4".parse::<Scenario>().is_err());
    }

    #[test]
    fn preset_values_follow_captions() {
        let f5 = SweepSpec::preset(Scenario::Fig5Gem).unwrap();
        assert_eq!(f5.secondary_values, vec![0.0, 3.0, 6.0, 9.0, 12.0]);
        let f6 = SweepSpec::preset(Scenario::Fig6Ppump).unwrap();
        assert_eq!(f6.secondary_values, vec![1.0e-9, 1.001e-6, 2.001e-6, 3.001e-6, 4.001e-6]);
        let f7 = SweepSpec::preset(Scenario::Fig7Deltac).unwrap();
        assert_eq!(f7.secondary_values, vec![0.9, 0.95, 1.0, 1.05, 1.1]);
        let f8 = SweepSpec::preset(Scenario::Fig8PkResonant).unwrap();
        assert_eq!(f8.secondary_values, vec![1.0e-9, 5.01e-7, 1.001e-6, 1.501e-6, 2.001e-6]);
        assert_eq!(f8.base.params.delta_c, 0.0);
        let f2 = SweepSpec::preset(Scenario::Fig2Baseline).unwrap();
        assert_eq!(f2.grid, AxisRange { min: -0.02, max: 0.02, points: 4001 });
    }

    #[test]
    fn spec_validation() {
        let mut s = SweepSpec::preset(Scenario::Fig5Gem).unwrap();
        s.secondary_values = vec![];
        assert!(s.validate().is_err());
        s.secondary_values = vec![1.0, 1.0];
        assert!(s.validate().is_err());
        s.secondary_values = vec![-1.0, 1.0];
        assert!(s.validate().is_err());
        let mut s = SweepSpec::preset(Scenario::Fig8PkResonant).unwrap();
        s.base.params.delta_c = s.base.params.omega_b;
        assert!(s.validate().is_err());
        let mut s = SweepSpec::preset(Scenario::Fig7Deltac).unwrap();
        s.grid.points = 1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn layers_override_preset() {
        let doc = parse_document("g_em_hz = 6e6\n[sweep]\nvalues = [1.0, 2.0]\npoints = 11\n").unwrap();
        let s = SweepSpec::layered(Some(Scenario::Fig6Ppump), &[&doc]).unwrap();
        assert_eq!(s.base.params.g_em, TWO_PI * 6e6);
        assert_eq!(s.secondary_values, vec![1.0, 2.0]);
        assert_eq!(s.grid.points, 11);
        assert_eq!(s.grid.min, -0.02);

        let named = parse_document("[sweep]\nscenario = \"fig7_deltac\"\n").unwrap();
        assert_eq!(SweepSpec::layered(None, &[&named]).unwrap().scenario, Scenario::Fig7Deltac);
        assert!(matches!(SweepSpec::layered(None, &[]), Err(Error::MissingKey(_))));
    }

    #[test]
    fn document_parsing() {
        assert!(parse_document("[sweep]\nbogus = 1\n").is_err());
        assert!(parse_document("system = 1\n").is_err());
        assert!(parse_document("g_om_hz = 1\n[system]\ng_om_hz = 2\n").is_err());
        let d = parse_document("g_om_hz = 1\n[system]\ng_em_hz = 2\n").unwrap();
        assert_eq!(d.system.0.len(), 2);
        let bad = parse_document("[other]\nx = 1\n").unwrap_err();
        assert!(matches!(bad, Error::InvalidValue { .. }));
    }

    #[test]
    fn zero_coupling_curve_equals_fig3() {
        let a = run_sweep(&small(Scenario::Fig5Gem, vec![0.0], 401)).unwrap();
        let b = run_sweep(&small(Scenario::Fig3GemZero, vec![0.0], 401)).unwrap();
        assert_eq!(a.curves[0].spectrum, b.curves[0].spectrum);
        assert_eq!(a.curves[0].windows, b.curves[0].windows);
    }

    #[test]
    fn curve_order_and_residuals() {
        let r = run_sweep(&small(Scenario::Fig5Gem, vec![0.0, 3.0, 6.0, 9.0, 12.0], 801)).unwrap();
        let v: Vec<f64> = r.curves.iter().map(|c| c.secondary_value).collect();
        assert_eq!(v, vec![0.0, 3.0, 6.0, 9.0, 12.0]);
        for c in &r.curves {
            assert!(c.steady.max_residual < 1e-10);
            assert!((c.steady.delta_a_eff / c.params.omega_b - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn failing_curve_is_identified() {
        let mut s = small(Scenario::Fig6Ppump, vec![1e-6, 1e300], 11);
        s.base.params.power_probe = 1e-12;
        match run_sweep(&s) {
            Err(Error::Curve { value, .. }) => assert_eq!(value, 1e300),
            other => panic!("{other:?}"),
        }
    }

    fn toy(values: &[f64], points: usize) -> SweepResult {
        let wb = 2.0;
        let curves = values
            .iter()
            .map(|&v| {
                let spectrum: Vec<ProbeResponse> = (0..points)
                    .map(|i| {
                        let x = -0.01 + 0.02 * i as f64 / (points - 1).max(1) as f64;
                        let e = Complex64::new(v + x, -x);
                        ProbeResponse {
                            delta: wb * (1.0 + x),
                            lambda_a: 0.0,
                            lambda_c: 0.0,
                            lambda_b: wb * x,
                            eps_t: e,
                            t_pr: e - 1.0,
                            absorption: e.re,
                            dispersion: e.im,
                        }
                    })
                    .collect();
                Curve {
                    secondary_value: v,
                    params: crate::params::tests::fig2(),
                    steady: SteadySummary {
                        branch_count: 1,
                        bistable: false,
                        selected: 0,
                        delta_a: 0.0,
                        delta_a_eff: 0.0,
                        n_cavity: 0.0,
                        g_om_enhanced_abs: 0.0,
                        max_residual: 0.0,
                    },
                    spectrum,
                    windows: WindowReport {
                        minima: vec![],
                        maxima: vec![],
                        deepest: None,
                        separation: None,
                        asymmetry: None,
                        central_peak: None,
                        central_linewidth: None,
                    },
                }
            })
            .collect();
        SweepResult {
            scenario: Scenario::Fig5Gem,
            curves,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&toy(&[], 3), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));

        let r = toy(&[2.0, 1.0], 3);
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        let keys: Vec<(f64, f64)> = lines[1..]
            .iter()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                assert_eq!(f[0], "fig5_gem");
                (f[1].parse().unwrap(), f[2].parse().unwrap())
            })
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        assert_eq!(keys, sorted);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn csv_values_round_trip() {
        let r = toy(&[1.0 / 3.0], 7);
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for (line, resp) in text.lines().skip(1).zip(&r.curves[0].spectrum) {
            let f: Vec<f64> = line.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
            assert_eq!(f[0].to_bits(), (1.0f64 / 3.0).to_bits());
            assert_eq!(f[1].to_bits(), resp.delta_over_omega_b().to_bits());
            assert_eq!(f[2].to_bits(), resp.absorption.to_bits());
            assert_eq!(f[3].to_bits(), resp.dispersion.to_bits());
        }
    }

    #[test]
    fn svg_is_well_formed_and_deterministic() {
        let r = toy(&[0.5, 1.5], 5);
        let a = render_svg(&r).unwrap();
        assert_eq!(a, render_svg(&r).unwrap());
        let doc = roxmltree::Document::parse(&a).unwrap();
        let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
        assert_eq!(lines.len(), 2);
        assert!(a.contains("(δ−ω_b)/ω_b") && a.contains("Re[ε_T]"));
        assert!(render_svg(&toy(&[], 5)).is_err());
    }

    #[test]
    fn flat_curve_spans_plot_width() {
        let mut r = toy(&[1.0], 5);
        for p in &mut r.curves[0].spectrum {
            p.absorption = 1.0;
        }
        let svg = render_svg(&r).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let pts = doc.descendants().find(|n| n.has_tag_name("polyline")).unwrap().attribute("points").unwrap();
        let xs: Vec<f64> = pts.split(' ').map(|p| p.split(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(xs.first(), Some(&80.0));
        assert_eq!(xs.last(), Some(&610.0));
    }
}
