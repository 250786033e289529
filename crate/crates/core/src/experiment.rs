//! JSON experiment configs, dispatch to the analyses, and run reports.
//!
//! A config names a map, an analysis and numeric parameters:
//!
//! ```json
//! {
//!   "map": {"family": "skew", "params": {"alpha": 0.4142, "phi": [{"freq": 1, "amp": 0.3}]}},
//!   "analysis": "semiconj",
//!   "params": {"r_count": 64, "grid_n": 256},
//!   "seed": 0
//! }
//! ```
//!
//! Map families and their parameter keys:
//!
//! | family        | params                                              |
//! |---------------|-----------------------------------------------------|
//! | `rigid`       | `rho: [x, y]`                                       |
//! | `skew`        | `alpha`, `phi: [{freq, amp, phase?}]`               |
//! | `dehn`        | `m`, `alpha`                                        |
//! | `besicovitch` | `alpha?`, `phi?` (defaults: Liouville α, 3-term φ)  |
//!
//! Unknown keys anywhere are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::counterexample::{
    default_alpha, default_phi, demonstrate_failure, fiber_accumulation_test, glue_to_torus, make_counterexample,
    transitivity_score, CompactifiedMap,
};
use crate::error::{Error, Result};
use crate::lifts::{make_dehn_family, make_rigid, make_skew, IntVec2, Lift, TrigPoly, Vec2};
use crate::rotation::{
    check_main_theorem_hypotheses, classify_annular, classify_pseudo_rotation, deviation_ladder,
    fundamental_domain_diameter_growth, growth_exponent, homotopy_class, ladder_is_bounded, rotation_interval_estimate,
};
use crate::semiconj::{build_circloid_family, project_h, project_h_unchecked, verify_semiconjugacy, FamilyParams};
use crate::selftest::{run_selftest, Fixtures};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidParams {
    pub rho: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewParams {
    pub alpha: f64,
    pub phi: TrigPoly<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DehnParams {
    pub m: i64,
    pub alpha: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesicovitchParams {
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub phi: Option<TrigPoly<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Rigid(RigidParams),
    Skew(SkewParams),
    Dehn(DehnParams),
    Besicovitch(#[serde(default)] BesicovitchParams),
}

impl MapSpec {
    /// Fills in defaults so the echoed config is self-contained.
    pub fn normalized(&self) -> MapSpec {
        match self {
            MapSpec::Besicovitch(p) => MapSpec::Besicovitch(BesicovitchParams {
                alpha: Some(p.alpha.unwrap_or_else(default_alpha)),
                phi: Some(p.phi.clone().unwrap_or_else(default_phi)),
            }),
            other => other.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("map parameter {name} must be finite")))
            }
        };
        let poly = |p: &TrigPoly<f64>| {
            for t in &p.terms {
                finite("phi.amp", t.amp)?;
                finite("phi.phase", t.phase)?;
            }
            Ok::<(), Error>(())
        };
        match self {
            MapSpec::Rigid(p) => p.rho.iter().try_for_each(|&v| finite("rho", v)),
            MapSpec::Skew(p) => {
                finite("alpha", p.alpha)?;
                poly(&p.phi)
            }
            MapSpec::Dehn(p) => {
                finite("alpha", p.alpha)?;
                if p.m.abs() > 1000 {
                    return Err(Error::Config("dehn m must satisfy |m| <= 1000".into()));
                }
                Ok(())
            }
            MapSpec::Besicovitch(p) => {
                if let Some(a) = p.alpha {
                    finite("alpha", a)?;
                }
                p.phi.as_ref().map_or(Ok(()), poly)
            }
        }
    }

    pub fn compactified(&self) -> Option<CompactifiedMap<f64>> {
        match self.normalized() {
            MapSpec::Besicovitch(p) => Some(make_counterexample(p.alpha.expect("normalized"), p.phi.expect("normalized"))),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<Lift<f64>> {
        Ok(match self {
            MapSpec::Rigid(p) => make_rigid(Vec2::new(p.rho[0], p.rho[1])),
            MapSpec::Skew(p) => make_skew(p.alpha, p.phi.clone()),
            MapSpec::Dehn(p) => make_dehn_family(p.m, p.alpha),
            MapSpec::Besicovitch(_) => glue_to_torus(&self.compactified().expect("besicovitch"))?,
        })
    }

    /// The rotation the map is expected to carry in direction `v`, when known.
    pub fn nominal_alpha(&self, v: IntVec2) -> Option<f64> {
        let (ax, ay) = match self.normalized() {
            MapSpec::Rigid(p) => (p.rho[0], p.rho[1]),
            MapSpec::Skew(p) => (p.alpha, 0.0),
            MapSpec::Dehn(p) => (p.alpha, 0.0),
            MapSpec::Besicovitch(p) => (p.alpha.expect("normalized"), 0.0),
        };
        if let MapSpec::Dehn(_) = self {
            return (v.p == 0).then_some(0.0);
        }
        Some(ax * v.p as f64 + ay * v.q as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Rotset,
    Deviations,
    Classify,
    Semiconj,
    Counterexample,
    TopologySelftest,
}

fn d_grid() -> usize {
    32
}
fn d_n() -> usize {
    1000
}
fn d_dirs() -> Vec<[i64; 2]> {
    vec![[1, 0], [0, 1]]
}
fn d_r_count() -> usize {
    64
}
fn d_cpu() -> usize {
    256
}
fn d_ny() -> usize {
    256
}
fn d_trunc() -> usize {
    50
}
fn d_dev_grid() -> usize {
    32
}
fn d_h_grid() -> usize {
    256
}
fn d_k() -> u32 {
    1
}
fn d_samples() -> usize {
    4096
}
fn d_s_max() -> Vec<f64> {
    use std::f64::consts::PI;
    vec![0.5 * PI, PI, 2.0 * PI, 4.0 * PI]
}
fn d_eps() -> f64 {
    0.05
}
fn d_probe() -> usize {
    200
}
fn d_transit_n() -> usize {
    100_000
}
fn d_transit_grid() -> usize {
    64
}
fn d_start() -> [f64; 2] {
    [0.1, 0.3]
}

/// Numeric parameters; every key is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Sample grid side for orbit statistics, `1..=1024`.
    #[serde(default = "d_grid")]
    pub grid_n: usize,
    /// Iterations / largest ladder step, `1..=1_000_000`.
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default = "d_dirs")]
    pub directions: Vec<[i64; 2]>,
    /// Target rotation for deviations; defaults to the map's nominal value.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "d_r_count")]
    pub r_count: usize,
    #[serde(default = "d_cpu")]
    pub cells_per_unit: usize,
    #[serde(default = "d_ny")]
    pub ny: usize,
    #[serde(default = "d_trunc")]
    pub trunc_n: usize,
    #[serde(default)]
    pub halfwidth: Option<f64>,
    #[serde(default = "d_dev_grid")]
    pub deviation_grid: usize,
    /// Side of the projected `h` grid.
    #[serde(default = "d_h_grid")]
    pub h_grid: usize,
    #[serde(default = "d_k")]
    pub k: u32,
    #[serde(default = "d_samples")]
    pub samples: usize,
    /// Steps of the fundamental-domain diameter ladder; `0` skips it.
    #[serde(default)]
    pub diameter_n: usize,
    #[serde(default = "d_s_max")]
    pub s_max: Vec<f64>,
    #[serde(default = "d_eps")]
    pub eps: f64,
    #[serde(default = "d_probe")]
    pub n_probe: usize,
    #[serde(default = "d_transit_n")]
    pub transit_n: usize,
    #[serde(default = "d_transit_grid")]
    pub transit_grid: usize,
    #[serde(default = "d_start")]
    pub start: [f64; 2],
}

impl Default for Params {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

fn in_range(name: &str, v: usize, lo: usize, hi: usize) -> Result<()> {
    if v < lo || v > hi {
        return Err(Error::Config(format!("{name} = {v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

impl Params {
    fn validate(&self) -> Result<()> {
        in_range("grid_n", self.grid_n, 1, 1024)?;
        in_range("n", self.n, 1, 1_000_000)?;
        in_range("r_count", self.r_count, 1, 4096)?;
        in_range("cells_per_unit", self.cells_per_unit, 4, 8192)?;
        in_range("ny", self.ny, 4, 8192)?;
        in_range("trunc_n", self.trunc_n, 1, 100_000)?;
        in_range("deviation_grid", self.deviation_grid, 1, 1024)?;
        in_range("h_grid", self.h_grid, 1, 4096)?;
        in_range("k", self.k as usize, 1, 1000)?;
        in_range("samples", self.samples, 1, 10_000_000)?;
        in_range("diameter_n", self.diameter_n, 0, 100_000)?;
        in_range("n_probe", self.n_probe, 1, 100_000)?;
        in_range("transit_n", self.transit_n, 1, 100_000_000)?;
        in_range("transit_grid", self.transit_grid, 1, 4096)?;
        if self.cells_per_unit % self.r_count != 0 {
            return Err(Error::Config("cells_per_unit must be a multiple of r_count".into()));
        }
        if self.directions.is_empty() {
            return Err(Error::Config("directions must be nonempty".into()));
        }
        for d in &self.directions {
            if num_integer::Integer::gcd(&d[0], &d[1]) != 1 {
                return Err(Error::Config(format!("direction {d:?} is not reduced")));
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config("eps must be positive".into()));
        }
        if self.s_max.iter().any(|s| !(s.is_finite() && *s >= 0.0 && *s <= 1e4)) {
            return Err(Error::Config("s_max entries must lie in [0, 1e4]".into()));
        }
        if let Some(h) = self.halfwidth {
            if !(h.is_finite() && h >= 0.0 && h <= 100.0) {
                return Err(Error::Config("halfwidth must lie in [0, 100]".into()));
            }
        }
        if self.alpha.is_some_and(|a| !a.is_finite()) || self.start.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("alpha and start must be finite".into()));
        }
        Ok(())
    }

    pub fn family(&self) -> FamilyParams {
        FamilyParams {
            r_count: self.r_count,
            cells_per_unit: self.cells_per_unit,
            ny: self.ny,
            trunc_n: self.trunc_n,
            halfwidth: self.halfwidth,
            deviation_grid: self.deviation_grid,
        }
    }

    fn directions(&self) -> Vec<IntVec2> {
        self.directions.iter().map(|d| IntVec2::new(d[0], d[1])).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapSpec,
    pub analysis: Analysis,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c.normalized())
    }

    pub fn validate(&self) -> Result<()> {
        self.map.validate()?;
        self.params.validate()?;
        if self.analysis == Analysis::Counterexample && !matches!(self.map, MapSpec::Besicovitch(_)) {
            return Err(Error::Config("the counterexample analysis needs the besicovitch family".into()));
        }
        Ok(())
    }

    pub fn normalized(&self) -> Self {
        ExperimentConfig { map: self.map.normalized(), ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub payload: Value,
    /// Wall time, only when explicitly requested (it breaks byte-identity).
    #[serde(default)]
    pub timing_ms: Option<u64>,
}

/// A finished run: the report, its side files, and whether an analysis
/// reported a failed check.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub artifacts: BTreeMap<String, String>,
    pub failed: Option<String>,
}

impl RunOutput {
    /// Writes `report.json` and every artifact under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in &self.artifacts {
            let p = dir.join(name);
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(p, text)?;
        }
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&self.report)? + "\n")?;
        Ok(())
    }
}

/// Exit status of a run or of a failed run.
pub fn exit_code(r: &Result<RunOutput>) -> i32 {
    match r {
        Ok(o) if o.failed.is_none() => 0,
        Ok(_) => 1,
        Err(Error::Config(_)) | Err(Error::Json(_)) => 3,
        Err(e) if e.is_precondition() => 2,
        Err(_) => 1,
    }
}

struct Out {
    artifacts: BTreeMap<String, String>,
    failed: Option<String>,
}

impl Out {
    fn put(&mut self, name: impl Into<String>, text: String) {
        self.artifacts.insert(name.into(), text);
    }

    fn json(&mut self, name: &str, v: &impl Serialize) -> Result<()> {
        self.put(name, serde_json::to_string_pretty(v)? + "\n");
        Ok(())
    }
}

/// Runs the configured analysis. Nothing is written to disk.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let config = config.normalized();
    let lift = config.map.build()?;
    let p = &config.params;
    let mut out = Out { artifacts: BTreeMap::new(), failed: None };
    let payload = match config.analysis {
        Analysis::Rotset => rotset(&lift, p, &mut out)?,
        Analysis::Deviations => deviations(&config, &lift, &mut out)?,
        Analysis::Classify => classify(&config, &lift, &mut out)?,
        Analysis::Semiconj => semiconj(&config, &lift, &mut out)?,
        Analysis::Counterexample => counterexample(&config, &lift, &mut out)?,
        Analysis::TopologySelftest => topology(config.seed, None, &mut out)?,
    };
    Ok(RunOutput {
        report: RunReport { version: VERSION.into(), config, payload, timing_ms: None },
        artifacts: out.artifacts,
        failed: out.failed,
    })
}

fn rotset(lift: &Lift<f64>, p: &Params, out: &mut Out) -> Result<Value> {
    let mut csv = String::from("p,q,m,min,max\n");
    let mut reports = Vec::new();
    for v in p.directions() {
        let e = rotation_interval_estimate(lift, v, p.n, p.grid_n)?;
        for r in &e.report.per_m_bounds {
            csv.push_str(&format!("{},{},{},{},{}\n", v.p, v.q, r.m, r.min, r.max));
        }
        reports.push(e.report);
    }
    out.put("rotset.csv", csv);
    Ok(json!({ "reports": reports }))
}

fn alpha_for(config: &ExperimentConfig, lift: &Lift<f64>, v: IntVec2) -> Result<f64> {
    let p = &config.params;
    if let Some(a) = p.alpha {
        return Ok(a);
    }
    if let Some(a) = config.map.nominal_alpha(v) {
        return Ok(a);
    }
    Ok(rotation_interval_estimate(lift, v, p.n, p.grid_n)?.midpoint())
}

fn deviations(config: &ExperimentConfig, lift: &Lift<f64>, out: &mut Out) -> Result<Value> {
    let p = &config.params;
    let mut csv = String::from("p,q,n,s\n");
    let mut rows = Vec::new();
    for v in p.directions() {
        let alpha = alpha_for(config, lift, v)?;
        let ladder = deviation_ladder(lift, v, alpha, p.n, p.grid_n)?;
        for &(n, s) in &ladder {
            csv.push_str(&format!("{},{},{},{}\n", v.p, v.q, n, s));
        }
        rows.push(json!({
            "direction": v,
            "alpha": alpha,
            "sup": ladder.last().map(|r| r.1),
            "bounded": ladder_is_bounded(&ladder, crate::constants::TOL_GROWTH),
            "growth_exponent": growth_exponent(&ladder),
        }));
    }
    out.put("deviations.csv", csv);
    Ok(json!({ "directions": rows }))
}

fn classify(config: &ExperimentConfig, lift: &Lift<f64>, out: &mut Out) -> Result<Value> {
    let p = &config.params;
    let class = homotopy_class(lift.deck)?;
    let mut annular = Vec::new();
    let mut csv = String::from("p,q,n,s\n");
    for v in p.directions() {
        let a = classify_annular(lift, v, p.n.max(16), p.grid_n)?;
        for &(n, s) in &a.ladder {
            csv.push_str(&format!("{},{},{},{}\n", v.p, v.q, n, s));
        }
        annular.push(a);
    }
    out.put("growth.csv", csv);
    let pseudo = if lift.deck.is_identity() {
        let r = classify_pseudo_rotation(lift, p.n, p.grid_n)?;
        json!({
            "rho": r.rho.map(|z| [z.x, z.y]),
            "uniform_c": r.uniform_c,
            "reports": r.reports,
        })
    } else {
        Value::Null
    };
    let theorem = match p.alpha {
        Some(alpha) if lift.deck.is_identity() => {
            let v = p.directions()[0];
            serde_json::to_value(check_main_theorem_hypotheses(lift, v, p.k, alpha, p.n, p.grid_n)?)?
        }
        _ => Value::Null,
    };
    let diameter = if p.diameter_n > 0 {
        let rows = fundamental_domain_diameter_growth(lift, p.diameter_n, p.grid_n.max(4))?;
        let mut csv = String::from("n,diameter,running_max\n");
        for r in &rows {
            csv.push_str(&format!("{},{},{}\n", r.n, r.diameter, r.running_max));
        }
        out.put("diameter.csv", csv);
        json!({ "final": rows.last().map(|r| r.diameter) })
    } else {
        Value::Null
    };
    Ok(json!({
        "homotopy_class": class,
        "annular": annular,
        "pseudo_rotation": pseudo,
        "theorem": theorem,
        "diameter": diameter,
    }))
}

fn semiconj(config: &ExperimentConfig, lift: &Lift<f64>, out: &mut Out) -> Result<Value> {
    let p = &config.params;
    let alpha = alpha_for(config, lift, IntVec2::E1)?;
    let mut fp = p.family();
    if fp.halfwidth.is_none() && matches!(config.map, MapSpec::Besicovitch(_)) {
        fp.halfwidth = Some(2.0 + 4.0 / fp.cells_per_unit as f64);
    }
    let family = build_circloid_family(lift, alpha, &fp)?;
    for (name, text) in family.export_files()? {
        out.put(format!("circloids/{name}"), text);
    }
    let verification = verify_semiconjugacy(&family, lift, p.samples)?;
    let (h, refused) = match project_h(&family, lift, p.h_grid, p.k) {
        Ok(h) => (h, false),
        Err(Error::ProjectionRefused(_)) => (project_h_unchecked(&family, lift, p.h_grid, p.k)?, true),
        Err(e) => return Err(e),
    };
    out.put(if refused { "h_attempted.csv" } else { "h.csv" }, h.to_csv());
    let summary = h.summary();
    out.json("semiconj_summary.json", &summary)?;
    Ok(json!({
        "alpha": alpha,
        "deviation_c": family.deviation_c,
        "window_halfwidth": family.window_halfwidth,
        "insufficient_truncation": family.insufficient_truncation,
        "translation_mismatch": family.translation_mismatch,
        "verification": verification,
        "projection_refused": refused,
        "summary": summary,
    }))
}

fn counterexample(config: &ExperimentConfig, lift: &Lift<f64>, out: &mut Out) -> Result<Value> {
    let p = &config.params;
    let map = config.map.compactified().expect("validated family");
    let mut csv = String::from("s_max,coverage_plus,coverage_minus\n");
    let mut coverage = Vec::new();
    for &s in &p.s_max {
        let c = fiber_accumulation_test(p.start[0], s, p.eps, p.n_probe)?;
        csv.push_str(&format!("{},{},{}\n", c.s_max, c.upper, c.lower));
        coverage.push(c);
    }
    out.put("fiber_coverage.csv", csv);
    let start = Vec2::new(p.start[0], p.start[1]);
    let score = transitivity_score(lift, p.transit_grid, p.transit_n, start);
    let transitivity = json!({ "grid": p.transit_grid, "n": p.transit_n, "start": p.start, "score": score });
    out.json("transitivity.json", &transitivity)?;
    let demo = demonstrate_failure(lift, map.alpha, &p.family(), p.h_grid)?;
    let control_lift = glue_to_torus(&make_counterexample(map.alpha, TrigPoly::zero()))?;
    let control = demonstrate_failure(&control_lift, map.alpha, &p.family(), p.h_grid)?;
    let failure = json!({ "map": demo.report, "control": control.report });
    out.json("failure.json", &failure)?;
    out.put("h_attempted.csv", demo.attempted.to_csv());
    Ok(json!({
        "fiber_coverage": coverage,
        "transitivity": transitivity,
        "failure": failure,
        "demonstration_pass": demo.report.pass && !control.report.projection_refused,
    }))
}

/// The selftest suite as an analysis; `fixtures` overrides the embedded set.
pub fn topology(seed: u64, fixtures: Option<&Path>, out: &mut impl TopologySink) -> Result<Value> {
    let fx = match fixtures {
        Some(dir) => Fixtures::load(dir)?,
        None => Fixtures::embedded()?,
    };
    let report = run_selftest(&fx, seed);
    if let Some(c) = report.first_failure() {
        out.fail(format!("{}: {}", c.name, c.detail));
    }
    out.emit("selftest.json", serde_json::to_string_pretty(&report)? + "\n");
    Ok(serde_json::to_value(&report)?)
}

/// Receives topology-suite output.
pub trait TopologySink {
    fn emit(&mut self, name: &str, text: String);
    fn fail(&mut self, msg: String);
}

impl TopologySink for Out {
    fn emit(&mut self, name: &str, text: String) {
        self.put(name, text);
    }

    fn fail(&mut self, msg: String) {
        self.failed.get_or_insert(msg);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(s)
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let ok = r#"{"map": {"family": "rigid", "params": {"rho": [0.1, 0.2]}}, "analysis": "rotset"}"#;
        assert!(cfg(ok).is_ok());
        for bad in [
            r#"{"map": {"family": "rigid", "params": {"rho": [0.1, 0.2], "x": 1}}, "analysis": "rotset"}"#,
            r#"{"map": {"family": "rigid", "params": {"rho": [0.1, 0.2]}}, "analysis": "rotset", "extra": 0}"#,
            r#"{"map": {"family": "rigid", "params": {"rho": [0.1, 0.2]}}, "analysis": "rotset", "params": {"gird_n": 3}}"#,
            r#"{"map": {"family": "spiral", "params": {}}, "analysis": "rotset"}"#,
            r#"{"map": {"family": "skew", "params": {"alpha": 0.1, "phi": [{"freq": 1, "amp": 0.3, "z": 0}]}}, "analysis": "rotset"}"#,
        ] {
            assert!(matches!(cfg(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn ranges_are_checked() {
        let c = r#"{"map": {"family": "rigid", "params": {"rho": [0.1, 0.2]}}, "analysis": "rotset", "params": {"grid_n": 0}}"#;
        assert!(matches!(cfg(c), Err(Error::Config(_))));
        let c = r#"{"map": {"family": "dehn", "params": {"m": 1, "alpha": 0.1}}, "analysis": "counterexample"}"#;
        assert!(matches!(cfg(c), Err(Error::Config(_))));
    }

    #[test]
    fn besicovitch_defaults_are_echoed() {
        let c = cfg(r#"{"map": {"family": "besicovitch", "params": {}}, "analysis": "classify"}"#).unwrap();
        match &c.map {
            MapSpec::Besicovitch(p) => {
                assert_eq!(p.alpha, Some(default_alpha()));
                assert_eq!(p.phi.as_ref().unwrap().terms.len(), 3);
            }
            _ => unreachable!(),
        }
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(cfg(&text).unwrap(), c);
    }

    #[test]
    fn rigid_rotset_rows_are_constant() {
        let c = cfg(r#"{"map": {"family": "rigid", "params": {"rho": [0.25, 0.5]}}, "analysis": "rotset",
                        "params": {"n": 64, "grid_n": 4, "directions": [[1, 0]]}}"#)
        .unwrap();
        let o = run(&c).unwrap();
        let csv = &o.artifacts["rotset.csv"];
        for line in csv.lines().skip(1) {
            let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert_eq!((f[3], f[4]), (0.25, 0.25));
        }
        assert_eq!(exit_code(&Ok(o)), 0);
    }

    #[test]
    fn report_round_trips() {
        let c = cfg(r#"{"map": {"family": "dehn", "params": {"m": 2, "alpha": 0.1}}, "analysis": "classify",
                        "params": {"n": 32, "grid_n": 4, "diameter_n": 5}}"#)
        .unwrap();
        let o = run(&c).unwrap();
        let text = serde_json::to_string_pretty(&o.report).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        let again = serde_json::to_string_pretty(&back).unwrap();
        let diff: Vec<_> = again.lines().zip(text.lines()).filter(|(a, b)| a != b).take(3).collect();
        assert_eq!(again, text, "{diff:?}");
        assert_eq!(o.report.payload["homotopy_class"]["kind"], "dehn_like");
    }

    #[test]
    fn window_too_small_is_a_precondition_failure() {
        let c = cfg(r#"{"map": {"family": "besicovitch", "params": {}}, "analysis": "semiconj",
                        "params": {"r_count": 8, "cells_per_unit": 32, "ny": 32, "h_grid": 8, "halfwidth": 0.0}}"#)
        .unwrap();
        assert_eq!(exit_code(&run(&c)), 2);
    }
}
