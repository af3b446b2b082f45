//! Device configuration files.
//!
//! A config is a JSON object. Validation walks the whole document and reports
//! every problem with its field path instead of stopping at the first one.
//! Unknown keys are errors. Defaults are injected and listed so the caller can
//! echo them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::capnet::{
    caps_from_geometry, BondCaps, CapacitanceSet, Couplings, DeviceGeometry, Lattice, QubitCaps, QubitGeometry,
    DEFAULT_MARGIN,
};
use crate::error::{Error, Result};
use crate::readout::{default_vd_grid, FetChainProblem, FetSegment, ThresholdShift};

pub const TOP_KEYS: &[&str] = &[
    "name",
    "geometry",
    "capacitances",
    "t_meV",
    "temperature_K",
    "delta0_meV",
    "r_int_ohm",
    "margin",
    "max_qubits",
    "seed",
    "readout",
];
pub const GEOMETRY_KEYS: &[&str] =
    &["r0", "d_A", "d_B", "d_C", "d_D", "eps_ox", "eps_si", "n_qubits", "lattice", "d_cross", "C_E", "per_qubit"];
pub const QUBIT_OVERRIDE_KEYS: &[&str] = &["r0", "d_A", "d_B", "d_C"];
pub const LATTICE_KEYS: &[&str] = &["kind", "nx", "ny"];
pub const CAPACITANCE_KEYS: &[&str] = &["n_qubits", "C_A", "C_B", "C_C", "C_H", "C_I", "C_D", "C_E"];
pub const READOUT_KEYS: &[&str] =
    &["lambda", "theta", "overdrive", "shift_fraction", "shift_sign", "v_d", "n_segments", "max_n", "sweep_grid"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadoutConfig {
    pub lambda: f64,
    pub theta: f64,
    pub overdrive: f64,
    pub shift: ThresholdShift,
    pub v_d: f64,
    pub n_segments: usize,
    pub max_n: usize,
    pub sweep_grid: Vec<f64>,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            theta: 0.3,
            overdrive: 2.0,
            shift: ThresholdShift::default(),
            v_d: 1.5,
            n_segments: 8,
            max_n: 8,
            sweep_grid: default_vd_grid(),
        }
    }
}

impl ReadoutConfig {
    pub fn segment(&self) -> FetSegment {
        FetSegment { overdrive: self.overdrive, eta: 1.0, dvth: 0.0 }
    }

    pub fn problem(&self) -> FetChainProblem {
        FetChainProblem {
            lambda: self.lambda,
            theta: self.theta,
            segments: vec![self.segment(); self.n_segments],
            v_d: self.v_d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceConfig {
    pub name: String,
    pub geometry: Option<DeviceGeometry>,
    pub caps: CapacitanceSet,
    pub t_mev: f64,
    pub temperature_k: f64,
    pub delta0_mev: f64,
    pub r_int_ohm: f64,
    pub margin: f64,
    pub max_qubits: Option<usize>,
    pub seed: u64,
    pub readout: ReadoutConfig,
}

impl DeviceConfig {
    /// The 8-qubit chain of the larger reference device.
    pub fn nominal() -> Self {
        let geometry = DeviceGeometry::nominal(8);
        Self {
            name: "nominal".into(),
            caps: caps_from_geometry(&geometry).expect("nominal geometry is valid"),
            geometry: Some(geometry),
            t_mev: 0.4,
            temperature_k: 0.1,
            delta0_mev: 0.2,
            r_int_ohm: 1e6,
            margin: DEFAULT_MARGIN,
            max_qubits: None,
            seed: 1,
            readout: ReadoutConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedConfig {
    pub config: DeviceConfig,
    /// `path = value` for each default that was filled in.
    pub defaults: Vec<String>,
    pub notices: Vec<String>,
}

/// Every issue found, or the validated config.
pub type Validation = std::result::Result<ValidatedConfig, Vec<ConfigIssue>>;

pub fn validate_config(path: &Path) -> Validation {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            return Err(vec![ConfigIssue { path: path.display().to_string(), message: format!("cannot read: {e}") }]);
        }
    };
    validate_config_str(&text)
}

pub fn validate_config_str(text: &str) -> Validation {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        vec![ConfigIssue {
            path: format!("line {} column {}", e.line(), e.column()),
            message: format!("malformed JSON: {e}"),
        }]
    })?;
    validate_value(&value)
}

/// Shortcut that folds the issue list into one error.
pub fn load_config(path: &Path) -> Result<ValidatedConfig> {
    validate_config(path).map_err(|issues| {
        Error::Config(issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))
    })
}

struct Walker {
    issues: Vec<ConfigIssue>,
    defaults: Vec<String>,
}

impl Walker {
    fn issue(&mut self, path: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue { path: path.into(), message: message.into() });
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(m) = v.as_object() else {
            self.issue(path, "expected an object");
            return None;
        };
        for k in m.keys() {
            if !allowed.contains(&k.as_str()) {
                self.issue(&join(path, k), "unknown key");
            }
        }
        Some(m)
    }

    /// Number at `path.key`; `None` if absent or invalid.
    fn number(&mut self, m: &Map<String, Value>, path: &str, key: &str, rule: Rule) -> Option<f64> {
        let v = m.get(key)?;
        let p = join(path, key);
        let Some(x) = v.as_f64() else {
            self.issue(&p, "expected a number");
            return None;
        };
        if let Some(msg) = rule.check(x) {
            self.issue(&p, format!("{msg} (got {x})"));
            return None;
        }
        Some(x)
    }

    fn number_or(&mut self, m: &Map<String, Value>, path: &str, key: &str, rule: Rule, default: f64) -> f64 {
        if m.contains_key(key) {
            self.number(m, path, key, rule).unwrap_or(default)
        } else {
            self.defaults.push(format!("{} = {default}", join(path, key)));
            default
        }
    }

    fn count(&mut self, m: &Map<String, Value>, path: &str, key: &str, min: u64) -> Option<u64> {
        let v = m.get(key)?;
        let p = join(path, key);
        match v.as_u64() {
            Some(n) if n >= min => Some(n),
            Some(n) => {
                self.issue(&p, format!("must be >= {min} (got {n})"));
                None
            }
            None => {
                self.issue(&p, "expected a non-negative integer");
                None
            }
        }
    }

    fn count_or(&mut self, m: &Map<String, Value>, path: &str, key: &str, min: u64, default: u64) -> u64 {
        if m.contains_key(key) {
            self.count(m, path, key, min).unwrap_or(default)
        } else {
            self.defaults.push(format!("{} = {default}", join(path, key)));
            default
        }
    }
}

#[derive(Clone, Copy)]
enum Rule {
    Positive,
    NonNegative,
    AtLeastOne,
    Sign,
    Fraction,
}

impl Rule {
    fn check(self, x: f64) -> Option<&'static str> {
        if !x.is_finite() {
            return Some("must be finite");
        }
        match self {
            Rule::Positive if x <= 0.0 => Some("must be > 0"),
            Rule::NonNegative if x < 0.0 => Some("must be >= 0"),
            Rule::AtLeastOne if x < 1.0 => Some("must be >= 1"),
            Rule::Sign if x != 1.0 && x != -1.0 => Some("must be 1 or -1"),
            Rule::Fraction if !(0.0..1.0).contains(&x) => Some("must be in [0, 1)"),
            _ => None,
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() { key.to_string() } else { format!("{path}.{key}") }
}

fn validate_value(v: &Value) -> Validation {
    let mut w = Walker { issues: Vec::new(), defaults: Vec::new() };
    let mut notices = Vec::new();
    let Some(top) = w.object(v, "", TOP_KEYS) else {
        return Err(w.issues);
    };

    let name = match top.get("name") {
        None => "unnamed".to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            w.issue("name", "expected a string");
            String::new()
        }
    };

    let geometry = top.get("geometry").and_then(|g| parse_geometry(&mut w, g));
    let explicit = top.get("capacitances").and_then(|c| w.object(c, "capacitances", CAPACITANCE_KEYS));

    let caps = match (&geometry, explicit) {
        (None, None) => {
            if !top.contains_key("geometry") && !top.contains_key("capacitances") {
                w.issue("", "one of geometry or capacitances is required");
            }
            None
        }
        (Some(g), explicit) => {
            let base = caps_from_geometry(g).ok();
            match (base, explicit) {
                (Some(mut caps), Some(m)) => {
                    if m.contains_key("n_qubits") {
                        w.issue("capacitances.n_qubits", "taken from geometry.n_qubits when geometry is given");
                    }
                    let overridden = apply_overrides(&mut w, &mut caps, m);
                    if !overridden.is_empty() {
                        notices.push(format!(
                            "explicit capacitances override the geometry for {}",
                            overridden.join(", ")
                        ));
                    }
                    Some(caps)
                }
                (Some(caps), None) => Some(caps),
                (None, _) => {
                    w.issue("geometry", "capacitances cannot be derived from this geometry");
                    None
                }
            }
        }
        (None, Some(m)) => explicit_caps(&mut w, m),
    };

    let t_mev = w.number_or(top, "", "t_meV", Rule::Positive, 0.4);
    let temperature_k = w.number_or(top, "", "temperature_K", Rule::Positive, 0.1);
    let delta0_mev = w.number_or(top, "", "delta0_meV", Rule::Positive, 0.2);
    let r_int_ohm = w.number_or(top, "", "r_int_ohm", Rule::Positive, 1e6);
    let margin = w.number_or(top, "", "margin", Rule::Positive, DEFAULT_MARGIN);
    let max_qubits = top.contains_key("max_qubits").then(|| w.count(top, "", "max_qubits", 1)).flatten().map(|n| n as usize);
    let seed = w.count_or(top, "", "seed", 0, 1);

    let readout = match top.get("readout") {
        Some(r) => parse_readout(&mut w, r),
        None => {
            w.defaults.push("readout = {lambda: 1, theta: 0.3, overdrive: 2, shift_fraction: 0.1, v_d: 1.5}".into());
            ReadoutConfig::default()
        }
    };

    if !w.issues.is_empty() {
        return Err(w.issues);
    }
    let caps = caps.expect("caps present when there are no issues");
    if let Err(e) = caps.validate() {
        return Err(vec![ConfigIssue { path: "capacitances".into(), message: e.to_string() }]);
    }
    Ok(ValidatedConfig {
        config: DeviceConfig {
            name,
            geometry,
            caps,
            t_mev,
            temperature_k,
            delta0_mev,
            r_int_ohm,
            margin,
            max_qubits,
            seed,
            readout,
        },
        defaults: w.defaults,
        notices,
    })
}

fn parse_geometry(w: &mut Walker, v: &Value) -> Option<DeviceGeometry> {
    let path = "geometry";
    let m = w.object(v, path, GEOMETRY_KEYS)?;
    let before = w.issues.len();
    let nominal = DeviceGeometry::nominal(1);
    let r0 = w.number_or(m, path, "r0", Rule::Positive, nominal.r0);
    let d_a = w.number_or(m, path, "d_A", Rule::Positive, nominal.d_a);
    let d_b = w.number_or(m, path, "d_B", Rule::Positive, nominal.d_b);
    let d_c = w.number_or(m, path, "d_C", Rule::Positive, nominal.d_c);
    let d_d = w.number_or(m, path, "d_D", Rule::Positive, nominal.d_d);
    let eps_ox = w.number_or(m, path, "eps_ox", Rule::AtLeastOne, nominal.eps_ox);
    let eps_si = w.number_or(m, path, "eps_si", Rule::AtLeastOne, nominal.eps_si);
    let c_e = w.number_or(m, path, "C_E", Rule::NonNegative, 0.0);
    let d_cross = w.number(m, path, "d_cross", Rule::Positive);
    let lattice = match m.get("lattice") {
        None => Lattice::Chain,
        Some(Value::String(s)) if s == "chain" => Lattice::Chain,
        Some(l @ Value::Object(_)) => parse_lattice(w, l).unwrap_or(Lattice::Chain),
        Some(_) => {
            w.issue("geometry.lattice", "expected \"chain\" or {\"kind\": \"grid\", \"nx\": .., \"ny\": ..}");
            Lattice::Chain
        }
    };
    let n_qubits = match (m.contains_key("n_qubits"), lattice) {
        (true, _) => w.count(m, path, "n_qubits", 1).unwrap_or(1) as usize,
        (false, Lattice::Grid { nx, ny }) => nx * ny,
        (false, Lattice::Chain) => {
            w.issue("geometry.n_qubits", "required");
            1
        }
    };
    if let Lattice::Grid { nx, ny } = lattice {
        if nx * ny != n_qubits {
            w.issue("geometry.lattice", format!("{nx}x{ny} grid does not hold n_qubits = {n_qubits}"));
        }
    }
    let mut per_qubit = BTreeMap::new();
    if let Some(pq) = m.get("per_qubit") {
        match pq.as_object() {
            None => w.issue("geometry.per_qubit", "expected an object keyed by qubit index"),
            Some(pq) => {
                for (k, q) in pq {
                    let qpath = format!("geometry.per_qubit.{k}");
                    let idx = match k.parse::<usize>() {
                        Ok(i) if i < n_qubits => i,
                        _ => {
                            w.issue(&qpath, format!("key must be a qubit index below {n_qubits}"));
                            continue;
                        }
                    };
                    if let Some(qm) = w.object(q, &qpath, QUBIT_OVERRIDE_KEYS) {
                        let o = QubitGeometry {
                            r0: w.number(qm, &qpath, "r0", Rule::Positive),
                            d_a: w.number(qm, &qpath, "d_A", Rule::Positive),
                            d_b: w.number(qm, &qpath, "d_B", Rule::Positive),
                            d_c: w.number(qm, &qpath, "d_C", Rule::Positive),
                        };
                        per_qubit.insert(idx, o);
                    }
                }
            }
        }
    }
    if w.issues.len() != before {
        return None;
    }
    Some(DeviceGeometry { r0, d_a, d_b, d_c, d_d, eps_ox, eps_si, n_qubits, lattice, d_cross, c_e, per_qubit })
}

fn parse_lattice(w: &mut Walker, v: &Value) -> Option<Lattice> {
    let path = "geometry.lattice";
    let m = w.object(v, path, LATTICE_KEYS)?;
    match m.get("kind").and_then(Value::as_str) {
        Some("chain") => Some(Lattice::Chain),
        Some("grid") => {
            let nx = w.count(m, path, "nx", 1);
            let ny = w.count(m, path, "ny", 1);
            match (nx, ny) {
                (Some(nx), Some(ny)) => Some(Lattice::Grid { nx: nx as usize, ny: ny as usize }),
                _ => {
                    if !m.contains_key("nx") || !m.contains_key("ny") {
                        w.issue(path, "grid needs nx and ny");
                    }
                    None
                }
            }
        }
        _ => {
            w.issue(&join(path, "kind"), "expected \"chain\" or \"grid\"");
            None
        }
    }
}

fn explicit_caps(w: &mut Walker, m: &Map<String, Value>) -> Option<CapacitanceSet> {
    let path = "capacitances";
    let n = match w.count(m, path, "n_qubits", 1) {
        Some(n) => n as usize,
        None => {
            if !m.contains_key("n_qubits") {
                w.issue("capacitances.n_qubits", "required without a geometry");
            }
            return None;
        }
    };
    let mut get = |k: &str, required: bool| -> Option<f64> {
        if !m.contains_key(k) {
            if required {
                w.issue(&join(path, k), "required without a geometry");
            }
            return Some(0.0);
        }
        w.number(m, path, k, Rule::NonNegative)
    };
    let q = QubitCaps {
        c_a: get("C_A", true)?,
        c_b: get("C_B", true)?,
        c_c: get("C_C", true)?,
        c_h: get("C_H", false)?,
        c_i: get("C_I", false)?,
    };
    let bond = BondCaps { c_d: get("C_D", n > 1)?, c_e: get("C_E", false)? };
    Some(CapacitanceSet::uniform_chain(n, q, bond))
}

/// Writes every capacitance given explicitly onto `caps`; returns the names.
fn apply_overrides(w: &mut Walker, caps: &mut CapacitanceSet, m: &Map<String, Value>) -> Vec<String> {
    let path = "capacitances";
    let mut names = Vec::new();
    let n = caps.n_qubits();
    let chain = matches!(caps.couplings, Couplings::Chain { .. });
    for key in ["C_A", "C_B", "C_C", "C_H", "C_I", "C_D", "C_E"] {
        let Some(x) = w.number(m, path, key, Rule::NonNegative) else { continue };
        names.push(key.to_string());
        for (i, q) in caps.qubits.iter_mut().enumerate() {
            match key {
                "C_A" => q.c_a = x,
                "C_B" => q.c_b = x,
                "C_C" => q.c_c = x,
                "C_H" if chain && i > 0 => q.c_h = x,
                "C_I" if chain && i + 1 < n => q.c_i = x,
                _ => {}
            }
        }
        match &mut caps.couplings {
            Couplings::Chain { bonds } => {
                for b in bonds.iter_mut() {
                    match key {
                        "C_D" => b.c_d = x,
                        "C_E" => b.c_e = x,
                        _ => {}
                    }
                }
            }
            Couplings::Grid { x: bx, y: by, .. } => {
                if key == "C_D" {
                    bx.iter_mut().chain(by.iter_mut()).for_each(|c| *c = x);
                }
                if key == "C_E" && x != 0.0 {
                    w.issue("capacitances.C_E", "grids have no diagonal capacitance");
                }
            }
        }
    }
    names
}

fn parse_readout(w: &mut Walker, v: &Value) -> ReadoutConfig {
    let path = "readout";
    let d = ReadoutConfig::default();
    let Some(m) = w.object(v, path, READOUT_KEYS) else { return d };
    let sweep_grid = match m.get("sweep_grid") {
        None => {
            w.defaults.push("readout.sweep_grid = 0.05..=2.0 step 0.05".into());
            d.sweep_grid.clone()
        }
        Some(g) => parse_grid(g).unwrap_or_else(|msg| {
            w.issue("readout.sweep_grid", msg);
            d.sweep_grid.clone()
        }),
    };
    let n_segments = w.count_or(m, path, "n_segments", 1, d.n_segments as u64) as usize;
    let max_n = w.count_or(m, path, "max_n", 2, d.max_n as u64) as usize;
    ReadoutConfig {
        lambda: w.number_or(m, path, "lambda", Rule::Positive, d.lambda),
        theta: w.number_or(m, path, "theta", Rule::NonNegative, d.theta),
        overdrive: w.number_or(m, path, "overdrive", Rule::Positive, d.overdrive),
        shift: ThresholdShift {
            fraction: w.number_or(m, path, "shift_fraction", Rule::Fraction, d.shift.fraction),
            sign: w.number_or(m, path, "shift_sign", Rule::Sign, d.shift.sign),
        },
        v_d: w.number_or(m, path, "v_d", Rule::NonNegative, d.v_d),
        n_segments,
        max_n,
        sweep_grid,
    }
}

/// A list of non-negative, increasing drain biases.
pub fn parse_grid(v: &Value) -> std::result::Result<Vec<f64>, String> {
    let arr = v.as_array().ok_or("expected an array of numbers")?;
    let xs: Option<Vec<f64>> = arr.iter().map(Value::as_f64).collect();
    let xs = xs.ok_or("expected an array of numbers")?;
    check_grid(&xs)?;
    Ok(xs)
}

pub fn check_grid(xs: &[f64]) -> std::result::Result<(), String> {
    if xs.is_empty() {
        return Err("grid is empty".into());
    }
    if xs.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err("grid values must be finite and >= 0".into());
    }
    if xs.windows(2).any(|p| p[1] <= p[0]) {
        return Err("grid must be strictly increasing".into());
    }
    Ok(())
}

/// `start:stop:step` or a comma-separated list.
pub fn parse_grid_spec(s: &str) -> std::result::Result<Vec<f64>, String> {
    let bad = |e: std::num::ParseFloatError| format!("bad grid '{s}': {e}");
    let xs: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("bad grid '{s}': expected start:stop:step"));
        }
        let (a, b, h) = (parts[0].trim().parse::<f64>().map_err(bad)?, parts[1].trim().parse::<f64>().map_err(bad)?, parts[2].trim().parse::<f64>().map_err(bad)?);
        if !(h > 0.0) || b < a {
            return Err(format!("bad grid '{s}': need step > 0 and stop >= start"));
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        (0..=n).map(|k| a + k as f64 * h).collect()
    } else {
        s.split(',').map(|x| x.trim().parse::<f64>().map_err(bad)).collect::<std::result::Result<_, _>>()?
    };
    check_grid(&xs)?;
    Ok(xs)
}
