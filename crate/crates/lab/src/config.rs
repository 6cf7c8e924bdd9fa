//! Flat `section.key = value` configuration. Every key has an embedded default.

use std::collections::BTreeMap;

use edgelab_core::eigensolve::Method;
use edgelab_core::experiments::{DecoupleOptions, EdgeOptions};
use edgelab_core::model::{Density, GridControl, ModelConfig, Side};

pub const ENV_OUTDIR: &str = "EDGELAB_OUTDIR";
pub const ENV_SEED: &str = "EDGELAB_SEED";

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSection {
    pub explicit: bool,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSection {
    pub outdir: String,
    pub seed: u64,
    pub jobs: usize,
    pub sizes: Vec<u32>,
    pub seeds: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WegnerSection {
    pub energy: Option<f64>,
    pub deltas: Vec<f64>,
    pub n: usize,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabConfig {
    /// `model.grid` is kept in sync with `grid`.
    pub model: ModelConfig,
    pub grid: GridSection,
    pub edge: EdgeOptions,
    pub run: RunSection,
    pub wegner: WegnerSection,
    pub decouple: DecoupleOptions,
    pub decouple_z: Vec<(f64, f64)>,
    pub separations: Vec<u32>,
    pub flux_phis: Vec<f64>,
    pub kernel_z: (f64, f64),
}

impl Default for LabConfig {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        let mut c = Self {
            model: ModelConfig::default(),
            grid: GridSection { explicit: false, h: 0.2, nx: 0, ny: 0, x_min: 0.0, x_max: 0.0 },
            edge: EdgeOptions::default(),
            run: RunSection { outdir: "edgelab-out".into(), seed: 2024, jobs: 1, sizes: vec![16, 25, 36, 49], seeds: 20 },
            wegner: WegnerSection { energy: None, deltas: vec![1e-4, 2e-4, 4e-4], n: 400, side: Side::Left },
            decouple: DecoupleOptions::default(),
            decouple_z: vec![(1.0, 0.1)],
            separations: Vec::new(),
            flux_phis: (0..=8).map(|i| i as f64 * pi / 4.0).collect(),
            kernel_z: (1.0, 0.0),
        };
        c.sync_grid();
        c
    }
}

fn bad(key: &str, value: &str, what: &str) -> ConfigError {
    ConfigError(format!("{key}: cannot parse '{value}' as {what}"))
}

fn f(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| bad(key, v, "a number"))
}

fn u<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse::<T>().map_err(|_| bad(key, v, "a nonnegative integer"))
}

fn list<T>(key: &str, v: &str, one: impl Fn(&str, &str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| one(key, s.trim())).collect()
}

fn join<T>(xs: &[T], g: impl Fn(&T) -> String) -> String {
    xs.iter().map(g).collect::<Vec<_>>().join(",")
}

pub fn parse_side(v: &str) -> Result<Side, ConfigError> {
    match v {
        "l" | "left" => Ok(Side::Left),
        "r" | "right" => Ok(Side::Right),
        _ => Err(ConfigError(format!("side must be l or r, got '{v}'"))),
    }
}

pub fn side_id(s: Side) -> &'static str {
    match s {
        Side::Left => "l",
        Side::Right => "r",
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`.
pub fn parse_complex(s: &str) -> Result<(f64, f64), ConfigError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || ConfigError(format!("cannot parse '{s}' as a complex number"));
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| (re, 0.0)).map_err(|_| err());
    };
    let b = body.as_bytes();
    let split = (1..b.len()).rev().find(|&i| (b[i] == b'+' || b[i] == b'-') && !matches!(b[i - 1], b'e' | b'E'));
    match split {
        Some(p) => Ok((body[..p].parse().map_err(|_| err())?, body[p..].parse().map_err(|_| err())?)),
        None => Ok((0.0, body.parse().map_err(|_| err())?)),
    }
}

pub fn fmt_complex(z: (f64, f64)) -> String {
    let sign = if z.1.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.0, sign, z.1.abs())
}

fn method_id(m: Method) -> &'static str {
    match m {
        Method::Auto => "auto",
        Method::Dense => "dense",
        Method::ShiftInvert => "shift-invert",
    }
}

impl LabConfig {
    fn sync_grid(&mut self) {
        let g = self.grid;
        self.model.grid = if g.explicit { GridControl::Explicit { nx: g.nx, ny: g.ny, x_min: g.x_min, x_max: g.x_max } } else { GridControl::Auto { h: g.h } };
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let v = v.trim();
        let m = &mut self.model;
        match key {
            "model.B" => m.b = f(key, v)?,
            "model.L" => m.l = u(key, v)?,
            "model.V0" => m.v0 = f(key, v)?,
            "model.flux" => m.flux = f(key, v)?,
            "model.delta" => m.delta = f(key, v)?,
            "model.epsilon" => m.epsilon = f(key, v)?,
            "model.density_id" => m.density = Density::from_id(v).map_err(|e| ConfigError(e.to_string()))?,
            "model.separation" => m.separation = if v == "none" { None } else { Some(u(key, v)?) },
            "walls.left_c" => m.wall_left.c = f(key, v)?,
            "walls.left_m" => m.wall_left.m = f(key, v)?,
            "walls.right_c" => m.wall_right.c = f(key, v)?,
            "walls.right_m" => m.wall_right.m = f(key, v)?,
            "grid.mode" => {
                self.grid.explicit = match v {
                    "auto" => false,
                    "explicit" => true,
                    _ => return Err(bad(key, v, "auto or explicit")),
                }
            }
            "grid.h" => self.grid.h = f(key, v)?,
            "grid.nx" => self.grid.nx = u(key, v)?,
            "grid.ny" => self.grid.ny = u(key, v)?,
            "grid.x_min" => self.grid.x_min = f(key, v)?,
            "grid.x_max" => self.grid.x_max = f(key, v)?,
            "solver.method" => {
                self.edge.solve.method = match v {
                    "auto" => Method::Auto,
                    "dense" => Method::Dense,
                    "shift-invert" => Method::ShiftInvert,
                    _ => return Err(bad(key, v, "auto, dense or shift-invert")),
                }
            }
            "solver.tol" => self.edge.solve.tol = f(key, v)?,
            "solver.block" => self.edge.solve.block = u(key, v)?,
            "solver.max_restarts" => self.edge.solve.max_restarts = u(key, v)?,
            "solver.dense_limit" => self.edge.solve.dense_limit = u(key, v)?,
            "solver.seed" => self.edge.solve.seed = u(key, v)?,
            "edge.min_speed" => self.edge.rule.min_speed = f(key, v)?,
            "edge.max_bulk" => self.edge.rule.max_bulk = f(key, v)?,
            "edge.polish_iterations" => self.edge.polish_iterations = u(key, v)?,
            "edge.cap_factor" => self.edge.cap_factor = f(key, v)?,
            "edge.cluster" => self.edge.cluster = f(key, v)?,
            "edge.bound_neighborhood" => self.edge.bound_neighborhood = u(key, v)?,
            "run.outdir" => self.run.outdir = v.into(),
            "run.seed" => self.run.seed = u(key, v)?,
            "run.jobs" => self.run.jobs = u(key, v)?,
            "run.sizes" => self.run.sizes = list(key, v, u)?,
            "run.seeds" => self.run.seeds = u(key, v)?,
            "wegner.energy" => self.wegner.energy = if v == "auto" { None } else { Some(f(key, v)?) },
            "wegner.deltas" => self.wegner.deltas = list(key, v, f)?,
            "wegner.n" => self.wegner.n = u(key, v)?,
            "wegner.side" => self.wegner.side = parse_side(v)?,
            "decouple.z" => self.decouple_z = list(key, v, |_, s| parse_complex(s))?,
            "decouple.rtol" => self.decouple.rtol = f(key, v)?,
            "decouple.max_iter" => self.decouple.max_iter = u(key, v)?,
            "decouple.power_seed" => self.decouple.seed = u(key, v)?,
            "decouple.separations" => self.separations = list(key, v, u)?,
            "flux.phis" => self.flux_phis = list(key, v, f)?,
            "kernel.z" => self.kernel_z = parse_complex(v)?,
            _ => return Err(ConfigError(format!("unknown key '{key}'"))),
        }
        self.sync_grid();
        Ok(())
    }

    /// Every key with its effective value, in a stable order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let m = &self.model;
        let g = &self.grid;
        let e = &self.edge;
        vec![
            ("model.B", m.b.to_string()),
            ("model.L", m.l.to_string()),
            ("model.V0", m.v0.to_string()),
            ("model.flux", m.flux.to_string()),
            ("model.delta", m.delta.to_string()),
            ("model.epsilon", m.epsilon.to_string()),
            ("model.density_id", m.density.id().into()),
            ("model.separation", m.separation.map_or("none".into(), |s| s.to_string())),
            ("walls.left_c", m.wall_left.c.to_string()),
            ("walls.left_m", m.wall_left.m.to_string()),
            ("walls.right_c", m.wall_right.c.to_string()),
            ("walls.right_m", m.wall_right.m.to_string()),
            ("grid.mode", if g.explicit { "explicit" } else { "auto" }.into()),
            ("grid.h", g.h.to_string()),
            ("grid.nx", g.nx.to_string()),
            ("grid.ny", g.ny.to_string()),
            ("grid.x_min", g.x_min.to_string()),
            ("grid.x_max", g.x_max.to_string()),
            ("solver.method", method_id(e.solve.method).into()),
            ("solver.tol", e.solve.tol.to_string()),
            ("solver.block", e.solve.block.to_string()),
            ("solver.max_restarts", e.solve.max_restarts.to_string()),
            ("solver.dense_limit", e.solve.dense_limit.to_string()),
            ("solver.seed", e.solve.seed.to_string()),
            ("edge.min_speed", e.rule.min_speed.to_string()),
            ("edge.max_bulk", e.rule.max_bulk.to_string()),
            ("edge.polish_iterations", e.polish_iterations.to_string()),
            ("edge.cap_factor", e.cap_factor.to_string()),
            ("edge.cluster", e.cluster.to_string()),
            ("edge.bound_neighborhood", e.bound_neighborhood.to_string()),
            ("run.outdir", self.run.outdir.clone()),
            ("run.seed", self.run.seed.to_string()),
            ("run.jobs", self.run.jobs.to_string()),
            ("run.sizes", join(&self.run.sizes, |x| x.to_string())),
            ("run.seeds", self.run.seeds.to_string()),
            ("wegner.energy", self.wegner.energy.map_or("auto".into(), |x| x.to_string())),
            ("wegner.deltas", join(&self.wegner.deltas, |x| x.to_string())),
            ("wegner.n", self.wegner.n.to_string()),
            ("wegner.side", side_id(self.wegner.side).into()),
            ("decouple.z", join(&self.decouple_z, |z| fmt_complex(*z))),
            ("decouple.rtol", self.decouple.rtol.to_string()),
            ("decouple.max_iter", self.decouple.max_iter.to_string()),
            ("decouple.power_seed", self.decouple.seed.to_string()),
            ("decouple.separations", join(&self.separations, |x| x.to_string())),
            ("flux.phis", join(&self.flux_phis, |x| x.to_string())),
            ("kernel.z", fmt_complex(self.kernel_z)),
        ]
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// The effective configuration as a loadable file.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for (k, v) in self.entries() {
            let (s, key) = k.split_once('.').unwrap();
            if s != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{s}]\n"));
                section = s;
            }
            out.push_str(&format!("{key} = {v}\n"));
        }
        out
    }

    /// Applies a file: `section.key = value` lines, or bare keys under a `[section]` header.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(s) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = s.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim();
            let key = if k.contains('.') || section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            self.set(&key, v).map_err(|e| ConfigError(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Applies the output-directory and seed overrides from the environment.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(d) = var(ENV_OUTDIR) {
            self.set("run.outdir", &d)?;
        }
        if let Some(s) = var(ENV_SEED) {
            self.set("run.seed", &s).map_err(|e| ConfigError(format!("{ENV_SEED}: {e}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs: Vec<String> = Vec::new();
        let base = self.model.validate();
        if let Err(e) = &base {
            errs.push(e.to_string());
        }
        for &l in self.run.sizes.iter().filter(|_| base.is_ok()) {
            if l != self.model.l {
                if let Err(e) = self.model.with_l(l).validate() {
                    errs.push(format!("size L = {l}: {e}"));
                }
            }
        }
        if self.run.jobs == 0 {
            errs.push("run.jobs must be at least 1".into());
        }
        if self.edge.solve.tol <= 0.0 || self.edge.solve.block == 0 {
            errs.push("solver.tol must be positive and solver.block at least 1".into());
        }
        if self.wegner.deltas.iter().any(|d| !(*d > 0.0)) {
            errs.push("wegner.deltas must be positive".into());
        }
        if self.flux_phis.iter().any(|p| !(0.0..=2.0 * std::f64::consts::PI).contains(p)) {
            errs.push("flux.phis must lie in [0, 2pi]".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs.join("; ")))
        }
    }

    /// SHA-256 over every key that can change a result (all but run.outdir and run.jobs).
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for (k, v) in self.entries().into_iter().filter(|(k, _)| !matches!(*k, "run.outdir" | "run.jobs")) {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_round_trips() {
        let mut c = LabConfig::default();
        c.set("model.V0", "0.03").unwrap();
        c.set("decouple.z", "1+0.1i, 0.9-0.2i").unwrap();
        c.set("wegner.energy", "1.01").unwrap();
        c.set("grid.mode", "explicit").unwrap();
        c.set("grid.nx", "40").unwrap();
        assert_eq!(LabConfig::parse(&c.render()).unwrap(), c);
        assert_eq!(LabConfig::parse(&LabConfig::default().render()).unwrap(), LabConfig::default());
    }

    #[test]
    fn sections_and_prefixes() {
        let c = LabConfig::parse("[model]\nV0 = 0.02 # weaker\nwalls.left_m = 4\n\n[run]\nsizes = 16,25\n").unwrap();
        assert_eq!(c.model.v0, 0.02);
        assert_eq!(c.model.wall_left.m, 4.0);
        assert_eq!(c.run.sizes, [16, 25]);
    }

    #[test]
    fn unknown_key_names_the_line() {
        let e = LabConfig::parse("model.B = 1\nmodel.Bee = 2\n").unwrap_err();
        assert!(e.0.contains("line 2") && e.0.contains("model.Bee"));
    }

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("1+0.1i").unwrap(), (1.0, 0.1));
        assert_eq!(parse_complex("1 - 2i").unwrap(), (1.0, -2.0));
        assert_eq!(parse_complex("1.5").unwrap(), (1.5, 0.0));
        assert_eq!(parse_complex("0.3i").unwrap(), (0.0, 0.3));
        assert_eq!(parse_complex("1e-1+1e-2i").unwrap(), (0.1, 0.01));
        assert!(parse_complex("1+").is_err());
        assert_eq!(parse_complex(&fmt_complex((1.0, -0.25))).unwrap(), (1.0, -0.25));
    }

    #[test]
    fn env_overrides() {
        let mut c = LabConfig::default();
        c.apply_env(|k| match k {
            ENV_OUTDIR => Some("/tmp/x".into()),
            ENV_SEED => Some("7".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!((c.run.outdir.as_str(), c.run.seed), ("/tmp/x", 7));
        assert!(c.apply_env(|k| (k == ENV_SEED).then(|| "x".into())).is_err());
    }

    #[test]
    fn hash_ignores_placement_only() {
        let a = LabConfig::default();
        let mut b = a.clone();
        b.set("run.outdir", "elsewhere").unwrap();
        b.set("run.jobs", "8").unwrap();
        assert_eq!(a.hash(), b.hash());
        b.set("run.seed", "1").unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn window_violation_is_reported() {
        let c = LabConfig::parse("model.delta = 0.4").unwrap();
        assert!(c.validate().unwrap_err().0.contains("V0 + epsilon + delta < B/2"));
    }
}
