//! Flat `key = value` configs with `[section]` headers. Section names prefix their keys
//! (`[entropy]` then `n = 8` sets `entropy.n`). Every key has a default; unknown keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, IntMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Homology,
    Baseline,
    ThmB,
    ThmC,
    Volume,
    Lyapunov,
    Cones,
}

pub struct KeySpec {
    pub key: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn k(key: &'static str, default: &'static str, doc: &'static str) -> KeySpec {
    KeySpec { key, default, doc }
}

const COMMON: &[KeySpec] = &[k("seed", "0", "master seed for every random choice"), k("out", "out", "output directory")];

const MATRIX: &[KeySpec] = &[
    k("matrix", "2,1;1,1", "inline integer matrix, rows separated by ';'"),
    k("matrix_file", "", "matrix text file (first line d, then d rows); overrides matrix"),
];

const MAP: &[KeySpec] = &[k("map_file", "", "JSON map descriptor; overrides the matrix keys")];

const HOMOLOGY: &[KeySpec] = &[
    k("tol", "1e-9", "agreement tolerance between hH and the linear entropy"),
    k("oracle_trials", "0", "random unimodular matrices for the exterior-power oracle (0 skips it)"),
];

const BASELINE: &[KeySpec] = &[
    k("tol", "1e-6", "Lyapunov tolerance"),
    k("entropy.n", "16", "orbit length"),
    k("entropy.epsilon", "0.05", "separation scale"),
    k("entropy.samples", "200000", "candidate points"),
    k("lyapunov.n", "10000", "orbit length"),
    k("lyapunov.burn_in", "100", "discarded steps"),
    k("lyapunov.points", "3", "start points"),
    k("volume.radius", "0.01", "disk radius"),
    k("volume.iterations", "0", "iterations (0: 10 for curves, 5 for surfaces)"),
    k("volume.max_vertices", "1000000", "vertex budget"),
    k("volume.tol", "0.05", "tolerance per unstable dimension"),
];

const THM_B: &[KeySpec] = &[
    k("b", "2,1;1,1", "base matrix B"),
    k("a", "2,1;1,1", "fiber matrix A"),
    k("k", "0.2", "entropy surplus K of the fiber isotopy"),
    k("power", "9", "base power N"),
    k("delta", "0.01", "radius of the tube around p"),
    k("p", "0,0", "fixed point of B"),
    k("depth", "10", "Markov refinement depth"),
    k("partition_file", "", "Markov partition JSON (default: the shipped partition of [[2,1],[1,1]])"),
    k("epsilon_budget", "0.2", "allowed entropy loss of the pruned base"),
    k("y_bound", "30", "bound on the fiber derivative norms used in the norm gap"),
    k("norm_samples", "4000", "tube samples for the fiber derivative norms"),
    k("grid", "9", "cone grid points per dimension"),
    k("tube_samples", "2000", "extra cone points in the tube"),
    k("aperture_grid", "4", "grid points per dimension for the aperture search"),
    k("directions", "8", "random rays per point"),
    k("spot_checks", "1000", "points outside the tube compared with the linear map"),
    k("lyapunov.points", "4", "start points"),
    k("lyapunov.n", "2000", "orbit length"),
    k("lyapunov.tol", "1e-3", "exponents within tol of 0 are undecided"),
    k("tol", "1e-9", "tolerance for the exact hH identity"),
];

const THM_C: &[KeySpec] = &[
    k("a4", "0,0,0,-1;1,0,0,8;0,1,0,-18;0,0,1,13", "4x4 unimodular matrix with 0 < λ1 < λ2 < λ3 < 1 < λ4"),
    k("branches", "12", "horseshoe branches n, log n > log λ4"),
    k("lap_width", "1.0", "horseshoe lap width"),
    k("chi_inner", "10", "inner radius of the horseshoe switch"),
    k("chi_outer", "110", "outer radius of the horseshoe switch"),
    k("kappa", "20000", "stretch of the c1 axis in the switch"),
    k("gamma", "0.1", "cone aperture"),
    k("m4", "0.5", "plateau slope of the c4 profile"),
    k("m1", "2.0", "plateau slope of the c1 profile"),
    k("rate_margin", "3.0", "strong rates over the horseshoe derivative bounds"),
    k("grid", "9", "cone grid points per dimension"),
    k("chart_samples", "3000", "extra cone points inside the modified ball"),
    k("directions", "8", "random rays per point"),
    k("cone_n", "1", "iterates per cone step"),
    k("words", "6", "sampled horseshoe periodic orbits"),
    k("word_length", "4", "period of the sampled orbits"),
    k("repeats", "200", "cycle repeats for the periodic spectrum"),
    k("outside_points", "200", "orbits checked against the linear map away from the ball"),
    k("outside_steps", "100", "steps per outside orbit"),
    k("tol", "1e-3", "exponents above tol count as positive"),
];

const VOLUME: &[KeySpec] = &[
    k("u", "0", "disk dimension (0: unstable index of the linear part)"),
    k("radius", "0.01", "disk radius"),
    k("iterations", "0", "iterations (0: 10 for curves, 5 for surfaces)"),
    k("max_vertices", "1000000", "vertex budget"),
    k("base_points", "3", "disk centres; the maximum growth is reported"),
    k("tol", "0.05", "tolerance per unit of u"),
];

const LYAPUNOV: &[KeySpec] = &[
    k("n", "10000", "orbit length"),
    k("burn_in", "100", "discarded steps"),
    k("points", "3", "start points"),
    k("tol", "1e-6", "agreement with the log moduli of a linear map"),
];

const CONES: &[KeySpec] = &[
    k("gamma", "0.5", "aperture of both cones in the eigen frame"),
    k("n", "1", "iterates per cone step"),
    k("grid", "5", "grid points per dimension"),
    k("nonlinear_samples", "1000", "extra points from the map's nonlinear region"),
    k("directions", "8", "random rays per point"),
    k("tol", "0", "required worst margin"),
];

impl Experiment {
    pub const ALL: [Experiment; 7] =
        [Experiment::Homology, Experiment::Baseline, Experiment::ThmB, Experiment::ThmC, Experiment::Volume, Experiment::Lyapunov, Experiment::Cones];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Homology => "homology",
            Experiment::Baseline => "baseline",
            Experiment::ThmB => "thm-b",
            Experiment::ThmC => "thm-c",
            Experiment::Volume => "volume",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Cones => "cones",
        }
    }

    pub fn keys(self) -> Vec<&'static KeySpec> {
        let groups: &[&[KeySpec]] = match self {
            Experiment::Homology => &[COMMON, MATRIX, HOMOLOGY],
            Experiment::Baseline => &[COMMON, MATRIX, BASELINE],
            Experiment::ThmB => &[COMMON, THM_B],
            Experiment::ThmC => &[COMMON, THM_C],
            Experiment::Volume => &[COMMON, MATRIX, MAP, VOLUME],
            Experiment::Lyapunov => &[COMMON, MATRIX, MAP, LYAPUNOV],
            Experiment::Cones => &[COMMON, MATRIX, MAP, CONES],
        };
        groups.iter().flat_map(|g| g.iter()).collect()
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| Error::Input(format!("unknown experiment {s:?}")))
    }
}

/// Raw `key → value` pairs with section prefixes applied.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| Error::Input(format!("line {}: unterminated section", no + 1)))?.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(Error::Input(format!("line {}: bad section name {name:?}", no + 1)));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Input(format!("line {}: expected key = value", no + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Input(format!("line {}: empty key", no + 1)));
        }
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        if out.insert(full.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Input(format!("line {}: duplicate key {full}", no + 1)));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    values: BTreeMap<String, String>,
    /// Directory relative paths in the config are resolved against.
    base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let values = experiment.keys().iter().map(|s| (s.key.to_string(), s.default.to_string())).collect();
        Self { experiment, values, base_dir: PathBuf::from(".") }
    }

    pub fn from_pairs(experiment: Experiment, pairs: &BTreeMap<String, String>) -> Result<Self, Error> {
        let mut cfg = Self::defaults(experiment);
        for (key, value) in pairs {
            if key == "experiment" {
                if value != experiment.name() {
                    return Err(Error::Input(format!("config is for {value:?}, not {experiment}")));
                }
                continue;
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn from_text(experiment: Experiment, text: &str) -> Result<Self, Error> {
        Self::from_pairs(experiment, &parse_config_text(text)?)
    }

    pub fn from_path(experiment: Experiment, path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("config {}: {e}", path.display())))?;
        let mut cfg = Self::from_text(experiment, &text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.trim().to_string();
                Ok(())
            }
            None => Err(Error::Input(format!("unknown key {key:?} for experiment {}", self.experiment))),
        }
    }

    /// Every key with its effective value.
    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("no key {key} for {}", self.experiment))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T, Error> {
        let v = self.str(key);
        v.parse().map_err(|_| Error::Input(format!("{key} = {v:?} does not parse")))
    }

    pub fn positive(&self, key: &str) -> Result<f64, Error> {
        let v: f64 = self.parse(key)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Input(format!("{key} must be positive")));
        }
        Ok(v)
    }

    pub fn seed(&self) -> Result<u64, Error> {
        self.parse("seed")
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.str(key);
        if v.is_empty() {
            return None;
        }
        let p = PathBuf::from(v);
        Some(if p.is_absolute() { p } else { self.base_dir.join(p) })
    }

    pub fn read_file(&self, key: &str) -> Result<Option<String>, Error> {
        match self.path(key) {
            None => Ok(None),
            Some(p) => std::fs::read_to_string(&p).map(Some).map_err(|e| Error::Input(format!("{key} = {}: {e}", p.display()))),
        }
    }

    pub fn inline_matrix(&self, key: &str) -> Result<IntMatrix, Error> {
        IntMatrix::parse_inline(self.str(key)).map_err(|e| Error::Input(format!("{key}: {e}")))
    }

    /// `matrix_file` if set, else the inline `matrix`.
    pub fn matrix(&self) -> Result<IntMatrix, Error> {
        let m = match self.read_file("matrix_file")? {
            Some(text) => IntMatrix::parse_text(&text)?,
            None => self.inline_matrix("matrix")?,
        };
        if !m.is_unimodular() {
            return Err(Error::NotUnimodular(m.det().to_string()));
        }
        Ok(m)
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>, Error> {
        self.str(key)
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::Input(format!("{key}: bad number {t:?}"))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_prefix_keys() {
        let raw = parse_config_text("seed = 3 # comment\n\n[entropy]\nn = 8\n[volume]\nradius=0.02\n").unwrap();
        assert_eq!(raw["seed"], "3");
        assert_eq!(raw["entropy.n"], "8");
        assert_eq!(raw["volume.radius"], "0.02");
        let cfg = ExperimentConfig::from_pairs(Experiment::Baseline, &raw).unwrap();
        assert_eq!(cfg.parse::<usize>("entropy.n").unwrap(), 8);
        assert_eq!(cfg.str("entropy.epsilon"), "0.05");
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(ExperimentConfig::from_text(Experiment::Homology, "grid = 3").is_err());
        assert!(ExperimentConfig::from_text(Experiment::Homology, "experiment = thm-b").is_err());
        assert!(ExperimentConfig::from_text(Experiment::Homology, "experiment = homology").is_ok());
        assert!(parse_config_text("[open\nx=1").is_err());
        assert!(parse_config_text("novalue").is_err());
        assert!(parse_config_text("a=1\na=2").is_err());
    }

    #[test]
    fn every_key_has_a_parseable_default() {
        for e in Experiment::ALL {
            let cfg = ExperimentConfig::defaults(e);
            assert!(cfg.seed().is_ok());
            let keys: Vec<&str> = e.keys().iter().map(|s| s.key).collect();
            let mut dedup = keys.clone();
            dedup.sort_unstable();
            dedup.dedup();
            assert_eq!(keys.len(), dedup.len(), "{e}");
            assert!(e.keys().iter().all(|s| !s.doc.is_empty()));
            if cfg.has("matrix") {
                assert!(cfg.matrix().is_ok());
            }
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        let c = ExperimentConfig::defaults(Experiment::ThmC);
        assert_eq!(c.inline_matrix("a4").unwrap(), crate::torus_maps::quartic::companion(crate::torus_maps::DEFAULT_QUARTIC));
    }
}
