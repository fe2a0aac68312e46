//! Experiment orchestration: configs in, self-contained reports out.

pub mod config;
mod experiments;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

pub use config::{parse_config_text, Experiment, ExperimentConfig, KeySpec};

use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    /// Acceptance criterion id ("1" … "9"); a list like "7,8" for shared components.
    pub criterion: String,
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub exact: BTreeMap<String, Value>,
    pub estimates: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
    /// Seconds per stage; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
    #[serde(skip)]
    pub tables: BTreeMap<String, Table>,
}

impl ExperimentReport {
    fn new(cfg: &ExperimentConfig) -> Result<Self, Error> {
        Ok(Self {
            experiment: cfg.experiment.name().to_string(),
            seed: cfg.seed()?,
            config: cfg.echo().clone(),
            exact: BTreeMap::new(),
            estimates: BTreeMap::new(),
            verdicts: Vec::new(),
            pass: true,
            timings: BTreeMap::new(),
            tables: BTreeMap::new(),
        })
    }

    fn exact<T: Serialize>(&mut self, key: &str, v: T) {
        self.exact.insert(key.to_string(), serde_json::to_value(v).expect("serializable"));
    }

    fn estimate<T: Serialize>(&mut self, key: &str, v: T) {
        self.estimates.insert(key.to_string(), serde_json::to_value(v).expect("serializable"));
    }

    fn verdict(&mut self, criterion: &str, check: &str, pass: bool, detail: String) {
        self.pass &= pass;
        self.verdicts.push(Verdict { criterion: criterion.to_string(), check: check.to_string(), pass, detail });
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(stage.to_string(), t.elapsed().as_secs_f64());
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// JSON without the timing field, for reproducibility comparisons.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("serializable");
        v.as_object_mut().expect("object").remove("timings");
        serde_json::to_string_pretty(&v).expect("serializable")
    }

    /// Writes `report.json` and `tables/<name>.csv` under `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), Error> {
        std::fs::create_dir_all(dir.join("tables"))?;
        std::fs::write(dir.join("report.json"), self.to_json() + "\n")?;
        for (name, t) in &self.tables {
            let mut w = csv::Writer::from_path(dir.join("tables").join(format!("{name}.csv"))).map_err(csv_err)?;
            w.write_record(&t.header).map_err(csv_err)?;
            for r in &t.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Ok(())
    }

    /// One line per verdict.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for v in &self.verdicts {
            s.push_str(&format!("[{}] {} {}: {}\n", v.criterion, if v.pass { "PASS" } else { "FAIL" }, v.check, v.detail));
        }
        s.push_str(&format!("{} {}\n", self.experiment, if self.pass { "PASS" } else { "FAIL" }));
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport, Error> {
    let mut r = ExperimentReport::new(cfg)?;
    match cfg.experiment {
        Experiment::Homology => experiments::homology(cfg, &mut r)?,
        Experiment::Baseline => experiments::baseline(cfg, &mut r)?,
        Experiment::ThmB => experiments::thm_b(cfg, &mut r)?,
        Experiment::ThmC => experiments::thm_c(cfg, &mut r)?,
        Experiment::Volume => experiments::volume(cfg, &mut r)?,
        Experiment::Lyapunov => experiments::lyapunov(cfg, &mut r)?,
        Experiment::Cones => experiments::cones(cfg, &mut r)?,
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::IntMatrix;

    fn cfg(e: Experiment, pairs: &[(&str, &str)]) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(e);
        for (k, v) in pairs {
            c.set(k, v).unwrap();
        }
        c
    }

    #[test]
    fn reports_are_deterministic_apart_from_timings() {
        let c = cfg(Experiment::Lyapunov, &[]);
        let (a, b) = (run(&c).unwrap(), run(&c).unwrap());
        assert_eq!(a.deterministic_json(), b.deterministic_json());
        assert!(!a.deterministic_json().contains("timings") && a.to_json().contains("timings"));
        let other = run(&cfg(Experiment::Lyapunov, &[("seed", "8")])).unwrap();
        assert_ne!(a.deterministic_json(), other.deterministic_json());
    }

    #[test]
    fn homology_verdicts_cite_criteria() {
        let r = run(&cfg(Experiment::Homology, &[])).unwrap();
        assert!(r.pass && !r.verdicts.is_empty());
        assert!(r.verdicts.iter().all(|v| v.criterion.split(',').all(|c| (1..=9).contains(&c.parse::<u32>().unwrap()))));
        assert!(r.summary().ends_with("homology PASS\n"));
    }

    #[test]
    fn rejects_unusable_matrices() {
        let shear = cfg(Experiment::Baseline, &[("matrix", "1,1;0,1")]);
        assert!(matches!(run(&shear), Err(Error::Input(_))));
        let mut singular = ExperimentConfig::defaults(Experiment::Homology);
        assert!(singular.set("matrix", "2,0;0,1").is_ok());
        assert!(matches!(run(&singular), Err(Error::NotUnimodular(_))));
        assert!(run(&cfg(Experiment::Volume, &[("matrix", "1,0;0,1")])).is_err());
    }

    #[test]
    fn writes_report_and_tables() {
        let dir = std::env::temp_dir().join(format!("torlab-lab-{}", std::process::id()));
        let r = run(&cfg(Experiment::Lyapunov, &[])).unwrap();
        assert!(!r.tables.is_empty());
        r.write_outputs(&dir).unwrap();
        let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(json["experiment"], "lyapunov");
        for (name, t) in &r.tables {
            let text = std::fs::read_to_string(dir.join("tables").join(format!("{name}.csv"))).unwrap();
            assert_eq!(text.lines().count(), t.rows.len() + 1);
        }
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn exact_values_recompute_from_the_linear_part() {
        for e in [Experiment::ThmB, Experiment::ThmC, Experiment::Lyapunov] {
            let r = run(&cfg(e, &[("depth", "2")][..usize::from(e == Experiment::ThmB)])).unwrap();
            let a: IntMatrix = serde_json::from_value(r.exact["linear_part"].clone()).unwrap();
            let inline = a.rows().iter().map(|row| row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")).collect::<Vec<_>>().join(";");
            let h = run(&cfg(Experiment::Homology, &[("matrix", &inline)])).unwrap();
            if let Some(own) = r.exact.get("homology") {
                assert_eq!(own, &h.exact["homology"], "{}", e.name());
            }
            assert_eq!(h.exact["linear_part"], r.exact["linear_part"]);
        }
    }
}
