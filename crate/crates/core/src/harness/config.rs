//! Experiment configuration: JSON document, validation and expansion into cells.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algorithms::SolveOptions;
use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, snr_db_to_power, Geometry, PowerModel};
use crate::rate::{make_regime, shannon_regime, RateRegime};

/// What each trial computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    Srmax,
    Eemax,
    Maxmin,
    Zfbf,
    ShannonSrmax,
    ShannonMaxmin,
    /// Feasibility only: the minimal-power design meeting `ν₃`.
    Minpower,
}

impl Objective {
    pub const ALL: [Objective; 7] = [
        Objective::Srmax,
        Objective::Eemax,
        Objective::Maxmin,
        Objective::Zfbf,
        Objective::ShannonSrmax,
        Objective::ShannonMaxmin,
        Objective::Minpower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Srmax => "srmax",
            Objective::Eemax => "eemax",
            Objective::Maxmin => "maxmin",
            Objective::Zfbf => "zfbf",
            Objective::ShannonSrmax => "shannon-srmax",
            Objective::ShannonMaxmin => "shannon-maxmin",
            Objective::Minpower => "minpower",
        }
    }

    pub fn is_shannon(self) -> bool {
        matches!(self, Objective::ShannonSrmax | Objective::ShannonMaxmin)
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown objective `{s}`")))
    }
}

/// A scalar or a list of values for one experiment axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Axis<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Axis::One(v) => vec![v.clone()],
            Axis::Many(v) => v.clone(),
        }
    }

    pub fn is_list(&self) -> bool {
        matches!(self, Axis::Many(v) if v.len() > 1)
    }
}

/// Power model in the units of the parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerConfig {
    pub eta: f64,
    pub p_c_dbm: f64,
    pub p_0_dbm: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            eta: 1.0,
            p_c_dbm: 30.0,
            p_0_dbm: 40.0,
        }
    }
}

impl PowerConfig {
    pub fn model(&self) -> PowerModel {
        PowerModel {
            eta: self.eta,
            p_c: dbm_to_watts(self.p_c_dbm),
            p_0: dbm_to_watts(self.p_0_dbm),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k_users: Axis<usize>,
    pub n_tx: usize,
    pub blocklength: Axis<u32>,
    pub d_bits: u32,
    pub epsilon: Axis<f64>,
    pub snr_db: Axis<f64>,
    pub trials: usize,
    pub seed: Option<u64>,
    pub objective: Objective,
    pub power_model: PowerConfig,
    pub geometry: Geometry,
    pub alpha: Option<Vec<f64>>,
    pub eps_conv: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Accept values outside the parameter table's ranges.
    pub force: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let opts = SolveOptions::default();
        ExperimentConfig {
            k_users: Axis::One(6),
            n_tx: 32,
            blocklength: Axis::One(128),
            d_bits: 256,
            epsilon: Axis::One(1e-5),
            snr_db: Axis::One(20.0),
            trials: 200,
            seed: None,
            objective: Objective::Srmax,
            power_model: PowerConfig::default(),
            geometry: Geometry::default(),
            alpha: None,
            eps_conv: opts.eps_conv,
            max_outer: opts.max_outer,
            max_inner: opts.max_inner,
            force: false,
        }
    }
}

/// One point of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub k_users: usize,
    pub blocklength: u32,
    pub snr_db: f64,
    pub epsilon: f64,
}

const BLOCKLENGTHS: [u32; 5] = [32, 64, 128, 256, 512];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        let ks = self.k_users.values();
        let ns = self.blocklength.values();
        let eps = self.epsilon.values();
        let snrs = self.snr_db.values();

        for (name, empty) in [
            ("k_users", ks.is_empty()),
            ("blocklength", ns.is_empty()),
            ("epsilon", eps.is_empty()),
            ("snr_db", snrs.is_empty()),
        ] {
            if empty {
                bad.push(format!("{name}: empty list"));
            }
        }
        if self.trials == 0 {
            bad.push("trials: must be at least 1".into());
        }
        if self.seed.is_none() {
            bad.push("seed: required".into());
        }
        if ks.iter().any(|&k| k == 0 || k > self.n_tx) {
            bad.push(format!("k_users: need 1 <= K <= n_tx = {}", self.n_tx));
        }
        if ns.iter().any(|&n| n == 0) {
            bad.push("blocklength: must be positive".into());
        }
        if self.d_bits == 0 {
            bad.push("d_bits: must be positive".into());
        }
        if eps.iter().any(|&e| !(e > 0.0 && e < 0.5)) {
            bad.push("epsilon: must lie in (0, 0.5)".into());
        }
        if snrs.iter().any(|s| !s.is_finite()) {
            bad.push("snr_db: must be finite".into());
        }
        if self.power_model.model().validate().is_err() {
            bad.push("power_model: need eta >= 1".into());
        }
        let g = &self.geometry;
        if !(g.d0 > 0.0 && g.radius > g.d0 && g.sigma2 > 0.0 && g.exponent > 0.0) {
            bad.push("geometry: need 0 < d0 < radius, sigma2 > 0, exponent > 0".into());
        }
        if let Some(a) = &self.alpha {
            if ks.iter().any(|&k| k != a.len()) {
                bad.push("alpha: one weight per user is required".into());
            }
            if a.iter().any(|x| !(*x >= 0.0)) || !a.iter().any(|x| *x > 0.0) {
                bad.push("alpha: weights must be nonnegative with one positive".into());
            }
        }
        if !(self.eps_conv > 0.0) {
            bad.push("eps_conv: must be positive".into());
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            bad.push("max_outer, max_inner: must be positive".into());
        }

        if !self.force {
            if ks.iter().any(|&k| !(4..=16).contains(&k)) {
                bad.push("k_users: outside 4..=16 (use force)".into());
            }
            if self.n_tx != 32 {
                bad.push("n_tx: table value is 32 (use force)".into());
            }
            if ns.iter().any(|n| !BLOCKLENGTHS.contains(n)) {
                bad.push("blocklength: not one of 32, 64, 128, 256, 512 (use force)".into());
            }
            if self.d_bits != 256 {
                bad.push("d_bits: table value is 256 (use force)".into());
            }
            if eps.iter().any(|&e| !(1e-10..=1e-2).contains(&e)) {
                bad.push("epsilon: outside 1e-10..=1e-2 (use force)".into());
            }
            if snrs.iter().any(|&s| !(15.0..=30.0).contains(&s)) {
                bad.push("snr_db: outside 15..=30 dB (use force)".into());
            }
        }

        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("seed: required".into()))
    }

    /// Axes holding more than one value.
    pub fn list_axes(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.k_users.is_list() {
            out.push("k_users");
        }
        if self.blocklength.is_list() {
            out.push("blocklength");
        }
        if self.snr_db.is_list() {
            out.push("snr_db");
        }
        if self.epsilon.is_list() {
            out.push("epsilon");
        }
        out
    }

    /// Cross product of the axes, in `K, n, SNR, ε` order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &k_users in &self.k_users.values() {
            for &blocklength in &self.blocklength.values() {
                for &snr_db in &self.snr_db.values() {
                    for &epsilon in &self.epsilon.values() {
                        out.push(Cell {
                            k_users,
                            blocklength,
                            snr_db,
                            epsilon,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            alpha: self.alpha.clone(),
            eps_conv: self.eps_conv,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            shannon_mode: false,
        }
    }

    /// Transmit budget for a cell.
    pub fn p_max(&self, cell: &Cell) -> f64 {
        snr_db_to_power(cell.snr_db, self.geometry.sigma2)
    }

    /// Regime the objective is judged under.
    pub fn regime(&self, cell: &Cell) -> Result<RateRegime> {
        if self.objective.is_shannon() {
            shannon_regime(cell.blocklength, self.d_bits)
        } else {
            make_regime(cell.epsilon, cell.blocklength, self.d_bits, false)
        }
    }
}
