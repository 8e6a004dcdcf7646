use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimator::EstimationRegime;
use crate::impairments::BlockageKind;
use crate::recovery::SolverConfig;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Relay diagnosis success rate against the number of beams.
    Fig1Diagnosis,
    /// Channel NMSE against the number of beams.
    Fig2NmseVsMeasurements,
    /// Channel NMSE against the MS link SNR.
    Fig3NmseVsSnr,
    /// Full grid over every sweep axis, all regimes.
    Custom,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Fig1Diagnosis => "fig1_diagnosis",
            Scenario::Fig2NmseVsMeasurements => "fig2_nmse_vs_measurements",
            Scenario::Fig3NmseVsSnr => "fig3_nmse_vs_snr",
            Scenario::Custom => "custom",
        }
    }

    /// Short file stem used for output artifacts.
    pub fn stem(&self) -> &'static str {
        match self {
            Scenario::Fig1Diagnosis => "fig1",
            Scenario::Fig2NmseVsMeasurements => "fig2",
            Scenario::Fig3NmseVsSnr => "fig3",
            Scenario::Custom => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" | "fig1_diagnosis" => Ok(Scenario::Fig1Diagnosis),
            "fig2" | "fig2_nmse_vs_measurements" => Ok(Scenario::Fig2NmseVsMeasurements),
            "fig3" | "fig3_nmse_vs_snr" => Ok(Scenario::Fig3NmseVsSnr),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::config("scenario", format!("unknown scenario `{other}`"))),
        }
    }
}

/// BS to relay line-of-sight link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelayConfig {
    /// `γ`.
    pub gain: f64,
    /// `α_r`, written as `[re, im]`.
    pub path_gain: C64,
    /// Departure angle towards the relay, radians.
    pub aod: f64,
    pub snr_db: f64,
}

impl Default for RelayConfig {
    fn default() -> Self {
        Self {
            gain: 1.0,
            path_gain: C64::new(1.0, 0.0),
            aod: 0.5,
            snr_db: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n_bs: usize,
    pub n_ms: usize,
    pub g_bs: usize,
    pub g_ms: usize,
    /// Number of channel paths `L`.
    pub paths: usize,
    /// Sweep over the number of BS beams.
    pub m_bs: Vec<usize>,
    pub m_ms: usize,
    /// Sweep over the number of faulty BS elements.
    pub faults: Vec<usize>,
    /// Sweep over the MS link SNR.
    pub snr_db: Vec<f64>,
    pub blockage: Vec<BlockageKind>,
    /// Estimation regimes to run; ignored by the diagnosis scenario.
    pub regimes: Vec<EstimationRegime>,
    pub trials: usize,
    pub seed: u64,
    pub relay: RelayConfig,
    /// Solver used by the MS channel estimator.
    pub estimator: SolverConfig,
    /// Solver used by the relay.
    pub diagnosis: SolverConfig,
}

impl ExperimentConfig {
    pub fn fig1() -> Self {
        Self {
            scenario: Scenario::Fig1Diagnosis,
            n_bs: 64,
            n_ms: 32,
            g_bs: 64,
            g_ms: 32,
            paths: 3,
            m_bs: (1..=10).map(|k| 8 * k).collect(),
            m_ms: 1,
            faults: vec![8, 16],
            snr_db: vec![10.0],
            blockage: vec![BlockageKind::Complete, BlockageKind::Partial],
            regimes: EstimationRegime::ALL.to_vec(),
            trials: 500,
            seed: 1,
            relay: RelayConfig::default(),
            estimator: SolverConfig::default(),
            diagnosis: SolverConfig::default(),
        }
    }

    pub fn fig2() -> Self {
        Self {
            scenario: Scenario::Fig2NmseVsMeasurements,
            m_bs: vec![20, 40, 60, 80, 100, 120],
            m_ms: 4,
            faults: vec![8, 16],
            snr_db: vec![10.0],
            blockage: vec![BlockageKind::Mixed],
            trials: 200,
            ..Self::fig1()
        }
    }

    pub fn fig3() -> Self {
        Self {
            scenario: Scenario::Fig3NmseVsSnr,
            m_bs: vec![121],
            m_ms: 11,
            snr_db: vec![-15.0, -10.0, -5.0, 0.0, 5.0],
            regimes: vec![
                EstimationRegime::FaultFree,
                EstimationRegime::FaultUnaware,
                EstimationRegime::RelayAided,
            ],
            ..Self::fig2()
        }
    }

    pub fn custom() -> Self {
        Self {
            scenario: Scenario::Custom,
            ..Self::fig2()
        }
    }

    pub fn defaults_for(scenario: Scenario) -> Self {
        match scenario {
            Scenario::Fig1Diagnosis => Self::fig1(),
            Scenario::Fig2NmseVsMeasurements => Self::fig2(),
            Scenario::Fig3NmseVsSnr => Self::fig3(),
            Scenario::Custom => Self::custom(),
        }
    }

    /// Parses a TOML document layered over the defaults of `scenario`, or of
    /// the document's own `scenario` key when present.
    pub fn from_toml_str(text: &str, scenario: Scenario) -> Result<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.to_string()))?;
        let scenario = match user.get("scenario") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(_) => return Err(Error::config("scenario", "must be a string")),
            None => scenario,
        };
        let base = toml::Table::try_from(Self::defaults_for(scenario))
            .map_err(|e| Error::config("<defaults>", e.to_string()))?;
        let merged = merge(base, user);
        let cfg: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(field_of(&e), e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path, scenario: Scenario) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_bs", self.n_bs),
            ("n_ms", self.n_ms),
            ("g_bs", self.g_bs),
            ("g_ms", self.g_ms),
            ("paths", self.paths),
            ("m_ms", self.m_ms),
            ("trials", self.trials),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if self.paths > self.g_bs * self.g_ms {
            return Err(Error::config("paths", "exceeds the number of grid cells"));
        }
        if self.m_bs.is_empty() {
            return Err(Error::config("m_bs", "sweep is empty"));
        }
        for &m in &self.m_bs {
            if m == 0 {
                return Err(Error::config("m_bs", "every entry must be positive"));
            }
            if self.scenario != Scenario::Fig1Diagnosis && m % self.m_ms != 0 {
                return Err(Error::config("m_bs", format!("{m} is not a multiple of m_ms = {}", self.m_ms)));
            }
        }
        if self.faults.is_empty() {
            return Err(Error::config("faults", "sweep is empty"));
        }
        if let Some(&s) = self.faults.iter().find(|&&s| s > self.n_bs) {
            return Err(Error::config("faults", format!("{s} exceeds n_bs = {}", self.n_bs)));
        }
        if self.snr_db.is_empty() {
            return Err(Error::config("snr_db", "sweep is empty"));
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return Err(Error::config("snr_db", "NaN entry"));
        }
        if self.scenario != Scenario::Fig1Diagnosis && self.regimes.is_empty() {
            return Err(Error::config("regimes", "no estimation regime"));
        }
        if self.blockage.is_empty() {
            return Err(Error::config("blockage", "no blockage kind"));
        }
        if !(self.relay.gain > 0.0) || self.relay.snr_db.is_nan() || self.relay.path_gain.norm() == 0.0 {
            return Err(Error::config("relay", "gain and path gain must be nonzero, snr finite or +inf"));
        }
        for (name, s) in [("estimator", &self.estimator), ("diagnosis", &self.diagnosis)] {
            if !(s.lambda_scale >= 0.0) || !(s.lambda_floor_ratio >= 0.0) {
                return Err(Error::config(name, "lambda parameters must be non-negative"));
            }
            if s.lasso.max_iterations == 0 || !(s.lasso.tolerance >= 0.0) {
                return Err(Error::config(name, "max_iterations must be positive, tolerance non-negative"));
            }
        }
        Ok(())
    }
}

fn merge(mut base: toml::Table, user: toml::Table) -> toml::Table {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => {
                let inner = std::mem::take(b);
                *b = merge(inner, u);
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

fn field_of(e: &toml::de::Error) -> String {
    let msg = e.message();
    // serde reports unknown and missing keys with the key in backticks
    msg.split('`').nth(1).unwrap_or("<document>").to_string()
}
