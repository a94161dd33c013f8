use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trust-region norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    Inf,
    L1,
    /// Euclidean ball; closed form, single-plane bundles without constraints only.
    L2,
}

impl Norm {
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::Inf => v.iter().fold(0.0, |m, x| f64::max(m, x.abs())),
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.of(&d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Cutting planes at null steps, radius managed through the secondary ratio.
    Bundle,
    /// Single exactness plane, radius halved on every null step.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "seed")]
pub enum TrialMode {
    Deterministic,
    Randomized(u64),
}

/// Parameters of the outer/inner trust-region loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Acceptance threshold on rho.
    pub gamma: f64,
    /// Secondary threshold on rho tilde for halving the radius.
    pub gamma_tilde: f64,
    /// Threshold on rho for doubling the memory radius.
    #[serde(rename = "Gamma")]
    pub big_gamma: f64,
    pub theta: f64,
    #[serde(rename = "M")]
    pub m_factor: f64,
    pub norm: Norm,
    pub mode: Mode,
    pub r_init: f64,
    pub tol1: f64,
    pub tol2: f64,
    pub tol3: f64,
    pub k_max: usize,
    pub nu_max: usize,
    pub max_serious: usize,
    pub max_bundle: usize,
    pub trial_mode: TrialMode,
    /// Carry planes across serious steps (only honoured for models whose planes
    /// are global minorants).
    pub recycle_planes: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1e-4,
            gamma_tilde: 2e-4,
            big_gamma: 0.1,
            theta: 0.1,
            m_factor: 2.0,
            norm: Norm::Inf,
            mode: Mode::Bundle,
            r_init: 1.0,
            tol1: 1e-5,
            tol2: 1e-5,
            tol3: 1e-6,
            k_max: 50,
            nu_max: 5,
            max_serious: 1000,
            max_bundle: 50,
            trial_mode: TrialMode::Deterministic,
            recycle_planes: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(0.0 < self.gamma && self.gamma < self.gamma_tilde && self.gamma_tilde < 1.0) {
            return bad("need 0 < gamma < gamma_tilde < 1");
        }
        if !(self.gamma < self.big_gamma && self.big_gamma <= 1.0) {
            return bad("need gamma < Gamma <= 1");
        }
        if !(0.0 < self.theta && self.theta < 1.0) {
            return bad("need 0 < theta < 1");
        }
        if !(self.m_factor >= 1.0) {
            return bad("need M >= 1");
        }
        if !(self.r_init > 0.0 && self.r_init.is_finite()) {
            return bad("need R_init > 0");
        }
        if !(self.tol1 > 0.0 && self.tol2 > 0.0 && self.tol3 > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_bundle < 2 {
            return bad("max_bundle must be at least 2");
        }
        if self.k_max == 0 || self.nu_max == 0 || self.max_serious == 0 {
            return bad("iteration limits must be positive");
        }
        Ok(())
    }

    /// Classical first-order trust-region settings with the Euclidean norm.
    pub fn classical(gamma: f64, big_gamma: f64) -> Self {
        Self {
            gamma,
            gamma_tilde: (gamma + 1.0) / 2.0,
            big_gamma,
            mode: Mode::Classical,
            norm: Norm::L2,
            ..Self::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SolverConfig::default().validate().unwrap();
        SolverConfig::classical(0.9, 1.0).validate().unwrap();
    }

    #[test]
    fn parameter_ordering_enforced() {
        let mut c = SolverConfig::default();
        c.gamma_tilde = c.gamma / 2.0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.big_gamma = 1.5;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.m_factor = 0.5;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.tol3 = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn norms() {
        let v = [3.0, -4.0];
        assert_eq!(Norm::Inf.of(&v), 4.0);
        assert_eq!(Norm::L1.of(&v), 7.0);
        assert_eq!(Norm::L2.of(&v), 5.0);
    }

    #[test]
    fn config_json_partial_fields_use_defaults() {
        let c: SolverConfig = serde_json::from_str(r#"{"gamma": 0.9, "Gamma": 1.0, "norm": "l2"}"#).unwrap();
        assert_eq!(c.gamma, 0.9);
        assert_eq!(c.big_gamma, 1.0);
        assert_eq!(c.norm, Norm::L2);
        assert_eq!(c.k_max, 50);
    }
}
