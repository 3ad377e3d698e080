//! JSON report schemas emitted by the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{JeepError, Result};
use crate::pipeline::{Attacker, Estimator, PipelineConfig, PipelineOutput};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PdPoint {
    pub pfa: f64,
    pub pd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChangeCounts {
    pub plus: u64,
    pub minus: u64,
}

/// Report of one embedding run; records everything needed to reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EmbedReport {
    pub qf: u32,
    pub alpha_bpnzac: f64,
    pub estimator: String,
    pub attacker: String,
    pub lambda: f64,
    pub kl_nats: f64,
    pub kl_bits: f64,
    pub delta: f64,
    pub rho: f64,
    pub sanov_bound: f64,
    pub pd: Vec<PdPoint>,
    pub changes: ChangeCounts,
    pub lemma1_violations: u64,
    pub seed: u64,
}

impl EmbedReport {
    pub fn from_output(cfg: &PipelineConfig, out: &PipelineOutput) -> Self {
        let d = &out.diagnostics;
        Self {
            qf: cfg.qf,
            alpha_bpnzac: cfg.alpha,
            estimator: estimator_name(&cfg.estimator),
            attacker: attacker_name(cfg.attacker),
            lambda: d.lambda,
            kl_nats: d.kl_exact_nats,
            kl_bits: d.kl_exact_nats / std::f64::consts::LN_2,
            delta: d.delta,
            rho: d.rho,
            sanov_bound: d.sanov_bound,
            pd: d.pd.iter().map(|&(pfa, pd)| PdPoint { pfa, pd }).collect(),
            changes: ChangeCounts {
                plus: out.result.plus_changes,
                minus: out.result.minus_changes,
            },
            lemma1_violations: out.result.lemma1_violations as u64,
            seed: cfg.seed,
        }
    }

    /// Every numeric field must be finite.
    pub fn validate(&self) -> Result<()> {
        let mut values = vec![
            self.alpha_bpnzac,
            self.lambda,
            self.kl_nats,
            self.kl_bits,
            self.delta,
            self.rho,
            self.sanov_bound,
        ];
        for p in &self.pd {
            values.push(p.pfa);
            values.push(p.pd);
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(JeepError::Format(format!(
                "report contains a non-finite value {bad}"
            )));
        }
        Ok(())
    }
}

pub fn estimator_name(e: &Estimator) -> String {
    match e {
        Estimator::Mipod(_) => "mipod".into(),
        Estimator::Constant(_) => "const".into(),
    }
}

pub fn attacker_name(a: Attacker) -> String {
    match a {
        Attacker::Realistic => "realistic".into(),
        Attacker::Omniscient => "omniscient".into(),
    }
}

/// Eve-side report of the `analyze` command.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnalysisReport {
    pub delta: f64,
    pub rho: f64,
    pub kl_nats: f64,
    pub kl_bits: f64,
    pub sanov_bound: f64,
    pub pd: Vec<PdPoint>,
    pub changes: ChangeCounts,
    /// Empirical payload estimate from the per-mode change rates, in bpnzAC.
    pub alpha_hat_bpnzac: f64,
}

/// Report of the `rates` command.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RatesReport {
    pub qf: u32,
    pub alpha_bpnzac: f64,
    pub estimator: String,
    pub attacker: String,
    pub lambda: f64,
    pub kl_taylor_nats: f64,
    pub target_payload_bits: f64,
    pub achieved_payload_bits: f64,
    pub wet_coefficients: u64,
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| JeepError::Format(e.to_string()))
}
