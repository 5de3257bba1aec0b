//! Scenario file schema. Complex numbers are `[re, im]` pairs and matrices are
//! lists of rows; angles are radians.

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type Cx = [f64; 2];
pub type MatrixLit = Vec<Vec<Cx>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    WeakValue,
    ChannelWeakValue,
    ProbeShift,
    ProbeShiftExact,
    AveragedShift,
    GeometricPhase,
    BitflipSweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::WeakValue => "weak-value",
            Kind::ChannelWeakValue => "channel-weak-value",
            Kind::ProbeShift => "probe-shift",
            Kind::ProbeShiftExact => "probe-shift-exact",
            Kind::AveragedShift => "averaged-shift",
            Kind::GeometricPhase => "geometric-phase",
            Kind::BitflipSweep => "bitflip-sweep",
        }
    }

    pub fn uses_coupling(self) -> bool {
        matches!(
            self,
            Kind::ProbeShift | Kind::ProbeShiftExact | Kind::AveragedShift
        )
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<States>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<EnsembleEntrySpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `|ĩ⟩ = (|0⟩ − |1⟩)/√2`, `|f̃⟩ = (|0⟩ − e^{−iφ}|1⟩)/√2`, `|P⟩ = |0⟩`.
    PaperQubitPath,
}

/// Either a preset (with its angle) or explicit amplitude lists. Explicit
/// states are normalized on load.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct States {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre: Option<Vec<Cx>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post: Option<Vec<Cx>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediate: Option<Vec<Cx>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
pub enum NamedObservable {
    X,
    Y,
    Z,
    P0,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Named(NamedObservable),
    Matrix(MatrixLit),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelSpec {
    Bitflip {
        p: f64,
    },
    Kraus {
        pairs: Vec<KrausPairSpec>,
    },
    Dilation {
        dim_s: usize,
        dim_e: usize,
        u: MatrixLit,
        v: MatrixLit,
        e_i: Vec<Cx>,
        e_f: Vec<Cx>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        env_basis: Option<Vec<Vec<Cx>>>,
    },
}

/// `f` defaults to `e`, i.e. an ordinary density-matrix Kraus operator.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KrausPairSpec {
    pub e: MatrixLit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<MatrixLit>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleEntrySpec {
    pub e_i: Vec<Cx>,
    pub e_f: Vec<Cx>,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    P,
    Phi,
    G,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Sweep {
    /// Evenly spaced values, endpoints included exactly.
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => vec![],
            1 => vec![self.start],
            n => (0..n)
                .map(|k| {
                    if k + 1 == n {
                        self.stop
                    } else {
                        self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

/// Parses a scenario, reporting schema errors with the offending field path.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{path}: {}", e.into_inner()))
    })
}

/// The scenario behind `demo bitflip`: the qubit path at φ = π/2 under a
/// bit flip with p from 0 to 1 in 11 steps.
pub fn demo_bitflip() -> ScenarioConfig {
    ScenarioConfig {
        kind: Kind::BitflipSweep,
        states: Some(States {
            preset: Some(Preset::PaperQubitPath),
            phi: Some(std::f64::consts::FRAC_PI_2),
            ..States::default()
        }),
        observable: None,
        channel: None,
        coupling: None,
        probe_width: None,
        ensemble: None,
        sweep: Some(Sweep {
            parameter: SweepParameter::P,
            start: 0.0,
            stop: 1.0,
            steps: 11,
        }),
    }
}
