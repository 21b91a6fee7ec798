//! Declarative descriptions of states, channels and effects used by configs
//! and subcommands.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use cvlearn_core::gg::{make_cat_state, make_fock_approx, make_gkp_state};
use cvlearn_core::io::matrix_from_rows;
use cvlearn_core::learner::{LearnObject, Probe, Readout};
use cvlearn_core::photodetection::PhotoCountEffect;
use cvlearn_core::{Complex64, DVector, GaussianChannel, GaussianState, GeneralDyneEffect};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Vacuum { n: usize },
    Coherent { re: Vec<f64>, im: Vec<f64> },
    Thermal { nbar: Vec<f64> },
    Squeezed { r: f64, #[serde(default)] phi: f64 },
    Moments { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    Cat { alpha: f64, #[serde(default = "plus")] sign: i32 },
    Gkp { eps: f64, lattice: usize },
    FockApprox { photons: usize, r: f64 },
    /// A serialized object written by `make`.
    File { path: PathBuf },
}

fn plus() -> i32 {
    1
}

impl StateSpec {
    pub fn build(&self) -> Result<LearnObject> {
        Ok(match self {
            StateSpec::Vacuum { n } => {
                if *n == 0 {
                    bail!("vacuum needs n ≥ 1");
                }
                LearnObject::State(GaussianState::vacuum(*n))
            }
            StateSpec::Coherent { re, im } => {
                if re.len() != im.len() || re.is_empty() {
                    bail!("coherent amplitudes need matching non-empty re and im");
                }
                let a: Vec<Complex64> = re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect();
                LearnObject::State(GaussianState::coherent(&a))
            }
            StateSpec::Thermal { nbar } => LearnObject::State(GaussianState::thermal(nbar)),
            StateSpec::Squeezed { r, phi } => LearnObject::State(GaussianState::squeezed_vacuum(*r, *phi)),
            StateSpec::Moments { mean, cov } => {
                LearnObject::State(GaussianState::new(DVector::from_vec(mean.clone()), matrix_from_rows(cov)?)?)
            }
            StateSpec::Cat { alpha, sign } => LearnObject::GgState(make_cat_state(Complex64::new(*alpha, 0.0), *sign)?),
            StateSpec::Gkp { eps, lattice } => LearnObject::GgState(make_gkp_state(*eps, *lattice)?),
            StateSpec::FockApprox { photons, r } => LearnObject::GgState(make_fock_approx(*photons, *r)?),
            StateSpec::File { path } => read_object(path)?,
        })
    }
}

pub fn read_object(path: &std::path::Path) -> Result<LearnObject> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelSpec {
    Identity { n: usize },
    PureLoss { n: usize, eta: f64 },
    ThermalLoss { n: usize, eta: f64, nbar: f64 },
    Amplifier { n: usize, gain: f64 },
    Displacement { d: Vec<f64> },
    Matrices { d: Vec<f64>, x: Vec<Vec<f64>>, y: Vec<Vec<f64>> },
}

impl ChannelSpec {
    pub fn build(&self) -> Result<GaussianChannel> {
        Ok(match self {
            ChannelSpec::Identity { n } => GaussianChannel::identity(*n),
            ChannelSpec::PureLoss { n, eta } => GaussianChannel::pure_loss(*n, *eta),
            ChannelSpec::ThermalLoss { n, eta, nbar } => GaussianChannel::thermal_loss(*n, *eta, *nbar),
            ChannelSpec::Amplifier { n, gain } => GaussianChannel::amplifier(*n, *gain),
            ChannelSpec::Displacement { d } => {
                if d.is_empty() || d.len() % 2 != 0 {
                    bail!("displacement needs an even, non-empty vector");
                }
                GaussianChannel::displacement(DVector::from_vec(d.clone()))
            }
            ChannelSpec::Matrices { d, x, y } => {
                GaussianChannel::new(DVector::from_vec(d.clone()), matrix_from_rows(x)?, matrix_from_rows(y)?)?
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EffectSpec {
    Heterodyne { outcome: Vec<f64> },
    Dyne { outcome: Vec<f64>, cov: Vec<Vec<f64>> },
    Photocount { pattern: Vec<usize> },
}

impl EffectSpec {
    pub fn readout(&self) -> Result<Readout> {
        Ok(match self {
            EffectSpec::Heterodyne { outcome } => {
                Readout::Dyne(GeneralDyneEffect::heterodyne(DVector::from_vec(outcome.clone())))
            }
            EffectSpec::Dyne { outcome, cov } => {
                Readout::Dyne(GeneralDyneEffect { outcome: DVector::from_vec(outcome.clone()), cov: matrix_from_rows(cov)? })
            }
            EffectSpec::Photocount { pattern } => Readout::Photocount(PhotoCountEffect::single(pattern.clone())),
        })
    }
}

/// One `(state, channel, effect)` circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub state: StateSpec,
    pub channel: ChannelSpec,
    pub effect: EffectSpec,
}

impl CircuitSpec {
    pub fn probability(&self) -> Result<f64> {
        let obj = self.state.build()?;
        let probe = Probe::ForState { channel: self.channel.build()?, readout: self.effect.readout()? };
        Ok(cvlearn_core::learner::probability(&obj, &probe)?)
    }
}
