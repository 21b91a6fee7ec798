//! Probe distributions and Bernoulli outcome sampling.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::gg::{make_cat_state, GGEffect};
use crate::photodetection::PhotoCountEffect;
use crate::symplectic::{random_channel, random_state, GaussianChannel, GeneralDyneEffect};

use super::hypothesis::move_gg;
use super::{probability, LearnObject, Probe, Readout};

/// Seed offset separating held-out probes from training probes.
pub const HELD_OUT_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    /// Identity channel, heterodyne effect at a random point.
    Heterodyne,
    /// Random channel, random general-dyne effect.
    GeneralDyne,
    /// Random channel, photon-count pattern effect.
    Photocount,
    /// Identity channel, displaced cat-shaped GG effect with fixed coefficients.
    GgFixedCoefficients,
    /// Random input state and heterodyne readout, for channel learning.
    ChannelProbe,
    /// Random input state and channel, for effect learning.
    EffectProbe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleDistribution {
    pub kind: SampleKind,
    /// Centre of random outcome points; empty means the origin.
    pub center: Vec<f64>,
    /// Standard deviation of outcome points around the centre.
    pub spread: f64,
    /// Energy bound handed to random states and channels.
    pub energy: f64,
    /// Largest photon number per mode for photon-count effects.
    pub cutoff: usize,
    pub seed: u64,
}

impl Default for SampleDistribution {
    fn default() -> Self {
        Self { kind: SampleKind::Heterodyne, center: vec![], spread: 1.0, energy: 1.0, cutoff: 4, seed: 0 }
    }
}

impl SampleDistribution {
    pub fn heterodyne(spread: f64, seed: u64) -> Self {
        Self { spread, seed, ..Default::default() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// The same distribution on an independent random stream.
    pub fn held_out(&self) -> Self {
        self.with_seed(self.seed ^ HELD_OUT_STREAM)
    }

    fn point(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
        let d = 2 * n;
        if !self.center.is_empty() && self.center.len() != d {
            return Err(CvError::Shape(format!("centre has {} entries, expected {d}", self.center.len())));
        }
        Ok(DVector::from_fn(d, |i, _| {
            let c = self.center.get(i).copied().unwrap_or(0.0);
            c + self.spread * rng.sample::<f64, _>(StandardNormal)
        }))
    }

    /// Draw one probe for an unknown object on `n` modes.
    pub fn draw_probe(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Probe> {
        Ok(match self.kind {
            SampleKind::Heterodyne => Probe::ForState {
                channel: GaussianChannel::identity(n),
                readout: Readout::Dyne(GeneralDyneEffect::heterodyne(self.point(n, rng)?)),
            },
            SampleKind::GeneralDyne => {
                let channel = random_channel(n, self.energy, rng);
                let shape = random_state(n, self.energy, 0.0, rng);
                let outcome = self.point(n, rng)?;
                Probe::ForState { channel, readout: Readout::Dyne(GeneralDyneEffect { outcome, cov: shape.cov }) }
            }
            SampleKind::Photocount => {
                let channel = random_channel(n, self.energy, rng);
                let k = (0..n).map(|_| rng.random_range(0..=self.cutoff)).collect();
                Probe::ForState { channel, readout: Readout::Photocount(PhotoCountEffect::single(k)) }
            }
            SampleKind::GgFixedCoefficients => {
                let template = gg_effect_template(n)?;
                let d = self.point(n, rng)?;
                let moved = move_gg(&template.as_state(), &nalgebra::DMatrix::identity(2 * n, 2 * n), &d);
                Probe::ForState { channel: GaussianChannel::identity(n), readout: Readout::Gg(moved.as_effect()) }
            }
            SampleKind::ChannelProbe => {
                let state = random_state(n, self.energy, self.spread, rng);
                let readout = Readout::Dyne(GeneralDyneEffect::heterodyne(self.point(n, rng)?));
                Probe::ForChannel { state, readout }
            }
            SampleKind::EffectProbe => {
                let state = random_state(n, self.energy, self.spread, rng);
                let channel = random_channel(n, self.energy, rng);
                Probe::ForEffect { state, channel }
            }
        })
    }

    pub fn draw_probes(&self, n: usize, count: usize) -> Result<Vec<Probe>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..count).map(|_| self.draw_probe(n, &mut rng)).collect()
    }
}

/// Projector on the even cat with `α = 1`. Single-mode only.
pub fn gg_effect_template(n: usize) -> Result<GGEffect> {
    if n != 1 {
        return Err(CvError::Unsupported("GG probe template is single-mode".into()));
    }
    Ok(make_cat_state(num_complex::Complex64::new(1.0, 0.0), 1)?.as_effect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub probe: Probe,
    pub outcome: u8,
}

/// `T` i.i.d. probes with outcomes `b ~ Bernoulli(P(target, probe))`.
pub fn draw_training_set(target: &LearnObject, dist: &SampleDistribution, t: usize) -> Result<Vec<TrainingSample>> {
    if t == 0 {
        return Err(CvError::InvalidParameter("training set size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(dist.seed);
    let n = target.n();
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        let probe = dist.draw_probe(n, &mut rng)?;
        let p = checked(probability(target, &probe)?)?;
        let outcome = u8::from(rng.random::<f64>() < p);
        out.push(TrainingSample { probe, outcome });
    }
    Ok(out)
}

/// Reject probabilities outside `[0, 1]` by more than `1e-9`, clamp the rest.
pub fn checked(p: f64) -> Result<f64> {
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(CvError::Probability(p));
    }
    Ok(p.clamp(0.0, 1.0))
}
