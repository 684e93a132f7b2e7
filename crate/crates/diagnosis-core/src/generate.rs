//! Seeded random problem instances for oracle cross-checks, property
//! sweeps, and guarantee verification.
//!
//! Instances are built the same way real ones are: a random healthy
//! outcome table, a per-sensor fault structure, and a state prior,
//! compiled through [`crate::fault::compile_model`]. The family is
//! deliberately constrained so that the sampled instances exercise the
//! theory rather than its known blind spots:
//!
//! * at most one sensor carries fault kinds, keeping the mode count at
//!   `1 + #kinds ≤ 3`;
//! * the flip kind appears only alongside a second sensor — with a single
//!   binary sensor, healthy-or-flipped explains every reading of every
//!   action (`D(y,v,H) ∪ D(y,v,F) = X`), every first-step benefit is
//!   zero, and no finite submodularity factor exists;
//! * a single fault-prone sensor draws one stuck-at kind on one symbol
//!   only, for the same reason (stuck-at on both symbols together also
//!   explains everything);
//! * by default instances are resampled until some first action has
//!   strictly positive expected benefit, so budgeted-policy comparisons
//!   are not vacuous at step one.
//!
//! Generation is deterministic in the seed, so failures reproduce.

use alloc::string::String;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};

use crate::error::{DiagnosisError, Result};
use crate::fault::{
    compile_model, FaultKind, FaultSpec, HealthyTable, KindPrior, SensorFaults, SensorMode,
};
use crate::model::{BeliefState, DiagnosisModel};
use crate::policy::marginal_benefit;

/// The deterministic generator RNG, seedable from a plain integer.
pub type GeneratorRng = rand_chacha::ChaCha8Rng;

/// RNG for a given instance seed.
pub fn seeded_rng(seed: u64) -> GeneratorRng {
    GeneratorRng::seed_from_u64(seed)
}

/// Bounds and options for instance sampling. All ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub states: (usize, usize),
    pub sensors: (usize, usize),
    pub actions: (usize, usize),
    /// Largest admissible mode count (1 = fault-free instances only).
    pub max_mode_count: usize,
    /// Force `P[x, q] = P[x] / |Q|`: every mode equally likely per state.
    pub mode_uniform_prior: bool,
    /// Force the uniform state prior instead of random weights.
    pub uniform_state_prior: bool,
    /// Resample until some action has positive first-step benefit.
    pub require_informative_start: bool,
    /// Resampling budget before giving up.
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            states: (2, 6),
            sensors: (1, 2),
            actions: (2, 4),
            max_mode_count: 3,
            mode_uniform_prior: false,
            uniform_state_prior: false,
            require_informative_start: true,
            max_attempts: 500,
        }
    }
}

impl GeneratorConfig {
    /// Fault-free variant of the default family (`|Q| = 1`).
    pub fn healthy_only() -> Self {
        GeneratorConfig {
            max_mode_count: 1,
            ..GeneratorConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (usize, usize)| lo >= 1 && lo <= hi;
        if !ordered(self.states) || self.states.0 < 2 {
            return Err(DiagnosisError::OutOfRange(alloc::format!(
                "state range {:?} must satisfy 2 ≤ lo ≤ hi",
                self.states
            )));
        }
        if !ordered(self.sensors) || !ordered(self.actions) {
            return Err(DiagnosisError::OutOfRange(
                "sensor and action ranges must satisfy 1 ≤ lo ≤ hi".into(),
            ));
        }
        if !(1..=3).contains(&self.max_mode_count) {
            return Err(DiagnosisError::OutOfRange(alloc::format!(
                "mode count cap {} must be 1, 2, or 3",
                self.max_mode_count
            )));
        }
        if self.max_attempts == 0 {
            return Err(DiagnosisError::OutOfRange("zero sampling attempts".into()));
        }
        Ok(())
    }
}

/// A sampled instance, with the ingredients it was compiled from.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub healthy: HealthyTable,
    pub spec: FaultSpec,
    pub state_prior: Vec<f64>,
    pub model: DiagnosisModel,
    pub modes: Vec<SensorMode>,
}

fn pick(rng: &mut impl RngCore, lo: usize, hi: usize) -> usize {
    lo + (rng.next_u64() as usize) % (hi - lo + 1)
}

fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn in_range(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + unit(rng) * (hi - lo)
}

fn sample_once(rng: &mut impl RngCore, config: &GeneratorConfig) -> Result<GeneratedInstance> {
    let n_states = pick(rng, config.states.0, config.states.1);
    let n_sensors = pick(rng, config.sensors.0, config.sensors.1);
    let n_actions = pick(rng, config.actions.0, config.actions.1);

    // Fault structure: all kinds on one sensor; a lone sensor never gets
    // the flip kind or a second stuck symbol (see module docs).
    let mode_target = pick(rng, 1, config.max_mode_count);
    let kind_count = if n_sensors == 1 {
        (mode_target - 1).min(1)
    } else {
        mode_target - 1
    };
    let faulty_sensor = pick(rng, 0, n_sensors - 1);
    let kinds: Vec<FaultKind> = match kind_count {
        0 => Vec::new(),
        1 => {
            if n_sensors == 1 || unit(rng) < 0.5 {
                alloc::vec![FaultKind::StuckAt(pick(rng, 0, 1) as u8)]
            } else {
                alloc::vec![FaultKind::Flip]
            }
        }
        _ => alloc::vec![FaultKind::Flip, FaultKind::StuckAt(pick(rng, 0, 1) as u8)],
    };
    let kind_priors: Vec<(FaultKind, KindPrior)> = kinds
        .iter()
        .map(|&k| {
            let prior = if config.mode_uniform_prior {
                KindPrior::Shared(1.0 / (kinds.len() + 1) as f64)
            } else if unit(rng) < 0.3 {
                KindPrior::PerState(
                    (0..n_states)
                        .map(|_| in_range(rng, 0.05, 0.45 / kinds.len() as f64))
                        .collect(),
                )
            } else {
                KindPrior::Shared(in_range(rng, 0.05, 0.45 / kinds.len() as f64))
            };
            (k, prior)
        })
        .collect();
    let spec = FaultSpec {
        alphabet: 2,
        sensors: (0..n_sensors)
            .map(|i| {
                if i == faulty_sensor {
                    SensorFaults {
                        kinds: kind_priors.clone(),
                    }
                } else {
                    SensorFaults::trusted()
                }
            })
            .collect(),
    };

    let healthy = HealthyTable {
        action_ids: (0..n_actions).map(|v| alloc::format!("v{v}")).collect(),
        state_ids: (0..n_states).map(|x| alloc::format!("x{x}")).collect(),
        sensor_count: n_sensors,
        alphabet: 2,
        readings: (0..n_actions * n_states)
            .map(|_| (0..n_sensors).map(|_| pick(rng, 0, 1) as u8).collect())
            .collect(),
    };

    let state_prior: Vec<f64> = if config.uniform_state_prior {
        alloc::vec![1.0 / n_states as f64; n_states]
    } else {
        let weights: Vec<f64> = (0..n_states).map(|_| in_range(rng, 0.2, 1.0)).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    };

    let compiled = compile_model(&healthy, &spec, &state_prior)?;
    Ok(GeneratedInstance {
        healthy,
        spec,
        state_prior,
        model: compiled.model,
        modes: compiled.modes,
    })
}

/// Benefit threshold below which a first action counts as uninformative.
const INFORMATIVE_FLOOR: f64 = 1e-6;

fn has_informative_start(model: &DiagnosisModel) -> Result<bool> {
    let initial = BeliefState::initial(model);
    for v in 0..model.n_actions() {
        if marginal_benefit(model, &initial, v)? > INFORMATIVE_FLOOR {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Sample one instance from the configured family, resampling (up to the
/// attempt budget) until the informative-start requirement holds.
pub fn random_instance(
    rng: &mut impl RngCore,
    config: &GeneratorConfig,
) -> Result<GeneratedInstance> {
    config.validate()?;
    for _ in 0..config.max_attempts {
        let instance = sample_once(rng, config)?;
        if !config.require_informative_start || has_informative_start(&instance.model)? {
            return Ok(instance);
        }
    }
    Err(DiagnosisError::Degenerate(alloc::format!(
        "no instance with an informative first action in {} attempts",
        config.max_attempts
    )))
}

/// Convenience: the instance for a bare integer seed.
pub fn instance_for_seed(seed: u64, config: &GeneratorConfig) -> Result<GeneratedInstance> {
    random_instance(&mut seeded_rng(seed), config)
}

#[allow(dead_code)]
fn _ids_are_strings(instance: &GeneratedInstance) -> (&[String], &[String]) {
    (instance.model.state_ids(), instance.model.action_ids())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::swept_factors;
    use crate::fault::SensorBehavior;

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let config = GeneratorConfig::default();
        let a = instance_for_seed(42, &config).unwrap();
        let b = instance_for_seed(42, &config).unwrap();
        assert_eq!(a.healthy, b.healthy);
        assert_eq!(a.spec, b.spec);
        assert_eq!(a.state_prior, b.state_prior);
        assert_eq!(a.model.marginals(), b.model.marginals());
        let c = instance_for_seed(43, &config).unwrap();
        assert!(a.healthy != c.healthy || a.spec != c.spec || a.state_prior != c.state_prior);
    }

    #[test]
    fn family_bounds_hold_over_many_seeds() {
        let config = GeneratorConfig::default();
        for seed in 0..60 {
            let inst = instance_for_seed(seed, &config).unwrap();
            let m = &inst.model;
            assert!((2..=6).contains(&m.n_states()), "seed {seed}");
            assert!(m.n_modes() <= 3, "seed {seed}");
            assert!((2..=4).contains(&m.n_actions()), "seed {seed}");
            let sensors = inst.healthy.sensor_count;
            assert!((1..=2).contains(&sensors), "seed {seed}");
            // At most one fault-prone sensor; lone sensors never flip.
            let faulty: Vec<_> = inst
                .spec
                .sensors
                .iter()
                .filter(|s| !s.kinds.is_empty())
                .collect();
            assert!(faulty.len() <= 1, "seed {seed}");
            if sensors == 1 {
                for s in &faulty {
                    assert_eq!(s.kinds.len(), 1, "seed {seed}");
                    assert!(
                        matches!(s.kinds[0].0, FaultKind::StuckAt(_)),
                        "seed {seed}"
                    );
                }
            }
            // Mode 0 is always the all-healthy one.
            assert!(inst.modes[0]
                .behaviors
                .iter()
                .all(|b| *b == SensorBehavior::Healthy));
        }
    }

    #[test]
    fn informative_start_holds_when_required() {
        let config = GeneratorConfig::default();
        for seed in 0..30 {
            let inst = instance_for_seed(seed, &config).unwrap();
            assert!(
                has_informative_start(&inst.model).unwrap(),
                "seed {seed} produced a blind instance"
            );
        }
    }

    #[test]
    fn mode_uniform_prior_gives_exact_mode_split() {
        let config = GeneratorConfig {
            mode_uniform_prior: true,
            ..GeneratorConfig::default()
        };
        for seed in 0..20 {
            let inst = instance_for_seed(seed, &config).unwrap();
            let m = &inst.model;
            let nq = m.n_modes() as f64;
            for x in 0..m.n_states() {
                for q in 0..m.n_modes() {
                    assert!(
                        (m.prior(x, q) - m.marginal(x) / nq).abs() <= 1e-12,
                        "seed {seed} pair ({x}, {q})"
                    );
                }
            }
            // Under the mode-uniform prior the mode-summed swept factor
            // equals the mode count exactly.
            let swept = swept_factors(m, 2, 100_000).unwrap();
            assert!(
                (swept.zeta_bar - nq).abs() <= 1e-9,
                "seed {seed}: ζ̄ {} vs |Q| {nq}",
                swept.zeta_bar
            );
        }
    }

    #[test]
    fn healthy_only_family_has_one_mode() {
        let config = GeneratorConfig::healthy_only();
        for seed in 0..20 {
            let inst = instance_for_seed(seed, &config).unwrap();
            assert_eq!(inst.model.n_modes(), 1, "seed {seed}");
        }
    }
}
