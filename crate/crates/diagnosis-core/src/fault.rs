//! Persistent sensor faults: corruption, its preimage, and compilation of
//! a healthy outcome table into a full diagnosis model.
//!
//! A *mode* fixes one behaviour per sensor for the whole episode. A healthy
//! sensor reports the true reading; a flipped sensor reports the opposite
//! end of the reading scale (`y ↦ alphabet−1−y`, the usual inversion for
//! binary sensors); a stuck sensor reports a constant symbol regardless of
//! the truth. Corruption acts componentwise on the healthy reading vector,
//! `y_obs = κ_q(μ̄(v, x))`, so consistency factors through the healthy
//! model: a state is compatible with an observed vector exactly when its
//! healthy reading lies in the preimage `κ_q^{-1}(y_obs)`,
//!
//! ```text
//! D(y, v, q) = ∪_{y' ∈ κ_q^{-1}(y)} D̄(y', v).
//! ```
//!
//! The preimage is a componentwise product: a healthy component pins its
//! coordinate, a flipped one pins the inverted symbol, and a stuck-at-`c`
//! component contributes the whole alphabet when the observation shows `c`
//! — and the empty set otherwise, killing the product.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bitset::StateSet;
use crate::error::{DiagnosisError, Result};
use crate::model::DiagnosisModel;
use crate::TOLERANCE;

/// Hard cap on enumerated products (modes, preimages, outcome alphabets).
pub const MAX_ENUMERATION: usize = 1 << 20;

/// A way a single sensor can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    /// Reports the opposite end of the reading scale: `y ↦ alphabet−1−y`.
    Flip,
    /// Reports the constant symbol regardless of the true reading.
    StuckAt(u8),
}

/// Per-episode behaviour of a single sensor inside a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorBehavior {
    Healthy,
    Fault(FaultKind),
}

/// One global fault mode: a behaviour for every sensor, fixed for the
/// whole episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorMode {
    pub behaviors: Vec<SensorBehavior>,
}

impl SensorMode {
    /// All-healthy mode over `n` sensors.
    pub fn healthy(n: usize) -> Self {
        SensorMode {
            behaviors: alloc::vec![SensorBehavior::Healthy; n],
        }
    }

    /// Compact id: one character per sensor — `H`ealthy, `F`lip, or the
    /// stuck symbol's digit.
    pub fn id(&self) -> String {
        self.behaviors
            .iter()
            .map(|b| match b {
                SensorBehavior::Healthy => 'H',
                SensorBehavior::Fault(FaultKind::Flip) => 'F',
                SensorBehavior::Fault(FaultKind::StuckAt(c)) => (b'0' + c) as char,
            })
            .collect()
    }
}

/// Prior probability of one fault kind, optionally depending on the true
/// state (a component may be likelier to drag its sensor down when it is
/// itself faulty).
#[derive(Debug, Clone, PartialEq)]
pub enum KindPrior {
    /// One probability for every state.
    Shared(f64),
    /// One probability per state, indexed like the model's state list.
    PerState(Vec<f64>),
}

impl KindPrior {
    fn get(&self, state: usize) -> f64 {
        match self {
            KindPrior::Shared(p) => *p,
            KindPrior::PerState(v) => v[state],
        }
    }
}

/// Admissible fault kinds of one sensor, with their priors.
///
/// An empty kind list means the sensor is trusted (healthy in every mode).
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFaults {
    pub kinds: Vec<(FaultKind, KindPrior)>,
}

impl SensorFaults {
    pub fn trusted() -> Self {
        SensorFaults { kinds: Vec::new() }
    }
}

/// Fault structure of the whole sensor bank.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultSpec {
    /// Number of symbols a sensor can report (2 for proper/improper).
    pub alphabet: u8,
    /// One entry per sensor, in sensor order.
    pub sensors: Vec<SensorFaults>,
}

impl FaultSpec {
    /// Structural validation: alphabet range, stuck symbols inside the
    /// alphabet, no duplicate kinds, shared priors in range.
    /// (Per-state priors are checked against the state count when the
    /// joint prior is built.)
    pub fn validate(&self) -> Result<()> {
        if !(2..=9).contains(&self.alphabet) {
            return Err(DiagnosisError::InvalidFaultSpec(alloc::format!(
                "alphabet {} not in 2..=9",
                self.alphabet
            )));
        }
        if self.sensors.is_empty() {
            return Err(DiagnosisError::InvalidFaultSpec(
                "no sensors declared".into(),
            ));
        }
        for (i, sensor) in self.sensors.iter().enumerate() {
            for (j, (kind, prior)) in sensor.kinds.iter().enumerate() {
                if let FaultKind::StuckAt(c) = kind {
                    if *c >= self.alphabet {
                        return Err(DiagnosisError::InvalidFaultSpec(alloc::format!(
                            "sensor {i}: stuck symbol {c} outside alphabet {}",
                            self.alphabet
                        )));
                    }
                }
                if sensor.kinds[..j].iter().any(|(k, _)| k == kind) {
                    return Err(DiagnosisError::InvalidFaultSpec(alloc::format!(
                        "sensor {i}: duplicate fault kind"
                    )));
                }
                if let KindPrior::Shared(p) = prior {
                    if !p.is_finite() || *p < 0.0 || *p > 1.0 {
                        return Err(DiagnosisError::InvalidFaultSpec(alloc::format!(
                            "sensor {i}: fault probability {p} not in [0, 1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `|Q| = Π_i (1 + #kinds_i)` without enumerating.
    pub fn mode_count(&self) -> usize {
        self.sensors
            .iter()
            .fold(1usize, |n, s| n.saturating_mul(1 + s.kinds.len()))
    }
}

/// Enumerate every mode in lexicographic order: healthy sorts before the
/// declared kinds, and the first sensor varies slowest. The all-healthy
/// mode is therefore always index 0.
pub fn enumerate_modes(spec: &FaultSpec) -> Result<Vec<SensorMode>> {
    spec.validate()?;
    let count = spec.mode_count();
    if count > MAX_ENUMERATION {
        return Err(DiagnosisError::TooLarge(alloc::format!(
            "{count} modes exceeds the {MAX_ENUMERATION} cap"
        )));
    }
    let options: Vec<Vec<SensorBehavior>> = spec
        .sensors
        .iter()
        .map(|s| {
            core::iter::once(SensorBehavior::Healthy)
                .chain(s.kinds.iter().map(|(k, _)| SensorBehavior::Fault(*k)))
                .collect()
        })
        .collect();
    let mut modes = Vec::with_capacity(count);
    let mut stack = alloc::vec![0usize; spec.sensors.len()];
    loop {
        modes.push(SensorMode {
            behaviors: stack
                .iter()
                .zip(&options)
                .map(|(&i, opts)| opts[i])
                .collect(),
        });
        // Odometer increment, last sensor fastest.
        let mut pos = stack.len();
        loop {
            if pos == 0 {
                return Ok(modes);
            }
            pos -= 1;
            stack[pos] += 1;
            if stack[pos] < options[pos].len() {
                break;
            }
            stack[pos] = 0;
        }
    }
}

fn check_reading(reading: &[u8], sensors: usize, alphabet: u8, what: &str) -> Result<()> {
    if reading.len() != sensors {
        return Err(DiagnosisError::OutOfRange(alloc::format!(
            "{what} has {} components, expected {sensors}",
            reading.len()
        )));
    }
    if let Some(&c) = reading.iter().find(|&&c| c >= alphabet) {
        return Err(DiagnosisError::OutOfRange(alloc::format!(
            "{what} symbol {c} outside alphabet {alphabet}"
        )));
    }
    Ok(())
}

/// Apply a mode's corruption to a healthy reading vector:
/// `y_obs = κ_q(reading)`.
pub fn corrupt(mode: &SensorMode, reading: &[u8], alphabet: u8) -> Result<Vec<u8>> {
    check_reading(reading, mode.behaviors.len(), alphabet, "reading")?;
    Ok(mode
        .behaviors
        .iter()
        .zip(reading)
        .map(|(b, &y)| match b {
            SensorBehavior::Healthy => y,
            SensorBehavior::Fault(FaultKind::Flip) => alphabet - 1 - y,
            SensorBehavior::Fault(FaultKind::StuckAt(c)) => *c,
        })
        .collect())
}

/// All healthy readings a mode could have turned into `observed`:
/// `κ_q^{-1}(observed)`, in lexicographic order. Empty when any stuck
/// sensor shows a symbol other than its stuck value.
pub fn preimage(mode: &SensorMode, observed: &[u8], alphabet: u8) -> Result<Vec<Vec<u8>>> {
    check_reading(observed, mode.behaviors.len(), alphabet, "observation")?;
    let mut per_sensor: Vec<Vec<u8>> = Vec::with_capacity(observed.len());
    let mut total = 1usize;
    for (b, &y) in mode.behaviors.iter().zip(observed) {
        let candidates = match b {
            SensorBehavior::Healthy => alloc::vec![y],
            SensorBehavior::Fault(FaultKind::Flip) => alloc::vec![alphabet - 1 - y],
            SensorBehavior::Fault(FaultKind::StuckAt(c)) => {
                if y == *c {
                    (0..alphabet).collect()
                } else {
                    return Ok(Vec::new());
                }
            }
        };
        total = total.saturating_mul(candidates.len());
        per_sensor.push(candidates);
    }
    if total > MAX_ENUMERATION {
        return Err(DiagnosisError::TooLarge(alloc::format!(
            "preimage with {total} members exceeds the {MAX_ENUMERATION} cap"
        )));
    }
    let mut out = Vec::with_capacity(total);
    let mut stack = alloc::vec![0usize; per_sensor.len()];
    loop {
        out.push(
            stack
                .iter()
                .zip(&per_sensor)
                .map(|(&i, c)| c[i])
                .collect::<Vec<u8>>(),
        );
        let mut pos = stack.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            stack[pos] += 1;
            if stack[pos] < per_sensor[pos].len() {
                break;
            }
            stack[pos] = 0;
        }
    }
}

/// Compatible states under a faulty mode, built from the *healthy* model's
/// outcome partition for one action: `∪_{y' ∈ κ_q^{-1}(y)} D̄(y', v)`.
///
/// `healthy_by_outcome` maps each healthy reading vector of the action to
/// the states producing it; vectors absent from the map have no producing
/// states. This is the inverse route to the same sets the compiled model
/// stores — kept separate so the two can be cross-checked.
pub fn faulty_compatible_states(
    healthy_by_outcome: &BTreeMap<Vec<u8>, StateSet>,
    mode: &SensorMode,
    observed: &[u8],
    alphabet: u8,
    n_states: usize,
) -> Result<StateSet> {
    let mut out = StateSet::empty(n_states);
    for y in preimage(mode, observed, alphabet)? {
        if let Some(states) = healthy_by_outcome.get(&y) {
            out.union_with(states);
        }
    }
    Ok(out)
}

/// The healthy (fault-free) outcome table `μ̄(v, x)`: one reading vector
/// per action and state.
#[derive(Debug, Clone, PartialEq)]
pub struct HealthyTable {
    pub action_ids: Vec<String>,
    pub state_ids: Vec<String>,
    pub sensor_count: usize,
    pub alphabet: u8,
    /// Reading vectors laid out `[v * n_states + x]`.
    pub readings: Vec<Vec<u8>>,
}

impl HealthyTable {
    pub fn validate(&self) -> Result<()> {
        if self.action_ids.is_empty() || self.state_ids.is_empty() {
            return Err(DiagnosisError::InvalidModel(
                "healthy table needs at least one action and one state".into(),
            ));
        }
        if self.sensor_count == 0 {
            return Err(DiagnosisError::InvalidModel(
                "healthy table has no sensors".into(),
            ));
        }
        let expected = self.action_ids.len() * self.state_ids.len();
        if self.readings.len() != expected {
            return Err(DiagnosisError::InvalidModel(alloc::format!(
                "healthy table has {} readings, expected {expected}",
                self.readings.len()
            )));
        }
        for r in &self.readings {
            check_reading(r, self.sensor_count, self.alphabet, "healthy reading")?;
        }
        Ok(())
    }

    pub fn reading(&self, action: usize, state: usize) -> &[u8] {
        &self.readings[action * self.state_ids.len() + state]
    }
}

/// A compiled model together with the mode list that indexes its mode axis.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub model: DiagnosisModel,
    pub modes: Vec<SensorMode>,
}

/// Joint prior `P[x, q] = P[x] · Π_i P[behaviour_i | x]` in
/// `[x * n_modes + q]` layout.
///
/// Sensor behaviours are independent given the state; each sensor's
/// healthy probability is one minus its fault-kind total (which must not
/// exceed 1 beyond [`TOLERANCE`]; tiny negatives are clamped to zero).
pub fn build_joint_prior(
    state_prior: &[f64],
    spec: &FaultSpec,
    modes: &[SensorMode],
) -> Result<Vec<f64>> {
    let n_states = state_prior.len();
    let mut total = 0.0;
    for (x, &p) in state_prior.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(DiagnosisError::InvalidPrior(alloc::format!(
                "state prior entry {x} is {p}"
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > TOLERANCE {
        return Err(DiagnosisError::InvalidPrior(alloc::format!(
            "state prior sums to {total}, expected 1"
        )));
    }
    for (i, sensor) in spec.sensors.iter().enumerate() {
        for (_, prior) in &sensor.kinds {
            if let KindPrior::PerState(v) = prior {
                if v.len() != n_states {
                    return Err(DiagnosisError::InvalidFaultSpec(alloc::format!(
                        "sensor {i}: per-state prior has {} entries, expected {n_states}",
                        v.len()
                    )));
                }
                if let Some(&p) = v.iter().find(|&&p| !p.is_finite() || !(0.0..=1.0).contains(&p)) {
                    return Err(DiagnosisError::InvalidFaultSpec(alloc::format!(
                        "sensor {i}: per-state fault probability {p} not in [0, 1]"
                    )));
                }
            }
        }
    }

    let mut joint = alloc::vec![0.0; n_states * modes.len()];
    for x in 0..n_states {
        // Behaviour distribution of each sensor for this state.
        let mut healthy_prob = Vec::with_capacity(spec.sensors.len());
        for (i, sensor) in spec.sensors.iter().enumerate() {
            let fault_total: f64 = sensor.kinds.iter().map(|(_, p)| p.get(x)).sum();
            if fault_total > 1.0 + TOLERANCE {
                return Err(DiagnosisError::InvalidFaultSpec(alloc::format!(
                    "sensor {i}: fault probabilities sum to {fault_total} for state {x}"
                )));
            }
            healthy_prob.push((1.0 - fault_total).max(0.0));
        }
        for (q, mode) in modes.iter().enumerate() {
            let mut p = state_prior[x];
            for (i, behavior) in mode.behaviors.iter().enumerate() {
                p *= match behavior {
                    SensorBehavior::Healthy => healthy_prob[i],
                    SensorBehavior::Fault(kind) => {
                        let (_, prior) = spec.sensors[i]
                            .kinds
                            .iter()
                            .find(|(k, _)| k == kind)
                            .expect("mode enumerates declared kinds only");
                        prior.get(x)
                    }
                };
            }
            joint[x * modes.len() + q] = p;
        }
    }
    Ok(joint)
}

/// Compile a healthy table plus a fault spec into a full diagnosis model:
/// enumerate modes, corrupt every healthy reading under every mode, and
/// attach the joint prior. The outcome axis is the *full* reading-vector
/// alphabet (`alphabet^sensors` entries, lexicographic), reachable or not.
pub fn compile_model(
    healthy: &HealthyTable,
    spec: &FaultSpec,
    state_prior: &[f64],
) -> Result<CompiledModel> {
    healthy.validate()?;
    if spec.sensors.len() != healthy.sensor_count {
        return Err(DiagnosisError::InvalidFaultSpec(alloc::format!(
            "fault spec covers {} sensors, healthy table has {}",
            spec.sensors.len(),
            healthy.sensor_count
        )));
    }
    if spec.alphabet != healthy.alphabet {
        return Err(DiagnosisError::InvalidFaultSpec(alloc::format!(
            "fault spec alphabet {} != healthy table alphabet {}",
            spec.alphabet,
            healthy.alphabet
        )));
    }
    if state_prior.len() != healthy.state_ids.len() {
        return Err(DiagnosisError::InvalidPrior(alloc::format!(
            "state prior has {} entries, healthy table has {} states",
            state_prior.len(),
            healthy.state_ids.len()
        )));
    }
    let modes = enumerate_modes(spec)?;

    let outcome_count = (spec.alphabet as usize)
        .checked_pow(healthy.sensor_count as u32)
        .filter(|&n| n <= MAX_ENUMERATION)
        .ok_or_else(|| {
            DiagnosisError::TooLarge(alloc::format!(
                "outcome alphabet {}^{} exceeds the {MAX_ENUMERATION} cap",
                spec.alphabet,
                healthy.sensor_count
            ))
        })?;
    let outcome_ids: Vec<String> = (0..outcome_count)
        .map(|mut i| {
            let mut digits = alloc::vec![0u8; healthy.sensor_count];
            for d in digits.iter_mut().rev() {
                *d = (i % spec.alphabet as usize) as u8;
                i /= spec.alphabet as usize;
            }
            digits.iter().map(|&d| (b'0' + d) as char).collect()
        })
        .collect();
    let vec_to_index = |digits: &[u8]| -> u32 {
        digits
            .iter()
            .fold(0u32, |acc, &d| acc * spec.alphabet as u32 + d as u32)
    };

    let (nv, nx, nq) = (healthy.action_ids.len(), healthy.state_ids.len(), modes.len());
    let mut table = alloc::vec![0u32; nv * nx * nq];
    for v in 0..nv {
        for x in 0..nx {
            let reading = healthy.reading(v, x);
            for (q, mode) in modes.iter().enumerate() {
                let observed = corrupt(mode, reading, spec.alphabet)?;
                table[(v * nx + x) * nq + q] = vec_to_index(&observed);
            }
        }
    }

    let joint = build_joint_prior(state_prior, spec, &modes)?;
    let mode_ids = modes.iter().map(|m| m.id()).collect();
    let model = DiagnosisModel::new(
        healthy.state_ids.clone(),
        mode_ids,
        healthy.action_ids.clone(),
        outcome_ids,
        joint,
        table,
    )?;
    Ok(CompiledModel { model, modes })
}
