//! The compiled diagnosis model and exact belief tracking.
//!
//! A model is a finite table world: states `X`, sensor-fault modes `Q`,
//! actions `V`, outcomes `Y`, a joint prior `P[x, q]`, and a total outcome
//! map `μ(v, x, q)`. Inference never leaves this table: the belief after
//! observations `ψ_t = ((v_1, y_1), …)` is one version space per mode
//!
//! ```text
//! S_{t,q} = ∩_i D(y_i, v_i, q),   D(y, v, q) = { x : μ(v, x, q) = y },
//! ```
//!
//! with realization mass `P[ψ_t] = Σ_q Σ_{x ∈ S_{t,q}} P[x, q]`, posterior
//! `P[x, q | ψ_t] = P[x, q] / P[ψ_t]` on the support, and reward
//! `f(ψ_t) = 1 − Σ_{x ∈ ∪_q S_{t,q}} P[x]` — the prior mass of states ruled
//! out under *every* surviving fault hypothesis.
//!
//! Updates are intersections, so beliefs depend only on the set of
//! (action, outcome) pairs, not their order, and repeating an observation
//! changes nothing. Pairs with zero prior are kept in every table: version
//! spaces track outcome-consistency alone, and the prior enters only
//! through the mass sums.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bitset::StateSet;
use crate::error::{DiagnosisError, Result};
use crate::TOLERANCE;

/// A fully-specified finite diagnosis problem.
///
/// Construction validates everything once; afterwards the model is
/// immutable and all hot-path structures (state marginals, per-mode prior
/// columns, compatible-state sets for every `(y, v, q)`) are precomputed.
#[derive(Debug, Clone)]
pub struct DiagnosisModel {
    states: Vec<String>,
    modes: Vec<String>,
    actions: Vec<String>,
    outcomes: Vec<String>,
    state_lookup: BTreeMap<String, usize>,
    mode_lookup: BTreeMap<String, usize>,
    action_lookup: BTreeMap<String, usize>,
    outcome_lookup: BTreeMap<String, usize>,
    /// `P[x, q]`, laid out `[x * n_modes + q]`.
    joint: Vec<f64>,
    /// The same prior laid out `[q * n_states + x]`, so each mode owns a
    /// contiguous weight slice for version-space mass sums.
    joint_by_mode: Vec<f64>,
    /// `P[x] = Σ_q P[x, q]`.
    marginal: Vec<f64>,
    /// `μ(v, x, q)` as an outcome index, laid out `[(v * n_states + x) * n_modes + q]`.
    table: Vec<u32>,
    /// `D(y, v, q)` for every combination, laid out `[(v * n_modes + q) * n_outcomes + y]`.
    dsets: Vec<StateSet>,
}

fn index_ids(kind: &str, ids: &[String]) -> Result<BTreeMap<String, usize>> {
    if ids.is_empty() {
        return Err(DiagnosisError::InvalidModel(alloc::format!(
            "{kind} list is empty"
        )));
    }
    let mut map = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        if id.is_empty() {
            return Err(DiagnosisError::InvalidModel(alloc::format!(
                "{kind} {i} has an empty id"
            )));
        }
        if map.insert(id.clone(), i).is_some() {
            return Err(DiagnosisError::InvalidModel(alloc::format!(
                "duplicate {kind} id {id:?}"
            )));
        }
    }
    Ok(map)
}

impl DiagnosisModel {
    /// Build and validate a model.
    ///
    /// `joint` is the prior `P[x, q]` in `[x * modes + q]` layout and must
    /// be non-negative and sum to 1 within [`TOLERANCE`]. Zero entries are
    /// legal and kept. `table` is the outcome index `μ(v, x, q)` in
    /// `[(v * states + x) * modes + q]` layout and must be total.
    pub fn new(
        states: Vec<String>,
        modes: Vec<String>,
        actions: Vec<String>,
        outcomes: Vec<String>,
        joint: Vec<f64>,
        table: Vec<u32>,
    ) -> Result<Self> {
        let state_lookup = index_ids("state", &states)?;
        let mode_lookup = index_ids("mode", &modes)?;
        let action_lookup = index_ids("action", &actions)?;
        let outcome_lookup = index_ids("outcome", &outcomes)?;

        let (nx, nq, nv, ny) = (states.len(), modes.len(), actions.len(), outcomes.len());
        if joint.len() != nx * nq {
            return Err(DiagnosisError::InvalidModel(alloc::format!(
                "prior has {} entries, expected {} states x {} modes = {}",
                joint.len(),
                nx,
                nq,
                nx * nq
            )));
        }
        let mut total = 0.0;
        for (i, &p) in joint.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(DiagnosisError::InvalidPrior(alloc::format!(
                    "prior entry for state {}, mode {} is {p}",
                    states[i / nq],
                    modes[i % nq]
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > TOLERANCE {
            return Err(DiagnosisError::InvalidPrior(alloc::format!(
                "prior sums to {total}, expected 1"
            )));
        }
        if table.len() != nv * nx * nq {
            return Err(DiagnosisError::InvalidModel(alloc::format!(
                "outcome table has {} entries, expected {}",
                table.len(),
                nv * nx * nq
            )));
        }
        for (i, &y) in table.iter().enumerate() {
            if y as usize >= ny {
                let q = i % nq;
                let x = (i / nq) % nx;
                let v = i / (nq * nx);
                return Err(DiagnosisError::InvalidModel(alloc::format!(
                    "outcome index {y} for action {}, state {}, mode {} is out of range",
                    actions[v],
                    states[x],
                    modes[q]
                )));
            }
        }

        let mut joint_by_mode = alloc::vec![0.0; nx * nq];
        let mut marginal = alloc::vec![0.0; nx];
        for x in 0..nx {
            for q in 0..nq {
                let p = joint[x * nq + q];
                joint_by_mode[q * nx + x] = p;
                marginal[x] += p;
            }
        }

        let mut dsets = alloc::vec![StateSet::empty(nx); nv * nq * ny];
        for v in 0..nv {
            for x in 0..nx {
                for q in 0..nq {
                    let y = table[(v * nx + x) * nq + q] as usize;
                    dsets[(v * nq + q) * ny + y].insert(x);
                }
            }
        }

        Ok(DiagnosisModel {
            states,
            modes,
            actions,
            outcomes,
            state_lookup,
            mode_lookup,
            action_lookup,
            outcome_lookup,
            joint,
            joint_by_mode,
            marginal,
            table,
            dsets,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }
    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }
    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn state_ids(&self) -> &[String] {
        &self.states
    }
    pub fn mode_ids(&self) -> &[String] {
        &self.modes
    }
    pub fn action_ids(&self) -> &[String] {
        &self.actions
    }
    pub fn outcome_ids(&self) -> &[String] {
        &self.outcomes
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.state_lookup.get(id).copied()
    }
    pub fn mode_index(&self, id: &str) -> Option<usize> {
        self.mode_lookup.get(id).copied()
    }
    pub fn action_index(&self, id: &str) -> Option<usize> {
        self.action_lookup.get(id).copied()
    }
    pub fn outcome_index(&self, id: &str) -> Option<usize> {
        self.outcome_lookup.get(id).copied()
    }

    /// Joint prior `P[x, q]`.
    pub fn prior(&self, state: usize, mode: usize) -> f64 {
        self.joint[state * self.modes.len() + mode]
    }

    /// State marginal `P[x]`.
    pub fn marginal(&self, state: usize) -> f64 {
        self.marginal[state]
    }

    /// All state marginals, indexed by state.
    pub fn marginals(&self) -> &[f64] {
        &self.marginal
    }

    /// The prior column of one mode, indexed by state: `P[·, q]`.
    pub fn mode_weights(&self, mode: usize) -> &[f64] {
        let nx = self.states.len();
        &self.joint_by_mode[mode * nx..(mode + 1) * nx]
    }

    /// Smallest strictly positive `P[x, q]`, if any entry is positive.
    pub fn min_positive_prior(&self) -> Option<f64> {
        self.joint
            .iter()
            .copied()
            .filter(|&p| p > 0.0)
            .fold(None, |acc, p| Some(acc.map_or(p, |a: f64| a.min(p))))
    }

    /// The deterministic outcome `μ(v, x, q)`.
    pub fn outcome(&self, action: usize, state: usize, mode: usize) -> usize {
        let (nx, nq) = (self.states.len(), self.modes.len());
        self.table[(action * nx + state) * nq + mode] as usize
    }

    /// The compatible-state set `D(y, v, q) = { x : μ(v, x, q) = y }`.
    ///
    /// For a fixed `(v, q)` these sets partition the state set over `y`.
    pub fn compatible_states(&self, outcome: usize, action: usize, mode: usize) -> &StateSet {
        let (nq, ny) = (self.modes.len(), self.outcomes.len());
        &self.dsets[(action * nq + mode) * ny + outcome]
    }

    /// Total prior mass (1 up to input rounding); the mass of the empty
    /// realization.
    pub fn total_prior(&self) -> f64 {
        self.joint.iter().sum()
    }
}

/// Posterior table `P[x, q | ψ_t]`, dense over (state, mode).
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    n_modes: usize,
    values: Vec<f64>,
}

impl PosteriorTable {
    pub fn get(&self, state: usize, mode: usize) -> f64 {
        self.values[state * self.n_modes + mode]
    }

    /// Dense values in `[x * n_modes + q]` layout.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterate `((state, mode), probability)` over strictly positive entries.
    pub fn support(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        let nq = self.n_modes;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(i, &p)| ((i / nq, i % nq), p))
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// An exact belief: the observation history, one version space per mode,
/// and the prior mass of the realization.
///
/// Values are immutable; [`BeliefState::update`] returns the successor
/// belief and leaves `self` untouched, so a contradictory reading can be
/// reported and retried without losing state.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    steps: Vec<(usize, usize)>,
    spaces: Vec<StateSet>,
    mass: f64,
}

impl BeliefState {
    /// The belief before any observation: every version space is the full
    /// state set and the realization mass is the total prior.
    pub fn initial(model: &DiagnosisModel) -> Self {
        BeliefState {
            steps: Vec::new(),
            spaces: alloc::vec![StateSet::full(model.n_states()); model.n_modes()],
            mass: model.total_prior(),
        }
    }

    /// Observation history as (action, outcome) index pairs, in the order
    /// taken. The belief itself depends only on the set of pairs.
    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    /// Number of observations incorporated (repeats included).
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    /// Realization mass `P[ψ_t]` under the prior.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// The version space `S_{t,q}` for one mode.
    pub fn space(&self, mode: usize) -> &StateSet {
        &self.spaces[mode]
    }

    /// Per-action flags for actions appearing in the history.
    pub fn taken_mask(&self, n_actions: usize) -> Vec<bool> {
        let mut mask = alloc::vec![false; n_actions];
        for &(v, _) in &self.steps {
            mask[v] = true;
        }
        mask
    }

    /// True when `action` appears in the history.
    pub fn has_taken(&self, action: usize) -> bool {
        self.steps.iter().any(|&(v, _)| v == action)
    }

    /// Concatenated version-space blocks; equal fingerprints mean equal
    /// beliefs for every downstream quantity (posterior, reward, gains),
    /// which is what the sweep deduplication relies on.
    pub fn fingerprint(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.spaces.iter().map(|s| s.blocks().len()).sum());
        for s in &self.spaces {
            out.extend_from_slice(s.blocks());
        }
        out
    }

    /// Incorporate one observation: intersect every mode's version space
    /// with `D(y, v, q)` and recompute the realization mass.
    ///
    /// Returns [`DiagnosisError::Contradiction`] when the surviving mass is
    /// zero — no supported (state, mode) pair explains the reading.
    pub fn update(&self, model: &DiagnosisModel, action: usize, outcome: usize) -> Result<Self> {
        if action >= model.n_actions() {
            return Err(DiagnosisError::OutOfRange(alloc::format!(
                "action index {action} (model has {})",
                model.n_actions()
            )));
        }
        if outcome >= model.n_outcomes() {
            return Err(DiagnosisError::OutOfRange(alloc::format!(
                "outcome index {outcome} (model has {})",
                model.n_outcomes()
            )));
        }
        let mut spaces = self.spaces.clone();
        let mut mass = 0.0;
        for (q, space) in spaces.iter_mut().enumerate() {
            space.intersect_with(model.compatible_states(outcome, action, q));
            mass += space.mass(model.mode_weights(q));
        }
        if mass <= 0.0 {
            return Err(DiagnosisError::Contradiction { action, outcome });
        }
        let mut steps = self.steps.clone();
        steps.push((action, outcome));
        Ok(BeliefState { steps, spaces, mass })
    }

    /// Exact posterior `P[x, q | ψ_t]`: the prior renormalised on the
    /// version-space support, zero elsewhere.
    pub fn posterior(&self, model: &DiagnosisModel) -> PosteriorTable {
        let nq = model.n_modes();
        let mut values = alloc::vec![0.0; model.n_states() * nq];
        for (q, space) in self.spaces.iter().enumerate() {
            for x in space.iter() {
                values[x * nq + q] = model.prior(x, q) / self.mass;
            }
        }
        PosteriorTable { n_modes: nq, values }
    }

    /// States still possible under at least one surviving fault hypothesis:
    /// `∪_q S_{t,q}`.
    pub fn union(&self) -> StateSet {
        let mut u = StateSet::empty(self.spaces[0].ground_len());
        for s in &self.spaces {
            u.union_with(s);
        }
        u
    }

    /// Diagnosis reward `f(ψ_t) = 1 − Σ_{x ∈ ∪_q S_{t,q}} P[x]`: the prior
    /// mass of states excluded under every surviving hypothesis. Zero
    /// before any observation, and non-decreasing along updates.
    pub fn reward(&self, model: &DiagnosisModel) -> f64 {
        1.0 - self.union().mass(model.marginals())
    }
}

/// Tiny hand-checkable models for tests; compiled into the crate's own
/// test builds and, behind the `testutil` feature, for downstream test
/// suites.
#[cfg(any(test, feature = "testutil"))]
pub mod testutil {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    /// Two states, one healthy mode, one action that separates them.
    pub fn two_state_model() -> DiagnosisModel {
        DiagnosisModel::new(
            vec!["x0".to_string(), "x1".to_string()],
            vec!["H".to_string()],
            vec!["v0".to_string()],
            vec!["0".to_string(), "1".to_string()],
            vec![0.5, 0.5],
            // mu(v0, x0) = 0, mu(v0, x1) = 1
            vec![0, 1],
        )
        .unwrap()
    }

    /// Two states, healthy + flip modes over one binary sensor, and two
    /// actions: v0 reads 0 everywhere when healthy, v1 separates the
    /// states when healthy. Flip inverts every reading. Priors:
    /// P[H | x] = 0.8, P[flip | x] = 0.2, uniform states.
    ///
    /// This is the instance where the first v1 observation eliminates
    /// nothing (every reading is explained by flipping), but after v0
    /// pins the mode, v1 separates the states — gains can grow.
    pub fn flip_jump_model() -> DiagnosisModel {
        let table = vec![
            // v0: healthy reading 0 for both states; flipped reading 1
            0, 1, // x0: (H, F)
            0, 1, // x1
            // v1: healthy readings 0/1; flipped 1/0
            0, 1, // x0
            1, 0, // x1
        ];
        DiagnosisModel::new(
            vec!["x0".to_string(), "x1".to_string()],
            vec!["H".to_string(), "F".to_string()],
            vec!["v0".to_string(), "v1".to_string()],
            vec!["0".to_string(), "1".to_string()],
            vec![0.4, 0.1, 0.4, 0.1],
            table,
        )
        .unwrap()
    }
}
