//! Action selection: expected marginal benefit, the adaptive greedy rule
//! in its two equivalent computational forms, episode simulation, and the
//! exact optimal adaptive policy value for benchmarking.
//!
//! # Benefit of an action
//!
//! Taking action `v` under belief `ψ` splits the support by the observed
//! outcome. Writing, per outcome `y`,
//!
//! ```text
//! τ_y = Σ_q Σ_{x ∈ S_q ∩ D(y,v,q)} P[x, q]      (realization mass)
//! w_y = Σ_{x ∈ ∪_q (S_q ∩ D(y,v,q))} P[x]        (surviving-union mass)
//! W   = Σ_{x ∈ ∪_q S_q} P[x]
//! ```
//!
//! the expected one-step benefit is
//!
//! ```text
//! Δ(v | ψ) = (1/P[ψ]) Σ_y τ_y (W − w_y) = W − (Σ_y τ_y w_y) / P[ψ],
//! ```
//!
//! since `Σ_y τ_y = P[ψ]`. Maximising `Δ` is therefore minimising the
//! score `Σ_y τ_y w_y`, which this module computes two ways:
//!
//! * **outcome-major** — walk the outcome axis and intersect the stored
//!   compatibility sets (`S_q ∩ D(y,v,q)`);
//! * **pair-major** — walk the supported `(q, x)` pairs and look outcomes
//!   up in the forward table, accumulating the same sums.
//!
//! The two forms use disjoint halves of the model representation (the
//! sets vs. the table), so their agreement cross-checks both. Selection
//! is tolerance-robust: every action whose score is within
//! [`TOLERANCE`](crate::TOLERANCE)`·P[ψ]` of the best ties, and the
//! smallest action index wins, so both forms pick identical actions even
//! under floating typical-point noise.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::bitset::StateSet;
use crate::error::{DiagnosisError, Result};
use crate::model::{BeliefState, DiagnosisModel};
use crate::TOLERANCE;

/// Which computational form of the greedy rule to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionForm {
    /// Iterate supported `(mode, state)` pairs, looking outcomes up in the
    /// forward table.
    Direct,
    /// Iterate outcomes, intersecting the stored compatibility sets.
    Partition,
}

/// One outcome branch of one action under a belief.
#[derive(Debug, Clone)]
pub struct OutcomeSplit {
    pub outcome: usize,
    /// Realization mass `τ_y`; the branch is observable iff positive.
    pub tau: f64,
    /// Marginal prior mass of the surviving union, `w_y`.
    pub union_mass: f64,
    /// Successor version spaces `S_q ∩ D(y, v, q)` per mode.
    pub spaces: Vec<StateSet>,
}

/// Split an action's effect by outcome. Returns one entry per outcome
/// whose successor spaces are not all empty — consistency-possible
/// branches; observable branches are the subset with `tau > 0`.
pub fn split_action(
    model: &DiagnosisModel,
    belief: &BeliefState,
    action: usize,
) -> Result<Vec<OutcomeSplit>> {
    if action >= model.n_actions() {
        return Err(DiagnosisError::OutOfRange(alloc::format!(
            "action index {action} out of {}",
            model.n_actions()
        )));
    }
    let mut splits = Vec::new();
    for y in 0..model.n_outcomes() {
        let mut spaces = Vec::with_capacity(model.n_modes());
        let mut tau = 0.0;
        let mut any = false;
        for q in 0..model.n_modes() {
            let cell = belief.space(q).intersection(model.compatible_states(y, action, q));
            if !cell.is_empty() {
                any = true;
                tau += cell.mass(model.mode_weights(q));
            }
            spaces.push(cell);
        }
        if !any {
            continue;
        }
        let mut union = StateSet::empty(model.n_states());
        for s in &spaces {
            union.union_with(s);
        }
        splits.push(OutcomeSplit {
            outcome: y,
            tau,
            union_mass: union.mass(model.marginals()),
            spaces,
        });
    }
    Ok(splits)
}

/// Expected one-step benefit `Δ(v | ψ)` of an action, by direct
/// evaluation of the outcome split.
pub fn marginal_benefit(
    model: &DiagnosisModel,
    belief: &BeliefState,
    action: usize,
) -> Result<f64> {
    let w_now = belief.union().mass(model.marginals());
    let score = score_partition(model, belief, action)?;
    Ok(w_now - score / belief.mass())
}

/// Greedy score `Σ_y τ_y w_y` via the outcome axis and the stored
/// compatibility sets.
fn score_partition(
    model: &DiagnosisModel,
    belief: &BeliefState,
    action: usize,
) -> Result<f64> {
    if action >= model.n_actions() {
        return Err(DiagnosisError::OutOfRange(alloc::format!(
            "action index {action} out of {}",
            model.n_actions()
        )));
    }
    let mut score = 0.0;
    let mut union = StateSet::empty(model.n_states());
    for y in 0..model.n_outcomes() {
        let mut tau = 0.0;
        let mut any = false;
        for q in 0..model.n_modes() {
            let space = belief.space(q);
            if space.is_empty() {
                continue;
            }
            let cell = space.intersection(model.compatible_states(y, action, q));
            if cell.is_empty() {
                continue;
            }
            tau += cell.mass(model.mode_weights(q));
            if any {
                union.union_with(&cell);
            } else {
                union = cell;
                any = true;
            }
        }
        if any && tau > 0.0 {
            score += tau * union.mass(model.marginals());
        }
    }
    Ok(score)
}

/// Greedy score `Σ_y τ_y w_y` via supported `(mode, state)` pairs and the
/// forward outcome table.
fn score_direct(
    model: &DiagnosisModel,
    belief: &BeliefState,
    action: usize,
) -> Result<f64> {
    if action >= model.n_actions() {
        return Err(DiagnosisError::OutOfRange(alloc::format!(
            "action index {action} out of {}",
            model.n_actions()
        )));
    }
    // First pass: group surviving states by predicted outcome to get the
    // per-outcome unions.
    let mut unions: BTreeMap<usize, StateSet> = BTreeMap::new();
    for q in 0..model.n_modes() {
        for x in belief.space(q).iter() {
            unions
                .entry(model.outcome(action, x, q))
                .or_insert_with(|| StateSet::empty(model.n_states()))
                .insert(x);
        }
    }
    let union_mass: BTreeMap<usize, f64> = unions
        .iter()
        .map(|(&y, set)| (y, set.mass(model.marginals())))
        .collect();
    // Second pass: accumulate Σ_pairs P[x, q] · w_{y(v, x, q)}, which
    // regroups to Σ_y τ_y w_y.
    let mut score = 0.0;
    for q in 0..model.n_modes() {
        let weights = model.mode_weights(q);
        for x in belief.space(q).iter() {
            score += weights[x] * union_mass[&model.outcome(action, x, q)];
        }
    }
    Ok(score)
}

/// The action a greedy step picked, with its tie set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionChoice {
    /// Selected action: smallest index among `tied`.
    pub action: usize,
    /// Every untaken action whose score ties the best within tolerance.
    pub tied: Vec<usize>,
    /// Expected benefit `Δ(action | ψ)` of the selection.
    pub benefit: f64,
}

/// One greedy selection step: argmax of expected benefit over untaken
/// actions, ties resolved to the smallest action index.
pub fn greedy_step(
    model: &DiagnosisModel,
    belief: &BeliefState,
    form: SelectionForm,
) -> Result<ActionChoice> {
    let mut scores: Vec<(usize, f64)> = Vec::new();
    for v in 0..model.n_actions() {
        if belief.has_taken(v) {
            continue;
        }
        let score = match form {
            SelectionForm::Partition => score_partition(model, belief, v)?,
            SelectionForm::Direct => score_direct(model, belief, v)?,
        };
        scores.push((v, score));
    }
    if scores.is_empty() {
        return Err(DiagnosisError::ActionsExhausted);
    }
    let best = scores.iter().map(|&(_, s)| s).fold(f64::INFINITY, f64::min);
    // Equal benefits within TOLERANCE correspond to scores within
    // TOLERANCE·P[ψ], since Δ = W − score/P[ψ].
    let slack = TOLERANCE * belief.mass();
    let tied: Vec<usize> = scores
        .iter()
        .filter(|&&(_, s)| s <= best + slack)
        .map(|&(v, _)| v)
        .collect();
    let action = tied[0];
    let score = scores.iter().find(|&&(v, _)| v == action).unwrap().1;
    let w_now = belief.union().mass(model.marginals());
    Ok(ActionChoice {
        action,
        tied,
        benefit: w_now - score / belief.mass(),
    })
}

/// One executed step of a simulated episode.
#[derive(Debug, Clone)]
pub struct EpisodeStep {
    pub action: usize,
    pub outcome: usize,
    /// Expected benefit the selector predicted before observing.
    pub predicted_benefit: f64,
    /// Reward `f(ψ)` after incorporating the observation.
    pub reward_after: f64,
}

/// A finished simulated episode.
#[derive(Debug, Clone)]
pub struct Episode {
    pub steps: Vec<EpisodeStep>,
    pub belief: BeliefState,
}

fn check_truth(model: &DiagnosisModel, true_state: usize, true_mode: usize) -> Result<()> {
    if true_state >= model.n_states() || true_mode >= model.n_modes() {
        return Err(DiagnosisError::OutOfRange(alloc::format!(
            "ground truth ({true_state}, {true_mode}) outside {}x{}",
            model.n_states(),
            model.n_modes()
        )));
    }
    if model.prior(true_state, true_mode) <= 0.0 {
        return Err(DiagnosisError::Degenerate(alloc::format!(
            "ground truth ({true_state}, {true_mode}) has zero prior"
        )));
    }
    Ok(())
}

/// Simulate a greedy episode against a ground-truth pair (which must have
/// positive prior, so observations can never contradict the belief).
/// Stops early when every action has been taken.
pub fn run_greedy(
    model: &DiagnosisModel,
    true_state: usize,
    true_mode: usize,
    budget: usize,
    form: SelectionForm,
) -> Result<Episode> {
    if budget == 0 {
        return Err(DiagnosisError::ZeroBudget);
    }
    check_truth(model, true_state, true_mode)?;
    let mut belief = BeliefState::initial(model);
    let mut steps = Vec::new();
    for _ in 0..budget {
        let choice = match greedy_step(model, &belief, form) {
            Ok(c) => c,
            Err(DiagnosisError::ActionsExhausted) => break,
            Err(e) => return Err(e),
        };
        let outcome = model.outcome(choice.action, true_state, true_mode);
        belief = belief.update(model, choice.action, outcome)?;
        steps.push(EpisodeStep {
            action: choice.action,
            outcome,
            predicted_benefit: choice.benefit,
            reward_after: belief.reward(model),
        });
    }
    Ok(Episode { steps, belief })
}

/// Simulate a fixed action sequence against a ground-truth pair (repeats
/// allowed — they are idempotent).
pub fn run_sequence(
    model: &DiagnosisModel,
    true_state: usize,
    true_mode: usize,
    actions: &[usize],
) -> Result<Episode> {
    check_truth(model, true_state, true_mode)?;
    let mut belief = BeliefState::initial(model);
    let mut steps = Vec::new();
    for &action in actions {
        if action >= model.n_actions() {
            return Err(DiagnosisError::OutOfRange(alloc::format!(
                "action index {action} out of {}",
                model.n_actions()
            )));
        }
        let outcome = model.outcome(action, true_state, true_mode);
        belief = belief.update(model, action, outcome)?;
        steps.push(EpisodeStep {
            action,
            outcome,
            predicted_benefit: 0.0,
            reward_after: belief.reward(model),
        });
    }
    Ok(Episode { steps, belief })
}

/// A named action-selection rule. Every policy is deterministic given
/// (model, belief, seed) and never repeats an action within a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    /// Greedy by direct benefit maximisation over untaken actions.
    GreedyDirect,
    /// Greedy by the cheaper partition-score minimisation.
    GreedyPartition,
    /// Every action in declaration order, ignoring the budget.
    BruteForceAll,
    /// Uniformly random untaken action, derived from the seed and the
    /// set of actions already taken.
    Random(u64),
    /// Exhaustive adaptive lookahead over the remaining budget.
    ExactOptimal,
}

impl Policy {
    /// Stable name used in reports and command lines.
    pub fn name(&self) -> &'static str {
        match self {
            Policy::GreedyDirect => "GreedyDirect",
            Policy::GreedyPartition => "GreedyPartition",
            Policy::BruteForceAll => "BruteForceAll",
            Policy::Random(_) => "Random",
            Policy::ExactOptimal => "ExactOptimal",
        }
    }
}

/// One executed step of a policy run.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub action: usize,
    pub outcome: usize,
    /// Reward `f(ψ)` after incorporating the observation.
    pub reward_after: f64,
    /// Wall time spent selecting the action (not updating the belief),
    /// as reported by the caller's clock.
    pub selection_nanos: u64,
}

/// A finished policy run against one ground-truth pair.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub true_state: usize,
    pub true_mode: usize,
    pub trace: Vec<TraceStep>,
    /// Terminal indistinguishable set `∪_q S_q`; always contains the
    /// true state.
    pub final_indistinguishable: StateSet,
    pub final_reward: f64,
    /// Whether the policy took more actions than the budget allowed
    /// (only the exhaustive baseline does).
    pub exceeded_budget: bool,
}

/// Select the next action for `policy` at `belief`. `step` counts the
/// actions already taken this run; `remaining` is the lookahead left for
/// the exhaustive policy.
fn select_action(
    model: &DiagnosisModel,
    policy: &Policy,
    belief: &BeliefState,
    step: usize,
    remaining: usize,
) -> Result<usize> {
    match policy {
        Policy::GreedyDirect => Ok(greedy_step(model, belief, SelectionForm::Direct)?.action),
        Policy::GreedyPartition => {
            Ok(greedy_step(model, belief, SelectionForm::Partition)?.action)
        }
        Policy::BruteForceAll => {
            if step < model.n_actions() {
                Ok(step)
            } else {
                Err(DiagnosisError::ActionsExhausted)
            }
        }
        Policy::Random(seed) => {
            let untaken: Vec<usize> =
                (0..model.n_actions()).filter(|&v| !belief.has_taken(v)).collect();
            if untaken.is_empty() {
                return Err(DiagnosisError::ActionsExhausted);
            }
            let mask = belief
                .taken_mask(model.n_actions())
                .iter()
                .enumerate()
                .fold(0u64, |m, (i, &t)| if t { m | (1 << i) } else { m });
            use rand_core::{RngCore, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ mask,
            );
            Ok(untaken[(rng.next_u64() % untaken.len() as u64) as usize])
        }
        Policy::ExactOptimal => Ok(optimal_next_action(model, belief, remaining)?.0),
    }
}

/// Execute one policy against a ground-truth pair, timing each selection
/// with the caller-supplied monotonic clock (nanoseconds; pass `|| 0` when
/// timing is irrelevant). The exhaustive baseline takes every action and
/// is flagged as budget-exceeding; every other policy stops at `budget`
/// or when actions run out.
pub fn run_policy(
    model: &DiagnosisModel,
    policy: &Policy,
    true_state: usize,
    true_mode: usize,
    budget: usize,
    clock: &mut dyn FnMut() -> u64,
) -> Result<RunRecord> {
    if budget == 0 {
        return Err(DiagnosisError::ZeroBudget);
    }
    check_truth(model, true_state, true_mode)?;
    let steps_to_take = match policy {
        Policy::BruteForceAll => model.n_actions(),
        _ => budget,
    };
    let mut belief = BeliefState::initial(model);
    let mut trace = Vec::new();
    for step in 0..steps_to_take {
        let remaining = steps_to_take - step;
        let before = clock();
        let action = match select_action(model, policy, &belief, step, remaining) {
            Ok(v) => v,
            Err(DiagnosisError::ActionsExhausted) => break,
            Err(e) => return Err(e),
        };
        let selection_nanos = clock().saturating_sub(before);
        let outcome = model.outcome(action, true_state, true_mode);
        belief = belief.update(model, action, outcome)?;
        trace.push(TraceStep {
            action,
            outcome,
            reward_after: belief.reward(model),
            selection_nanos,
        });
    }
    let exceeded_budget = trace.len() > budget;
    Ok(RunRecord {
        true_state,
        true_mode,
        final_indistinguishable: belief.union(),
        final_reward: belief.reward(model),
        trace,
        exceeded_budget,
    })
}

/// Posterior state marginal `P[x | ψ] = Σ_q P[x, q | ψ]`.
pub fn state_posterior(model: &DiagnosisModel, belief: &BeliefState) -> Vec<f64> {
    let table = belief.posterior(model);
    let mut out = alloc::vec![0.0; model.n_states()];
    for ((x, _), p) in table.support() {
        out[x] += p;
    }
    out
}

/// Most probable state under the posterior, smallest index on ties.
pub fn map_state(model: &DiagnosisModel, belief: &BeliefState) -> usize {
    let marginal = state_posterior(model, belief);
    let mut best = 0;
    for (x, &p) in marginal.iter().enumerate() {
        if p > marginal[best] + TOLERANCE {
            best = x;
        }
    }
    best
}

/// Expected terminal reward `f_avg` of the greedy policy run to `budget`
/// steps, by exact expansion of its outcome tree. A zero budget scores the
/// empty history, i.e. 0.
pub fn expected_reward_greedy(
    model: &DiagnosisModel,
    budget: usize,
    form: SelectionForm,
) -> Result<f64> {
    fn recurse(
        model: &DiagnosisModel,
        belief: &BeliefState,
        remaining: usize,
        form: SelectionForm,
    ) -> Result<f64> {
        if remaining == 0 {
            return Ok(belief.reward(model));
        }
        let choice = match greedy_step(model, belief, form) {
            Ok(c) => c,
            Err(DiagnosisError::ActionsExhausted) => return Ok(belief.reward(model)),
            Err(e) => return Err(e),
        };
        let mut value = 0.0;
        for split in split_action(model, belief, choice.action)? {
            if split.tau <= 0.0 {
                continue;
            }
            let child = belief.update(model, choice.action, split.outcome)?;
            value += split.tau / belief.mass() * recurse(model, &child, remaining - 1, form)?;
        }
        Ok(value)
    }
    recurse(model, &BeliefState::initial(model), budget, form)
}

type OptimalMemo = BTreeMap<(Vec<u64>, u64, usize), f64>;

/// Reject exhaustive searches whose node bound `(|V|·|Y|)^budget` is out
/// of desk-scale reach.
fn optimal_size_guard(model: &DiagnosisModel, budget: usize) -> Result<()> {
    if model.n_actions() > 64 {
        return Err(DiagnosisError::TooLarge(alloc::format!(
            "{} actions exceed the 64 supported by the search mask",
            model.n_actions()
        )));
    }
    let per_level = model.n_actions().saturating_mul(model.n_outcomes());
    let mut nodes = 1usize;
    for _ in 0..budget {
        nodes = nodes.saturating_mul(per_level);
        if nodes > 20_000_000 {
            return Err(DiagnosisError::TooLarge(alloc::format!(
                "optimal search over (|V|·|Y|)^{budget} nodes is out of reach"
            )));
        }
    }
    Ok(())
}

fn optimal_recurse(
    model: &DiagnosisModel,
    belief: &BeliefState,
    remaining: usize,
    memo: &mut OptimalMemo,
) -> Result<f64> {
    if remaining == 0 {
        return Ok(belief.reward(model));
    }
    let mask = belief
        .taken_mask(model.n_actions())
        .iter()
        .enumerate()
        .fold(0u64, |m, (i, &t)| if t { m | (1 << i) } else { m });
    let key = (belief.fingerprint(), mask, remaining);
    if let Some(&v) = memo.get(&key) {
        return Ok(v);
    }
    let mut best: Option<f64> = None;
    for v in 0..model.n_actions() {
        if belief.has_taken(v) {
            continue;
        }
        let value = optimal_action_value(model, belief, v, remaining, memo)?;
        best = Some(match best {
            Some(b) => b.max(value),
            None => value,
        });
    }
    // All actions taken: the belief is final.
    let value = best.unwrap_or_else(|| belief.reward(model));
    memo.insert(key, value);
    Ok(value)
}

/// Expected terminal reward of taking `action` now and playing optimally
/// for the remaining `remaining − 1` steps.
fn optimal_action_value(
    model: &DiagnosisModel,
    belief: &BeliefState,
    action: usize,
    remaining: usize,
    memo: &mut OptimalMemo,
) -> Result<f64> {
    let mut value = 0.0;
    for split in split_action(model, belief, action)? {
        if split.tau <= 0.0 {
            continue;
        }
        let child = belief.update(model, action, split.outcome)?;
        value += split.tau / belief.mass() * optimal_recurse(model, &child, remaining - 1, memo)?;
    }
    Ok(value)
}

/// Exact optimal adaptive policy value `OPT(budget)`: the maximum over
/// all depth-`budget` adaptive policies of the expected terminal reward,
/// by depth-first search with memoisation on (version spaces, actions
/// taken, remaining budget). Exponential in the budget — guarded by a
/// node-count cap.
pub fn optimal_expected_reward(model: &DiagnosisModel, budget: usize) -> Result<f64> {
    optimal_size_guard(model, budget)?;
    let mut memo = OptimalMemo::new();
    optimal_recurse(model, &BeliefState::initial(model), budget, &mut memo)
}

/// Best next action under exhaustive adaptive lookahead of `remaining`
/// further steps, with its expected terminal reward. Ties go to the
/// smallest action index.
pub fn optimal_next_action(
    model: &DiagnosisModel,
    belief: &BeliefState,
    remaining: usize,
) -> Result<(usize, f64)> {
    if remaining == 0 {
        return Err(DiagnosisError::ZeroBudget);
    }
    optimal_size_guard(model, remaining)?;
    let mut memo = OptimalMemo::new();
    let mut best: Option<(usize, f64)> = None;
    for v in 0..model.n_actions() {
        if belief.has_taken(v) {
            continue;
        }
        let value = optimal_action_value(model, belief, v, remaining, &mut memo)?;
        match best {
            Some((_, b)) if value <= b + TOLERANCE => {}
            _ => best = Some((v, value)),
        }
    }
    best.ok_or(DiagnosisError::ActionsExhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::{flip_jump_model, two_state_model};

    #[test]
    fn separating_action_scores_half() {
        let m = two_state_model();
        let belief = BeliefState::initial(&m);
        let v = m.action_index("v0").unwrap();
        assert!((marginal_benefit(&m, &belief, v).unwrap() - 0.5).abs() <= 1e-12);
        let choice = greedy_step(&m, &belief, SelectionForm::Partition).unwrap();
        assert_eq!(choice.action, v);
        assert!((choice.benefit - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn forms_agree_on_testutil_models() {
        for model in [two_state_model(), flip_jump_model()] {
            let mut beliefs = alloc::vec![BeliefState::initial(&model)];
            // Expand one level of observable branches and compare the two
            // forms on every belief reached.
            for v in 0..model.n_actions() {
                for split in split_action(&model, &beliefs[0].clone(), v).unwrap() {
                    if split.tau > 0.0 {
                        beliefs.push(beliefs[0].update(&model, v, split.outcome).unwrap());
                    }
                }
            }
            for belief in &beliefs {
                let a = greedy_step(&model, belief, SelectionForm::Partition);
                let b = greedy_step(&model, belief, SelectionForm::Direct);
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        assert_eq!(a.action, b.action);
                        assert_eq!(a.tied, b.tied);
                        assert!((a.benefit - b.benefit).abs() <= 1e-9);
                    }
                    (
                        Err(DiagnosisError::ActionsExhausted),
                        Err(DiagnosisError::ActionsExhausted),
                    ) => {}
                    (a, b) => panic!("form disagreement: {a:?} vs {b:?}"),
                }
            }
        }
    }

    #[test]
    fn benefit_can_rise_from_zero_after_a_mode_refuting_reading() {
        // Initially every action is uninformative (each outcome of each
        // action is explained by some surviving mode for every state), but
        // observing the constant action's healthy reading refutes the flip
        // mode and makes the separating action worth 1/2.
        let m = flip_jump_model();
        let belief = BeliefState::initial(&m);
        let constant = m.action_index("v0").unwrap();
        let separating = m.action_index("v1").unwrap();
        assert!(marginal_benefit(&m, &belief, constant).unwrap().abs() <= 1e-12);
        assert!(marginal_benefit(&m, &belief, separating).unwrap().abs() <= 1e-12);

        let after = belief.update(&m, constant, 0).unwrap();
        let gain = marginal_benefit(&m, &after, separating).unwrap();
        assert!((gain - 0.5).abs() <= 1e-12, "gain {gain}");
    }

    #[test]
    fn greedy_episode_identifies_the_truth() {
        let m = two_state_model();
        let ep = run_greedy(&m, 1, 0, 3, SelectionForm::Partition).unwrap();
        // One informative action exists; the episode stops when actions
        // run out.
        assert_eq!(ep.steps.len(), m.n_actions());
        assert!((ep.belief.reward(&m) - 0.5).abs() <= 1e-12);
        assert_eq!(map_state(&m, &ep.belief), 1);
        let posterior = state_posterior(&m, &ep.belief);
        assert!((posterior[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fixed_sequences_allow_repeats_and_match_greedy_updates() {
        let m = two_state_model();
        let v = m.action_index("v0").unwrap();
        let ep = run_sequence(&m, 0, 0, &[v, v]).unwrap();
        assert_eq!(ep.steps.len(), 2);
        assert!((ep.steps[0].reward_after - ep.steps[1].reward_after).abs() <= 1e-15);
    }

    #[test]
    fn zero_budget_and_exhaustion_are_signalled() {
        let m = two_state_model();
        assert!(matches!(
            run_greedy(&m, 0, 0, 0, SelectionForm::Partition),
            Err(DiagnosisError::ZeroBudget)
        ));
        let mut belief = BeliefState::initial(&m);
        for v in 0..m.n_actions() {
            let y = m.outcome(v, 0, 0);
            belief = belief.update(&m, v, y).unwrap();
        }
        assert!(matches!(
            greedy_step(&m, &belief, SelectionForm::Direct),
            Err(DiagnosisError::ActionsExhausted)
        ));
    }

    #[test]
    fn greedy_matches_the_optimum_on_the_small_models() {
        let m = two_state_model();
        let opt = optimal_expected_reward(&m, 1).unwrap();
        let grd = expected_reward_greedy(&m, 1, SelectionForm::Partition).unwrap();
        assert!((opt - 0.5).abs() <= 1e-12);
        assert!((grd - 0.5).abs() <= 1e-12);

        // Two steps beat the flip ambiguity exactly when the constant
        // action is spent first; greedy does that and matches OPT.
        let m = flip_jump_model();
        let opt = optimal_expected_reward(&m, 2).unwrap();
        let grd = expected_reward_greedy(&m, 2, SelectionForm::Partition).unwrap();
        assert!((opt - 0.5).abs() <= 1e-12, "opt {opt}");
        assert!((grd - 0.5).abs() <= 1e-12, "greedy {grd}");
        // One step alone achieves nothing on this model.
        assert!(optimal_expected_reward(&m, 1).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn zero_budget_evaluators_score_the_empty_history() {
        let m = flip_jump_model();
        assert_eq!(optimal_expected_reward(&m, 0).unwrap(), 0.0);
        assert_eq!(
            expected_reward_greedy(&m, 0, SelectionForm::Direct).unwrap(),
            0.0
        );
    }

    #[test]
    fn policies_expose_stable_names() {
        assert_eq!(Policy::GreedyDirect.name(), "GreedyDirect");
        assert_eq!(Policy::GreedyPartition.name(), "GreedyPartition");
        assert_eq!(Policy::BruteForceAll.name(), "BruteForceAll");
        assert_eq!(Policy::Random(3).name(), "Random");
        assert_eq!(Policy::ExactOptimal.name(), "ExactOptimal");
    }

    #[test]
    fn greedy_policy_runs_agree_and_identify_the_truth() {
        let m = flip_jump_model();
        let x1 = 1;
        let healthy = 0;
        let mut zero = || 0;
        let a = run_policy(&m, &Policy::GreedyDirect, x1, healthy, 2, &mut zero).unwrap();
        let b = run_policy(&m, &Policy::GreedyPartition, x1, healthy, 2, &mut zero).unwrap();
        let actions = |r: &RunRecord| r.trace.iter().map(|s| s.action).collect::<Vec<_>>();
        assert_eq!(actions(&a), actions(&b));
        // The constant action breaks the initial zero-benefit tie by
        // index, then the separating action resolves the state.
        assert_eq!(actions(&a), alloc::vec![0, 1]);
        for rec in [&a, &b] {
            assert!((rec.final_reward - 0.5).abs() <= 1e-12);
            assert!(rec.final_indistinguishable.contains(x1));
            assert_eq!(rec.final_indistinguishable.count(), 1);
            assert!(!rec.exceeded_budget);
            assert!(rec.trace.iter().all(|s| s.selection_nanos == 0));
        }
    }

    #[test]
    fn brute_force_ignores_the_budget_and_is_flagged() {
        let m = flip_jump_model();
        let rec = run_policy(&m, &Policy::BruteForceAll, 0, 0, 1, &mut || 0).unwrap();
        assert_eq!(
            rec.trace.iter().map(|s| s.action).collect::<Vec<_>>(),
            alloc::vec![0, 1]
        );
        assert!(rec.exceeded_budget);
        assert!((rec.final_reward - 0.5).abs() <= 1e-12);
        assert!(rec.final_indistinguishable.contains(0));

        // Within budget the flag stays down.
        let rec = run_policy(&m, &Policy::BruteForceAll, 0, 0, 2, &mut || 0).unwrap();
        assert!(!rec.exceeded_budget);
    }

    #[test]
    fn random_runs_are_deterministic_and_never_repeat_actions() {
        let m = flip_jump_model();
        for seed in 0..8 {
            let a = run_policy(&m, &Policy::Random(seed), 1, 1, 2, &mut || 0).unwrap();
            let b = run_policy(&m, &Policy::Random(seed), 1, 1, 2, &mut || 0).unwrap();
            let actions = |r: &RunRecord| r.trace.iter().map(|s| s.action).collect::<Vec<_>>();
            assert_eq!(actions(&a), actions(&b));
            let mut seen = actions(&a);
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), a.trace.len(), "seed {seed} repeated an action");
            assert!(a.final_indistinguishable.contains(1));
        }
    }

    #[test]
    fn exact_optimal_runs_attain_the_planned_value() {
        let m = flip_jump_model();
        // Average the terminal reward over every ground truth, weighted by
        // the prior: replanning with the remaining budget at each step must
        // reproduce the exhaustive lookahead's expected value.
        let mut avg = 0.0;
        for x in 0..m.n_states() {
            for q in 0..m.n_modes() {
                let rec = run_policy(&m, &Policy::ExactOptimal, x, q, 2, &mut || 0).unwrap();
                assert!(rec.final_indistinguishable.contains(x));
                avg += m.prior(x, q) * rec.final_reward;
            }
        }
        let opt = optimal_expected_reward(&m, 2).unwrap();
        assert!((avg - opt).abs() <= 1e-9, "avg {avg} vs opt {opt}");
        assert!((avg - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn optimal_next_action_breaks_ties_toward_the_smallest_index() {
        let m = flip_jump_model();
        let belief = BeliefState::initial(&m);
        // One remaining step achieves nothing on this model, so every
        // action ties at zero and the first wins.
        let (v, value) = optimal_next_action(&m, &belief, 1).unwrap();
        assert_eq!(v, 0);
        assert!(value.abs() <= 1e-12);
        // Both orderings of the two actions resolve the state in two
        // steps, so the two-step values tie at 1/2 as well.
        let (v, value) = optimal_next_action(&m, &belief, 2).unwrap();
        assert_eq!(v, 0);
        assert!((value - 0.5).abs() <= 1e-12);
        assert!(matches!(
            optimal_next_action(&m, &belief, 0),
            Err(DiagnosisError::ZeroBudget)
        ));
    }

    #[test]
    fn policy_runs_reject_bad_arguments() {
        let m = flip_jump_model();
        assert!(matches!(
            run_policy(&m, &Policy::GreedyPartition, 0, 0, 0, &mut || 0),
            Err(DiagnosisError::ZeroBudget)
        ));
        assert!(matches!(
            run_policy(&m, &Policy::GreedyPartition, 9, 0, 1, &mut || 0),
            Err(DiagnosisError::OutOfRange(_))
        ));
    }

    #[test]
    fn selection_times_come_from_the_injected_clock() {
        let m = two_state_model();
        let mut ticks = 0u64;
        let mut clock = || {
            ticks += 100;
            ticks
        };
        let rec = run_policy(&m, &Policy::GreedyPartition, 1, 0, 1, &mut clock).unwrap();
        assert_eq!(rec.trace.len(), 1);
        assert_eq!(rec.trace[0].selection_nanos, 100);
    }
}
