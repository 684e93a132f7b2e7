//! Line-oriented interactive diagnosis: the operator supplies real
//! outcomes, the greedy policy picks the probes.
//!
//! Protocol (one line each way):
//!
//! * the session prints `action t/k: <action-id>` — take that action;
//! * the operator answers with the observed outcome id (for compiled
//!   circuits, the sensor bit-string, e.g. `101`) or `quit`;
//! * unparseable outcomes re-prompt; outcomes that contradict every
//!   surviving hypothesis print a warning and re-prompt *without*
//!   consuming the step or corrupting the belief;
//! * after each accepted outcome the session prints the reward, the
//!   surviving indistinguishable states, and the posterior mode of the
//!   state marginal;
//! * the session ends at the budget, on `quit`, on end of input, or when
//!   actions run out.
//!
//! Feeding back a transcript of simulated outcomes reproduces the exact
//! record a batch run of the same policy produces (selection times are
//! recorded as zero — interactive think-time is not a latency
//! measurement).

use std::io::{BufRead, Write};

use diagnosis_core::model::BeliefState;
use diagnosis_core::policy::{
    greedy_step, map_state, state_posterior, RunRecord, SelectionForm, TraceStep,
};
use diagnosis_core::{DiagnosisError, DiagnosisModel};

use crate::error::{CliError, Result};

/// Drive one interactive episode over `input`/`output`.
///
/// `declared_truth` fills the record's ground-truth fields when the
/// operator knows them (e.g. replaying a bench scenario); otherwise the
/// record carries the smallest-index surviving (state, mode) pair as a
/// representative consistent truth.
pub fn interactive_session<R: BufRead, W: Write>(
    model: &DiagnosisModel,
    budget: usize,
    declared_truth: Option<(usize, usize)>,
    mut input: R,
    output: &mut W,
) -> Result<RunRecord> {
    if budget == 0 {
        return Err(CliError::Core(DiagnosisError::ZeroBudget));
    }
    if let Some((x, q)) = declared_truth {
        if x >= model.n_states() || q >= model.n_modes() {
            return Err(CliError::Core(DiagnosisError::OutOfRange(format!(
                "declared truth ({x}, {q}) outside {}x{}",
                model.n_states(),
                model.n_modes()
            ))));
        }
    }
    let io_err = |e: std::io::Error| CliError::io("<session>", e);

    let mut belief = BeliefState::initial(model);
    let mut trace: Vec<TraceStep> = Vec::new();
    let mut line = String::new();
    'steps: while trace.len() < budget {
        let choice = match greedy_step(model, &belief, SelectionForm::Partition) {
            Ok(c) => c,
            Err(DiagnosisError::ActionsExhausted) => break,
            Err(e) => return Err(e.into()),
        };
        let t = trace.len() + 1;
        loop {
            writeln!(
                output,
                "action {t}/{budget}: {}",
                model.action_ids()[choice.action]
            )
            .map_err(io_err)?;
            output.flush().map_err(io_err)?;

            line.clear();
            if input.read_line(&mut line).map_err(io_err)? == 0 {
                break 'steps; // end of input
            }
            let reply = line.trim();
            if reply == "quit" {
                break 'steps;
            }
            let Some(outcome) = model.outcome_index(reply) else {
                writeln!(
                    output,
                    "cannot read outcome {reply:?}: expected one of {} ... {}, or quit",
                    model.outcome_ids().first().map(String::as_str).unwrap_or(""),
                    model.outcome_ids().last().map(String::as_str).unwrap_or(""),
                )
                .map_err(io_err)?;
                continue;
            };
            match belief.update(model, choice.action, outcome) {
                Ok(next) => {
                    belief = next;
                    let reward = belief.reward(model);
                    trace.push(TraceStep {
                        action: choice.action,
                        outcome,
                        reward_after: reward,
                        selection_nanos: 0,
                    });
                    let survivors: Vec<&str> = belief
                        .union()
                        .iter()
                        .map(|x| model.state_ids()[x].as_str())
                        .collect();
                    let map = map_state(model, &belief);
                    let map_mass = state_posterior(model, &belief)[map];
                    writeln!(
                        output,
                        "reward {reward}; indistinguishable {}: {}; most probable state {} ({map_mass:.4})",
                        survivors.len(),
                        survivors.join(" "),
                        model.state_ids()[map],
                    )
                    .map_err(io_err)?;
                    continue 'steps;
                }
                Err(DiagnosisError::Contradiction { .. }) => {
                    writeln!(
                        output,
                        "warning: outcome {reply} contradicts every surviving hypothesis; step rejected"
                    )
                    .map_err(io_err)?;
                    continue;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    let (true_state, true_mode) = declared_truth.unwrap_or_else(|| {
        // Smallest-index supported pair consistent with everything seen.
        belief
            .posterior(model)
            .support()
            .map(|(pair, _)| pair)
            .min()
            .expect("accepted updates keep the support nonempty")
    });
    let final_reward = belief.reward(model);
    writeln!(
        output,
        "session over after {} action(s); reward {final_reward}",
        trace.len()
    )
    .map_err(io_err)?;
    Ok(RunRecord {
        true_state,
        true_mode,
        final_indistinguishable: belief.union(),
        final_reward,
        trace,
        exceeded_budget: false,
    })
}
