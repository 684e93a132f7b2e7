//! Batch experiment runner: execute policies against every true
//! (state, mode) pair and write the result artifacts.
//!
//! One experiment sweeps a set of ground-truth pairs (by default every
//! pair with positive prior), runs each configured policy on each pair,
//! and writes into the output directory:
//!
//! * `runs.csv` — one row per pair per policy per executed step
//!   (`policy,true_state,true_mode,step,action,outcome,reward_after,selection_ns`);
//! * `parity.csv` — per pair, each policy's final reward against the
//!   exhaustive all-actions baseline
//!   (`policy,true_state,true_mode,policy_reward,brute_reward,equal`);
//! * `latency_histogram.csv` — per policy, a histogram of each pair's mean
//!   selection latency (`policy,bin_low_ns,bin_high_ns,count`);
//! * `indistinguishable_cdf.csv` — per policy, the cumulative fraction of
//!   true states whose final indistinguishable-set size (worst case over
//!   that state's swept modes) is at most the given size
//!   (`policy,max_indistinguishable,fraction`);
//! * `plots.gp` — a gnuplot script rendering the last two files;
//! * `summary.json` — aggregates of all of the above.
//!
//! Re-running the same configuration reproduces every artifact byte for
//! byte except the timing figures (`selection_ns`, the histogram, and the
//! latency aggregates): policies are deterministic, pairs are swept in
//! declaration order, and rows are emitted in a fixed sort order. The
//! expected-reward aggregate `f_avg` weights pairs by their prior
//! probability; the parity table weights nothing — it lists every swept
//! pair.
//!
//! Selection latency is the wall time of choosing the next action only;
//! belief updates and bookkeeping are excluded.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use diagnosis_core::policy::{run_policy, Policy, RunRecord};
use diagnosis_core::{DiagnosisModel, TOLERANCE};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Number of bins in the latency histogram.
const HISTOGRAM_BINS: usize = 12;

/// What to run: model, policies, budget, sweep, and plumbing knobs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Action budget `k` for budget-respecting policies.
    pub budget: usize,
    /// Policies to execute, reported in this order.
    pub policies: Vec<Policy>,
    /// Worker threads for the pair sweep; 0 uses one thread per core.
    pub jobs: usize,
    /// Directory the artifacts are written into (created if missing).
    pub out_dir: PathBuf,
    /// Ground-truth pairs to sweep; `None` sweeps every supported pair.
    pub pairs: Option<Vec<(usize, usize)>>,
}

/// Per-policy aggregate of one experiment.
#[derive(Debug, Clone, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    /// Prior-weighted expected final reward over the swept pairs.
    pub f_avg: f64,
    /// Fraction of swept pairs whose final reward equals the exhaustive
    /// baseline's (absent for the baseline itself).
    pub parity_fraction: Option<f64>,
    /// Fraction of swept pairs ending with the true state identified
    /// uniquely (indistinguishable set of size 1).
    pub exact_identification_fraction: f64,
    pub mean_selection_ns: f64,
    pub median_selection_ns: f64,
    pub max_selection_ns: u64,
    /// Mean number of executed actions per run.
    pub mean_steps: f64,
    /// Whether any run took more actions than the budget (true only for
    /// the exhaustive baseline).
    pub exceeded_budget: bool,
    /// Histogram over pairs of the mean selection latency (timing data;
    /// varies between runs).
    pub latency_histogram: Vec<HistogramBin>,
    /// Cumulative distribution over true states of the worst-case final
    /// indistinguishable-set size.
    pub indistinguishable_cdf: Vec<CdfPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub low_ns: f64,
    pub high_ns: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CdfPoint {
    pub max_indistinguishable: usize,
    pub fraction: f64,
}

/// Everything `summary.json` holds.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub budget: usize,
    pub n_pairs: usize,
    pub n_states_swept: usize,
    pub policies: Vec<PolicySummary>,
    /// Where the submodularity-factor report lives when generated (the
    /// `zeta` subcommand writes it; this runner does not).
    pub factors_reference: String,
}

struct PairResult {
    pair: (usize, usize),
    /// One record per configured policy, in configuration order.
    records: Vec<RunRecord>,
    /// The exhaustive baseline's final reward for parity.
    brute_reward: f64,
}

fn validate(model: &DiagnosisModel, config: &ExperimentConfig) -> Result<Vec<(usize, usize)>> {
    if config.budget == 0 {
        return Err(CliError::Core(diagnosis_core::DiagnosisError::ZeroBudget));
    }
    if config.policies.is_empty() {
        return Err(CliError::invalid(
            &config.out_dir,
            "no policies configured".to_string(),
        ));
    }
    let pairs = match &config.pairs {
        Some(list) => {
            for &(x, q) in list {
                if x >= model.n_states() || q >= model.n_modes() {
                    return Err(CliError::invalid(
                        &config.out_dir,
                        format!("swept pair ({x}, {q}) is outside the model"),
                    ));
                }
                if model.prior(x, q) <= 0.0 {
                    return Err(CliError::invalid(
                        &config.out_dir,
                        format!("swept pair ({x}, {q}) has zero prior"),
                    ));
                }
            }
            list.clone()
        }
        None => {
            let mut all = Vec::new();
            for x in 0..model.n_states() {
                for q in 0..model.n_modes() {
                    if model.prior(x, q) > 0.0 {
                        all.push((x, q));
                    }
                }
            }
            all
        }
    };
    if pairs.is_empty() {
        return Err(CliError::invalid(
            &config.out_dir,
            "no supported (state, mode) pairs to sweep".to_string(),
        ));
    }
    Ok(pairs)
}

fn run_pair(
    model: &DiagnosisModel,
    config: &ExperimentConfig,
    pair: (usize, usize),
) -> Result<PairResult> {
    let (x, q) = pair;
    let mut records = Vec::with_capacity(config.policies.len());
    let mut brute_reward = None;
    for policy in &config.policies {
        let start = Instant::now();
        let mut clock = move || start.elapsed().as_nanos() as u64;
        let record = run_policy(model, policy, x, q, config.budget, &mut clock)?;
        if matches!(policy, Policy::BruteForceAll) {
            brute_reward = Some(record.final_reward);
        }
        records.push(record);
    }
    let brute_reward = match brute_reward {
        Some(r) => r,
        // The baseline was not configured: run it silently for parity.
        None => {
            run_policy(model, &Policy::BruteForceAll, x, q, config.budget, &mut || 0)?.final_reward
        }
    };
    Ok(PairResult {
        pair,
        records,
        brute_reward,
    })
}

fn median(sorted: &[u64]) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

fn histogram(values: &[f64]) -> Vec<HistogramBin> {
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Degenerate spread still gets one honest bin.
    let width = ((hi - lo) / HISTOGRAM_BINS as f64).max(1e-9);
    let mut bins: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|i| HistogramBin {
            low_ns: lo + width * i as f64,
            high_ns: lo + width * (i + 1) as f64,
            count: 0,
        })
        .collect();
    for &v in values {
        let i = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        bins[i].count += 1;
    }
    bins
}

/// Worst-case (over each state's swept modes) final set size per state,
/// turned into a cumulative distribution ending at 1.
fn indistinguishable_cdf(results: &[PairResult], policy_index: usize) -> Vec<CdfPoint> {
    use std::collections::BTreeMap;
    let mut worst: BTreeMap<usize, usize> = BTreeMap::new();
    for r in results {
        let size = r.records[policy_index].final_indistinguishable.count();
        let entry = worst.entry(r.pair.0).or_insert(0);
        *entry = (*entry).max(size);
    }
    let n_states = worst.len();
    let max_size = worst.values().copied().max().unwrap_or(0);
    let mut points = Vec::with_capacity(max_size);
    let mut cumulative = 0usize;
    for size in 1..=max_size {
        cumulative += worst.values().filter(|&&s| s == size).count();
        points.push(CdfPoint {
            max_indistinguishable: size,
            fraction: cumulative as f64 / n_states as f64,
        });
    }
    points
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(path, e))
}

/// The gnuplot script rendering the histogram and CDF artifacts.
const PLOTS_GP: &str = r#"# Render the experiment figures:
#   gnuplot -e "outdir='.'" plots.gp
# Produces latency_histogram.png and indistinguishable_cdf.png in outdir.
if (!exists("outdir")) outdir = "."
set datafile separator comma
set terminal pngcairo size 900,600
set key outside right

set output sprintf("%s/latency_histogram.png", outdir)
set title "Mean selection latency per true pair"
set xlabel "latency (ns)"
set ylabel "pairs"
set style fill solid 0.6 border -1
plot for [p in system(sprintf("tail -n +2 %s/latency_histogram.csv | cut -d, -f1 | sort -u | tr '\n' ' '", outdir))] \
    sprintf("%s/latency_histogram.csv", outdir) \
    using (($2+$3)/2):(strcol(1) eq p ? $4 : NaN) with boxes title p

set output sprintf("%s/indistinguishable_cdf.png", outdir)
set title "Final indistinguishable states (worst case per true state)"
set xlabel "maximal indistinguishable-set size"
set ylabel "cumulative fraction of true states"
set yrange [0:1.05]
plot for [p in system(sprintf("tail -n +2 %s/indistinguishable_cdf.csv | cut -d, -f1 | sort -u | tr '\n' ' '", outdir))] \
    sprintf("%s/indistinguishable_cdf.csv", outdir) \
    using ($2):(strcol(1) eq p ? $3 : NaN) with steps linewidth 2 title p
"#;

/// Run the configured sweep and write all artifacts into the output
/// directory. Returns the summary that was also written to
/// `summary.json`.
pub fn run_experiment(
    model: &DiagnosisModel,
    config: &ExperimentConfig,
) -> Result<ExperimentSummary> {
    let pairs = validate(model, config)?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| CliError::io(config.out_dir.clone(), e))?;

    let results: Vec<PairResult> = if config.jobs == 1 {
        pairs
            .iter()
            .map(|&pair| run_pair(model, config, pair))
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| CliError::invalid(&config.out_dir, format!("thread pool: {e}")))?;
        pool.install(|| {
            pairs
                .par_iter()
                .map(|&pair| run_pair(model, config, pair))
                .collect::<Result<_>>()
        })?
    };

    // runs.csv — fixed order: policy (configuration order), pair (sweep
    // order), step.
    let mut runs = String::from(
        "policy,true_state,true_mode,step,action,outcome,reward_after,selection_ns\n",
    );
    for (pi, policy) in config.policies.iter().enumerate() {
        for r in &results {
            let record = &r.records[pi];
            for (step, s) in record.trace.iter().enumerate() {
                runs.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    policy.name(),
                    model.state_ids()[r.pair.0],
                    model.mode_ids()[r.pair.1],
                    step + 1,
                    model.action_ids()[s.action],
                    model.outcome_ids()[s.outcome],
                    s.reward_after,
                    s.selection_nanos,
                ));
            }
        }
    }
    write_file(&config.out_dir, "runs.csv", &runs)?;

    // parity.csv — every policy against the exhaustive baseline, every
    // swept pair.
    let mut parity = String::from("policy,true_state,true_mode,policy_reward,brute_reward,equal\n");
    for (pi, policy) in config.policies.iter().enumerate() {
        if matches!(policy, Policy::BruteForceAll) {
            continue;
        }
        for r in &results {
            let reward = r.records[pi].final_reward;
            parity.push_str(&format!(
                "{},{},{},{},{},{}\n",
                policy.name(),
                model.state_ids()[r.pair.0],
                model.mode_ids()[r.pair.1],
                reward,
                r.brute_reward,
                (reward - r.brute_reward).abs() <= TOLERANCE,
            ));
        }
    }
    write_file(&config.out_dir, "parity.csv", &parity)?;

    // Aggregates per policy.
    let total_prior: f64 = pairs.iter().map(|&(x, q)| model.prior(x, q)).sum();
    let mut policy_summaries = Vec::with_capacity(config.policies.len());
    let mut histogram_csv = String::from("policy,bin_low_ns,bin_high_ns,count\n");
    let mut cdf_csv = String::from("policy,max_indistinguishable,fraction\n");
    for (pi, policy) in config.policies.iter().enumerate() {
        let mut f_avg = 0.0;
        let mut latencies: Vec<u64> = Vec::new();
        let mut per_pair_means: Vec<f64> = Vec::new();
        let mut steps_total = 0usize;
        let mut exceeded = false;
        let mut parity_hits = 0usize;
        let mut exact = 0usize;
        for r in &results {
            let record = &r.records[pi];
            f_avg += model.prior(r.pair.0, r.pair.1) * record.final_reward;
            let ns: Vec<u64> = record.trace.iter().map(|s| s.selection_nanos).collect();
            if !ns.is_empty() {
                per_pair_means
                    .push(ns.iter().sum::<u64>() as f64 / ns.len() as f64);
            }
            latencies.extend(ns);
            steps_total += record.trace.len();
            exceeded |= record.exceeded_budget;
            if (record.final_reward - r.brute_reward).abs() <= TOLERANCE {
                parity_hits += 1;
            }
            if record.final_indistinguishable.count() == 1 {
                exact += 1;
            }
        }
        latencies.sort_unstable();
        let cdf = indistinguishable_cdf(&results, pi);
        debug_assert!(cdf.windows(2).all(|w| w[0].fraction <= w[1].fraction + 1e-12));
        debug_assert!(cdf.last().is_none_or(|p| (p.fraction - 1.0).abs() <= 1e-12));
        let bins = histogram(&per_pair_means);
        for b in &bins {
            histogram_csv.push_str(&format!(
                "{},{},{},{}\n",
                policy.name(),
                b.low_ns,
                b.high_ns,
                b.count
            ));
        }
        for p in &cdf {
            cdf_csv.push_str(&format!(
                "{},{},{}\n",
                policy.name(),
                p.max_indistinguishable,
                p.fraction
            ));
        }
        policy_summaries.push(PolicySummary {
            policy: policy.name().to_string(),
            f_avg: f_avg / total_prior,
            parity_fraction: if matches!(policy, Policy::BruteForceAll) {
                None
            } else {
                Some(parity_hits as f64 / results.len() as f64)
            },
            exact_identification_fraction: exact as f64 / results.len() as f64,
            mean_selection_ns: if latencies.is_empty() {
                0.0
            } else {
                latencies.iter().sum::<u64>() as f64 / latencies.len() as f64
            },
            median_selection_ns: median(&latencies),
            max_selection_ns: latencies.last().copied().unwrap_or(0),
            mean_steps: steps_total as f64 / results.len() as f64,
            exceeded_budget: exceeded,
            latency_histogram: bins,
            indistinguishable_cdf: cdf,
        });
    }
    write_file(&config.out_dir, "latency_histogram.csv", &histogram_csv)?;
    write_file(&config.out_dir, "indistinguishable_cdf.csv", &cdf_csv)?;
    write_file(&config.out_dir, "plots.gp", PLOTS_GP)?;

    let n_states_swept = {
        let mut xs: Vec<usize> = pairs.iter().map(|&(x, _)| x).collect();
        xs.sort_unstable();
        xs.dedup();
        xs.len()
    };
    let summary = ExperimentSummary {
        budget: config.budget,
        n_pairs: pairs.len(),
        n_states_swept,
        policies: policy_summaries,
        factors_reference: "factors.json (written by the zeta subcommand)".to_string(),
    };
    let path = config.out_dir.join("summary.json");
    let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, &summary).map_err(|e| CliError::Parse {
        path: path.clone(),
        source: e,
    })?;
    writer
        .write_all(b"\n")
        .and_then(|()| writer.flush())
        .map_err(|e| CliError::io(&path, e))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use diagnosis_core::model::testutil::flip_jump_model;

    fn read(dir: &Path, name: &str) -> String {
        std::fs::read_to_string(dir.join(name)).unwrap()
    }

    /// Strip the trailing (timing) column from every runs.csv row.
    fn strip_timing(csv: &str) -> String {
        csv.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head).unwrap_or(l))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn artifacts_cover_every_pair_and_rerun_identically() {
        let model = flip_jump_model();
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig {
            budget: 2,
            policies: vec![Policy::GreedyPartition, Policy::BruteForceAll],
            jobs: 1,
            out_dir: dir.path().to_path_buf(),
            pairs: None,
        };
        let summary = run_experiment(&model, &config).unwrap();
        assert_eq!(summary.n_pairs, 4);
        assert_eq!(summary.n_states_swept, 2);
        assert_eq!(summary.policies.len(), 2);

        let greedy = &summary.policies[0];
        assert_eq!(greedy.policy, "GreedyPartition");
        assert!((greedy.f_avg - 0.5).abs() <= 1e-12);
        assert_eq!(greedy.parity_fraction, Some(1.0));
        assert!(!greedy.exceeded_budget);
        let brute = &summary.policies[1];
        assert_eq!(brute.parity_fraction, None);
        // Two actions fit exactly inside budget 2, so even the
        // exhaustive baseline stays within it here.
        assert!(!brute.exceeded_budget);

        // parity.csv covers every swept pair for the one non-baseline
        // policy; every row agrees.
        let parity = read(dir.path(), "parity.csv");
        let rows: Vec<&str> = parity.lines().skip(1).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.ends_with("true")));

        // The CDF ends at 1 and never decreases.
        let cdf = &summary.policies[0].indistinguishable_cdf;
        assert!((cdf.last().unwrap().fraction - 1.0).abs() <= 1e-12);
        assert!(cdf.windows(2).all(|w| w[0].fraction <= w[1].fraction));

        // Re-running writes byte-identical artifacts once timing columns
        // are stripped.
        let runs_a = read(dir.path(), "runs.csv");
        let cdf_a = read(dir.path(), "indistinguishable_cdf.csv");
        let dir_b = tempfile::tempdir().unwrap();
        let config_b = ExperimentConfig {
            out_dir: dir_b.path().to_path_buf(),
            ..config
        };
        run_experiment(&model, &config_b).unwrap();
        assert_eq!(
            strip_timing(&runs_a),
            strip_timing(&read(dir_b.path(), "runs.csv"))
        );
        assert_eq!(read(dir.path(), "parity.csv"), read(dir_b.path(), "parity.csv"));
        assert_eq!(cdf_a, read(dir_b.path(), "indistinguishable_cdf.csv"));
    }

    #[test]
    fn parity_runs_the_baseline_even_when_not_configured() {
        let model = flip_jump_model();
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig {
            budget: 2,
            policies: vec![Policy::GreedyDirect],
            jobs: 1,
            out_dir: dir.path().to_path_buf(),
            pairs: None,
        };
        let summary = run_experiment(&model, &config).unwrap();
        assert_eq!(summary.policies[0].parity_fraction, Some(1.0));
        let parity = read(dir.path(), "parity.csv");
        assert_eq!(parity.lines().count(), 5);
    }

    #[test]
    fn explicit_pair_lists_are_validated() {
        let model = flip_jump_model();
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig {
            budget: 2,
            policies: vec![Policy::GreedyPartition],
            jobs: 1,
            out_dir: dir.path().to_path_buf(),
            pairs: Some(vec![(0, 0)]),
        };
        let summary = run_experiment(&model, &config).unwrap();
        assert_eq!(summary.n_pairs, 1);
        // A single-pair sweep gives a one-step CDF.
        let cdf = &summary.policies[0].indistinguishable_cdf;
        assert_eq!(cdf.last().unwrap().fraction, 1.0);

        config.pairs = Some(vec![(9, 0)]);
        assert!(run_experiment(&model, &config).is_err());
    }

    #[test]
    fn parallel_and_serial_sweeps_agree_outside_timing() {
        let model = flip_jump_model();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let base = ExperimentConfig {
            budget: 2,
            policies: vec![Policy::GreedyPartition, Policy::Random(5)],
            jobs: 1,
            out_dir: dir_a.path().to_path_buf(),
            pairs: None,
        };
        run_experiment(&model, &base).unwrap();
        let parallel = ExperimentConfig {
            jobs: 4,
            out_dir: dir_b.path().to_path_buf(),
            ..base
        };
        run_experiment(&model, &parallel).unwrap();
        assert_eq!(
            strip_timing(&read(dir_a.path(), "runs.csv")),
            strip_timing(&read(dir_b.path(), "runs.csv"))
        );
        assert_eq!(
            read(dir_a.path(), "parity.csv"),
            read(dir_b.path(), "parity.csv")
        );
    }
}
