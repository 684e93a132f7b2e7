//! Selection-latency scaling scan across mode counts.
//!
//! The cost of one greedy selection grows with the number of live sensor
//! modes |Q|, since every candidate action is scored against every
//! version space. This scan pins that scaling on a fixed circuit by
//! varying |Q| alone: the fault structure is truncated to its first
//! 0, 1, 2, … fault-prone sensors (every prefix), the model is recompiled,
//! and the latency of a greedy selection is measured at the *initial*
//! belief, where every mode is still alive.
//!
//! Measuring the first selection is deliberate: observations kill modes,
//! so selections later in an episode touch fewer version spaces and get
//! cheaper — averaging them would flatten exactly the scaling this scan
//! exists to expose. Each sample is the median of 3 back-to-back repeats
//! (damping scheduler noise), the row value is the mean over a fixed
//! sample count, and the scan runs on a single thread.
//!
//! `timing.csv` holds one `n_modes,mean_selection_ns` row per mode count
//! plus a trailing comment with the least-squares line and its R².

use std::path::Path;
use std::time::Instant;

use diagnosis_core::model::BeliefState;
use diagnosis_core::policy::{greedy_step, SelectionForm};
use diagnosis_core::DiagnosisModel;

use crate::error::{CliError, Result};
use crate::format::{self, CircuitBundle};

/// Least-squares line through `(x, y)` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the fit.
    pub r2: f64,
}

/// One scan row.
#[derive(Debug, Clone, Copy)]
pub struct TimingRow {
    pub n_modes: usize,
    pub mean_selection_ns: f64,
}

/// Scan result: rows per mode count and the fit over them (absent with
/// fewer than two distinct mode counts).
#[derive(Debug, Clone)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
    pub fit: Option<LinearFit>,
}

/// Ordinary least squares for `y = slope·x + intercept`. Returns `None`
/// with fewer than two points or zero variance in `x`. An exact constant
/// fit reports R² = 1.
pub fn least_squares(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let residual: f64 = points
            .iter()
            .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
            .sum();
        1.0 - residual / syy
    };
    Some(LinearFit {
        slope,
        intercept,
        r2,
    })
}

fn median3(mut samples: [u64; 3]) -> u64 {
    samples.sort_unstable();
    samples[1]
}

/// Median-of-3 latency of one greedy selection at the given belief.
fn timed_selection(model: &DiagnosisModel, belief: &BeliefState) -> Result<u64> {
    let mut samples = [0u64; 3];
    for slot in &mut samples {
        let start = Instant::now();
        let choice = greedy_step(model, belief, SelectionForm::Partition)?;
        *slot = start.elapsed().as_nanos() as u64;
        std::hint::black_box(choice);
    }
    Ok(median3(samples))
}

/// Measure the mean first-selection latency of `model` over `samples`
/// repetitions.
pub fn measure_model(model: &DiagnosisModel, samples: usize) -> Result<f64> {
    let belief = BeliefState::initial(model);
    // One untimed warmup stabilises caches and the allocator.
    std::hint::black_box(greedy_step(model, &belief, SelectionForm::Partition)?);
    let mut total = 0u64;
    for _ in 0..samples {
        total += timed_selection(model, &belief)?;
    }
    Ok(total as f64 / samples as f64)
}

/// Run the scan: one row per fault-prone-sensor prefix of the fault
/// structure (0 sensors = the single healthy mode, upward to all of
/// them).
pub fn timing_scan(
    bundle: &CircuitBundle,
    spec: &diagnosis_core::fault::FaultSpec,
    samples: usize,
) -> Result<TimingReport> {
    if samples == 0 {
        return Err(CliError::invalid(
            &bundle.path,
            "timing scan needs at least one sample".to_string(),
        ));
    }
    let n_faulty = spec.sensors.iter().filter(|s| !s.kinds.is_empty()).count();
    let mut rows = Vec::with_capacity(n_faulty + 1);
    for keep in 0..=n_faulty {
        let truncated = format::truncate_faults(spec, keep);
        let compiled = format::compile_circuit_model(bundle, &truncated)?;
        let mean = measure_model(&compiled.model, samples)?;
        rows.push(TimingRow {
            n_modes: compiled.model.n_modes(),
            mean_selection_ns: mean,
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.n_modes as f64, r.mean_selection_ns))
        .collect();
    Ok(TimingReport {
        rows,
        fit: least_squares(&points),
    })
}

/// Render `timing.csv`: data rows plus the fit as a trailing comment.
pub fn render_csv(report: &TimingReport) -> String {
    let mut out = String::from("n_modes,mean_selection_ns\n");
    for row in &report.rows {
        out.push_str(&format!("{},{}\n", row.n_modes, row.mean_selection_ns));
    }
    if let Some(fit) = &report.fit {
        out.push_str(&format!(
            "# fit slope_ns_per_mode={} intercept_ns={} r2={}\n",
            fit.slope, fit.intercept, fit.r2
        ));
    }
    out
}

/// Write `timing.csv` into `dir`.
pub fn write_csv(report: &TimingReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("timing.csv");
    std::fs::write(&path, render_csv(report)).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn least_squares_recovers_exact_lines() {
        let fit = least_squares(&[(1.0, 5.0), (3.0, 11.0), (9.0, 29.0)]).unwrap();
        assert!((fit.slope - 3.0).abs() <= 1e-12);
        assert!((fit.intercept - 2.0).abs() <= 1e-12);
        assert!((fit.r2 - 1.0).abs() <= 1e-12);

        // Constant data: slope 0, perfect fit.
        let fit = least_squares(&[(1.0, 4.0), (2.0, 4.0)]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r2, 1.0);

        assert!(least_squares(&[(1.0, 2.0)]).is_none());
        assert!(least_squares(&[(1.0, 2.0), (1.0, 3.0)]).is_none());
    }

    #[test]
    fn noisy_data_scores_below_one() {
        let fit = least_squares(&[(0.0, 0.0), (1.0, 2.0), (2.0, 1.0), (3.0, 3.0)]).unwrap();
        assert!(fit.r2 < 1.0);
        assert!(fit.r2 > 0.0);
    }

    #[test]
    fn scan_produces_one_row_per_sensor_prefix() {
        let bundle = crate::format::load_circuit_str(
            &PathBuf::from("small_circuit.json"),
            crate::SMALL_CIRCUIT_JSON,
        )
        .unwrap();
        let spec = crate::format::load_faults_str(
            &PathBuf::from("small_faults.json"),
            crate::SMALL_FAULTS_JSON,
            &bundle,
        )
        .unwrap();
        // One sample keeps this test fast; the acceptance suite measures
        // properly.
        let report = timing_scan(&bundle, &spec, 1).unwrap();
        let counts: Vec<usize> = report.rows.iter().map(|r| r.n_modes).collect();
        assert_eq!(counts, vec![1, 3, 9, 27]);
        assert!(report.rows.iter().all(|r| r.mean_selection_ns > 0.0));
        assert!(report.fit.is_some());
        let csv = render_csv(&report);
        assert!(csv.starts_with("n_modes,mean_selection_ns\n1,"));
        assert!(csv.trim_end().lines().last().unwrap().starts_with("# fit slope_ns_per_mode="));
    }
}
