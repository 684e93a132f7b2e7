//! JSON file formats and their conversion into core types.
//!
//! Three file kinds are understood:
//!
//! * **Circuit files** describe a switched power-distribution network:
//!   `nodes` (string list), `generators` `[{id, node, health_unknown}]`,
//!   `components` `[{id, from, to, health_unknown}]`, `contactors`
//!   `[{id, from, to, controllable, health_unknown}]`, and `sensors`
//!   `[{id, node, fault_prone}]`. Bit order of the derived action/state
//!   encodings follows declaration order, first declared most significant.
//! * **Fault files** give each fault-prone sensor its admissible fault
//!   kinds and priors: either a bare array of
//!   `{"sensor": "S2", "kinds": [{"flip": 0.2},
//!   {"stuck_at": {"value": 1, "p": 0.4}}]}` entries, or the same array
//!   wrapped as `{"alphabet": 2, "sensors": [...]}`. A probability may be
//!   a single number or a per-state array. Sensors without an entry are
//!   trusted (always healthy).
//! * **Model files** spell out a diagnosis model directly: `states`,
//!   `modes`, `actions`, `outcomes` (id lists), `prior` (nested `[x][q]`),
//!   and `table` (nested `[v][x][q]` of outcome ids).
//!
//! # Circuit element mapping
//!
//! The simulator core knows five element roles; file elements map onto
//! them by their flags:
//!
//! * generator with `health_unknown: true` → diagnosed power source
//!   (one state bit); with `false` → trusted, always-on source;
//! * component with `health_unknown: true` → diagnosed series link
//!   (one state bit); with `false` → plain wire;
//! * contactor `controllable: true, health_unknown: false` → commanded
//!   switch (one action bit);
//! * contactor `controllable: false` → permanently closed: a diagnosed
//!   link if `health_unknown`, else a wire;
//! * contactor `controllable: true, health_unknown: true` → split into a
//!   commanded switch (`id`, one action bit) in series with a diagnosed
//!   link (`id:health`, one state bit) through an internal node
//!   (`__aux_id`); the pair conducts exactly when the contactor is both
//!   closed and healthy, which is the original element's behaviour under
//!   symmetric reachability.
//!
//! State bits are ordered: health-unknown generators (declaration order),
//! then health-unknown components, then health-unknown contactors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use diagnosis_core::circuit::{Branch, Circuit, Terminal};
use diagnosis_core::fault::{
    compile_model, CompiledModel, FaultKind, FaultSpec, KindPrior, SensorFaults,
};
use diagnosis_core::DiagnosisModel;
use serde::Deserialize;

use crate::error::{CliError, Result};

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorDto {
    id: String,
    node: String,
    #[serde(default = "default_true")]
    health_unknown: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDto {
    id: String,
    from: String,
    to: String,
    #[serde(default = "default_true")]
    health_unknown: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContactorDto {
    id: String,
    from: String,
    to: String,
    #[serde(default = "default_true")]
    controllable: bool,
    #[serde(default)]
    health_unknown: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorDto {
    id: String,
    node: String,
    #[serde(default)]
    fault_prone: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    nodes: Vec<String>,
    #[serde(default)]
    generators: Vec<GeneratorDto>,
    #[serde(default)]
    components: Vec<ComponentDto>,
    #[serde(default)]
    contactors: Vec<ContactorDto>,
    sensors: Vec<SensorDto>,
}

/// A circuit loaded from a file, with the sensor fault-proneness flags
/// that the core simulator itself does not track.
#[derive(Debug, Clone)]
pub struct CircuitBundle {
    pub circuit: Circuit,
    /// All sensor ids in declaration (reading-bit) order.
    pub sensor_ids: Vec<String>,
    /// Subset of `sensor_ids` flagged fault-prone, in declaration order.
    pub fault_prone: Vec<String>,
    /// Path the bundle was loaded from (for error messages).
    pub path: PathBuf,
}

fn convert_circuit(path: &Path, file: CircuitFile) -> Result<CircuitBundle> {
    let declared_nodes: BTreeSet<&str> = file.nodes.iter().map(String::as_str).collect();
    let mut nodes = file.nodes.clone();
    let mut generators = Vec::new();
    let mut trusted_sources = Vec::new();
    let mut contactors = Vec::new();
    let mut links = Vec::new();
    let mut wires = Vec::new();

    for g in &file.generators {
        let t = Terminal {
            id: g.id.clone(),
            node: g.node.clone(),
        };
        if g.health_unknown {
            generators.push(t);
        } else {
            trusted_sources.push(t);
        }
    }
    for c in &file.components {
        let b = Branch {
            id: c.id.clone(),
            from: c.from.clone(),
            to: c.to.clone(),
        };
        if c.health_unknown {
            links.push(b);
        } else {
            wires.push(b);
        }
    }
    // Health-unknown contactor links are appended after plain component
    // links so the state-bit order is: generators, components, contactors.
    let mut contactor_links = Vec::new();
    for c in &file.contactors {
        match (c.controllable, c.health_unknown) {
            (true, false) => contactors.push(Branch {
                id: c.id.clone(),
                from: c.from.clone(),
                to: c.to.clone(),
            }),
            (true, true) => {
                let aux = format!("__aux_{}", c.id);
                if declared_nodes.contains(aux.as_str()) {
                    return Err(CliError::invalid(
                        path,
                        format!("contactor {}: internal node name {aux} is already declared", c.id),
                    ));
                }
                nodes.push(aux.clone());
                contactors.push(Branch {
                    id: c.id.clone(),
                    from: c.from.clone(),
                    to: aux.clone(),
                });
                contactor_links.push(Branch {
                    id: format!("{}:health", c.id),
                    from: aux,
                    to: c.to.clone(),
                });
            }
            (false, true) => contactor_links.push(Branch {
                id: c.id.clone(),
                from: c.from.clone(),
                to: c.to.clone(),
            }),
            (false, false) => wires.push(Branch {
                id: c.id.clone(),
                from: c.from.clone(),
                to: c.to.clone(),
            }),
        }
    }
    links.extend(contactor_links);

    let sensor_ids: Vec<String> = file.sensors.iter().map(|s| s.id.clone()).collect();
    let fault_prone: Vec<String> = file
        .sensors
        .iter()
        .filter(|s| s.fault_prone)
        .map(|s| s.id.clone())
        .collect();
    let sensors: Vec<Terminal> = file
        .sensors
        .iter()
        .map(|s| Terminal {
            id: s.id.clone(),
            node: s.node.clone(),
        })
        .collect();

    let circuit = Circuit::new(
        nodes,
        generators,
        trusted_sources,
        contactors,
        links,
        wires,
        sensors,
    )
    .map_err(|e| CliError::invalid(path, e.to_string()))?;
    Ok(CircuitBundle {
        circuit,
        sensor_ids,
        fault_prone,
        path: path.to_path_buf(),
    })
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Load and validate a circuit file.
pub fn load_circuit(path: &Path) -> Result<CircuitBundle> {
    let text = read_to_string(path)?;
    load_circuit_str(path, &text)
}

/// Parse a circuit file already in memory (`path` labels errors only).
pub fn load_circuit_str(path: &Path, text: &str) -> Result<CircuitBundle> {
    let file: CircuitFile = parse_json(path, text)?;
    convert_circuit(path, file)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ProbabilityDto {
    Shared(f64),
    PerState(Vec<f64>),
}

impl ProbabilityDto {
    fn into_prior(self) -> KindPrior {
        match self {
            ProbabilityDto::Shared(p) => KindPrior::Shared(p),
            ProbabilityDto::PerState(v) => KindPrior::PerState(v),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StuckAtDto {
    value: u8,
    p: ProbabilityDto,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindDto {
    Flip(ProbabilityDto),
    StuckAt(StuckAtDto),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorFaultsDto {
    sensor: String,
    kinds: Vec<KindDto>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FaultsFile {
    Bare(Vec<SensorFaultsDto>),
    Wrapped {
        #[serde(default = "default_alphabet")]
        alphabet: u8,
        sensors: Vec<SensorFaultsDto>,
    },
}

fn default_alphabet() -> u8 {
    2
}

/// Load a fault structure file and bind it to the bundle's sensor order.
///
/// Every entry must name a declared, fault-prone sensor; sensors without
/// an entry are trusted.
pub fn load_faults(path: &Path, bundle: &CircuitBundle) -> Result<FaultSpec> {
    let text = read_to_string(path)?;
    load_faults_str(path, &text, bundle)
}

/// Parse a fault file already in memory (`path` labels errors only).
pub fn load_faults_str(path: &Path, text: &str, bundle: &CircuitBundle) -> Result<FaultSpec> {
    let file: FaultsFile = parse_json(path, text)?;
    let (alphabet, entries) = match file {
        FaultsFile::Bare(entries) => (2, entries),
        FaultsFile::Wrapped { alphabet, sensors } => (alphabet, sensors),
    };

    let mut per_sensor: Vec<Option<SensorFaults>> = vec![None; bundle.sensor_ids.len()];
    for entry in entries {
        let Some(index) = bundle.sensor_ids.iter().position(|id| *id == entry.sensor) else {
            return Err(CliError::invalid(
                path,
                format!("fault entry names unknown sensor {}", entry.sensor),
            ));
        };
        if !bundle.fault_prone.contains(&entry.sensor) {
            return Err(CliError::invalid(
                path,
                format!(
                    "sensor {} is not declared fault-prone but has fault kinds",
                    entry.sensor
                ),
            ));
        }
        if per_sensor[index].is_some() {
            return Err(CliError::invalid(
                path,
                format!("duplicate fault entry for sensor {}", entry.sensor),
            ));
        }
        let kinds = entry
            .kinds
            .into_iter()
            .map(|k| match k {
                KindDto::Flip(p) => (FaultKind::Flip, p.into_prior()),
                KindDto::StuckAt(s) => (FaultKind::StuckAt(s.value), s.p.into_prior()),
            })
            .collect();
        per_sensor[index] = Some(SensorFaults { kinds });
    }

    let spec = FaultSpec {
        alphabet,
        sensors: per_sensor
            .into_iter()
            .map(|s| s.unwrap_or_else(SensorFaults::trusted))
            .collect(),
    };
    spec.validate()
        .map_err(|e| CliError::invalid(path, e.to_string()))?;
    Ok(spec)
}

/// Restrict a fault structure to the first `keep` sensors that have fault
/// kinds, trusting the rest. Used by the latency scaling scan to vary the
/// mode count on a fixed circuit.
pub fn truncate_faults(spec: &FaultSpec, keep: usize) -> FaultSpec {
    let mut kept = 0;
    FaultSpec {
        alphabet: spec.alphabet,
        sensors: spec
            .sensors
            .iter()
            .map(|s| {
                if s.kinds.is_empty() {
                    SensorFaults::trusted()
                } else if kept < keep {
                    kept += 1;
                    s.clone()
                } else {
                    SensorFaults::trusted()
                }
            })
            .collect(),
    }
}

/// Compile a loaded circuit plus fault structure into a diagnosis model,
/// with the uniform prior over health states.
pub fn compile_circuit_model(bundle: &CircuitBundle, spec: &FaultSpec) -> Result<CompiledModel> {
    let wrap = |e: diagnosis_core::DiagnosisError| CliError::invalid(&bundle.path, e.to_string());
    let healthy = bundle.circuit.healthy_table().map_err(wrap)?;
    let n = healthy.state_ids.len();
    let prior = vec![1.0 / n as f64; n];
    compile_model(&healthy, spec, &prior).map_err(wrap)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    states: Vec<String>,
    modes: Vec<String>,
    actions: Vec<String>,
    outcomes: Vec<String>,
    /// `prior[x][q]`, matching the `states` × `modes` id lists.
    prior: Vec<Vec<f64>>,
    /// `table[v][x][q]` of outcome ids.
    table: Vec<Vec<Vec<String>>>,
}

/// Load a directly specified diagnosis model file.
pub fn load_model(path: &Path) -> Result<DiagnosisModel> {
    let text = read_to_string(path)?;
    load_model_str(path, &text)
}

/// Parse a model file already in memory (`path` labels errors only).
pub fn load_model_str(path: &Path, text: &str) -> Result<DiagnosisModel> {
    let file: ModelFile = parse_json(path, text)?;
    let (nx, nq, nv) = (file.states.len(), file.modes.len(), file.actions.len());

    if file.prior.len() != nx {
        return Err(CliError::invalid(
            path,
            format!("prior has {} rows, expected one per state ({nx})", file.prior.len()),
        ));
    }
    let mut joint = Vec::with_capacity(nx * nq);
    for (x, row) in file.prior.iter().enumerate() {
        if row.len() != nq {
            return Err(CliError::invalid(
                path,
                format!(
                    "prior row for state {} has {} entries, expected one per mode ({nq})",
                    file.states[x],
                    row.len()
                ),
            ));
        }
        joint.extend_from_slice(row);
    }

    if file.table.len() != nv {
        return Err(CliError::invalid(
            path,
            format!("table has {} blocks, expected one per action ({nv})", file.table.len()),
        ));
    }
    let mut table = Vec::with_capacity(nv * nx * nq);
    for (v, block) in file.table.iter().enumerate() {
        if block.len() != nx {
            return Err(CliError::invalid(
                path,
                format!(
                    "table block for action {} has {} rows, expected one per state ({nx})",
                    file.actions[v],
                    block.len()
                ),
            ));
        }
        for (x, row) in block.iter().enumerate() {
            if row.len() != nq {
                return Err(CliError::invalid(
                    path,
                    format!(
                        "table row for action {}, state {} has {} entries, expected one per mode ({nq})",
                        file.actions[v],
                        file.states[x],
                        row.len()
                    ),
                ));
            }
            for (q, y) in row.iter().enumerate() {
                let Some(index) = file.outcomes.iter().position(|o| o == y) else {
                    return Err(CliError::invalid(
                        path,
                        format!(
                            "table entry for action {}, state {}, mode {} names unknown outcome {y}",
                            file.actions[v], file.states[x], file.modes[q]
                        ),
                    ));
                };
                table.push(index as u32);
            }
        }
    }

    DiagnosisModel::new(
        file.states,
        file.modes,
        file.actions,
        file.outcomes,
        joint,
        table,
    )
    .map_err(|e| CliError::invalid(path, e.to_string()))
}
