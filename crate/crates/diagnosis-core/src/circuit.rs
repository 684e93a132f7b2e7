//! Desk-scale electrical circuit simulator: the healthy outcome table of a
//! switched power-distribution network.
//!
//! A circuit is a set of electrical *nodes* joined by two-terminal
//! components, plus generators and sensors attached to nodes:
//!
//! * **generators** — power sources whose health is unknown (part of the
//!   diagnosed state); a faulty generator supplies nothing;
//! * **trusted sources** — power sources assumed reliable; their nodes are
//!   always energised and they carry no state bit;
//! * **contactors** — controllable switches assumed reliable; an action
//!   commands each one open or closed, and a closed contactor conducts;
//! * **links** — two-terminal components whose health is unknown (buses,
//!   relays, permanently-closed contactors); a healthy link conducts, a
//!   faulty one does not;
//! * **wires** — two-terminal components assumed reliable and permanently
//!   conducting; they carry no bit of any kind;
//! * **sensors** — voltage indicators; a sensor's healthy reading is 1
//!   exactly when its node is reachable from some energised source node
//!   through conducting components, else 0.
//!
//! Conduction is symmetric, so energisation is plain undirected
//! reachability. The *state* diagnosed later is the health assignment of
//! generators and links; sensor faults are layered on separately.
//!
//! # Bit encodings
//!
//! Actions, states, and readings are bit vectors rendered as `0`/`1`
//! strings, **first component most significant**:
//!
//! * action bit `i` — contactor `i` in declaration order, 1 = closed;
//! * state bit `i` — health of component `i`, generators first then links,
//!   each in declaration order, 1 = healthy;
//! * reading bit `i` — sensor `i` in declaration order, 1 = energised.
//!
//! Enumerating indices `0, 1, 2, …` therefore lists the id strings in
//! lexicographic order, with index 0 = all-zero.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{DiagnosisError, Result};
use crate::fault::HealthyTable;

/// Most components of any one kind (keeps `2^n` enumerations tractable).
pub const MAX_BITS: usize = 20;

/// A component attached to a single node (generator or sensor).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Terminal {
    pub id: String,
    pub node: String,
}

/// A two-terminal component joining two nodes (contactor or link).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub id: String,
    pub from: String,
    pub to: String,
}

/// A validated circuit with node names resolved to indices.
#[derive(Debug, Clone)]
pub struct Circuit {
    node_ids: Vec<String>,
    /// (id, node) per health-unknown generator.
    generators: Vec<(String, usize)>,
    /// (id, node) per reliable, always-energised source.
    trusted_sources: Vec<(String, usize)>,
    /// (id, from, to) per controllable contactor.
    contactors: Vec<(String, usize, usize)>,
    /// (id, from, to) per health-unknown link.
    links: Vec<(String, usize, usize)>,
    /// (id, from, to) per reliable, always-conducting wire.
    wires: Vec<(String, usize, usize)>,
    /// (id, node) per sensor.
    sensors: Vec<(String, usize)>,
}

fn bits_to_id(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Decode index `i` into `n` bits, first bit most significant.
fn index_to_bits(i: usize, n: usize) -> Vec<bool> {
    (0..n).map(|pos| (i >> (n - 1 - pos)) & 1 == 1).collect()
}

impl Circuit {
    pub fn new(
        nodes: Vec<String>,
        generators: Vec<Terminal>,
        trusted_sources: Vec<Terminal>,
        contactors: Vec<Branch>,
        links: Vec<Branch>,
        wires: Vec<Branch>,
        sensors: Vec<Terminal>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(DiagnosisError::InvalidCircuit("no nodes declared".into()));
        }
        let mut node_index = alloc::collections::BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.is_empty() {
                return Err(DiagnosisError::InvalidCircuit("empty node name".into()));
            }
            if node_index.insert(n.clone(), i).is_some() {
                return Err(DiagnosisError::InvalidCircuit(alloc::format!(
                    "duplicate node {n}"
                )));
            }
        }
        let resolve = |name: &str, owner: &str| -> Result<usize> {
            node_index.get(name).copied().ok_or_else(|| {
                DiagnosisError::InvalidCircuit(alloc::format!(
                    "{owner} references unknown node {name}"
                ))
            })
        };

        let mut seen_ids = alloc::collections::BTreeSet::new();
        let mut claim = |id: &str| -> Result<()> {
            if id.is_empty() {
                return Err(DiagnosisError::InvalidCircuit("empty component id".into()));
            }
            if !seen_ids.insert(String::from(id)) {
                return Err(DiagnosisError::InvalidCircuit(alloc::format!(
                    "duplicate component id {id}"
                )));
            }
            Ok(())
        };

        let mut gens = Vec::with_capacity(generators.len());
        for t in &generators {
            claim(&t.id)?;
            gens.push((t.id.clone(), resolve(&t.node, &t.id)?));
        }
        let mut srcs = Vec::with_capacity(trusted_sources.len());
        for t in &trusted_sources {
            claim(&t.id)?;
            srcs.push((t.id.clone(), resolve(&t.node, &t.id)?));
        }
        let mut conts = Vec::with_capacity(contactors.len());
        for b in &contactors {
            claim(&b.id)?;
            conts.push((b.id.clone(), resolve(&b.from, &b.id)?, resolve(&b.to, &b.id)?));
        }
        let mut lnks = Vec::with_capacity(links.len());
        for b in &links {
            claim(&b.id)?;
            lnks.push((b.id.clone(), resolve(&b.from, &b.id)?, resolve(&b.to, &b.id)?));
        }
        let mut wrs = Vec::with_capacity(wires.len());
        for b in &wires {
            claim(&b.id)?;
            wrs.push((b.id.clone(), resolve(&b.from, &b.id)?, resolve(&b.to, &b.id)?));
        }
        let mut sens = Vec::with_capacity(sensors.len());
        for t in &sensors {
            claim(&t.id)?;
            sens.push((t.id.clone(), resolve(&t.node, &t.id)?));
        }

        if gens.is_empty() && srcs.is_empty() {
            return Err(DiagnosisError::InvalidCircuit("no power sources".into()));
        }
        if sens.is_empty() {
            return Err(DiagnosisError::InvalidCircuit("no sensors".into()));
        }
        if conts.len() > MAX_BITS {
            return Err(DiagnosisError::TooLarge(alloc::format!(
                "{} contactors exceeds the {MAX_BITS} cap",
                conts.len()
            )));
        }
        if gens.len() + lnks.len() > MAX_BITS {
            return Err(DiagnosisError::TooLarge(alloc::format!(
                "{} health-unknown components exceeds the {MAX_BITS} cap",
                gens.len() + lnks.len()
            )));
        }
        if sens.len() > MAX_BITS {
            return Err(DiagnosisError::TooLarge(alloc::format!(
                "{} sensors exceeds the {MAX_BITS} cap",
                sens.len()
            )));
        }
        Ok(Circuit {
            node_ids: nodes,
            generators: gens,
            trusted_sources: srcs,
            contactors: conts,
            links: lnks,
            wires: wrs,
            sensors: sens,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    /// Health-unknown components in state-bit order: generators then links.
    pub fn health_component_ids(&self) -> Vec<String> {
        self.generators
            .iter()
            .map(|(id, _)| id.clone())
            .chain(self.links.iter().map(|(id, _, _)| id.clone()))
            .collect()
    }

    /// Contactors in action-bit order.
    pub fn contactor_ids(&self) -> Vec<String> {
        self.contactors.iter().map(|(id, _, _)| id.clone()).collect()
    }

    /// Sensors in reading-bit order.
    pub fn sensor_ids(&self) -> Vec<String> {
        self.sensors.iter().map(|(id, _)| id.clone()).collect()
    }

    pub fn n_health_bits(&self) -> usize {
        self.generators.len() + self.links.len()
    }

    pub fn n_actions(&self) -> usize {
        1 << self.contactors.len()
    }

    pub fn n_states(&self) -> usize {
        1 << self.n_health_bits()
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    /// Healthy sensor readings for one contactor command and one health
    /// assignment, both given in declaration order.
    pub fn readings(&self, closed: &[bool], health: &[bool]) -> Result<Vec<u8>> {
        if closed.len() != self.contactors.len() {
            return Err(DiagnosisError::OutOfRange(alloc::format!(
                "{} contactor commands, expected {}",
                closed.len(),
                self.contactors.len()
            )));
        }
        if health.len() != self.n_health_bits() {
            return Err(DiagnosisError::OutOfRange(alloc::format!(
                "{} health bits, expected {}",
                health.len(),
                self.n_health_bits()
            )));
        }
        let mut adjacency: Vec<Vec<usize>> = alloc::vec![Vec::new(); self.node_ids.len()];
        let mut connect = |a: usize, b: usize| {
            adjacency[a].push(b);
            adjacency[b].push(a);
        };
        for (i, &(_, a, b)) in self.contactors.iter().enumerate() {
            if closed[i] {
                connect(a, b);
            }
        }
        for (i, &(_, a, b)) in self.links.iter().enumerate() {
            if health[self.generators.len() + i] {
                connect(a, b);
            }
        }
        for &(_, a, b) in &self.wires {
            connect(a, b);
        }
        // Flood fill from every healthy generator's node and every
        // trusted source's node.
        let mut energized = alloc::vec![false; self.node_ids.len()];
        let mut queue = Vec::new();
        for (i, &(_, node)) in self.generators.iter().enumerate() {
            if health[i] && !energized[node] {
                energized[node] = true;
                queue.push(node);
            }
        }
        for &(_, node) in &self.trusted_sources {
            if !energized[node] {
                energized[node] = true;
                queue.push(node);
            }
        }
        while let Some(n) = queue.pop() {
            for &m in &adjacency[n] {
                if !energized[m] {
                    energized[m] = true;
                    queue.push(m);
                }
            }
        }
        Ok(self
            .sensors
            .iter()
            .map(|&(_, node)| u8::from(energized[node]))
            .collect())
    }

    /// Decode an action index into contactor commands (index 0 = all open).
    pub fn action_bits(&self, action: usize) -> Result<Vec<bool>> {
        if action >= self.n_actions() {
            return Err(DiagnosisError::OutOfRange(alloc::format!(
                "action index {action} out of {}",
                self.n_actions()
            )));
        }
        Ok(index_to_bits(action, self.contactors.len()))
    }

    /// Decode a state index into component health bits (index 0 = all
    /// faulty, highest index = all healthy).
    pub fn state_bits(&self, state: usize) -> Result<Vec<bool>> {
        if state >= self.n_states() {
            return Err(DiagnosisError::OutOfRange(alloc::format!(
                "state index {state} out of {}",
                self.n_states()
            )));
        }
        Ok(index_to_bits(state, self.n_health_bits()))
    }

    /// Tabulate every action against every health state into a healthy
    /// outcome table (ids are the bit strings of the indices).
    pub fn healthy_table(&self) -> Result<HealthyTable> {
        let nv = self.n_actions();
        let nx = self.n_states();
        let action_ids: Vec<String> = (0..nv)
            .map(|v| bits_to_id(&index_to_bits(v, self.contactors.len())))
            .collect();
        let state_ids: Vec<String> = (0..nx)
            .map(|x| bits_to_id(&index_to_bits(x, self.n_health_bits())))
            .collect();
        let mut readings = Vec::with_capacity(nv * nx);
        for v in 0..nv {
            let closed = index_to_bits(v, self.contactors.len());
            for x in 0..nx {
                let health = index_to_bits(x, self.n_health_bits());
                readings.push(self.readings(&closed, &health)?);
            }
        }
        let table = HealthyTable {
            action_ids,
            state_ids,
            sensor_count: self.sensors.len(),
            alphabet: 2,
            readings,
        };
        table.validate()?;
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn term(id: &str, node: &str) -> Terminal {
        Terminal {
            id: id.to_string(),
            node: node.to_string(),
        }
    }

    fn branch(id: &str, from: &str, to: &str) -> Branch {
        Branch {
            id: id.to_string(),
            from: from.to_string(),
            to: to.to_string(),
        }
    }

    fn two_node() -> Circuit {
        // G ── n0 ──C── n1, sensors on both nodes.
        Circuit::new(
            alloc::vec!["n0".to_string(), "n1".to_string()],
            alloc::vec![term("G", "n0")],
            alloc::vec![],
            alloc::vec![branch("C", "n0", "n1")],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![term("S0", "n0"), term("S1", "n1")],
        )
        .unwrap()
    }

    #[test]
    fn reachability_through_a_contactor() {
        let c = two_node();
        // Healthy generator, contactor closed: both nodes energised.
        assert_eq!(c.readings(&[true], &[true]).unwrap(), alloc::vec![1, 1]);
        // Contactor open: only the generator's node.
        assert_eq!(c.readings(&[false], &[true]).unwrap(), alloc::vec![1, 0]);
        // Faulty generator: nothing energised.
        assert_eq!(c.readings(&[true], &[false]).unwrap(), alloc::vec![0, 0]);
    }

    #[test]
    fn links_conduct_only_when_healthy() {
        // G ── a ──L── b, sensor on b.
        let c = Circuit::new(
            alloc::vec!["a".to_string(), "b".to_string()],
            alloc::vec![term("G", "a")],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![branch("L", "a", "b")],
            alloc::vec![],
            alloc::vec![term("S", "b")],
        )
        .unwrap();
        // Health bits: [G, L].
        assert_eq!(c.readings(&[], &[true, true]).unwrap(), alloc::vec![1]);
        assert_eq!(c.readings(&[], &[true, false]).unwrap(), alloc::vec![0]);
        assert_eq!(c.readings(&[], &[false, true]).unwrap(), alloc::vec![0]);
    }

    #[test]
    fn multi_hop_and_second_source() {
        // G1 ── a ──C1── b ──L── c ──C2── d ── G2, sensor on each node.
        let c = Circuit::new(
            alloc::vec![
                "a".to_string(),
                "b".to_string(),
                "c".to_string(),
                "d".to_string(),
            ],
            alloc::vec![term("G1", "a"), term("G2", "d")],
            alloc::vec![],
            alloc::vec![branch("C1", "a", "b"), branch("C2", "c", "d")],
            alloc::vec![branch("L", "b", "c")],
            alloc::vec![],
            alloc::vec![
                term("Sa", "a"),
                term("Sb", "b"),
                term("Sc", "c"),
                term("Sd", "d"),
            ],
        )
        .unwrap();
        // Only G1 healthy, both contactors closed, link healthy:
        // power flows a→b→c→d.
        assert_eq!(
            c.readings(&[true, true], &[true, false, true]).unwrap(),
            alloc::vec![1, 1, 1, 1]
        );
        // Link faulty splits the bus: G1 feeds a,b; G2 feeds c,d.
        assert_eq!(
            c.readings(&[true, true], &[true, true, false]).unwrap(),
            alloc::vec![1, 1, 1, 1]
        );
        assert_eq!(
            c.readings(&[true, true], &[true, false, false]).unwrap(),
            alloc::vec![1, 1, 0, 0]
        );
    }

    #[test]
    fn bit_order_is_declaration_order_msb_first() {
        let c = Circuit::new(
            alloc::vec!["a".to_string(), "b".to_string(), "c".to_string()],
            alloc::vec![term("G", "a")],
            alloc::vec![],
            alloc::vec![branch("C1", "a", "b"), branch("C2", "a", "c")],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![term("Sb", "b"), term("Sc", "c")],
        )
        .unwrap();
        // Action index 2 = bits [1, 0]: C1 closed, C2 open.
        assert_eq!(c.action_bits(2).unwrap(), alloc::vec![true, false]);
        assert_eq!(
            c.readings(&[true, false], &[true]).unwrap(),
            alloc::vec![1, 0]
        );
        let table = c.healthy_table().unwrap();
        assert_eq!(table.action_ids, alloc::vec!["00", "01", "10", "11"]);
        assert_eq!(table.state_ids, alloc::vec!["0", "1"]);
        // Row for action "10", state "1" matches the direct evaluation.
        assert_eq!(table.reading(2, 1), &[1, 0]);
        // State id order: index 0 is all-faulty.
        assert_eq!(table.reading(2, 0), &[0, 0]);
    }

    #[test]
    fn healthy_table_dimensions() {
        let c = two_node();
        let t = c.healthy_table().unwrap();
        assert_eq!(t.action_ids.len(), 2);
        assert_eq!(t.state_ids.len(), 2);
        assert_eq!(t.sensor_count, 2);
        assert_eq!(t.readings.len(), 4);
    }

    #[test]
    fn trusted_sources_and_wires_carry_no_bits() {
        // T ── a ──W── b ──C── c, plus an unknown generator G on d ──L── c.
        let c = Circuit::new(
            alloc::vec![
                "a".to_string(),
                "b".to_string(),
                "c".to_string(),
                "d".to_string(),
            ],
            alloc::vec![term("G", "d")],
            alloc::vec![term("T", "a")],
            alloc::vec![branch("C", "b", "c")],
            alloc::vec![branch("L", "d", "c")],
            alloc::vec![branch("W", "a", "b")],
            alloc::vec![term("Sc", "c")],
        )
        .unwrap();
        // Only G and L are health bits; T and W contribute none.
        assert_eq!(c.n_health_bits(), 2);
        assert_eq!(c.health_component_ids(), alloc::vec!["G", "L"]);
        // Everything faulty, contactor open: c is dark.
        assert_eq!(c.readings(&[false], &[false, false]).unwrap(), alloc::vec![0]);
        // Contactor closed: the trusted source reaches c through the wire
        // even with G and L faulty.
        assert_eq!(c.readings(&[true], &[false, false]).unwrap(), alloc::vec![1]);
        // Contactor open but G and L healthy: c fed from the right.
        assert_eq!(c.readings(&[false], &[true, true]).unwrap(), alloc::vec![1]);
        // A circuit powered only by trusted sources is legal.
        assert!(Circuit::new(
            alloc::vec!["a".to_string()],
            alloc::vec![],
            alloc::vec![term("T", "a")],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![term("S", "a")],
        )
        .is_ok());
    }

    #[test]
    fn validation_rejects_bad_declarations() {
        // Unknown node.
        assert!(Circuit::new(
            alloc::vec!["a".to_string()],
            alloc::vec![term("G", "zz")],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![term("S", "a")],
        )
        .is_err());
        // Duplicate component id across kinds.
        assert!(Circuit::new(
            alloc::vec!["a".to_string(), "b".to_string()],
            alloc::vec![term("X", "a")],
            alloc::vec![],
            alloc::vec![branch("X", "a", "b")],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![term("S", "b")],
        )
        .is_err());
        // No sensors.
        assert!(Circuit::new(
            alloc::vec!["a".to_string()],
            alloc::vec![term("G", "a")],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![],
            alloc::vec![],
        )
        .is_err());
    }
}
