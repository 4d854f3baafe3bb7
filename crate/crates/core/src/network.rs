//! Electric-analogy vascular network: node/branch types, the Starling
//! resistor law, and the builder for the reduced ocular circuit.
//!
//! Pressures are gauge pressures in mmHg relative to the ground node,
//! resistances in mmHg·s/cm³, capacitances in cm³/mmHg, flows in cm³/s.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Index into a model's node table. Node 0 is always ground (0 mmHg).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

pub const GROUND: NodeId = NodeId(0);

/// External compartment pressure acting on a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exposure {
    None,
    Iop,
    Rltp,
}

/// Circuit element attached between two nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchKind {
    /// Ohmic element: q = (p_from - p_to) / resistance.
    Resistor { resistance: f64 },
    /// Collapsible vessel: resistance grows as the exposure pressure
    /// exceeds the internal pressure. See [`starling_resistance`].
    Starling { base_resistance: f64, steepness: f64 },
    /// Wall compliance to ground: C dp/dt = net inflow at the free node.
    Capacitor { capacitance: f64 },
    /// Pressure source following the arterial waveform passed to the solver.
    DrivenSource,
    /// Pressure source pinned at a constant value (venous sink).
    FixedSource { pressure: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub name: String,
    pub from: NodeId,
    pub to: NodeId,
    pub kind: BranchKind,
    pub exposure: Exposure,
}

impl Branch {
    pub fn is_resistive(&self) -> bool {
        matches!(
            self.kind,
            BranchKind::Resistor { .. } | BranchKind::Starling { .. }
        )
    }
}

/// Starling resistor law: `R(dp) = R_base * (1 + exp(-k * dp))` with the
/// transmural pressure `dp = p_internal - p_external`.
///
/// Open-vein limit: R -> R_base as dp -> +inf. Collapse: R grows without
/// bound as dp -> -inf. The law is smooth and monotone, so Newton iteration
/// on the assembled system stays well behaved. The exponent is clamped at
/// 40 (R ~ 2e17 * R_base) to keep collapsed branches finite.
pub fn starling_resistance(r_base: f64, p_internal: f64, p_external: f64, k: f64) -> f64 {
    debug_assert!(r_base > 0.0 && k > 0.0);
    let dp = p_internal - p_external;
    r_base * (1.0 + (-k * dp).min(40.0).exp())
}

/// Derivative of the Starling law with respect to the internal pressure.
pub(crate) fn starling_resistance_dpi(r_base: f64, p_internal: f64, p_external: f64, k: f64) -> f64 {
    let e = -k * (p_internal - p_external);
    if e >= 40.0 {
        0.0
    } else {
        -k * r_base * e.exp()
    }
}

/// Immutable description of an assembled network. Safe to share across
/// threads; every evaluation carries its own state vector.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    node_names: Vec<String>,
    branches: Vec<Branch>,
    /// Capacitor free nodes in declaration order; index = state slot.
    state_nodes: Vec<NodeId>,
    /// node index -> state slot (None for non-state nodes).
    state_slot: Vec<Option<usize>>,
    /// Unknown algebraic nodes (neither ground, source, nor state).
    interior_nodes: Vec<NodeId>,
    driven_node: Option<NodeId>,
    fixed_nodes: Vec<(NodeId, f64)>,
    /// Named flow probes: (name, branch index).
    observables: Vec<(String, usize)>,
    compartments: Vec<String>,
}

impl NetworkModel {
    /// Validates and indexes a raw node/branch list.
    ///
    /// Node 0 must be ground. Each capacitor must have exactly one terminal
    /// on ground; the other terminal becomes a state. Source branches pin
    /// their non-ground terminal.
    pub fn new(
        node_names: Vec<String>,
        branches: Vec<Branch>,
        observables: Vec<(String, String)>,
        compartments: Vec<String>,
    ) -> Result<Self> {
        let n = node_names.len();
        if n == 0 {
            return Err(CoreError::InvalidModel("model has no nodes".into()));
        }
        for b in &branches {
            if b.from.0 >= n || b.to.0 >= n {
                return Err(CoreError::InvalidModel(format!(
                    "branch {} references a missing node",
                    b.name
                )));
            }
            if b.from == b.to {
                return Err(CoreError::InvalidModel(format!(
                    "branch {} connects a node to itself",
                    b.name
                )));
            }
            match b.kind {
                BranchKind::Resistor { resistance } => {
                    if !(resistance > 0.0) {
                        return Err(CoreError::InvalidParameter(format!(
                            "non-positive resistance on branch {}: {resistance}",
                            b.name
                        )));
                    }
                }
                BranchKind::Starling {
                    base_resistance,
                    steepness,
                } => {
                    if !(base_resistance > 0.0) {
                        return Err(CoreError::InvalidParameter(format!(
                            "non-positive resistance on branch {}: {base_resistance}",
                            b.name
                        )));
                    }
                    if !(steepness > 0.0) {
                        return Err(CoreError::InvalidParameter(format!(
                            "non-positive collapse steepness on branch {}: {steepness}",
                            b.name
                        )));
                    }
                }
                BranchKind::Capacitor { capacitance } => {
                    if !(capacitance > 0.0) {
                        return Err(CoreError::InvalidParameter(format!(
                            "non-positive capacitance on branch {}: {capacitance}",
                            b.name
                        )));
                    }
                }
                BranchKind::DrivenSource | BranchKind::FixedSource { .. } => {}
            }
        }

        // Connectivity over all branches.
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for b in &branches {
                for (a, c) in [(b.from.0, b.to.0), (b.to.0, b.from.0)] {
                    if a == i && !seen[c] {
                        seen[c] = true;
                        stack.push(c);
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(CoreError::InvalidModel(
                "network graph is not connected".into(),
            ));
        }

        let mut driven_node = None;
        let mut fixed_nodes = Vec::new();
        let mut pinned = vec![false; n];
        for b in &branches {
            match b.kind {
                BranchKind::DrivenSource | BranchKind::FixedSource { .. } => {
                    let (node, other) = if b.from == GROUND {
                        (b.to, b.from)
                    } else {
                        (b.from, b.to)
                    };
                    if other != GROUND {
                        return Err(CoreError::InvalidModel(format!(
                            "pressure source {} must connect to ground",
                            b.name
                        )));
                    }
                    if pinned[node.0] {
                        return Err(CoreError::InvalidModel(format!(
                            "node {} is pinned by more than one source",
                            node_names[node.0]
                        )));
                    }
                    pinned[node.0] = true;
                    match b.kind {
                        BranchKind::DrivenSource => {
                            if driven_node.is_some() {
                                return Err(CoreError::InvalidModel(
                                    "more than one driven pressure source".into(),
                                ));
                            }
                            driven_node = Some(node);
                        }
                        BranchKind::FixedSource { pressure } => fixed_nodes.push((node, pressure)),
                        _ => unreachable!(),
                    }
                }
                _ => {}
            }
        }

        let mut state_nodes = Vec::new();
        let mut state_slot = vec![None; n];
        for b in &branches {
            if let BranchKind::Capacitor { .. } = b.kind {
                let free = if b.from == GROUND {
                    b.to
                } else if b.to == GROUND {
                    b.from
                } else {
                    return Err(CoreError::InvalidModel(format!(
                        "capacitor {} must have one terminal on ground",
                        b.name
                    )));
                };
                if pinned[free.0] {
                    return Err(CoreError::InvalidModel(format!(
                        "capacitor {} attaches to a source-pinned node",
                        b.name
                    )));
                }
                if state_slot[free.0].is_some() {
                    return Err(CoreError::InvalidModel(format!(
                        "node {} carries more than one capacitor",
                        node_names[free.0]
                    )));
                }
                state_slot[free.0] = Some(state_nodes.len());
                state_nodes.push(free);
            }
        }

        let interior_nodes: Vec<NodeId> = (1..n)
            .map(NodeId)
            .filter(|id| !pinned[id.0] && state_slot[id.0].is_none())
            .collect();

        let mut obs = Vec::new();
        for (probe, branch_name) in observables {
            let idx = branches
                .iter()
                .position(|b| b.name == branch_name && b.is_resistive())
                .ok_or_else(|| {
                    CoreError::InvalidModel(format!(
                        "observable {probe} refers to unknown or non-resistive branch {branch_name}"
                    ))
                })?;
            obs.push((probe, idx));
        }

        Ok(NetworkModel {
            node_names,
            branches,
            state_nodes,
            state_slot,
            interior_nodes,
            driven_node,
            fixed_nodes,
            observables: obs,
            compartments,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn node_index(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name).map(NodeId)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch_index(&self, name: &str) -> Option<usize> {
        self.branches.iter().position(|b| b.name == name)
    }

    /// Capacitor free nodes in state order.
    pub fn state_nodes(&self) -> &[NodeId] {
        &self.state_nodes
    }

    pub fn state_dimension(&self) -> usize {
        self.state_nodes.len()
    }

    pub fn state_slot(&self, node: NodeId) -> Option<usize> {
        self.state_slot[node.0]
    }

    pub fn interior_nodes(&self) -> &[NodeId] {
        &self.interior_nodes
    }

    pub fn driven_node(&self) -> Option<NodeId> {
        self.driven_node
    }

    pub fn fixed_nodes(&self) -> &[(NodeId, f64)] {
        &self.fixed_nodes
    }

    pub fn observables(&self) -> &[(String, usize)] {
        &self.observables
    }

    pub fn observable_names(&self) -> Vec<&str> {
        self.observables.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn compartments(&self) -> &[String] {
        &self.compartments
    }
}

/// Resistance entries of the reduced ocular circuit, one per vessel
/// segment. Units: mmHg·s/cm³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistanceSet {
    pub cra1: f64,
    pub cra2: f64,
    pub cra3: f64,
    pub cra4: f64,
    pub ra1: f64,
    pub ra2: f64,
    pub rc: f64,
    pub rv1: f64,
    pub rv2: f64,
    pub crv1: f64,
    pub crv2: f64,
    pub crv3: f64,
    pub crv4: f64,
    pub lc_in: f64,
    pub lc_out: f64,
}

impl ResistanceSet {
    pub fn entries(&self) -> [(&'static str, f64); 15] {
        [
            ("cra1", self.cra1),
            ("cra2", self.cra2),
            ("cra3", self.cra3),
            ("cra4", self.cra4),
            ("ra1", self.ra1),
            ("ra2", self.ra2),
            ("rc", self.rc),
            ("rv1", self.rv1),
            ("rv2", self.rv2),
            ("crv1", self.crv1),
            ("crv2", self.crv2),
            ("crv3", self.crv3),
            ("crv4", self.crv4),
            ("lc_in", self.lc_in),
            ("lc_out", self.lc_out),
        ]
    }
}

/// Compartment capacitances. Units: cm³/mmHg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceSet {
    pub cra: f64,
    pub ra: f64,
    pub rv: f64,
    pub crv: f64,
    pub lc: f64,
}

impl CapacitanceSet {
    pub fn entries(&self) -> [(&'static str, f64); 5] {
        [
            ("cra", self.cra),
            ("ra", self.ra),
            ("rv", self.rv),
            ("crv", self.crv),
            ("lc", self.lc),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarlingConfig {
    /// Collapse steepness k (1/mmHg).
    pub k: f64,
    /// Segments modelled as collapsible (venules and intraocular CRV).
    pub segments: Vec<String>,
}

/// Named flow probes: each maps to a branch of the circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableMap {
    pub cra: String,
    pub crv: String,
    pub lc: String,
}

/// Where the lamina cribrosa sub-branch taps the arterial tree and rejoins
/// the venous side. The anatomy is ambiguous at this reduction level, so
/// both ends are configurable node names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcTap {
    pub from: String,
    pub to: String,
}

/// Unit declaration carried by parameter files so mismatched documents are
/// rejected instead of silently misread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub pressure: String,
    pub time: String,
    pub volume: String,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            pressure: "mmHg".into(),
            time: "s".into(),
            volume: "cm3".into(),
        }
    }
}

/// Complete parameter document for the reduced ocular circuit. This is the
/// schema of the JSON model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParameters {
    #[serde(default)]
    pub units: Units,
    pub resistances: ResistanceSet,
    pub capacitances: CapacitanceSet,
    /// Branch name -> external compartment; branches not listed see none.
    pub exposures: BTreeMap<String, Exposure>,
    pub starling: StarlingConfig,
    pub observables: ObservableMap,
    #[serde(default = "LcTap::default_tap")]
    pub lc_tap: LcTap,
    pub cavernous_sinus_pressure: f64,
    /// Human-readable notes on parameters that are placeholders rather
    /// than calibrated values. Surfaced as warnings by validation.
    #[serde(default)]
    pub uncalibrated: Vec<String>,
}

impl LcTap {
    fn default_tap() -> LcTap {
        LcTap {
            from: "cra_mid".into(),
            to: "crv_mid".into(),
        }
    }
}

impl Default for CircuitParameters {
    /// Paper-given lamina values (lc_in = 78181.9, lc_out = 23988.25,
    /// C_lc = 7.53e-7); everything else is an uncalibrated placeholder
    /// chosen to produce flows of physiological magnitude.
    fn default() -> Self {
        let mut exposures = BTreeMap::new();
        for name in ["cra3", "cra4", "rv1", "rv2", "crv1", "crv2"] {
            exposures.insert(name.to_string(), Exposure::Iop);
        }
        for name in ["cra1", "cra2", "crv3", "crv4"] {
            exposures.insert(name.to_string(), Exposure::Rltp);
        }
        CircuitParameters {
            units: Units::default(),
            resistances: ResistanceSet {
                cra1: 3400.0,
                cra2: 3400.0,
                cra3: 9500.0,
                cra4: 9500.0,
                ra1: 28400.0,
                ra2: 28400.0,
                rc: 18900.0,
                rv1: 12300.0,
                rv2: 12300.0,
                crv1: 7600.0,
                crv2: 7600.0,
                crv3: 3700.0,
                crv4: 3700.0,
                lc_in: 78181.9,
                lc_out: 23988.25,
            },
            capacitances: CapacitanceSet {
                cra: 8.0e-7,
                ra: 1.5e-6,
                rv: 3.0e-6,
                crv: 4.0e-6,
                lc: 7.53e-7,
            },
            exposures,
            starling: StarlingConfig {
                k: 0.5,
                segments: vec!["rv1".into(), "rv2".into(), "crv1".into(), "crv2".into()],
            },
            observables: ObservableMap {
                cra: "cra2".into(),
                crv: "crv3".into(),
                lc: "lc_in".into(),
            },
            lc_tap: LcTap::default_tap(),
            cavernous_sinus_pressure: 5.0,
            uncalibrated: vec![
                "retinal and central-vessel resistances/capacitances are placeholder values"
                    .into(),
                "cavernous sinus pressure is a placeholder value".into(),
            ],
        }
    }
}

impl CircuitParameters {
    /// All schema and invariant violations, one message each. Empty means
    /// the document is buildable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let want = Units::default();
        if self.units != want {
            out.push(format!(
                "unsupported units {:?}; expected pressure mmHg, time s, volume cm3",
                self.units
            ));
        }
        for (name, r) in self.resistances.entries() {
            if !(r > 0.0) {
                out.push(format!("non-positive resistance {name}: {r}"));
            }
        }
        for (name, c) in self.capacitances.entries() {
            if !(c > 0.0) {
                out.push(format!("non-positive capacitance {name}: {c}"));
            }
        }
        if !(self.starling.k > 0.0) {
            out.push(format!(
                "non-positive collapse steepness k: {}",
                self.starling.k
            ));
        }
        if !self.cavernous_sinus_pressure.is_finite() {
            out.push("cavernous sinus pressure must be finite".into());
        }
        let segment_names: Vec<&str> = self.resistances.entries().iter().map(|(n, _)| *n).collect();
        for seg in &self.starling.segments {
            if !segment_names.contains(&seg.as_str()) {
                out.push(format!("starling segment {seg} is not a circuit branch"));
            }
        }
        for name in self.exposures.keys() {
            if !segment_names.contains(&name.as_str()) {
                out.push(format!("exposure entry {name} is not a circuit branch"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(first) => Err(CoreError::InvalidParameter(first)),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: CircuitParameters = serde_json::from_str(text)
            .map_err(|e| CoreError::InvalidConfig(format!("model file: {e}")))?;
        params.validate()?;
        Ok(params)
    }
}

/// Builds the reduced ocular network: ophthalmic-artery source, four CRA
/// segments, retinal arterioles/capillaries/venules, four CRV segments,
/// cavernous-sinus sink, and the lamina cribrosa sub-branch tapping between
/// the arterial and venous trees.
pub fn build_ocular_network(params: &CircuitParameters) -> Result<NetworkModel> {
    params.validate()?;

    let node_names: Vec<String> = [
        "ground", "oa", "cra_a", "cra_mid", "cra_b", "cra_out", "ra_mid", "ra_out", "rc_out",
        "rv_mid", "rv_out", "crv_a", "crv_mid", "crv_b", "sinus", "lc_mid",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let node = |name: &str| NodeId(node_names.iter().position(|n| n == name).unwrap());

    let exposure_of = |name: &str| {
        params
            .exposures
            .get(name)
            .copied()
            .unwrap_or(Exposure::None)
    };
    let kind_of = |name: &str, resistance: f64| {
        if params.starling.segments.iter().any(|s| s == name) {
            BranchKind::Starling {
                base_resistance: resistance,
                steepness: params.starling.k,
            }
        } else {
            BranchKind::Resistor { resistance }
        }
    };

    let lc_from = params.lc_tap.from.as_str();
    let lc_to = params.lc_tap.to.as_str();
    for name in [lc_from, lc_to] {
        if !node_names.iter().any(|n| n == name) || name == "ground" || name == "lc_mid" {
            return Err(CoreError::InvalidConfig(format!(
                "lamina tap point {name} is not a circuit node"
            )));
        }
    }
    if lc_from == lc_to {
        return Err(CoreError::InvalidConfig(
            "lamina tap points must differ".into(),
        ));
    }

    let r = &params.resistances;
    let c = &params.capacitances;
    let segment_chain: [(&str, f64, &str, &str); 13] = [
        ("cra1", r.cra1, "oa", "cra_a"),
        ("cra2", r.cra2, "cra_a", "cra_mid"),
        ("cra3", r.cra3, "cra_mid", "cra_b"),
        ("cra4", r.cra4, "cra_b", "cra_out"),
        ("ra1", r.ra1, "cra_out", "ra_mid"),
        ("ra2", r.ra2, "ra_mid", "ra_out"),
        ("rc", r.rc, "ra_out", "rc_out"),
        ("rv1", r.rv1, "rc_out", "rv_mid"),
        ("rv2", r.rv2, "rv_mid", "rv_out"),
        ("crv1", r.crv1, "rv_out", "crv_a"),
        ("crv2", r.crv2, "crv_a", "crv_mid"),
        ("crv3", r.crv3, "crv_mid", "crv_b"),
        ("crv4", r.crv4, "crv_b", "sinus"),
    ];

    let mut branches = Vec::new();
    branches.push(Branch {
        name: "oa_source".into(),
        from: GROUND,
        to: node("oa"),
        kind: BranchKind::DrivenSource,
        exposure: Exposure::None,
    });
    branches.push(Branch {
        name: "cs_source".into(),
        from: GROUND,
        to: node("sinus"),
        kind: BranchKind::FixedSource {
            pressure: params.cavernous_sinus_pressure,
        },
        exposure: Exposure::None,
    });
    for (name, resistance, from, to) in segment_chain {
        branches.push(Branch {
            name: name.into(),
            from: node(from),
            to: node(to),
            kind: kind_of(name, resistance),
            exposure: exposure_of(name),
        });
    }
    branches.push(Branch {
        name: "lc_in".into(),
        from: node(lc_from),
        to: node("lc_mid"),
        kind: kind_of("lc_in", r.lc_in),
        exposure: exposure_of("lc_in"),
    });
    branches.push(Branch {
        name: "lc_out".into(),
        from: node("lc_mid"),
        to: node(lc_to),
        kind: kind_of("lc_out", r.lc_out),
        exposure: exposure_of("lc_out"),
    });
    for (cap_name, capacitance, at) in [
        ("c_cra", c.cra, "cra_mid"),
        ("c_ra", c.ra, "ra_mid"),
        ("c_rv", c.rv, "rv_mid"),
        ("c_crv", c.crv, "crv_mid"),
        ("c_lc", c.lc, "lc_mid"),
    ] {
        branches.push(Branch {
            name: cap_name.into(),
            from: node(at),
            to: GROUND,
            kind: BranchKind::Capacitor { capacitance },
            exposure: Exposure::None,
        });
    }

    let observables = vec![
        ("CRA".to_string(), params.observables.cra.clone()),
        ("CRV".to_string(), params.observables.crv.clone()),
        ("LC".to_string(), params.observables.lc.clone()),
    ];
    let compartments = ["cra", "ra", "rc", "rv", "crv", "lc"]
        .iter()
        .map(|s| s.to_string())
        .collect();

    NetworkModel::new(node_names, branches, observables, compartments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_build_has_expected_shape() {
        let model = build_ocular_network(&CircuitParameters::default()).unwrap();
        assert_eq!(model.compartments().len(), 6);
        assert_eq!(model.observables().len(), 3);
        assert_eq!(model.state_dimension(), 5);
        assert_eq!(model.observable_names(), vec!["CRA", "CRV", "LC"]);
    }

    #[test]
    fn iop_exposure_matches_intraocular_segments() {
        let model = build_ocular_network(&CircuitParameters::default()).unwrap();
        let mut exposed: Vec<&str> = model
            .branches()
            .iter()
            .filter(|b| b.exposure == Exposure::Iop)
            .map(|b| b.name.as_str())
            .collect();
        exposed.sort_unstable();
        assert_eq!(exposed, vec!["cra3", "cra4", "crv1", "crv2", "rv1", "rv2"]);

        let mut retro: Vec<&str> = model
            .branches()
            .iter()
            .filter(|b| b.exposure == Exposure::Rltp)
            .map(|b| b.name.as_str())
            .collect();
        retro.sort_unstable();
        assert_eq!(retro, vec!["cra1", "cra2", "crv3", "crv4"]);
    }

    #[test]
    fn starling_segments_are_venous() {
        let model = build_ocular_network(&CircuitParameters::default()).unwrap();
        let mut starling: Vec<&str> = model
            .branches()
            .iter()
            .filter(|b| matches!(b.kind, BranchKind::Starling { .. }))
            .map(|b| b.name.as_str())
            .collect();
        starling.sort_unstable();
        assert_eq!(starling, vec!["crv1", "crv2", "rv1", "rv2"]);
    }

    #[test]
    fn rejects_non_positive_resistance() {
        let mut params = CircuitParameters::default();
        params.resistances.lc_out = 0.0;
        let err = build_ocular_network(&params).unwrap_err();
        assert!(err.to_string().contains("non-positive resistance"));
    }

    #[test]
    fn rejects_non_positive_capacitance() {
        let mut params = CircuitParameters::default();
        params.capacitances.rv = -1.0;
        let err = build_ocular_network(&params).unwrap_err();
        assert!(err.to_string().contains("non-positive capacitance"));
    }

    #[test]
    fn lc_tap_is_configurable() {
        let mut params = CircuitParameters::default();
        params.lc_tap = LcTap {
            from: "cra_b".into(),
            to: "crv_a".into(),
        };
        let model = build_ocular_network(&params).unwrap();
        let lc_in = &model.branches()[model.branch_index("lc_in").unwrap()];
        assert_eq!(lc_in.from, model.node_index("cra_b").unwrap());

        params.lc_tap.from = "nowhere".into();
        assert!(build_ocular_network(&params).is_err());
    }

    #[test]
    fn starling_law_limits() {
        let r_base = 12_300.0;
        // Open vein: large positive transmural pressure.
        let open = starling_resistance(r_base, 60.0, 10.0, 1.0);
        assert!((open - r_base).abs() / r_base < 1e-10);
        // Zero transmural pressure doubles the baseline.
        let mid = starling_resistance(r_base, 10.0, 10.0, 1.0);
        assert!((mid - 2.0 * r_base).abs() / r_base < 1e-12);
        // Collapse: dp = -10 with k = 1 gives R_base * (1 + e^10).
        let collapsed = starling_resistance(r_base, 0.0, 10.0, 1.0);
        let expected = r_base * (1.0 + 10f64.exp());
        assert!((collapsed - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn starling_law_is_monotone_in_external_pressure() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..400 {
            let p_ext = 5.0 + 0.1 * i as f64;
            let r = starling_resistance(1000.0, 25.0, p_ext, 0.5);
            assert!(r >= prev);
            prev = r;
        }
    }
}
