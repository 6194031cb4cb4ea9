//! Syllable graphs: nodes, arcs, temporal plan and rewrite operations.
//!
//! A syllable is a chain of elements: superimposed segments (a consonant
//! chain and a vocalic arc running concurrently over disjoint articulator
//! sets), vowel holds, and neutral glides (diphthongs, pauses). Words are
//! built by concatenating syllable graphs; verbal transformations are graph
//! rewrites (resyllabification relabels, cluster fusion restructures).

use serde::Serialize;

use crate::coordination::PolarPoint;
use crate::inventory::{InventoryError, PhonemeInventory, SelectionVector};
use crate::trajectory::{Orientation, K_CONSONANT, K_VOWEL};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error("unsupported structure: {reason}")]
    Unsupported { reason: String },
    #[error("negative pause duration {ms} ms")]
    NegativePause { ms: f64 },
    #[error("rewrite not applicable: {reason}")]
    NotApplicable { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    /// Departure anchor of an onset segment, at (delta_o * rho_v, theta_v).
    AnchorOnset,
    /// A nucleus vowel at its full location.
    Vowel,
    Consonant,
    /// Arrival anchor of a coda segment, at (delta_e * rho_v, theta_v).
    AnchorCoda,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphNode {
    pub role: NodeRole,
    pub label: String,
    pub location: PolarPoint,
}

/// Arc duration: oriented multiples of the period T, stationary holds, or a
/// fixed pause in milliseconds. Actual millisecond durations are resolved at
/// compile time from the word-level T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArcTiming {
    Oriented { periods: u32, orientation: Orientation },
    Hold { periods: u32 },
    Pause { ms: f64 },
}

impl ArcTiming {
    pub fn duration_ms(&self, period_t: f64) -> f64 {
        match *self {
            ArcTiming::Oriented { periods, .. } => periods as f64 * period_t,
            ArcTiming::Hold { periods } => periods as f64 * period_t,
            ArcTiming::Pause { ms } => ms,
        }
    }

    pub fn periods(&self) -> u32 {
        match *self {
            ArcTiming::Oriented { periods, .. } => periods,
            ArcTiming::Hold { periods } => periods,
            ArcTiming::Pause { .. } => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Consonantal,
    Vocalic,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphArc {
    pub from: NodeId,
    pub to: NodeId,
    pub timing: ArcTiming,
    pub selection: SelectionVector,
    pub branch: Branch,
    pub nu: f64,
    pub k: f64,
}

/// One temporal element of the plan. Arc indices point into the graph's arc
/// list; a segment's chain and vocalic arc span the same n*T interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    Segment { chain: Vec<usize>, vocalic: usize },
    Neutral { arc: usize },
}

/// Presentation overlay: how the graph spells as syllables. Rewrites keep it
/// aligned with the structure; compilation never reads it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyllableLabel {
    pub onset: Vec<String>,
    pub nucleus: Vec<String>,
    pub coda: Vec<String>,
    pub pause_before: bool,
}

impl SyllableLabel {
    fn spelling(&self) -> String {
        let mut s = String::new();
        for sym in self.onset.iter().chain(&self.nucleus).chain(&self.coda) {
            s.push_str(sym);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyllableGraph {
    pub nodes: Vec<GraphNode>,
    pub arcs: Vec<GraphArc>,
    pub elements: Vec<Element>,
    pub syllables: Vec<SyllableLabel>,
    /// (delta_o, delta_e) the graph was built with.
    pub deltas: (f64, f64),
}

/// Construction options shared by the builders.
#[derive(Debug, Clone, Copy)]
pub struct SyllableOptions {
    pub delta_onset: f64,
    pub delta_coda: f64,
    /// Stationary periods held on a vowel that sits between an onset and a
    /// coda segment (the CVC mid-vowel). Zero omits the hold entirely.
    pub mid_hold_periods: u32,
}

impl Default for SyllableOptions {
    fn default() -> Self {
        Self {
            delta_onset: 0.7,
            delta_coda: 0.7,
            mid_hold_periods: 0,
        }
    }
}

impl SyllableGraph {
    fn empty(deltas: (f64, f64)) -> Self {
        Self {
            nodes: Vec::new(),
            arcs: Vec::new(),
            elements: Vec::new(),
            syllables: Vec::new(),
            deltas,
        }
    }

    fn push_node(&mut self, role: NodeRole, label: &str, location: PolarPoint) -> NodeId {
        self.nodes.push(GraphNode {
            role,
            label: label.to_string(),
            location,
        });
        self.nodes.len() - 1
    }

    /// Temporally first node of the plan.
    pub fn entry_node(&self) -> Option<NodeId> {
        self.elements.first().map(|el| match el {
            Element::Segment { vocalic, .. } => self.arcs[*vocalic].from,
            Element::Neutral { arc } => self.arcs[*arc].from,
        })
    }

    /// Temporally last node of the plan.
    pub fn exit_node(&self) -> Option<NodeId> {
        self.elements.last().map(|el| match el {
            Element::Segment { vocalic, .. } => self.arcs[*vocalic].to,
            Element::Neutral { arc } => self.arcs[*arc].to,
        })
    }

    /// Total planned duration in milliseconds for a given period T.
    pub fn duration_ms(&self, period_t: f64) -> f64 {
        self.elements
            .iter()
            .map(|el| match el {
                Element::Segment { vocalic, .. } => {
                    self.arcs[*vocalic].timing.duration_ms(period_t)
                }
                Element::Neutral { arc } => self.arcs[*arc].timing.duration_ms(period_t),
            })
            .sum()
    }

    pub fn has_pause(&self) -> bool {
        self.arcs
            .iter()
            .any(|a| matches!(a.timing, ArcTiming::Pause { .. }))
    }

    /// Canonical spelling of the overlay: syllables joined by '.', words by a
    /// space where a pause separates them.
    pub fn spell(&self) -> String {
        let mut out = String::new();
        for (i, syl) in self.syllables.iter().enumerate() {
            if i > 0 {
                out.push(if syl.pause_before { ' ' } else { '.' });
            }
            out.push_str(&syl.spelling());
        }
        out
    }

    /// Structural sanity checks used before compilation.
    pub fn validate(&self) -> Result<(), GraphError> {
        for arc in &self.arcs {
            if arc.from >= self.nodes.len() || arc.to >= self.nodes.len() {
                return Err(GraphError::Unsupported {
                    reason: "arc references a missing node".into(),
                });
            }
        }
        for el in &self.elements {
            if let Element::Segment { chain, vocalic } = el {
                let voc = &self.arcs[*vocalic];
                let chain_periods: u32 =
                    chain.iter().map(|&i| self.arcs[i].timing.periods()).sum();
                if chain_periods != voc.timing.periods() {
                    return Err(GraphError::Unsupported {
                        reason: format!(
                            "segment branch durations differ: chain {}T vs vocalic {}T",
                            chain_periods,
                            voc.timing.periods()
                        ),
                    });
                }
                for &i in chain {
                    if !self.arcs[i].selection.is_exclusive_with(&voc.selection) {
                        return Err(GraphError::Unsupported {
                            reason: "segment selections are not exclusive".into(),
                        });
                    }
                }
                // both branches share departure and arrival
                let first = chain.first().copied().unwrap();
                let last = chain.last().copied().unwrap();
                if self.arcs[first].from != voc.from || self.arcs[last].to != voc.to {
                    return Err(GraphError::Unsupported {
                        reason: "segment branches do not share endpoints".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

struct Builder<'a> {
    inventory: &'a PhonemeInventory,
    opts: SyllableOptions,
    graph: SyllableGraph,
}

impl<'a> Builder<'a> {
    /// Consonant chain plus vocalic arc between two nodes, n = consonants + 1.
    fn push_segment(
        &mut self,
        from: NodeId,
        to: NodeId,
        consonants: &[NodeId],
        selection: SelectionVector,
    ) {
        let g = &mut self.graph;
        let n = consonants.len() as u32 + 1;
        let mut chain = Vec::with_capacity(consonants.len() + 1);
        let mut prev = from;
        for (i, &c) in consonants.iter().enumerate() {
            let orientation = if i == 0 {
                Orientation::O1
            } else {
                Orientation::O2
            };
            g.arcs.push(GraphArc {
                from: prev,
                to: c,
                timing: ArcTiming::Oriented {
                    periods: 1,
                    orientation,
                },
                selection,
                branch: Branch::Consonantal,
                nu: 1.0,
                k: K_CONSONANT,
            });
            chain.push(g.arcs.len() - 1);
            prev = c;
        }
        g.arcs.push(GraphArc {
            from: prev,
            to,
            timing: ArcTiming::Oriented {
                periods: 1,
                orientation: Orientation::O2,
            },
            selection,
            branch: Branch::Consonantal,
            nu: 1.0,
            k: K_CONSONANT,
        });
        chain.push(g.arcs.len() - 1);
        g.arcs.push(GraphArc {
            from,
            to,
            timing: ArcTiming::Oriented {
                periods: n,
                orientation: Orientation::O2,
            },
            selection: selection.complement(),
            branch: Branch::Vocalic,
            nu: 1.0,
            k: K_VOWEL,
        });
        let vocalic = g.arcs.len() - 1;
        g.elements.push(Element::Segment { chain, vocalic });
    }

    fn push_hold(&mut self, node: NodeId, periods: u32) {
        if periods == 0 {
            return;
        }
        let g = &mut self.graph;
        g.arcs.push(GraphArc {
            from: node,
            to: node,
            timing: ArcTiming::Hold { periods },
            selection: SelectionVector::neutral(),
            branch: Branch::Neutral,
            nu: 1.0,
            k: K_VOWEL,
        });
        let arc = g.arcs.len() - 1;
        g.elements.push(Element::Neutral { arc });
    }

    fn push_glide(&mut self, from: NodeId, to: NodeId) {
        let g = &mut self.graph;
        g.arcs.push(GraphArc {
            from,
            to,
            timing: ArcTiming::Oriented {
                periods: 1,
                orientation: Orientation::O2,
            },
            selection: SelectionVector::neutral(),
            branch: Branch::Neutral,
            nu: 1.0,
            k: K_VOWEL,
        });
        let arc = g.arcs.len() - 1;
        g.elements.push(Element::Neutral { arc });
    }

    /// Resolves chain locations and the shared selection for a one- or
    /// two-consonant chain keyed on the anchoring vowel.
    fn chain_parts(
        &self,
        consonants: &[String],
        vowel_theta: f64,
    ) -> Result<(Vec<(String, PolarPoint)>, SelectionVector), GraphError> {
        let in_cluster = consonants.len() > 1;
        let mut located = Vec::with_capacity(consonants.len());
        for sym in consonants {
            let def = self.inventory.consonant(sym)?;
            located.push((sym.clone(), def.location.resolve(vowel_theta, in_cluster)));
        }
        let selection = match consonants {
            [single] => self.inventory.consonant(single)?.selection,
            [a, b] => self.inventory.cluster_selection(a, b),
            _ => {
                return Err(GraphError::Unsupported {
                    reason: format!("consonant cluster of length {}", consonants.len()),
                })
            }
        };
        Ok((located, selection))
    }
}

/// Builds a single-syllable graph: optional onset chain into the nucleus,
/// holds and glides across the nucleus vowels, optional coda chain out to the
/// coda anchor. Onset and coda are limited to two consonants.
pub fn build_syllable_nucleus(
    onset: &[String],
    nucleus: &[String],
    coda: &[String],
    opts: SyllableOptions,
    inventory: &PhonemeInventory,
) -> Result<SyllableGraph, GraphError> {
    if nucleus.is_empty() {
        return Err(GraphError::Unsupported {
            reason: "syllable without a vowel".into(),
        });
    }
    if onset.len() > 2 || coda.len() > 2 {
        return Err(GraphError::Unsupported {
            reason: "more than two consonants in a cluster".into(),
        });
    }
    let mut b = Builder {
        inventory,
        opts,
        graph: SyllableGraph::empty((opts.delta_onset, opts.delta_coda)),
    };

    let vowel_points: Vec<PolarPoint> = nucleus
        .iter()
        .map(|sym| inventory.vowel(sym))
        .collect::<Result<_, _>>()?;

    // nucleus vowel nodes
    let vowel_nodes: Vec<NodeId> = nucleus
        .iter()
        .zip(&vowel_points)
        .map(|(sym, point)| b.graph.push_node(NodeRole::Vowel, sym, *point))
        .collect();

    if !onset.is_empty() {
        let first_vowel = vowel_points[0];
        let anchor = first_vowel.scaled(opts.delta_onset);
        let v_o = b.graph.push_node(NodeRole::AnchorOnset, "Vo", anchor);
        let (located, selection) = b.chain_parts(onset, first_vowel.theta())?;
        let cons_nodes: Vec<NodeId> = located
            .iter()
            .map(|(sym, loc)| b.graph.push_node(NodeRole::Consonant, sym, *loc))
            .collect();
        b.push_segment(v_o, vowel_nodes[0], &cons_nodes, selection);
    }

    for (j, &vnode) in vowel_nodes.iter().enumerate() {
        let last = j == vowel_nodes.len() - 1;
        let periods = if last && !coda.is_empty() && !onset.is_empty() {
            // CVC mid-vowel: lengthening before the coda is optional
            b.opts.mid_hold_periods
        } else {
            1
        };
        b.push_hold(vnode, periods);
        if !last {
            b.push_glide(vnode, vowel_nodes[j + 1]);
        }
    }

    if !coda.is_empty() {
        let last_vowel = *vowel_points.last().unwrap();
        let anchor = last_vowel.scaled(opts.delta_coda);
        let (located, selection) = b.chain_parts(coda, last_vowel.theta())?;
        let cons_nodes: Vec<NodeId> = located
            .iter()
            .map(|(sym, loc)| b.graph.push_node(NodeRole::Consonant, sym, *loc))
            .collect();
        let v_e = b.graph.push_node(NodeRole::AnchorCoda, "Ve", anchor);
        b.push_segment(*vowel_nodes.last().unwrap(), v_e, &cons_nodes, selection);
    }

    b.graph.syllables.push(SyllableLabel {
        onset: onset.to_vec(),
        nucleus: nucleus.to_vec(),
        coda: coda.to_vec(),
        pause_before: false,
    });
    Ok(b.graph)
}

/// Single-vowel convenience form of [`build_syllable_nucleus`].
pub fn build_syllable(
    onset: &[String],
    vowel: &str,
    coda: &[String],
    opts: SyllableOptions,
    inventory: &PhonemeInventory,
) -> Result<SyllableGraph, GraphError> {
    build_syllable_nucleus(onset, &[vowel.to_string()], coda, opts, inventory)
}

fn boundary_roles(left: &SyllableGraph, right: &SyllableGraph) -> (NodeRole, NodeRole) {
    let l = left.exit_node().map(|n| left.nodes[n].role);
    let r = right.entry_node().map(|n| right.nodes[n].role);
    (
        l.unwrap_or(NodeRole::Vowel),
        r.unwrap_or(NodeRole::Vowel),
    )
}

/// Appends `right` onto `left` without joining; returns the node id offset.
fn append_graph(left: &mut SyllableGraph, right: &SyllableGraph) -> (usize, usize) {
    let node_offset = left.nodes.len();
    let arc_offset = left.arcs.len();
    left.nodes.extend(right.nodes.iter().cloned());
    for arc in &right.arcs {
        let mut a = arc.clone();
        a.from += node_offset;
        a.to += node_offset;
        left.arcs.push(a);
    }
    for el in &right.elements {
        left.elements.push(match el {
            Element::Segment { chain, vocalic } => Element::Segment {
                chain: chain.iter().map(|i| i + arc_offset).collect(),
                vocalic: vocalic + arc_offset,
            },
            Element::Neutral { arc } => Element::Neutral {
                arc: arc + arc_offset,
            },
        });
    }
    left.syllables.extend(right.syllables.iter().cloned());
    (node_offset, arc_offset)
}

/// Replaces every reference to node `dead` with `survivor`, removes `dead`
/// and compacts node ids.
fn unify_nodes(graph: &mut SyllableGraph, dead: NodeId, survivor: NodeId) {
    for arc in &mut graph.arcs {
        if arc.from == dead {
            arc.from = survivor;
        }
        if arc.to == dead {
            arc.to = survivor;
        }
    }
    graph.nodes.remove(dead);
    for arc in &mut graph.arcs {
        if arc.from > dead {
            arc.from -= 1;
        }
        if arc.to > dead {
            arc.to -= 1;
        }
    }
}

/// Joins two graphs at a syllable boundary. The context decides the case:
/// an open left meets a consonant onset by lending its vowel as the onset
/// anchor; two consonants share the coda anchor; a coda runs straight into a
/// following vowel. Two open vowels meet through a one-period glide.
pub fn concatenate(
    left: &SyllableGraph,
    right: &SyllableGraph,
) -> Result<SyllableGraph, GraphError> {
    if right.elements.is_empty() {
        return Ok(left.clone());
    }
    if left.elements.is_empty() {
        return Ok(right.clone());
    }
    let (l_role, r_role) = boundary_roles(left, right);
    let left_exit = left.exit_node().unwrap();
    let right_entry = right.entry_node().unwrap();

    let mut g = left.clone();
    match (l_role, r_role) {
        // xV.Cx: the right onset departs from the left vowel itself
        (NodeRole::Vowel, NodeRole::AnchorOnset) => {
            let (offset, _) = append_graph(&mut g, right);
            unify_nodes(&mut g, offset + right_entry, left_exit);
        }
        // xC.Cx: the onset anchor is the coda anchor
        (NodeRole::AnchorCoda, NodeRole::AnchorOnset) => {
            let (offset, _) = append_graph(&mut g, right);
            unify_nodes(&mut g, offset + right_entry, left_exit);
        }
        // xC.Vx: the coda lands on the next vowel directly
        (NodeRole::AnchorCoda, NodeRole::Vowel) => {
            let (offset, _) = append_graph(&mut g, right);
            // survivor is the right vowel: keep its role and location
            unify_nodes(&mut g, left_exit, offset + right_entry);
        }
        // open vowel to open vowel: a diphthong transition
        (NodeRole::Vowel, NodeRole::Vowel) => {
            let insert_at = g.elements.len();
            let (offset, _) = append_graph(&mut g, right);
            g.arcs.push(GraphArc {
                from: left_exit,
                to: offset + right_entry,
                timing: ArcTiming::Oriented {
                    periods: 1,
                    orientation: Orientation::O2,
                },
                selection: SelectionVector::neutral(),
                branch: Branch::Neutral,
                nu: 1.0,
                k: K_VOWEL,
            });
            let arc = g.arcs.len() - 1;
            g.elements.insert(insert_at, Element::Neutral { arc });
        }
        (l, r) => {
            return Err(GraphError::Unsupported {
                reason: format!("cannot join boundary roles {l:?} and {r:?}"),
            })
        }
    }
    Ok(g)
}

/// Separates two graphs by a pause: a neutral glide of fixed duration from
/// the left terminal to the right entry. A zero pause degenerates to
/// [`concatenate`].
pub fn insert_pause(
    left: &SyllableGraph,
    right: &SyllableGraph,
    pause_ms: f64,
) -> Result<SyllableGraph, GraphError> {
    if pause_ms < 0.0 {
        return Err(GraphError::NegativePause { ms: pause_ms });
    }
    if pause_ms == 0.0 {
        return concatenate(left, right);
    }
    if left.elements.is_empty() {
        return Ok(right.clone());
    }
    let left_exit = left.exit_node().unwrap();
    let right_entry = right.entry_node().unwrap();
    let mut g = left.clone();
    let insert_at = g.elements.len();
    let first_right_syllable = g.syllables.len();
    let (offset, _) = append_graph(&mut g, right);
    g.arcs.push(GraphArc {
        from: left_exit,
        to: offset + right_entry,
        timing: ArcTiming::Pause { ms: pause_ms },
        selection: SelectionVector::neutral(),
        branch: Branch::Neutral,
        nu: 1.0,
        k: K_VOWEL,
    });
    let arc = g.arcs.len() - 1;
    g.elements.insert(insert_at, Element::Neutral { arc });
    if let Some(syl) = g.syllables.get_mut(first_right_syllable) {
        syl.pause_before = true;
    }
    Ok(g)
}

/// Relabels a chain of coda syllables into onset-aligned form. The graph
/// itself (nodes, arcs, durations, selections) is untouched; only the
/// syllable overlay is recomputed, so the compiled flow is identical.
pub fn resyllabify_vc_chain(graph: &SyllableGraph) -> Result<SyllableGraph, GraphError> {
    if graph.deltas != (1.0, 1.0) {
        return Err(GraphError::NotApplicable {
            reason: format!("deltas {:?} are not (1, 1)", graph.deltas),
        });
    }
    if graph.has_pause() {
        return Err(GraphError::NotApplicable {
            reason: "graph contains a pause".into(),
        });
    }
    if graph
        .nodes
        .iter()
        .any(|n| n.role == NodeRole::AnchorOnset)
    {
        return Err(GraphError::NotApplicable {
            reason: "graph has onset anchors; not a vowel-coda chain".into(),
        });
    }

    #[derive(Default)]
    struct Current {
        onset: Vec<String>,
        nucleus_syms: Vec<String>,
        nucleus_nodes: Vec<NodeId>,
    }

    let mut out: Vec<SyllableLabel> = Vec::new();
    let mut current: Option<Current> = None;
    let close = |current: &mut Option<Current>, out: &mut Vec<SyllableLabel>| {
        if let Some(c) = current.take() {
            out.push(SyllableLabel {
                onset: c.onset,
                nucleus: c.nucleus_syms,
                coda: Vec::new(),
                pause_before: false,
            });
        }
    };

    for el in &graph.elements {
        match el {
            Element::Segment { chain, vocalic } => {
                let arrival = graph.arcs[*vocalic].to;
                let chain_syms: Vec<String> = chain
                    .iter()
                    .map(|&i| graph.nodes[graph.arcs[i].to].label.clone())
                    .take(chain.len() - 1)
                    .collect();
                match graph.nodes[arrival].role {
                    NodeRole::Vowel => {
                        close(&mut current, &mut out);
                        current = Some(Current {
                            onset: chain_syms,
                            nucleus_syms: vec![graph.nodes[arrival].label.clone()],
                            nucleus_nodes: vec![arrival],
                        });
                    }
                    NodeRole::AnchorCoda => {
                        // dangling consonant group: its own trailing syllable
                        close(&mut current, &mut out);
                        out.push(SyllableLabel {
                            onset: chain_syms,
                            nucleus: Vec::new(),
                            coda: Vec::new(),
                            pause_before: false,
                        });
                    }
                    role => {
                        return Err(GraphError::NotApplicable {
                            reason: format!("segment arrives at {role:?}"),
                        })
                    }
                }
            }
            Element::Neutral { arc } => {
                let a = &graph.arcs[*arc];
                if a.from == a.to {
                    let belongs = current
                        .as_ref()
                        .is_some_and(|c| c.nucleus_nodes.last() == Some(&a.from));
                    if !belongs {
                        close(&mut current, &mut out);
                        current = Some(Current {
                            onset: Vec::new(),
                            nucleus_syms: vec![graph.nodes[a.from].label.clone()],
                            nucleus_nodes: vec![a.from],
                        });
                    }
                } else {
                    // diphthong glide extends the nucleus
                    if let Some(c) = current.as_mut() {
                        c.nucleus_syms.push(graph.nodes[a.to].label.clone());
                        c.nucleus_nodes.push(a.to);
                    }
                }
            }
        }
    }
    close(&mut current, &mut out);

    let mut g = graph.clone();
    g.syllables = out;
    Ok(g)
}

/// Junction anchors eligible for cluster fusion: arrival of a one-consonant
/// coda segment and departure of a one-consonant onset segment, back to back.
pub fn fusable_junctions(graph: &SyllableGraph) -> Vec<NodeId> {
    let mut out = Vec::new();
    for pair in graph.elements.windows(2) {
        if let (
            Element::Segment {
                chain: lc,
                vocalic: lv,
            },
            Element::Segment {
                chain: rc,
                vocalic: rv,
            },
        ) = (&pair[0], &pair[1])
        {
            let junction = graph.arcs[*lv].to;
            // a syllable-internal vowel also joins two segments; only the
            // identified coda/onset anchor is a fusion site
            if graph.arcs[*rv].from == junction
                && graph.nodes[junction].role != NodeRole::Vowel
                && lc.len() == 2
                && rc.len() == 2
            {
                out.push(junction);
            }
        }
    }
    out
}

/// Fuses the two superimposed segments meeting at `junction` into a single
/// cluster segment: the coda and onset consonants chain inside one 3T
/// segment, the junction anchor disappears, and the pair's cluster selection
/// replaces the two per-consonant selections. Total planned duration drops by
/// exactly one period.
pub fn fuse_cluster(
    graph: &SyllableGraph,
    junction: NodeId,
    inventory: &PhonemeInventory,
) -> Result<SyllableGraph, GraphError> {
    if graph.deltas != (1.0, 1.0) {
        return Err(GraphError::NotApplicable {
            reason: format!("deltas {:?} are not (1, 1)", graph.deltas),
        });
    }
    // locate the consecutive segment pair meeting at the junction
    let mut found: Option<usize> = None;
    for (i, pair) in graph.elements.windows(2).enumerate() {
        if let (
            Element::Segment { vocalic: lv, .. },
            Element::Segment { vocalic: rv, .. },
        ) = (&pair[0], &pair[1])
        {
            if graph.arcs[*lv].to == junction
                && graph.arcs[*rv].from == junction
                && graph.nodes[junction].role != NodeRole::Vowel
            {
                found = Some(i);
                break;
            }
        }
    }
    let left_index = found.ok_or_else(|| GraphError::NotApplicable {
        reason: format!("node {junction} is not a segment-to-segment junction"),
    })?;

    let (left_chain, left_voc) = match &graph.elements[left_index] {
        Element::Segment { chain, vocalic } => (chain.clone(), *vocalic),
        _ => unreachable!(),
    };
    let (right_chain, right_voc) = match &graph.elements[left_index + 1] {
        Element::Segment { chain, vocalic } => (chain.clone(), *vocalic),
        _ => unreachable!(),
    };
    if left_chain.len() != 2 || right_chain.len() != 2 {
        return Err(GraphError::NotApplicable {
            reason: "fusion needs exactly one consonant on each side".into(),
        });
    }

    let c1 = graph.arcs[left_chain[0]].to;
    let c2 = graph.arcs[right_chain[0]].to;
    let v1 = graph.arcs[left_voc].from;
    let v2 = graph.arcs[right_voc].to;
    let c1_sym = graph.nodes[c1].label.clone();
    let c2_sym = graph.nodes[c2].label.clone();
    let selection = inventory.cluster_selection(&c1_sym, &c2_sym);

    // rebuild arcs and elements, dropping the six fused arcs
    let dead_arcs: Vec<usize> = left_chain
        .iter()
        .chain(right_chain.iter())
        .copied()
        .chain([left_voc, right_voc])
        .collect();
    let mut g = SyllableGraph::empty(graph.deltas);
    g.nodes = graph.nodes.clone();
    g.syllables = graph.syllables.clone();

    // cluster consonants re-anchor on the arrival vowel
    let arrival_theta = g.nodes[v2].location.theta();
    for (node, sym) in [(c1, &c1_sym), (c2, &c2_sym)] {
        let def = inventory.consonant(sym)?;
        g.nodes[node].location = def.location.resolve(arrival_theta, true);
    }

    let mut arc_map = vec![usize::MAX; graph.arcs.len()];
    for (i, arc) in graph.arcs.iter().enumerate() {
        if dead_arcs.contains(&i) {
            continue;
        }
        arc_map[i] = g.arcs.len();
        g.arcs.push(arc.clone());
    }

    for (i, el) in graph.elements.iter().enumerate() {
        if i == left_index {
            // the fused 3T segment
            let base = g.arcs.len();
            for (idx, (from, to, orientation)) in [
                (v1, c1, Orientation::O1),
                (c1, c2, Orientation::O2),
                (c2, v2, Orientation::O2),
            ]
            .into_iter()
            .enumerate()
            {
                let _ = idx;
                g.arcs.push(GraphArc {
                    from,
                    to,
                    timing: ArcTiming::Oriented {
                        periods: 1,
                        orientation,
                    },
                    selection,
                    branch: Branch::Consonantal,
                    nu: 1.0,
                    k: K_CONSONANT,
                });
            }
            g.arcs.push(GraphArc {
                from: v1,
                to: v2,
                timing: ArcTiming::Oriented {
                    periods: 3,
                    orientation: Orientation::O2,
                },
                selection: selection.complement(),
                branch: Branch::Vocalic,
                nu: 1.0,
                k: K_VOWEL,
            });
            g.elements.push(Element::Segment {
                chain: vec![base, base + 1, base + 2],
                vocalic: base + 3,
            });
            continue;
        }
        if i == left_index + 1 {
            continue;
        }
        g.elements.push(match el {
            Element::Segment { chain, vocalic } => Element::Segment {
                chain: chain.iter().map(|&a| arc_map[a]).collect(),
                vocalic: arc_map[*vocalic],
            },
            Element::Neutral { arc } => Element::Neutral { arc: arc_map[*arc] },
        });
    }

    // drop the junction node (nothing references it any more)
    g.nodes.remove(junction);
    for arc in &mut g.arcs {
        if arc.from > junction {
            arc.from -= 1;
        }
        if arc.to > junction {
            arc.to -= 1;
        }
    }

    // overlay: the owning syllable loses its coda, the next gains the cluster
    // onset; junction pairs and overlay adjacencies line up one to one
    let junction_ordinal = {
        let mut ord = 0usize;
        for &j in &fusable_junctions(graph) {
            if j == junction {
                break;
            }
            ord += 1;
        }
        ord
    };
    let mut seen = 0usize;
    let mut done = false;
    for k in 0..g.syllables.len().saturating_sub(1) {
        let applies = !g.syllables[k].coda.is_empty() && !g.syllables[k + 1].onset.is_empty();
        if applies {
            if seen == junction_ordinal {
                let coda = std::mem::take(&mut g.syllables[k].coda);
                let mut onset = coda;
                onset.append(&mut g.syllables[k + 1].onset);
                g.syllables[k + 1].onset = onset;
                done = true;
                break;
            }
            seen += 1;
        }
    }
    if !done {
        return Err(GraphError::NotApplicable {
            reason: "syllable overlay does not match the junction".into(),
        });
    }

    Ok(g)
}

/// JSON export of a graph with arc durations resolved to frames.
pub fn export_json(graph: &SyllableGraph, period_t: f64, dt: f64) -> String {
    #[derive(Serialize)]
    struct ArcOut<'a> {
        from: NodeId,
        to: NodeId,
        timing: &'a ArcTiming,
        duration_frames: usize,
        selection: &'a SelectionVector,
        branch: Branch,
        nu: f64,
        k: f64,
    }
    #[derive(Serialize)]
    struct GraphOut<'a> {
        nodes: &'a [GraphNode],
        arcs: Vec<ArcOut<'a>>,
        elements: &'a [Element],
        syllables: &'a [SyllableLabel],
        deltas: (f64, f64),
        spelling: String,
    }
    let arcs = graph
        .arcs
        .iter()
        .map(|a| ArcOut {
            from: a.from,
            to: a.to,
            timing: &a.timing,
            duration_frames: (a.timing.duration_ms(period_t) / dt).round() as usize,
            selection: &a.selection,
            branch: a.branch,
            nu: a.nu,
            k: a.k,
        })
        .collect();
    let out = GraphOut {
        nodes: &graph.nodes,
        arcs,
        elements: &graph.elements,
        syllables: &graph.syllables,
        deltas: graph.deltas,
        spelling: graph.spell(),
    };
    serde_json::to_string_pretty(&out).expect("graph serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::PhonemeInventory;

    fn inv() -> PhonemeInventory {
        PhonemeInventory::default_inventory()
    }

    fn syms(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    fn timings(g: &SyllableGraph) -> Vec<(u32, Option<Orientation>)> {
        g.arcs
            .iter()
            .map(|a| match a.timing {
                ArcTiming::Oriented {
                    periods,
                    orientation,
                } => (periods, Some(orientation)),
                ArcTiming::Hold { periods } => (periods, None),
                ArcTiming::Pause { .. } => (0, None),
            })
            .collect()
    }

    #[test]
    fn cv_structure() {
        let g = build_syllable(&syms(&["b"]), "i", &[], SyllableOptions::default(), &inv())
            .unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.arcs.len(), 4);
        // timing set {T1, T2, 2T2, T}
        assert_eq!(
            timings(&g),
            vec![
                (1, Some(Orientation::O1)),
                (1, Some(Orientation::O2)),
                (2, Some(Orientation::O2)),
                (1, None),
            ]
        );
        // selection set {Sc, Sc, Sv, neutral}
        assert_eq!(g.arcs[0].selection.indices(), vec![1, 2, 6]);
        assert_eq!(g.arcs[1].selection.indices(), vec![1, 2, 6]);
        assert_eq!(g.arcs[2].selection.indices(), vec![3, 4, 5, 7]);
        assert!(g.arcs[3].selection.is_neutral());
        g.validate().unwrap();
        assert_eq!(g.spell(), "bi");
    }

    #[test]
    fn cvc_has_five_nodes() {
        let g = build_syllable(
            &syms(&["b"]),
            "i",
            &syms(&["g"]),
            SyllableOptions::default(),
            &inv(),
        )
        .unwrap();
        assert_eq!(g.nodes.len(), 5);
        let roles: Vec<NodeRole> = g.nodes.iter().map(|n| n.role).collect();
        assert_eq!(roles.iter().filter(|r| **r == NodeRole::Vowel).count(), 1);
        assert_eq!(
            roles.iter().filter(|r| **r == NodeRole::Consonant).count(),
            2
        );
        assert!(roles.contains(&NodeRole::AnchorOnset));
        assert!(roles.contains(&NodeRole::AnchorCoda));
        g.validate().unwrap();
        // two superimposed segments, no mid hold by default
        assert_eq!(g.elements.len(), 2);
        assert_eq!(g.spell(), "big");
    }

    #[test]
    fn ccv_structure() {
        let g = build_syllable(
            &syms(&["g", "b"]),
            "i",
            &[],
            SyllableOptions::default(),
            &inv(),
        )
        .unwrap();
        assert_eq!(g.nodes.len(), 4);
        assert_eq!(g.arcs.len(), 5);
        assert_eq!(
            timings(&g),
            vec![
                (1, Some(Orientation::O1)),
                (1, Some(Orientation::O2)),
                (1, Some(Orientation::O2)),
                (3, Some(Orientation::O2)),
                (1, None),
            ]
        );
        // the pair contains /b/: cluster selection {1,2,3,6} on all chain arcs
        for i in 0..3 {
            assert_eq!(g.arcs[i].selection.indices(), vec![1, 2, 3, 6]);
        }
        assert_eq!(g.arcs[3].selection.indices(), vec![4, 5, 7]);
        g.validate().unwrap();
    }

    #[test]
    fn anchors_scale_with_deltas() {
        let opts = SyllableOptions {
            delta_onset: 0.5,
            delta_coda: 0.7,
            mid_hold_periods: 0,
        };
        let g = build_syllable(&syms(&["b"]), "i", &syms(&["d"]), opts, &inv()).unwrap();
        let vo = g
            .nodes
            .iter()
            .find(|n| n.role == NodeRole::AnchorOnset)
            .unwrap();
        let ve = g
            .nodes
            .iter()
            .find(|n| n.role == NodeRole::AnchorCoda)
            .unwrap();
        let v = inv().vowel("i").unwrap();
        assert!((vo.location.rho() - 0.5 * v.rho()).abs() < 1e-12);
        assert!((vo.location.theta() - v.theta()).abs() < 1e-12);
        assert!((ve.location.rho() - 0.7 * v.rho()).abs() < 1e-12);
    }

    #[test]
    fn onset_longer_than_two_rejected() {
        let err = build_syllable(
            &syms(&["b", "d", "g"]),
            "i",
            &[],
            SyllableOptions::default(),
            &inv(),
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Unsupported { .. }));
    }

    #[test]
    fn unknown_symbol_rejected() {
        assert!(build_syllable(&syms(&["x"]), "i", &[], SyllableOptions::default(), &inv())
            .is_err());
        assert!(build_syllable(&[], "y", &[], SyllableOptions::default(), &inv()).is_err());
    }

    #[test]
    fn durations_add_up() {
        let opts = SyllableOptions::default();
        let cv = build_syllable(&syms(&["b"]), "i", &[], opts, &inv()).unwrap();
        assert_eq!(cv.duration_ms(100.0), 300.0); // 2T segment + T hold
        let cvc = build_syllable(&syms(&["b"]), "i", &syms(&["g"]), opts, &inv()).unwrap();
        assert_eq!(cvc.duration_ms(100.0), 400.0); // 2T + 2T
        let ccv = build_syllable(&syms(&["g", "b"]), "i", &[], opts, &inv()).unwrap();
        assert_eq!(ccv.duration_ms(100.0), 400.0); // 3T + T hold
    }

    #[test]
    fn concatenate_open_to_onset_shares_the_vowel() {
        let opts = SyllableOptions::default();
        let bi = build_syllable(&syms(&["b"]), "i", &[], opts, &inv()).unwrap();
        let gbi = build_syllable(&syms(&["g", "b"]), "i", &[], opts, &inv()).unwrap();
        let g = concatenate(&bi, &gbi).unwrap();
        g.validate().unwrap();
        // bi has 3 nodes, gbi has 4; the shared vowel removes one
        assert_eq!(g.nodes.len(), 6);
        assert_eq!(g.spell(), "bi.gbi");
        // the second segment departs from the left vowel node (full radius)
        let second_voc = match &g.elements[2] {
            Element::Segment { vocalic, .. } => *vocalic,
            _ => panic!("expected segment"),
        };
        let dep = g.arcs[second_voc].from;
        assert_eq!(g.nodes[dep].role, NodeRole::Vowel);
        assert_eq!(g.nodes[dep].label, "i");
    }

    #[test]
    fn concatenate_coda_to_onset_shares_the_anchor() {
        let opts = SyllableOptions::default();
        let big = build_syllable(&syms(&["b"]), "i", &syms(&["g"]), opts, &inv()).unwrap();
        let bi = build_syllable(&syms(&["b"]), "i", &[], opts, &inv()).unwrap();
        let g = concatenate(&big, &bi).unwrap();
        g.validate().unwrap();
        assert_eq!(g.nodes.len(), 5 + 3 - 1);
        assert_eq!(g.spell(), "big.bi");
        assert_eq!(g.duration_ms(100.0), 700.0);
    }

    #[test]
    fn concatenate_coda_to_vowel_merges_into_the_vowel() {
        let opts = SyllableOptions {
            delta_onset: 1.0,
            delta_coda: 1.0,
            mid_hold_periods: 0,
        };
        let ib = build_syllable(&[], "i", &syms(&["b"]), opts, &inv()).unwrap();
        let g = concatenate(&ib, &ib).unwrap();
        g.validate().unwrap();
        // junction anchor becomes the right vowel
        assert_eq!(g.spell(), "ib.ib");
        assert_eq!(g.duration_ms(100.0), 600.0);
        let roles: Vec<NodeRole> = g.nodes.iter().map(|n| n.role).collect();
        assert_eq!(roles.iter().filter(|r| **r == NodeRole::Vowel).count(), 2);
    }

    #[test]
    fn pause_inserts_fixed_glide_and_zero_degenerates() {
        let opts = SyllableOptions::default();
        let bi = build_syllable(&syms(&["b"]), "i", &[], opts, &inv()).unwrap();
        let gu = build_syllable(&syms(&["g"]), "u", &[], opts, &inv()).unwrap();
        let paused = insert_pause(&bi, &gu, 150.0).unwrap();
        assert!(paused.has_pause());
        assert_eq!(paused.duration_ms(100.0), 300.0 + 150.0 + 300.0);
        assert_eq!(paused.spell(), "bi gu");
        let zero = insert_pause(&bi, &gu, 0.0).unwrap();
        let joined = concatenate(&bi, &gu).unwrap();
        assert_eq!(zero, joined);
        assert!(insert_pause(&bi, &gu, -1.0).is_err());
    }

    #[test]
    fn resyllabify_relabels_without_touching_structure() {
        let opts = SyllableOptions {
            delta_onset: 1.0,
            delta_coda: 1.0,
            mid_hold_periods: 0,
        };
        let ib = build_syllable(&[], "i", &syms(&["b"]), opts, &inv()).unwrap();
        let word = concatenate(&ib, &ib).unwrap();
        let relabeled = resyllabify_vc_chain(&word).unwrap();
        assert_eq!(relabeled.spell(), "i.bi.b");
        assert_eq!(relabeled.nodes, word.nodes);
        assert_eq!(relabeled.arcs, word.arcs);
        assert_eq!(relabeled.elements, word.elements);
        // idempotent
        let twice = resyllabify_vc_chain(&relabeled).unwrap();
        assert_eq!(twice, relabeled);
        // single syllable
        let single = resyllabify_vc_chain(&ib).unwrap();
        assert_eq!(single.spell(), "i.b");
    }

    #[test]
    fn resyllabify_preconditions() {
        let opts = SyllableOptions::default(); // deltas 0.7
        let ib = build_syllable(&[], "i", &syms(&["b"]), opts, &inv()).unwrap();
        assert!(matches!(
            resyllabify_vc_chain(&ib),
            Err(GraphError::NotApplicable { .. })
        ));
        let unit = SyllableOptions {
            delta_onset: 1.0,
            delta_coda: 1.0,
            mid_hold_periods: 0,
        };
        let a = build_syllable(&[], "i", &syms(&["b"]), unit, &inv()).unwrap();
        let b = build_syllable(&[], "i", &syms(&["b"]), unit, &inv()).unwrap();
        let paused = insert_pause(&a, &b, 50.0).unwrap();
        assert!(matches!(
            resyllabify_vc_chain(&paused),
            Err(GraphError::NotApplicable { .. })
        ));
    }

    #[test]
    fn fuse_big_bi_into_bi_gbi() {
        let opts = SyllableOptions {
            delta_onset: 1.0,
            delta_coda: 1.0,
            mid_hold_periods: 0,
        };
        let big = build_syllable(&syms(&["b"]), "i", &syms(&["g"]), opts, &inv()).unwrap();
        let bi = build_syllable(&syms(&["b"]), "i", &[], opts, &inv()).unwrap();
        let word = concatenate(&big, &bi).unwrap();
        let junctions = fusable_junctions(&word);
        assert_eq!(junctions.len(), 1);
        let fused = fuse_cluster(&word, junctions[0], &inv()).unwrap();
        fused.validate().unwrap();
        assert_eq!(fused.spell(), "bi.gbi");
        // node count decreases by one (the junction vowel anchor)
        assert_eq!(fused.nodes.len(), word.nodes.len() - 1);
        // duration decreases by exactly T
        assert_eq!(
            word.duration_ms(100.0) - fused.duration_ms(100.0),
            100.0
        );
        // the cluster selection switches to {1,2,3,6}
        let seg = fused
            .elements
            .iter()
            .find_map(|el| match el {
                Element::Segment { chain, vocalic } if chain.len() == 3 => {
                    Some((chain.clone(), *vocalic))
                }
                _ => None,
            })
            .unwrap();
        for &i in &seg.0 {
            assert_eq!(fused.arcs[i].selection.indices(), vec![1, 2, 3, 6]);
        }
        // /g/ turns palatal inside the cluster
        let g_node = fused.nodes.iter().find(|n| n.label == "g").unwrap();
        assert!((g_node.location.rho() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn fuse_requires_unit_deltas() {
        let opts = SyllableOptions::default();
        let big = build_syllable(&syms(&["b"]), "i", &syms(&["g"]), opts, &inv()).unwrap();
        let bi = build_syllable(&syms(&["b"]), "i", &[], opts, &inv()).unwrap();
        let word = concatenate(&big, &bi).unwrap();
        let junctions = fusable_junctions(&word);
        assert_eq!(junctions.len(), 1);
        assert!(matches!(
            fuse_cluster(&word, junctions[0], &inv()),
            Err(GraphError::NotApplicable { .. })
        ));
    }

    #[test]
    fn export_resolves_frame_durations() {
        let g = build_syllable(&syms(&["b"]), "i", &[], SyllableOptions::default(), &inv())
            .unwrap();
        let json = export_json(&g, 100.0, 1.0);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let frames: Vec<u64> = v["arcs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a["duration_frames"].as_u64().unwrap())
            .collect();
        assert_eq!(frames, vec![100, 100, 200, 100]);
        assert_eq!(v["spelling"], "bi");
    }
}
