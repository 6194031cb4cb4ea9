//! Compiles word graphs into continuous articulatory parameter flows.
//!
//! A flow is a 7 x N frame matrix sampled every `dt` ms. Each graph element
//! contributes `duration/dt` frames covering [0, duration): the closing value
//! of an element equals the first frame of the next one (both evaluate the
//! shared node), so concatenation is seamless and the total frame count is
//! exactly `word duration / dt`.
//!
//! Pure vocalic elements drive all seven parameters from one planning value.
//! A superimposed segment runs a consonant chain and a vocalic arc over the
//! same n*T span and routes each parameter to one branch by its selection
//! bit; picking (not mixing) keeps the reduction to the pure form exact when
//! the selection is neutral.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::{
    coordinate_complex_unchecked, PsiTable, ARTICULATOR_NAMES, PARAM_COUNT,
};
use crate::graph::{ArcTiming, Element, GraphArc, GraphError, NodeRole, SyllableGraph};
use crate::trajectory::{arc_position, ArcSpec, Orientation, TrajectoryError};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("frame period dt = {dt} ms must be positive")]
    BadStep { dt: f64 },
    #[error("period T = {t} ms must be positive")]
    BadPeriod { t: f64 },
    #[error("flow discontinuity entering element {element}")]
    Discontinuity { element: usize },
    #[error("unexpected column count {got} (want {want}) in CSV row {row}")]
    BadCsvRow { row: usize, got: usize, want: usize },
    #[error("unparseable number '{text}' in CSV row {row}")]
    BadCsvNumber { row: usize, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    AnchorOnset,
    Vowel,
    Consonant,
    AnchorCoda,
    PauseStart,
    PauseEnd,
}

impl From<NodeRole> for MarkerKind {
    fn from(role: NodeRole) -> Self {
        match role {
            NodeRole::AnchorOnset => MarkerKind::AnchorOnset,
            NodeRole::Vowel => MarkerKind::Vowel,
            NodeRole::Consonant => MarkerKind::Consonant,
            NodeRole::AnchorCoda => MarkerKind::AnchorCoda,
        }
    }
}

/// A labelled node-arrival frame (plus pause boundaries). Consonant markers
/// anchor the envelope dips and the locus measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub frame: usize,
    pub label: String,
    pub kind: MarkerKind,
}

/// A compiled articulatory flow.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterFlow {
    /// One 7-vector per frame.
    pub frames: Vec<[f64; PARAM_COUNT]>,
    /// Frame period in ms.
    pub dt: f64,
    pub markers: Vec<Marker>,
}

impl ParameterFlow {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Values of one articulator row across all frames.
    pub fn row(&self, index: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f[index]).collect()
    }

    /// First marker with the given kind and label, if any.
    pub fn find_marker(&self, kind: MarkerKind, label: &str) -> Option<&Marker> {
        self.markers
            .iter()
            .find(|m| m.kind == kind && m.label == label)
    }

    /// (start, end) frame pairs of pause spans.
    pub fn pause_spans(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start: Option<usize> = None;
        for m in &self.markers {
            match m.kind {
                MarkerKind::PauseStart => start = Some(m.frame),
                MarkerKind::PauseEnd => {
                    if let Some(s) = start.take() {
                        out.push((s, m.frame));
                    }
                }
                _ => {}
            }
        }
        out
    }
}

fn arc_spec(graph: &SyllableGraph, arc: &GraphArc, period_t: f64) -> ArcSpec {
    let from = graph.nodes[arc.from].location;
    let to = graph.nodes[arc.to].location;
    match arc.timing {
        ArcTiming::Oriented {
            periods,
            orientation,
        } => ArcSpec::new(from, to, orientation, periods, period_t, arc.nu, arc.k)
            .expect("graph arcs are validated"),
        ArcTiming::Hold { periods } => {
            ArcSpec::new(from, from, Orientation::O2, periods.max(1), period_t, arc.nu, arc.k)
                .expect("graph arcs are validated")
        }
        ArcTiming::Pause { ms } => {
            ArcSpec::new(from, to, Orientation::O2, 1, ms, arc.nu, arc.k)
                .expect("graph arcs are validated")
        }
    }
}

/// Planning value of a neutral arc at local time t (clamped to the arc span).
fn neutral_z(graph: &SyllableGraph, arc: &GraphArc, t: f64, period_t: f64) -> Complex64 {
    match arc.timing {
        ArcTiming::Hold { .. } => graph.nodes[arc.from].location.position(),
        _ => {
            let spec = arc_spec(graph, arc, period_t);
            let t = t.clamp(0.0, spec.duration());
            arc_position(t, &spec).expect("clamped time is in range")
        }
    }
}

/// Planning value along a consonant chain at local time t within the segment.
fn chain_z(
    graph: &SyllableGraph,
    chain: &[usize],
    t: f64,
    period_t: f64,
) -> Complex64 {
    let mut offset = 0.0;
    for (j, &arc_index) in chain.iter().enumerate() {
        let arc = &graph.arcs[arc_index];
        let dur = arc.timing.duration_ms(period_t);
        let last = j == chain.len() - 1;
        if t < offset + dur || last {
            let spec = arc_spec(graph, arc, period_t);
            let local = (t - offset).clamp(0.0, spec.duration());
            return arc_position(local, &spec).expect("clamped time is in range");
        }
        offset += dur;
    }
    unreachable!("chain is never empty")
}

/// Flow value of one element at local time t. Superimposed segments route
/// each parameter to the branch its selection bit names; the value is picked,
/// never summed, so exclusive selections stay exact.
fn element_value(
    graph: &SyllableGraph,
    element: &Element,
    t: f64,
    period_t: f64,
    table: &PsiTable,
) -> [f64; PARAM_COUNT] {
    match element {
        Element::Neutral { arc } => {
            let z = neutral_z(graph, &graph.arcs[*arc], t, period_t);
            coordinate_complex_unchecked(z, table).p
        }
        Element::Segment { chain, vocalic } => {
            let voc = &graph.arcs[*vocalic];
            let spec = arc_spec(graph, voc, period_t);
            let zv = arc_position(t.clamp(0.0, spec.duration()), &spec)
                .expect("clamped time is in range");
            let zc = chain_z(graph, chain, t, period_t);
            let pv = coordinate_complex_unchecked(zv, table).p;
            let pc = coordinate_complex_unchecked(zc, table).p;
            let s_c = graph.arcs[chain[0]].selection;
            let mut p = [0.0; PARAM_COUNT];
            for i in 0..PARAM_COUNT {
                p[i] = if s_c.selected(i) { pc[i] } else { pv[i] };
            }
            p
        }
    }
}

fn element_duration_ms(graph: &SyllableGraph, element: &Element, period_t: f64) -> f64 {
    match element {
        Element::Segment { vocalic, .. } => graph.arcs[*vocalic].timing.duration_ms(period_t),
        Element::Neutral { arc } => graph.arcs[*arc].timing.duration_ms(period_t),
    }
}

/// Closing value of an element: its value at the full duration, i.e. the
/// arrival-node coordinates. Equals the first frame of the following element.
pub fn element_end_value(
    graph: &SyllableGraph,
    element: &Element,
    period_t: f64,
    table: &PsiTable,
) -> [f64; PARAM_COUNT] {
    let dur = element_duration_ms(graph, element, period_t);
    element_value(graph, element, dur, period_t, table)
}

/// Compiles a single vocalic or neutral arc: a hold, diphthong glide or
/// pause. Returns `duration/dt` frames covering [0, duration).
pub fn compile_vocalic(
    graph: &SyllableGraph,
    arc_index: usize,
    period_t: f64,
    dt: f64,
    table: &PsiTable,
) -> Result<Vec<[f64; PARAM_COUNT]>, FlowError> {
    check_steps(period_t, dt)?;
    let arc = &graph.arcs[arc_index];
    let dur = arc.timing.duration_ms(period_t);
    let count = (dur / dt).round() as usize;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let z = neutral_z(graph, arc, k as f64 * dt, period_t);
        out.push(coordinate_complex_unchecked(z, table).p);
    }
    Ok(out)
}

/// Compiles one superimposed segment element. Returns `nT/dt` frames
/// covering [0, nT).
pub fn compile_superimposed(
    graph: &SyllableGraph,
    element_index: usize,
    period_t: f64,
    dt: f64,
    table: &PsiTable,
) -> Result<Vec<[f64; PARAM_COUNT]>, FlowError> {
    check_steps(period_t, dt)?;
    graph.validate()?;
    let element = &graph.elements[element_index];
    let dur = element_duration_ms(graph, element, period_t);
    let count = (dur / dt).round() as usize;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        out.push(element_value(graph, element, k as f64 * dt, period_t, table));
    }
    Ok(out)
}

fn check_steps(period_t: f64, dt: f64) -> Result<(), FlowError> {
    if !(dt > 0.0) {
        return Err(FlowError::BadStep { dt });
    }
    if !(period_t > 0.0) {
        return Err(FlowError::BadPeriod { t: period_t });
    }
    Ok(())
}

/// Compiles a whole word graph: elements in plan order, markers at every
/// node arrival, exact total frame count, and verified junction continuity.
pub fn compile_word(
    graph: &SyllableGraph,
    period_t: f64,
    dt: f64,
    table: &PsiTable,
) -> Result<ParameterFlow, FlowError> {
    check_steps(period_t, dt)?;
    graph.validate()?;

    let mut frames: Vec<[f64; PARAM_COUNT]> = Vec::new();
    let mut markers: Vec<Marker> = Vec::new();

    if let Some(entry) = graph.entry_node() {
        let node = &graph.nodes[entry];
        markers.push(Marker {
            frame: 0,
            label: node.label.clone(),
            kind: node.role.into(),
        });
    }

    let mut cum = 0.0f64;
    let mut prev_end: Option<[f64; PARAM_COUNT]> = None;
    for (ei, element) in graph.elements.iter().enumerate() {
        let dur = element_duration_ms(graph, element, period_t);
        let start_frame = (cum / dt).round() as usize;
        let end_frame = ((cum + dur) / dt).round() as usize;

        // shared-node evaluation must agree with the previous arrival exactly
        let first = element_value(graph, element, 0.0, period_t, table);
        if let Some(prev) = prev_end {
            if prev != first {
                return Err(FlowError::Discontinuity { element: ei });
            }
        }

        for f in start_frame..end_frame {
            let t_local = (f as f64 * dt - cum).clamp(0.0, dur);
            frames.push(element_value(graph, element, t_local, period_t, table));
        }

        match element {
            Element::Segment { chain, .. } => {
                let mut sub = 0.0;
                for &arc_index in chain {
                    let arc = &graph.arcs[arc_index];
                    sub += arc.timing.duration_ms(period_t);
                    let node = &graph.nodes[arc.to];
                    markers.push(Marker {
                        frame: ((cum + sub) / dt).round() as usize,
                        label: node.label.clone(),
                        kind: node.role.into(),
                    });
                }
            }
            Element::Neutral { arc } => {
                let a = &graph.arcs[*arc];
                match a.timing {
                    ArcTiming::Hold { .. } => {}
                    ArcTiming::Pause { .. } => {
                        markers.push(Marker {
                            frame: start_frame,
                            label: "pause".into(),
                            kind: MarkerKind::PauseStart,
                        });
                        markers.push(Marker {
                            frame: end_frame,
                            label: "pause".into(),
                            kind: MarkerKind::PauseEnd,
                        });
                        let node = &graph.nodes[a.to];
                        markers.push(Marker {
                            frame: end_frame,
                            label: node.label.clone(),
                            kind: node.role.into(),
                        });
                    }
                    ArcTiming::Oriented { .. } => {
                        let node = &graph.nodes[a.to];
                        markers.push(Marker {
                            frame: end_frame,
                            label: node.label.clone(),
                            kind: node.role.into(),
                        });
                    }
                }
            }
        }

        prev_end = Some(element_end_value(graph, element, period_t, table));
        cum += dur;
    }

    let total = (cum / dt).round() as usize;
    debug_assert_eq!(frames.len(), total);
    let _ = total;
    Ok(ParameterFlow {
        frames,
        dt,
        markers,
    })
}

/// Least-squares fit of a single planning value to one flow frame:
/// minimizes || p - omega - Re[psi * conj(z)] || over z. Returns the best z
/// and the residual norm. Frames of a pure vocalic element fit exactly;
/// frames of a genuine superimposed segment do not, which is the observable
/// lift of the planning dimension.
pub fn fit_single_z(
    frame: &[f64; PARAM_COUNT],
    table: &PsiTable,
) -> (Complex64, f64) {
    // design matrix rows: psi1_i * [cos psi2_i, sin psi2_i]
    let mut m00 = 0.0;
    let mut m01 = 0.0;
    let mut m11 = 0.0;
    let mut b0 = 0.0;
    let mut b1 = 0.0;
    let omega = table.omega();
    let mut rows = [[0.0f64; 2]; PARAM_COUNT];
    for (i, e) in table.entries().iter().enumerate() {
        let ax = e.psi1 * e.psi2.cos();
        let ay = e.psi1 * e.psi2.sin();
        rows[i] = [ax, ay];
        let y = frame[i] - omega[i];
        m00 += ax * ax;
        m01 += ax * ay;
        m11 += ay * ay;
        b0 += ax * y;
        b1 += ay * y;
    }
    let det = m00 * m11 - m01 * m01;
    let (x, y) = if det.abs() < 1e-12 {
        (0.0, 0.0)
    } else {
        ((m11 * b0 - m01 * b1) / det, (m00 * b1 - m01 * b0) / det)
    };
    let mut sse = 0.0;
    for (i, row) in rows.iter().enumerate() {
        let r = frame[i] - omega[i] - row[0] * x - row[1] * y;
        sse += r * r;
    }
    (Complex64::new(x, y), sse.sqrt())
}

/// CSV export: a header of articulator names, one row per frame. Values use
/// the shortest representation that parses back to the identical f64.
pub fn flow_to_csv(flow: &ParameterFlow) -> String {
    let mut out = String::with_capacity(flow.frames.len() * 64 + 64);
    out.push_str(&ARTICULATOR_NAMES.join(","));
    out.push('\n');
    for frame in &flow.frames {
        let row: Vec<String> = frame.iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a flow CSV body (header included) back into frame vectors.
pub fn frames_from_csv(text: &str) -> Result<Vec<[f64; PARAM_COUNT]>, FlowError> {
    let mut frames = Vec::new();
    for (row, line) in text.lines().enumerate() {
        if row == 0 || line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != PARAM_COUNT {
            return Err(FlowError::BadCsvRow {
                row,
                got: cells.len(),
                want: PARAM_COUNT,
            });
        }
        let mut frame = [0.0; PARAM_COUNT];
        for (i, cell) in cells.iter().enumerate() {
            frame[i] = cell.parse().map_err(|_| FlowError::BadCsvNumber {
                row,
                text: cell.to_string(),
            })?;
        }
        frames.push(frame);
    }
    Ok(frames)
}

#[derive(Serialize, Deserialize)]
struct MarkersFile {
    dt: f64,
    frame_count: usize,
    markers: Vec<Marker>,
}

/// Sidecar JSON for the markers of a compiled flow.
pub fn markers_to_json(flow: &ParameterFlow) -> String {
    let file = MarkersFile {
        dt: flow.dt,
        frame_count: flow.frames.len(),
        markers: flow.markers.clone(),
    };
    serde_json::to_string_pretty(&file).expect("marker serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coordination::{coordinate, PolarPoint};
    use crate::graph::{build_syllable, SyllableOptions};
    use crate::inventory::{PhonemeInventory, SelectionVector};
    use crate::parser::parse_word;
    use std::f64::consts::PI;

    fn inv() -> PhonemeInventory {
        PhonemeInventory::default_inventory()
    }

    fn table() -> PsiTable {
        PsiTable::default()
    }

    fn syms(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn stationary_hold_is_constant() {
        let g = build_syllable(&[], "i", &[], SyllableOptions::default(), &inv()).unwrap();
        // single hold arc
        let cols = compile_vocalic(&g, 0, 100.0, 1.0, &table()).unwrap();
        assert_eq!(cols.len(), 100);
        let expected = coordinate(PolarPoint::new(1.0, 5.0 * PI / 3.0).unwrap(), &table())
            .unwrap()
            .p;
        for c in &cols {
            assert_eq!(*c, cols[0]); // truly stationary
            for i in 0..PARAM_COUNT {
                assert!((c[i] - expected[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bi_word_has_exact_frame_count_and_markers() {
        let g = parse_word("bi", &inv(), SyllableOptions::default()).unwrap();
        let flow = compile_word(&g, 100.0, 1.0, &table()).unwrap();
        assert_eq!(flow.len(), 300); // 2T segment + T hold
        let b = flow.find_marker(MarkerKind::Consonant, "b").unwrap();
        assert_eq!(b.frame, 100);
        let v = flow.find_marker(MarkerKind::Vowel, "i").unwrap();
        assert_eq!(v.frame, 200);
        assert_eq!(flow.markers[0].frame, 0);
        assert_eq!(flow.markers[0].kind, MarkerKind::AnchorOnset);
    }

    #[test]
    fn neutral_selection_reduces_to_vocalic() {
        // with S_c empty and S_v neutral, the segment is columnwise the
        // vocalic compile
        let mut g =
            build_syllable(&syms(&["b"]), "i", &[], SyllableOptions::default(), &inv()).unwrap();
        for i in 0..2 {
            g.arcs[i].selection = SelectionVector::none();
        }
        g.arcs[2].selection = SelectionVector::neutral();
        let seg = compile_superimposed(&g, 0, 100.0, 1.0, &table()).unwrap();
        let voc = compile_vocalic(&g, 2, 100.0, 1.0, &table()).unwrap();
        assert_eq!(seg.len(), voc.len());
        for (a, b) in seg.iter().zip(voc.iter()) {
            for i in 0..PARAM_COUNT {
                assert!((a[i] - b[i]).abs() <= 1e-12);
                assert_eq!(a[i], b[i]); // picking makes it exact
            }
        }
    }

    #[test]
    fn selected_rows_follow_their_branches() {
        let g =
            build_syllable(&syms(&["b"]), "i", &[], SyllableOptions::default(), &inv()).unwrap();
        let seg = compile_superimposed(&g, 0, 100.0, 1.0, &table()).unwrap();
        // consonant rows {1,2,6} come from the chain, vowel rows {3,4,5,7}
        // from the vocalic arc; verify against single-branch compiles
        let voc = compile_vocalic(&g, 2, 100.0, 1.0, &table()).unwrap();
        for (k, frame) in seg.iter().enumerate() {
            for i in [2usize, 3, 4, 6] {
                assert_eq!(frame[i], voc[k][i]);
            }
        }
    }

    #[test]
    fn junction_continuity_is_exact() {
        let g = parse_word("ibia", &inv(), SyllableOptions::default()).unwrap();
        let flow = compile_word(&g, 100.0, 1.0, &table()).unwrap();
        // element boundaries at multiples of T: the stored junction frame must
        // equal the previous element's closing value bitwise
        let mut cum = 0usize;
        for (ei, el) in g.elements.iter().enumerate() {
            let dur = match el {
                Element::Segment { vocalic, .. } => g.arcs[*vocalic].timing.duration_ms(100.0),
                Element::Neutral { arc } => g.arcs[*arc].timing.duration_ms(100.0),
            };
            let end = element_end_value(&g, el, 100.0, &table());
            cum += (dur / 1.0).round() as usize;
            if ei + 1 < g.elements.len() {
                assert_eq!(flow.frames[cum], end, "junction after element {ei}");
            }
        }
    }

    #[test]
    fn range_bound_holds() {
        let g = parse_word("big.bi", &inv(), SyllableOptions::default()).unwrap();
        let flow = compile_word(&g, 100.0, 1.0, &table()).unwrap();
        let t = table();
        for frame in &flow.frames {
            for (i, e) in t.entries().iter().enumerate() {
                assert!((frame[i] - e.omega).abs() <= 1.2 * e.psi1.abs() + 1e-12);
            }
        }
    }

    #[test]
    fn empty_graph_compiles_to_nothing() {
        let g = SyllableGraph {
            nodes: vec![],
            arcs: vec![],
            elements: vec![],
            syllables: vec![],
            deltas: (0.7, 0.7),
        };
        let flow = compile_word(&g, 100.0, 1.0, &table()).unwrap();
        assert_eq!(flow.len(), 0);
    }

    #[test]
    fn single_z_fit_separates_pure_from_superimposed() {
        let t = table();
        // a pure coordinated frame fits exactly
        let pure = coordinate(PolarPoint::new(0.8, 2.0).unwrap(), &t).unwrap().p;
        let (_, r) = fit_single_z(&pure, &t);
        assert!(r < 1e-9, "pure residual {r}");
        // a mixed frame does not
        let g = parse_word("ibi", &inv(), SyllableOptions::default()).unwrap();
        let flow = compile_word(&g, 100.0, 1.0, &t).unwrap();
        let closure = flow.find_marker(MarkerKind::Consonant, "b").unwrap().frame;
        let (_, r) = fit_single_z(&flow.frames[closure], &t);
        assert!(r > 1e-6, "closure residual {r}");
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let g = parse_word("bi", &inv(), SyllableOptions::default()).unwrap();
        let flow = compile_word(&g, 100.0, 1.0, &table()).unwrap();
        let csv = flow_to_csv(&flow);
        assert!(csv.starts_with("jaw,body,dorsum,tip,lip_p,lip_h,hy\n"));
        let back = frames_from_csv(&csv).unwrap();
        assert_eq!(back, flow.frames);
    }

    #[test]
    fn pause_emits_span_markers() {
        use crate::parser::parse_utterance;
        let g = parse_utterance("bi gu", &inv(), SyllableOptions::default(), 150.0).unwrap();
        let flow = compile_word(&g, 100.0, 1.0, &table()).unwrap();
        let spans = flow.pause_spans();
        assert_eq!(spans.len(), 1);
        let (s, e) = spans[0];
        assert_eq!(e - s, 150);
        // the pause starts where /bi/ ends (3T) and spans exactly T_p frames
        assert_eq!(s, 300);
    }

    #[test]
    fn inter_frame_jumps_respect_the_analytic_bound() {
        let g = parse_word("ibia", &inv(), SyllableOptions::default()).unwrap();
        let flow = compile_word(&g, 100.0, 1.0, &table()).unwrap();
        let t = table();
        let max_psi1 = t.entries().iter().map(|e| e.psi1.abs()).fold(0.0, f64::max);
        let max_speed = g
            .arcs
            .iter()
            .map(|a| arc_spec(&g, a, 100.0).speed_bound())
            .fold(0.0, f64::max);
        let bound = max_psi1 * max_speed * flow.dt * 1.0001 + 1e-12;
        for w in flow.frames.windows(2) {
            for i in 0..PARAM_COUNT {
                let jump = (w[1][i] - w[0][i]).abs();
                assert!(jump <= bound, "jump {jump} exceeds bound {bound}");
            }
        }
    }
}
