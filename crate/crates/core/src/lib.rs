//! Generative articulatory speech synthesis.
//!
//! The pipeline: a phonetic string parses into a syllable graph; the graph
//! compiles into a continuous 7-articulator parameter flow through a
//! complex-plane coordination function with selection-vector superposition;
//! the flow maps to vocal-tract area functions whose transmission-line
//! transfer functions yield formant tracks; a resonator cascade plus a
//! syllable-structure envelope renders audio.

pub mod acoustics;
pub mod coordination;
pub mod flow;
pub mod graph;
pub mod inventory;
pub mod parser;
pub mod synthesis;
pub mod trajectory;

pub use acoustics::{
    area_from_parameters, formants, sample_surface, track_formants, transfer_function,
    AcousticsError, AreaFunction, ArticulatoryMap, FormantTrack,
};
pub use coordination::{
    coordinate, coordinate_complex, CoordinationError, ParameterVector, PolarPoint, PsiTable,
    ARTICULATOR_NAMES, PARAM_COUNT,
};
pub use flow::{
    compile_superimposed, compile_vocalic, compile_word, fit_single_z, FlowError, Marker,
    MarkerKind, ParameterFlow,
};
pub use graph::{
    build_syllable, concatenate, fusable_junctions, fuse_cluster, insert_pause,
    resyllabify_vc_chain, GraphError, SyllableGraph, SyllableOptions,
};
pub use inventory::{InventoryError, PhonemeInventory, SelectionVector};
pub use parser::{parse_utterance, parse_word, ParseError};
pub use synthesis::{
    build_envelope, glottal_source, render, write_wav, EnvelopeCurve, SynthesisError, Waveform,
};
pub use trajectory::{arc_position, phase, sample_arc, ArcSpec, Orientation, TrajectoryError};
