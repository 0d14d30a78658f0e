//! Toolkit for Thinging Machine (TM) models.
//!
//! * [`dsl`] parses and prints the textual `.tm` language and the JSON
//!   interchange form.
//! * [`validate`] checks structural legality (rules V1 to V9).
//! * [`transform`] simplifies full models and expands simplified ones.
//! * [`uml`] bridges to and from a UML activity-diagram subset.
//! * [`behavior`] builds events, measures coverage and checks traces.
//! * [`render`] emits Graphviz DOT.
//! * [`corpus`] checks the bundled Mentcare case study.

pub mod behavior;
pub mod cli;
pub mod corpus;
pub mod dsl;
pub mod model;
pub mod naming;
pub mod render;
pub mod transform;
pub mod uml;
pub mod validate;

pub use model::{
    find_stage, induced_region, model_isomorphic, ActionKind, BehaviorEdge, BehavioralModel, EdgeRef, Event, Flow,
    Machine, ModelBuilder, ModelError, Region, Stage, StaticModel, Trigger,
};
