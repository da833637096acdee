//! Alignment scoring of generated samples and the comparison suites
//! built on it: baseline-vs-ablated reports, synonym leakage probes,
//! far-concept collateral checks, and method-vs-method verdicts.

pub mod compare;
pub mod far;
pub mod leakage;
pub mod score;
pub mod suite;

pub use compare::{compare_methods, MethodComparison, MethodVerdict, ProbePointPair};
pub use far::{far_concept_report, FarReport, FarRow};
pub use leakage::{leakage_probe, LeakProbe, LeakReport};
pub use score::{alignment_score, AlignmentScore, ModelTag, MIN_SCORE_SAMPLES};
pub use suite::{
    eval_suite, ConceptRole, EvalReport, FloorScore, LabeledConcept, ScorePair, SubScore,
    SubScorePair, TrademarkDetail, TrademarkSpec,
};
