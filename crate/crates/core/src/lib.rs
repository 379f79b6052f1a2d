//! Bit-precise verification of fixed-point multilayer perceptrons.
//!
//! The crate provides an exact `<I,F>` fixed-point arithmetic core, a
//! floating-point reference model, fixed-point operational models of the
//! matrix-multiply and activation primitives, interval bound propagation,
//! MC/DC-style neuron coverage, an incremental branch-and-bound verifier
//! and the 5x5 vocalic character benchmark.

pub mod ann;
pub mod coverage;
pub mod error;
pub mod fxp;
pub mod interval;
pub mod opmodel;
pub mod verifier;
pub mod vocalic;

pub use ann::nnet::{parse_nnet, serialize_nnet, NnetOptions, ParseError};
pub use ann::{
    activation_potential, classify, classify_scores, forward_float, relu, sigmoid_exact, sigmoid_lut,
    ActivationKind, ActivationTrace, Layer, Network, Normalization, SigmoidTable,
};
pub use error::{Error, Result};
pub use fxp::{fxp_add, fxp_div, fxp_mul, fxp_sub, FxpError, FxpFormat, FxpValue, Rounding};
pub use opmodel::{
    activation_forward_fxp, conformance_diff, forward_fxp, gemm_fxp, ConformanceReport, FxpLut, FxpTrace,
    QuantizedNetwork,
};
pub use interval::{
    propagate_activation, propagate_affine, propagate_box_fxp, propagate_network, propagate_network_fxp, widen,
    Interval, IntervalBox, LayerBounds, RawBounds,
};
pub use coverage::{
    coverage_report, covered_pairs, dc, ds_cover, dv_cover, sc, sign, ss_cover, sv_cover, vc, CoverConfig, CoverMethod,
    CoverageReport, DistanceKind, NeuronId, Tri,
};
pub use verifier::{
    base_case, check_adversarial, check_output_property, coverage_goal_search, euclidean_distance, forward_condition,
    in_region, incremental_verify, replay, verify, AdversarialProperty, BoxSpec, Counterexample, CoverageProperty,
    Outcome, Property, Region, Relation, SearchStats, Semantics, ThresholdProperty, Verdict, VerifyConfig,
};
