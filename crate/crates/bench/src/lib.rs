//! Criterion benchmark harness for the crosslab pipeline. All substance
//! lives in `benches/`.
