//! Shared fixtures for the benchmarks.

use drive_audit_core::synthgen::{generate, random_case, CaseKind, CorpusOptions};
use drive_audit_core::{AgentTrack, Scenario};

/// One synthetic scenario of `kind` with `background` extra vehicles.
pub fn scenario(kind: CaseKind, background: usize) -> Scenario {
    let opts = CorpusOptions {
        kinds: vec![kind],
        background,
        noise_sigma: 0.0,
    };
    generate(&random_case(kind, 0, 7, &opts))
        .expect("fixture parameters are valid")
        .scenario
}

/// Ego and lead vehicle of a car-following scenario.
pub fn following_pair() -> (AgentTrack, AgentTrack) {
    let s = scenario(CaseKind::CarFollowing, 0);
    let ego = s.agent("ego").expect("ego present").clone();
    let lead = s.agent("lead").expect("lead present").clone();
    (ego, lead)
}
