//! Concrete separable systems.

mod adn;
mod distribution;
mod graph;
mod kuramoto;
mod oa;

pub use adn::{adn_system, AdnSystem};
pub use distribution::{power_law_weights, ClassDistribution};
pub use graph::Graph;
pub use kuramoto::{kuramoto_system, splay_phases, KuramotoSystem};
pub use oa::{oa_splay_state, oa_system, OaSystem};

/// Centroid amplitudes at or below this are treated as non-differentiable.
pub const DEGENERACY_EPS: f64 = 1e-8;

/// Activity rates `a_i = 0.2 + 0.4 (i - 1)`, `i = 1..=classes`.
pub fn default_activity_rates(classes: usize) -> Vec<f64> {
    (0..classes).map(|i| 0.2 + 0.4 * i as f64).collect()
}

/// Degrees `k_i = i`, `i = 1..=classes`.
pub fn default_degrees(classes: usize) -> Vec<f64> {
    (1..=classes).map(|i| i as f64).collect()
}

/// The ADN-SI setup with five rate classes, power-law exponent 2.2 and
/// uniform initial prevalence 0.02.
pub fn default_adn() -> (AdnSystem, Vec<f64>) {
    let dist = ClassDistribution::power_law(default_activity_rates(5), 2.2)
        .expect("default rates are positive");
    (adn_system(dist), vec![0.02; 5])
}

/// The Ott-Antonsen setup with ten degree classes `k_i = i`, power-law
/// exponent `gamma` and splay initial condition of modulus `alpha0`.
pub fn default_oa(gamma: f64, alpha0: f64) -> crate::Result<(OaSystem, Vec<f64>)> {
    let dist = ClassDistribution::power_law(default_degrees(10), gamma)?;
    Ok((oa_system(dist), oa_splay_state(10, alpha0)))
}

/// The Kuramoto model on the shipped 10-node graph with splay phases.
pub fn default_kuramoto() -> (KuramotoSystem, Vec<f64>) {
    (kuramoto_system(Graph::default10()), splay_phases(10))
}
