use std::f64::consts::PI;

use super::graph::Graph;
use super::DEGENERACY_EPS;
use crate::system::SeparableSystem;
use crate::{Error, Result};

/// Identical Kuramoto oscillators on a graph, in the frame co-rotating with
/// the common natural frequency:
///
/// ```txt
/// x_i' = mu(t) sum_j a_ij sin(x_j - x_i)
/// ```
///
/// The observable is the centroid amplitude `|N^-1 sum_j exp(i x_j)|`.
#[derive(Debug, Clone)]
pub struct KuramotoSystem {
    graph: Graph,
    label: String,
}

/// Build the Kuramoto system on `graph`. Logs a warning if the graph is
/// disconnected.
pub fn kuramoto_system(graph: Graph) -> KuramotoSystem {
    if !graph.is_connected() {
        log::warn!(
            "kuramoto graph with {} nodes is disconnected; complete synchronization is unreachable",
            graph.node_count()
        );
    }
    let label = format!("kuramoto(n={}, m={})", graph.node_count(), graph.edge_count());
    KuramotoSystem { graph, label }
}

/// Splay phases `x_i = 2 pi i / n`.
pub fn splay_phases(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

impl KuramotoSystem {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Centroid `r_hat = N^-1 sum_j exp(i x_j)` as `(Re, Im)`.
    pub fn centroid(&self, x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let (c, s) = x
            .iter()
            .fold((0.0, 0.0), |(c, s), xi| (c + xi.cos(), s + xi.sin()));
        (c / n, s / n)
    }
}

impl SeparableSystem for KuramotoSystem {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.graph.node_count()
    }

    fn vector_field(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self
                .graph
                .neighbors(i)
                .iter()
                .map(|&j| (x[j] - x[i]).sin())
                .sum();
        }
    }

    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let mut diag = 0.0;
            for &j in self.graph.neighbors(i) {
                let c = (x[j] - x[i]).cos();
                out[i * n + j] = c;
                diag -= c;
            }
            out[i * n + i] = diag;
        }
    }

    fn observable(&self, x: &[f64]) -> f64 {
        let (re, im) = self.centroid(x);
        re.hypot(im)
    }

    fn observable_gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let (re, im) = self.centroid(x);
        let r = re.hypot(im);
        if r <= DEGENERACY_EPS {
            return Err(Error::DegenerateObservable { magnitude: r });
        }
        let n = x.len() as f64;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = (im * xi.cos() - re * xi.sin()) / (n * r);
        }
        Ok(())
    }
}
