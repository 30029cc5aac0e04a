use super::distribution::ClassDistribution;
use crate::system::SeparableSystem;
use crate::Result;

/// SI spreading on an activity-driven network with `M` rate classes:
///
/// ```txt
/// I_i' = beta(t) (1 - I_i) (a_i <I> + <aI>)
/// ```
///
/// `a_i <I>` is infection through the node's own activations and `<aI>`
/// through being contacted. The observable is the prevalence `<I>`.
#[derive(Debug, Clone)]
pub struct AdnSystem {
    dist: ClassDistribution,
    params: Vec<f64>,
    label: String,
}

pub fn adn_system(dist: ClassDistribution) -> AdnSystem {
    let params = dist.values().iter().chain(dist.weights()).copied().collect();
    let label = format!("adn-si(M={})", dist.len());
    AdnSystem { dist, params, label }
}

impl AdnSystem {
    pub fn distribution(&self) -> &ClassDistribution {
        &self.dist
    }

    /// `(<I>, <aI>)`.
    pub fn moments(&self, infected: &[f64]) -> (f64, f64) {
        self.dist
            .values()
            .iter()
            .zip(self.dist.weights())
            .zip(infected)
            .fold((0.0, 0.0), |(m0, m1), ((a, p), i)| (m0 + p * i, m1 + p * a * i))
    }
}

impl SeparableSystem for AdnSystem {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.dist.len()
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn vector_field(&self, z: &[f64], out: &mut [f64]) {
        let (mean, active) = self.moments(z);
        for ((o, a), i) in out.iter_mut().zip(self.dist.values()).zip(z) {
            *o = (1.0 - i) * (a * mean + active);
        }
    }

    fn jacobian(&self, z: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let (mean, active) = self.moments(z);
        let a = self.dist.values();
        let p = self.dist.weights();
        for i in 0..n {
            for j in 0..n {
                let mut v = (1.0 - z[i]) * (a[i] * p[j] + p[j] * a[j]);
                if i == j {
                    v -= a[i] * mean + active;
                }
                out[i * n + j] = v;
            }
        }
    }

    fn observable(&self, z: &[f64]) -> f64 {
        self.moments(z).0
    }

    fn observable_gradient(&self, _z: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(self.dist.weights());
        Ok(())
    }
}
