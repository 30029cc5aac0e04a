use std::f64::consts::PI;

use super::distribution::ClassDistribution;
use super::DEGENERACY_EPS;
use crate::system::SeparableSystem;
use crate::{Error, Result};

/// Degree-class Ott-Antonsen reduction of the continuum Kuramoto model.
///
/// Per class `i` with degree `k_i`,
///
/// ```txt
/// alpha_i' = -mu(t) (k_i / 2) (r alpha_i^2 - conj(r)),   r = <k>^-1 sum_j k_j p_j conj(alpha_j)
/// ```
///
/// States are interleaved `(Re alpha_i, Im alpha_i)` pairs. The observable
/// is the centroid amplitude `|sum_j p_j conj(alpha_j)|`.
#[derive(Debug, Clone)]
pub struct OaSystem {
    dist: ClassDistribution,
    /// `k_j p_j / <k>`
    coupling: Vec<f64>,
    params: Vec<f64>,
    label: String,
}

pub fn oa_system(dist: ClassDistribution) -> OaSystem {
    let mean = dist.mean();
    let coupling = dist
        .values()
        .iter()
        .zip(dist.weights())
        .map(|(k, p)| k * p / mean)
        .collect();
    let params = dist.values().iter().chain(dist.weights()).copied().collect();
    let label = format!("ott-antonsen(M={})", dist.len());
    OaSystem { dist, coupling, params, label }
}

/// `alpha_j(0) = alpha0 exp(i 2 pi j / M)`, interleaved.
pub fn oa_splay_state(classes: usize, alpha0: f64) -> Vec<f64> {
    (0..classes)
        .flat_map(|j| {
            let th = 2.0 * PI * j as f64 / classes as f64;
            [alpha0 * th.cos(), alpha0 * th.sin()]
        })
        .collect()
}

impl OaSystem {
    pub fn distribution(&self) -> &ClassDistribution {
        &self.dist
    }

    /// Order parameter `r` as `(Re, Im)`.
    pub fn order_parameter(&self, z: &[f64]) -> (f64, f64) {
        self.coupling
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (j, c)| (re + c * z[2 * j], im - c * z[2 * j + 1]))
    }

    /// Centroid `r_hat = sum_j p_j conj(alpha_j)` as `(Re, Im)`.
    pub fn centroid(&self, z: &[f64]) -> (f64, f64) {
        self.dist
            .weights()
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (j, p)| (re + p * z[2 * j], im - p * z[2 * j + 1]))
    }

    /// Largest `|alpha_i|`.
    pub fn max_modulus(&self, z: &[f64]) -> f64 {
        z.chunks(2).map(|c| c[0].hypot(c[1])).fold(0.0, f64::max)
    }
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

impl SeparableSystem for OaSystem {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        2 * self.dist.len()
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn vector_field(&self, z: &[f64], out: &mut [f64]) {
        let r = self.order_parameter(z);
        for (i, k) in self.dist.values().iter().enumerate() {
            let a = (z[2 * i], z[2 * i + 1]);
            let ra2 = cmul(r, cmul(a, a));
            let f = (ra2.0 - r.0, ra2.1 + r.1);
            out[2 * i] = -0.5 * k * f.0;
            out[2 * i + 1] = -0.5 * k * f.1;
        }
    }

    fn jacobian(&self, z: &[f64], out: &mut [f64]) {
        // F_i = r a_i^2 - conj(r); with a_j = x_j + i y_j
        //   dF_i/dx_j = c_j a_i^2 - c_j + 2 r a_i delta_ij
        //   dF_i/dy_j = -i c_j a_i^2 - i c_j + 2 i r a_i delta_ij
        let n = self.dim();
        let r = self.order_parameter(z);
        for (i, k) in self.dist.values().iter().enumerate() {
            let a = (z[2 * i], z[2 * i + 1]);
            let a2 = cmul(a, a);
            let ra = cmul(r, a);
            let s = -0.5 * k;
            for (j, c) in self.coupling.iter().enumerate() {
                let mut dx = (c * a2.0 - c, c * a2.1);
                // -i c (a^2 + 1)
                let mut dy = (c * a2.1, -c * (a2.0 + 1.0));
                if i == j {
                    dx.0 += 2.0 * ra.0;
                    dx.1 += 2.0 * ra.1;
                    dy.0 -= 2.0 * ra.1;
                    dy.1 += 2.0 * ra.0;
                }
                out[(2 * i) * n + 2 * j] = s * dx.0;
                out[(2 * i + 1) * n + 2 * j] = s * dx.1;
                out[(2 * i) * n + 2 * j + 1] = s * dy.0;
                out[(2 * i + 1) * n + 2 * j + 1] = s * dy.1;
            }
        }
    }

    fn observable(&self, z: &[f64]) -> f64 {
        let (re, im) = self.centroid(z);
        re.hypot(im)
    }

    fn observable_gradient(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let (re, im) = self.centroid(z);
        let r = re.hypot(im);
        if r <= DEGENERACY_EPS {
            return Err(Error::DegenerateObservable { magnitude: r });
        }
        for (j, p) in self.dist.weights().iter().enumerate() {
            out[2 * j] = p * re / r;
            out[2 * j + 1] = -p * im / r;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incoherent_state_is_fixed() {
        let d = ClassDistribution::power_law((1..=10).map(f64::from).collect(), 2.2).unwrap();
        let sys = oa_system(d);
        let mut h = vec![1.0; 20];
        sys.vector_field(&[0.0; 20], &mut h);
        assert!(h.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_class_reduces_to_cubic() {
        let sys = oa_system(ClassDistribution::new(vec![1.0], vec![1.0]).unwrap());
        for a in [0.1, 0.5, 0.9, 1.0] {
            let mut h = [0.0; 2];
            sys.vector_field(&[a, 0.0], &mut h);
            assert!((h[0] - 0.5 * (a - a * a * a)).abs() < 1e-15);
            assert!(h[1].abs() < 1e-15);
        }
    }

    #[test]
    fn splay_state_layout() {
        let z = oa_splay_state(4, 0.1);
        assert_eq!(z.len(), 8);
        assert!((z[0] - 0.1).abs() < 1e-15 && z[1].abs() < 1e-15);
        assert!(z[2].abs() < 1e-15 && (z[3] - 0.1).abs() < 1e-15);
    }
}
