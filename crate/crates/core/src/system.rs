//! The separable system abstraction.

use crate::{Error, Result};

/// An autonomous vector field `h(z, p)` together with a scalar observable.
///
/// The controlled dynamics are `z' = mu(t) h(z, p)`; the rescaled dynamics
/// are `z' = h(z, p)`. Implementations must be deterministic.
pub trait SeparableSystem: Send + Sync {
    /// Model identifier.
    fn label(&self) -> &str;

    /// State dimension `n`.
    fn dim(&self) -> usize;

    /// Flattened model parameters `p`. Empty for parameter-free models.
    fn params(&self) -> &[f64] {
        &[]
    }

    fn vector_field(&self, z: &[f64], out: &mut [f64]);

    /// Jacobian of `h` with respect to `z`, row-major `n x n`.
    ///
    /// The default is a central difference; models override it with the
    /// analytic expression.
    fn jacobian(&self, z: &[f64], out: &mut [f64]) {
        central_difference_jacobian(self, z, out);
    }

    /// The observable `Phi(z)`.
    fn observable(&self, z: &[f64]) -> f64;

    /// Gradient of `Phi`. Fails where `Phi` is not differentiable.
    fn observable_gradient(&self, z: &[f64], out: &mut [f64]) -> Result<()>;
}

pub(crate) fn central_difference_jacobian<S: SeparableSystem + ?Sized>(
    sys: &S,
    z: &[f64],
    out: &mut [f64],
) {
    let n = sys.dim();
    let mut zp = z.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let orig = zp[j];
        let h = 1e-6 * (1.0 + orig.abs());
        zp[j] = orig + h;
        sys.vector_field(&zp, &mut fp);
        zp[j] = orig - h;
        sys.vector_field(&zp, &mut fm);
        zp[j] = orig;
        for i in 0..n {
            out[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
}

type FieldFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A separable system assembled from closures.
///
/// Useful for small synthetic systems; the Jacobian falls back to central
/// differences unless one is supplied.
pub struct ClosureSystem {
    label: String,
    dim: usize,
    field: Box<FieldFn>,
    jacobian: Option<Box<GradientFn>>,
    observable: Box<ScalarFn>,
    gradient: Box<GradientFn>,
}

impl ClosureSystem {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        field: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        observable: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        Ok(Self {
            label: label.into(),
            dim,
            field: Box::new(field),
            jacobian: None,
            observable: Box::new(observable),
            gradient: Box::new(gradient),
        })
    }

    pub fn with_jacobian(
        mut self,
        jacobian: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Box::new(jacobian));
        self
    }
}

impl SeparableSystem for ClosureSystem {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn vector_field(&self, z: &[f64], out: &mut [f64]) {
        (self.field)(z, out)
    }

    fn jacobian(&self, z: &[f64], out: &mut [f64]) {
        match &self.jacobian {
            Some(j) => j(z, out),
            None => central_difference_jacobian(self, z, out),
        }
    }

    fn observable(&self, z: &[f64]) -> f64 {
        (self.observable)(z)
    }

    fn observable_gradient(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        (self.gradient)(z, out);
        Ok(())
    }
}

impl std::fmt::Debug for ClosureSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosureSystem")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}
