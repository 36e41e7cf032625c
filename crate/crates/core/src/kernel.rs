//! The kernel `K(z) = z̄ / z²`.
//!
//! In polar form `K(t e^{iθ}) = e^{−3iθ} / t`: the phase turns three times
//! per revolution, against once for the Cauchy kernel `1/z`. Every
//! cancellation used elsewhere in the crate comes from that phase.

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::ComplexPoint;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("kernel evaluated at the origin")]
pub struct KernelDomainError;

/// `K(z) = z̄/z²`; undefined at 0.
pub fn eval_kernel(z: ComplexPoint) -> Result<Complex64, KernelDomainError> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(KernelDomainError);
    }
    Ok(kernel_unchecked(z))
}

#[inline]
pub(crate) fn kernel_unchecked(z: ComplexPoint) -> Complex64 {
    // z̄/z² = z̄³/|z|⁴ avoids the complex division.
    let zb = z.conj();
    let n2 = z.norm_sqr();
    zb * zb * zb / (n2 * n2)
}

/// Kernels the integrators understand. `Cauchy` exists as a negative
/// control: it is not reflectionless, so checks built on that property
/// must fail for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    #[default]
    ThreeRevolutions,
    Cauchy,
}

impl Kernel {
    #[inline]
    pub fn eval(self, z: ComplexPoint) -> Complex64 {
        match self {
            Kernel::ThreeRevolutions => kernel_unchecked(z),
            Kernel::Cauchy => z.inv(),
        }
    }

    /// Pointwise modulus, `1/|z|` for both kernels.
    #[inline]
    pub fn abs(self, z: ComplexPoint) -> f64 {
        1.0 / z.norm()
    }
}
