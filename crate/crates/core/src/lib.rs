//! Numerical machinery for a Cantor-type measure on which the singular
//! integral with kernel `K(z) = z̄/z²` is bounded off the support but has no
//! principal value.
//!
//! Layout:
//! * [`geometry`]: discs, squares, annulus caps, exact areas and distances;
//! * [`kernel`], [`integrals`], [`quadrature`]: the kernel and its integrals
//!   (closed forms, boundary and radial reductions, reference quadrature);
//! * [`construction`]: square packing and the disc/square hierarchy;
//! * [`measure`]: the level measures, their masses and the operator `T(1)`;
//! * [`experiments`]: runnable checks producing tabular reports.

pub mod construction;
pub mod experiments;
pub mod geometry;
pub mod integrals;
pub mod kernel;
pub mod measure;
pub mod quadrature;
pub mod summation;

pub use geometry::{AnnulusCap, ComplexPoint, Disc, Region, Square};
pub use integrals::{IntegralResult, Method};
pub use kernel::{eval_kernel, Kernel};
