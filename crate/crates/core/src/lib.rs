//! Numerical calculus for q-positive maps on matrix algebras, their
//! q-corners, gauge-group descriptors for rank-one boundary weight doubles,
//! and Powers-weight boundary data.

pub mod bweight;
pub mod cli;
pub mod corners;
pub mod cpmaps;
pub mod document;
pub mod gauge;
pub mod numcore;
pub mod qpos;
pub mod quadrature;
pub mod random;

pub use cpmaps::{Decomposition, MapError, MatrixMap};
pub use gauge::{GaugeElement, GaugeError, State};
pub use numcore::{c64, CMatrix, NumError, Tolerance, C64};
pub use qpos::{PsdCertificate, QposError, TGrid};
