//! Exact symbolic engine for liftings of quantum linear spaces over finite
//! abelian group algebras.
//!
//! The engine constructs pointed Hopf algebras on a PBW basis
//! `x_1^{n_1} ... x_theta^{n_theta} g` from a presentation
//! `(Gamma, g_i, chi_i, r_i, a_i, a_ij)`, builds the twisting 2-cocycles
//! `gamma_i`, `gamma_ij` and their convolution product `alpha`, twists the
//! multiplication, verifies the cocycle and bialgebra axioms exhaustively at
//! desk scale, and decides when the twisting cocycle coincides with the
//! functional `lambda ∘ pi ∘ m` obtained from the total integral on the
//! group algebra.
//!
//! All arithmetic is exact, in a single cyclotomic field Q(zeta_N) chosen
//! from the presentation. There is no floating point anywhere.

pub mod cyclotomic;
pub mod deform;
pub mod functional;
pub mod group;
pub mod hopf;
pub mod model;
pub mod samples;

pub use cyclotomic::{q_binomial, q_factorial, CyclotomicScalar};
pub use group::{Character, GroupElement, GroupSpec};
pub use model::LiftingPresentation;
