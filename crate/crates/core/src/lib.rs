//! Nonconforming finite elements of order two and three on tetrahedra and
//! their use for the Stokes problem.
//!
//! The four scalar elements share face-moment degrees of freedom of order
//! `k - 1` (`k = 2, 3`), which makes the global spaces `M_{k-1}`-continuous:
//!
//! | element | shape space          | local dim | pressure  |
//! |---------|----------------------|-----------|-----------|
//! | `Nc2`   | `P3`                 | 20        | `P2` disc |
//! | `Nc3`   | `P4`                 | 35        | `P3` disc |
//! | `Nc2r`  | `P2 + 3 cubics`      | 13        | `P1` disc |
//! | `Nc3r`  | `P3 + 5 quartics`    | 25        | `P2` disc |
//!
//! The crate is organised bottom-up: [`mesh`] and [`polyquad`] provide
//! geometry, barycentric polynomials and quadrature; [`element`] defines the
//! reference elements; [`space`] builds global spaces; [`assembly`] and
//! [`solver`] produce and solve the saddle-point system; [`verify`] holds the
//! numerical certifications (inf-sup, macro-element null spaces, Korn,
//! convergence rates).

pub mod assembly;
pub mod element;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod polyquad;
pub mod problem;
pub mod solver;
pub mod space;
pub mod verify;

pub use assembly::{assemble, SaddleSystem};
pub use element::{ElementDef, ElementKind};
pub use error::{Error, Result};
pub use mesh::{BoundaryPartition, BoundaryTag, Mesh, TetGeometry};
pub use polyquad::{BaryPoly, QuadratureRule, Simplex};
pub use solver::{solve, SolveReport, SolverMode};
pub use space::{build_spaces, Pair, PressureSpace, VelocitySpace};
pub use verify::{run_suite, Check, Report, SuiteConfig};
