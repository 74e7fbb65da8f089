pub mod error;
pub mod exppoly;
pub mod fundsol;
pub mod linalg;
pub mod logradial;
pub mod poly;
pub mod modalgreen;
pub mod modecheck;
pub mod positivity;
pub mod quad;
pub mod rational;
pub mod rootsets;
pub mod symbols;

pub use error::{Error, Result};
pub use exppoly::{DecayClass, DeltaAtom, DiffOp, ExpTerm, LowerBound, PiecewiseExpPoly, Side};
pub use poly::Poly;
pub use rational::Q;
