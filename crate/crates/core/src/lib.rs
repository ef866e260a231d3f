//! Numerical laboratory for dyadic Orlicz maximal operators, Muckenhoupt-type
//! weight constants and Calderón–Zygmund style decompositions on `[0,1)^n`.

pub mod cz;
pub mod error;
pub mod grid;
pub mod maximal;
pub mod orlicz;
pub mod weights;
pub mod verify;
pub mod young;

pub use error::{Error, Result};
pub use grid::{CellSet, DyadicCube, DyadicGrid, GridFunction, LevelSums};
pub use young::YoungFunction;
