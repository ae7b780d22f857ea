pub mod blowup;
pub mod constants;
pub mod error;
pub mod fem;
pub mod green;
pub mod integrate;
pub mod mesh;
pub mod sparse;
pub mod subcritical;
