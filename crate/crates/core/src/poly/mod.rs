//! Polynomial substrate: exponent vectors, symmetric tensors, ε-series,
//! sparse polynomials over either scalars or ε-series, and polynomial maps.

mod coeff;
mod map;
mod multi_index;
mod polynomial;
mod series;
mod tensor;

pub use coeff::Coeff;
pub use map::{compose_maps, PolyMap};
pub use multi_index::MultiIndex;
pub use polynomial::{compose, poly_multiply, Polynomial};
pub use series::EpsSeries;
pub use tensor::{lower_slot, sorted_tuples, symmetrize, tensor_to_poly, SymTensor};
