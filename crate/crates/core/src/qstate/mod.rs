//! States, projectors and the basic operations on them.

mod ops;
mod space;
mod state;

pub use ops::{
    infidelity, infidelity_with, partial_trace, partial_trace_matrix, post_select,
    post_select_with, project, purity, tensor_product,
};
pub use space::HilbertSpace;
pub use state::{DensityMatrix, PureState, Projector};
