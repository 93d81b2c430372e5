pub mod augment;
pub mod corpus;
pub mod eval;
pub mod interpret;
pub mod model;
