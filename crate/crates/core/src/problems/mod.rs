//! Problem instances: generated quadratics, logistic regression on LIBSVM
//! data, client partitioning and dissimilarity constants.

pub mod dissimilarity;
pub mod libsvm;
pub mod logistic;
pub mod partition;
pub mod quadratic;

pub use dissimilarity::{
    delta_exact_quadratic, delta_sampled, DeltaMethod, DissimilarityReport, QuadraticDissimilarity,
};
pub use libsvm::{parse_libsvm, read_libsvm_file, to_libsvm_string, SparseDataset, SparseRow};
pub use logistic::{logistic_problem, LogisticOptions};
pub use partition::{dirichlet_assignment, dirichlet_partition};
pub use quadratic::{
    gen_quadratic_problem, QuadraticClientSpec, QuadraticInstance, QuadraticParams, SpectrumSpec,
    SymmetricMatrix,
};
