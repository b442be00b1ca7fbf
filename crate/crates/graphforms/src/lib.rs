//! Algebra and arithmetic of graph hypersurfaces.
//!
//! The crate computes Kirchhoff polynomials, Dodgson polynomials and
//! five-invariants of small regular graphs, reduces the associated
//! hypersurfaces step by step to low-dimensional models, counts points of
//! those models over prime fields, and compares the counts against modular
//! form Fourier coefficients.
//!
//! Module map:
//! * [`poly`] — exact multivariate polynomial arithmetic over `Q` and `F_p`.
//! * [`graph`] — graphs, graph matrices, Dodgson polynomials, five-invariants.
//! * [`count`] — brute-force point counting over `F_p` with caching.
//! * [`reduce`] — variety models and the step calculus relating their counts.
//! * [`forms`] — eta quotients, eigenvalue tables, counting formulas.
//! * [`pipeline`] — fixtures, runnable reduction configs, ledgers, reports.

pub mod count;
pub mod forms;
pub mod graph;
pub mod pipeline;
pub mod poly;
pub mod reduce;
