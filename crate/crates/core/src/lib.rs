pub mod augmentation;
pub mod data;
pub mod error;
pub mod hazard;
pub mod info;
pub mod lasso;
pub mod likelihood;
pub mod linalg;
pub mod normal;
pub mod npmle;
pub mod selective;
pub mod sim;
pub mod stats;
pub mod turnbull;

pub use error::{Error, Result};

/// The book's code listings, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/likelihood.md")]
    mod likelihood {}
    #[doc = include_str!("../../../book/src/lasso.md")]
    mod lasso {}
    #[doc = include_str!("../../../book/src/information.md")]
    mod information {}
    #[doc = include_str!("../../../book/src/selective.md")]
    mod selective {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
