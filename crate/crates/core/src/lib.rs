pub mod asymptotics;
pub mod cli;
pub mod divergences;
pub mod error;
pub mod free;
pub mod lorenz;
pub mod lp;
mod numeric;
pub mod states;
pub mod typed;
pub mod work;

pub use error::{Error, Result};
pub use numeric::ExtReal;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/lorenz.md")]
    mod lorenz {}
    #[doc = include_str!("../../../book/src/divergences.md")]
    mod divergences {}
    #[doc = include_str!("../../../book/src/witnesses.md")]
    mod witnesses {}
    #[doc = include_str!("../../../book/src/work.md")]
    mod work {}
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    mod asymptotics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
