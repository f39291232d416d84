pub mod error;
pub mod dispersive;
pub mod gkp;
pub mod io;
pub mod oscillator;
pub mod protocol;
pub mod qudit;

pub use error::{Error, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/qudit.md")]
    pub mod qudit {}
    #[doc = include_str!("../../../book/src/gkp.md")]
    pub mod gkp {}
    #[doc = include_str!("../../../book/src/ideal.md")]
    pub mod ideal {}
    #[doc = include_str!("../../../book/src/dispersive.md")]
    pub mod dispersive {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
