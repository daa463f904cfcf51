// Each chapter becomes a module so that `cargo test --doc` runs its code
// blocks and a failure names the chapter it came from.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/shattering.md")]
mod shattering {}
#[doc = include_str!("../../../book/src/lipschitz.md")]
mod lipschitz {}
#[doc = include_str!("../../../book/src/rademacher.md")]
mod rademacher {}
#[doc = include_str!("../../../book/src/covers.md")]
mod covers {}
#[doc = include_str!("../../../book/src/sgd.md")]
mod sgd {}
#[doc = include_str!("../../../book/src/bounds.md")]
mod bounds {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
