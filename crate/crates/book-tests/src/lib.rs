//! Runs the code samples of the guide in `book/` as doctests, one module per
//! chapter so a failure points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/sigmoid.md")]
pub mod sigmoid {}
#[doc = include_str!("../../../book/src/log_sigmoid.md")]
pub mod log_sigmoid {}
#[doc = include_str!("../../../book/src/softmax.md")]
pub mod softmax {}
#[doc = include_str!("../../../book/src/oracles.md")]
pub mod oracles {}
#[doc = include_str!("../../../book/src/calibration.md")]
pub mod calibration {}
#[doc = include_str!("../../../book/src/applications.md")]
pub mod applications {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
