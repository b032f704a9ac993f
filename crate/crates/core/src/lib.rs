#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compactify;
pub mod error;
pub mod families;
pub mod limits;
pub mod lsc;
pub mod measures;
pub mod quad;
pub mod quasiconvex;
pub mod represent;
pub mod scenario;
