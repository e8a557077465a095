#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::approx_constant))]

pub mod analysis;
pub mod commands;
pub mod config;
pub mod dde;
pub mod expr;
pub mod linalg;
pub mod linear_aux;
pub mod majorant;
pub mod output;
pub mod reduction;
pub mod system;
pub mod timefn;
