//! Projection-based model order reduction.
//!
//! The crate is split by concern:
//!
//! * [`numkit`] dense and banded linear algebra kernels
//! * [`fom`] parametrized full-order toy problems on structured grids
//! * [`rb`] POD and greedy reduced bases, Galerkin projection, online solve
//! * [`errest`] certified residual-based error bounds
//! * [`interp`] EIM, DEIM, matrix DEIM and gappy POD
//! * [`morph`] free-form deformation, RBF and IDW geometry maps
//! * [`asub`] active subspaces
//! * [`io`] CSV and number formatting shared by the file exporters
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]


pub mod numkit;
pub mod fom;
pub mod io;
pub mod rb;
pub mod errest;
pub mod interp;
pub mod morph;
pub mod asub;
