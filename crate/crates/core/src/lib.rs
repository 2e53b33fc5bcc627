//! Constructive fillings for loops in kernels of homomorphisms from direct
//! products of free groups onto free abelian groups.

pub mod ambient;
pub mod applications;
pub mod cli;
pub mod dehn_tools;
pub mod group_core;
pub mod homs;
pub mod fill_square;
pub mod fill_triangle;
pub mod kernel_gens;
pub mod spanning;
pub mod tessellate;
