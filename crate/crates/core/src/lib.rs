//! Brownian loop soups, their clusters and outer boundaries, and the
//! SLE comparison curves they are measured against.

pub mod boundary;
pub mod chordal;
pub mod cluster;
pub mod domain;
pub mod error;
pub mod fractal;
pub mod geometry;
pub mod lattice;
pub mod percolation;
pub mod raster;
pub mod report;
pub mod rng;
pub mod runner;
pub mod sle;
pub mod soup;
pub mod soup_io;
pub mod stats;
pub mod svg;
pub mod union_find;

pub use domain::Domain;
pub use error::{Error, Result};
pub use geometry::{BBox, Point};
pub use soup::{Loop, LoopSoup, SoupConfig};
