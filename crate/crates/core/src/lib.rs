pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod series;
pub mod maps;
pub mod densities;
pub mod reflection;
pub mod projection;
pub mod identities;
pub mod montecarlo;
