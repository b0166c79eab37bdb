pub mod geom;
pub mod pathgen;
pub mod raster;
pub mod corridor;
pub mod constraints;
pub mod scene;
pub mod planners;
pub mod extract;
pub mod dataset;
