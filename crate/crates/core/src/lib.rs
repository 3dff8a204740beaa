//! Reconstruction of LoD1.2, LoD1.3 and LoD2.2 building models from 2D
//! footprints and a classified aerial point cloud, in one pass per building.
//!
//! The pipeline per building: crop points to the footprint, detect roof
//! planes by region growing, derive boundary and intersection lines, insert
//! them into the footprint as a planar partition, assign one roof plane per
//! face by energy minimization, dissolve same-label edges, then extrude the
//! resulting roof parts into three solids (LoD2.2 shaped roofs, LoD1.3
//! multi-height prisms, LoD1.2 single prism) with per-building quality
//! attributes. Buildings are batched into quadtree tiles and processed in
//! parallel; outputs are OBJ, a CityJSON subset and 2D GeoJSON tables.

pub mod geom;
pub mod ingest;
pub mod lines;
pub mod lod;
pub mod partition;
pub mod pipeline;
pub mod planes;
pub mod quality;
pub mod synth;
pub mod tiling;

pub use geom::{LineSeg2, Mesh, Plane, Point2, Point3, Polygon2, Ring, Solid};
