//! Boundary constructions for the symmetric space `SL(n,ℝ)/SO(n)`.
//!
//! Hinges of linear relations describe limits of matrix families. On top of
//! them sit the Satake–Furstenberg boundary, velocity limits and the
//! Karpelevich polyhedron, the matrix sky with its Tits metric, hybrid
//! Dynkin–Olshanetsky and Karpelevich points, and the space of oriented
//! geodesics.
//!
//! Every computation is generic over [`Scalar`], implemented for exact
//! rationals and for `f64`.

pub mod decomp;
pub mod error;
pub mod geodesic_space;
pub mod hinge;
pub mod hybrid;
pub mod json;
pub mod matrix;
pub mod relation;
pub mod satake;
pub mod scalar;
pub mod sky;
pub mod subspace;
pub mod velocity;

pub use error::{Error, Result};
pub use geodesic_space::{
    is_sea_urchin_point, sequence_to_geodesic_limit, stabilizer, stratum_dimension, stratum_of, GeodesicLimit,
    OrientedGeodesic, PathDescriptor, StabilizerDescriptor, StratumDescriptor,
};
pub use hinge::{admissible_set, cartan_limit, curve_hausdorff, numeric_hinge_estimate, validate_hinge, AdmissibleSet, CartanPath, Hinge};
pub use hybrid::{
    do_limit, do_project_to_sky, geodesic_do_limit, is_geodesic_limit, karpelevich_limit_point, DoLimit,
    DynkinOlshanetskyPoint, HybridInput, KarpelevichCompactificationPoint, SkyProjectionData,
};
pub use json::{FromJson, ToJson};
pub use matrix::Matrix;
pub use relation::{classify, relation_parts, Classification, LinearRelation, RelationParts};
pub use satake::{flag_forms_to_hinge, hinge_to_flag_forms, is_positive_hinge, spd_cartan_limit, SatakeBoundaryPoint, SpdPoint};
pub use scalar::{q, qi, Backend, Rational, Scalar, DEFAULT_TOL};
pub use sky::{
    common_apartment, connecting_geodesic_limit, n3_incidence_graph, relative_position, sky_from_geodesic, tits_distance,
    Flag, GeodesicFromBase, IncidenceGraph, SkyPoint,
};
pub use subspace::Subspace;
pub use velocity::{
    enumerate_tree_partitions, karpelevich_limit, simple_velocity_limit, KarpelevichPoint, PolySequence, Poly,
    TreePartition, VelocityPoint,
};
