//! Geometric quantities that drive sketch sizing: width estimators and
//! closed-form width bounds, restricted-eigenvalue estimation, sketch-size
//! recommendations, optimality certificates, and the per-symbol information
//! bound for sketched data.

mod certificate;
mod recommend;
mod restricted;
mod width;

pub use certificate::{certificate_sampled, certificate_subspace, mutual_info_per_symbol_bound, Certificate};
pub use recommend::{recommend_sketch_size, RecommendParams, Recommendation};
pub use restricted::{restricted_eig, restricted_eig_brute, ReEstimate, ReMethod, ReMode, ReOptions};
pub use width::{
    width_bound_group, width_bound_l1, width_bound_nuclear, width_cone_mc, width_subspace_mc,
    ConeProbe, WidthEstimate, WidthMethod,
};
