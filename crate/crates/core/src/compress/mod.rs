//! Compression of observation-level data into the representations the
//! estimators consume.
//!
//! Feature-keyed tables are built by hashing a canonical byte encoding of each
//! row; equality is exact, with no tolerance. Every table is emitted in a
//! deterministic order, so compressing shards and merging them reproduces the
//! table compressed in one pass.

mod binning;
mod cluster;
pub(crate) mod key;
mod suffstats;

pub use binning::{bin_features, bin_of, quantile_edges};
pub use cluster::{compress_between_cluster, compress_panel, PanelLayout};
pub use suffstats::{
    compress_fweights, compress_group_means, compress_suffstats, drop_cluster_key, merge_suffstats,
};
