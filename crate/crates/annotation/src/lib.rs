//! Collection of best-worst scaling and 0–100 rating judgments over HTTP.
//!
//! Campaigns and responses live in plain files under a data directory; see
//! [`store`]. The JSON API is in [`http`].

pub mod http;
pub mod store;

pub use store::{Campaign, CampaignSpec, Progress, Response, Store, StoreError, StoreOptions, Task, TaskText};
