//! HTTP+JSON service for labeling candidate stopwords.
//!
//! | method | path | result |
//! |---|---|---|
//! | GET  | `/health` | `{"status":"ok"}` |
//! | POST | `/sessions` | `201 {"session_id", ...}` |
//! | GET  | `/sessions/{id}` | full session export |
//! | GET  | `/sessions/{id}/next?rater=R` | next unlabeled term for `R` |
//! | POST | `/sessions/{id}/labels` | `204` |
//! | GET  | `/sessions/{id}/discrepancies` | disputed terms with each rater's label |
//! | POST | `/sessions/{id}/consensus` | `204` |
//! | GET  | `/sessions/{id}/alpha` | `{"alpha": x}`, or `409` when undefined |
//! | POST | `/sessions/{id}/finalize` | the final list as plain text |

pub mod api;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::router;
pub use store::{Store, StoreError};

/// Binds `addr` and serves until the process ends.
pub async fn serve(addr: SocketAddr, store: Store, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(store), static_dir)).await
}
