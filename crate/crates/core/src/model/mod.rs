//! Model architectures: the learnable-filter GCNNs, fixed-filter GCNNs and
//! the classical baselines.

pub mod forward;
pub mod ha;
pub mod lasso;
pub mod layers;
pub mod lstm;
pub mod spec;
pub mod trained;

pub use forward::{ddgf_forward, gcnn_rec_forward, gcnn_reg_forward};
pub use ha::{ha_fit, HaParams};
pub use lasso::{lasso_fit, LassoParams};
pub use layers::{materialize_filter, DenseParams, FilterParam, GcnnLayerParams};
pub use lstm::{lstm_step, LstmCellParams};
pub use spec::{Architecture, ModelSpec};
pub use trained::{init_params, ModelParams, RecParams, TrainedModel};
