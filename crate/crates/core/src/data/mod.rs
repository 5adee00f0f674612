//! Trip ingestion and the hourly demand pipeline.

pub mod demand;
pub mod scaler;
pub mod trips;
pub mod window;

pub use demand::{build_demand_matrix, DemandMatrix};
pub use scaler::Scaler;
pub use trips::{open_trip_file, parse_trips, ParseOutcome, RejectReason, TripRecord, UserType};
pub use window::{make_windows, WindowedSample};
