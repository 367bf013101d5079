pub mod events;
pub mod geometry;
pub mod monitor;
pub mod navigation;
pub mod perception;
pub mod runner;
pub mod scenario;
pub mod sensors;
pub mod simworld;

pub use geometry::{Frame2, Point2, Vec2};
pub use simworld::{VelocityCommand, WorldState};
