//! Highway truck planning-and-control simulation toolkit: microscopic
//! traffic around an ego tractor-trailer, a drive-line/brake/lateral
//! truck model, fuel-optimal speed planning, a learned lane-change
//! decision maker, quintic trajectory planning, and a batch experiment
//! harness.

pub mod map;
pub mod traffic;
pub mod pcc;
pub mod truck;
