pub mod analyze;
pub mod compare;
pub mod map;
pub mod simulate;
pub mod sweep;
pub mod theory;
