pub mod analyze;
pub mod demo;
pub mod design;
pub mod simulate;
