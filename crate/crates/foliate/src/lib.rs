pub mod exact_linear;
pub mod series;
pub mod foliation;
pub mod invariant;
pub mod toric;
pub mod blowup;
pub mod driver;
pub mod io;
