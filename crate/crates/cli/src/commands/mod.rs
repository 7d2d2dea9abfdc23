pub mod check;
pub mod check_id;
pub mod estimate;
pub mod fit;
pub mod report;
pub mod simulate;
