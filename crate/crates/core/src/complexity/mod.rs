//! Rademacher complexity estimates, empirical covers, cover-size formulas and
//! the Dudley entropy integral.

mod cover;
mod dudley;
mod rademacher;
mod table;

pub use cover::{cover_bound, empirical_cover, Cover, CoverFormula, CoverKind};
pub use dudley::{dudley_bound, DudleyGrid, DudleyResult, DUDLEY_GRID_POINTS, DUDLEY_PANELS};
pub use rademacher::{
    rademacher_linear_closed_form, rademacher_mc, random_unit_points, FunctionClass, OuterComposition, ParametricClass,
    RademacherEstimate, SupStrategy, ASCENT_RESTARTS, ASCENT_STEPS, MAX_ENUMERATED_WITNESSES,
};
pub use table::FunctionTable;
