pub mod audit;
pub mod formulas;
pub mod gap;

pub use audit::{security_audit, AuditInput, AuditReport};
pub use formulas::{
    formula_point, grouped_operating_region, solve_cache_prob, CacheInput, FormulaPoint,
};
pub use gap::{centralized_vs_decentralized, gap_curves, max_gap};
