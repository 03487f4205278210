//! Fourier–Motzkin elimination over rate symbols whose constants are
//! signed sums of entropies.

mod expr;
pub mod paper;
mod system;

pub use expr::{decimal, parse_expr, EntropyExpr, SymbolTable, Valuation, VarSet, VarTable, WithSymbols};
pub use system::{parse_system, ConstDoc, Inequality, RateSystem, Rel, RowDoc, RowReport, SystemDoc};
