//! Hidden-variable models under test.

pub mod hess;
pub mod lhv;
pub mod nested;
pub mod pr_box;
mod table;
pub mod tb;

pub use hess::{hess_correlation, random_hess_model, HessModel, HessShape};
pub use lhv::{sign_model_correlation, sign_model_outputs, DeterministicLhv};
pub use nested::{
    nested_correlation, nested_response, random_nested_model, random_nested_model_with, random_simplex, FactorForm,
    FactorRole, NestedModel, NestedResponses, NestedShape, NestedWeights, Party, SideTables,
};
pub use pr_box::{pr_box, pr_box_correlation};
pub use table::Table;
pub use tb::{tb_alice, tb_bob, tb_round, tb_transcript, HiddenPair, TranscriptTb};
