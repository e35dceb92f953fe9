pub mod analytics;
pub mod domains;
pub mod expr;
pub mod knowledge;
pub mod production;
pub mod selector;
pub mod transactions;
pub mod value;
