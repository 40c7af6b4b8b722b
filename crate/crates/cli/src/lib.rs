pub mod commands;
pub mod json;
pub mod tm;
