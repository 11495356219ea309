//! Driver and example corpus for the `quill` command.

pub mod corpus;
pub mod driver;
