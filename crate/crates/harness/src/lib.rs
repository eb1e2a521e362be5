pub mod bench;
pub mod campaign;
pub mod gen;
pub mod snowflake;
