//! Holds the `acceptance` test target. Kept in its own package so that it
//! runs after the library and CLI test suites under `cargo test --workspace`.
