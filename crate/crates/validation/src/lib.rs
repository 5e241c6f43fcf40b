//! Holds the `acceptance` test target. Run it with
//! `cargo test -p pme-validation --test acceptance -- --nocapture`.
