//! Full-size acceptance runs for `g2lab`; see `tests/acceptance.rs`.
