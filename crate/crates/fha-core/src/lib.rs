//! A small call-by-push-value language with higher-order algebraic effects
//! and handlers, in the polymorphic lambda calculus tradition.
//!
//! The pipeline is: parse (`parser`) → kind/type check (`check`) → either
//! evaluate directly (`eval`) or erase types and extract into the untyped
//! lambda calculus (`extract`), whose tiny normalizer lives in `lam`.
//! `stdlib` holds the prelude source and the effect-combinator builders
//! (coproducts, operation-family signatures, row elaboration); `corpus`
//! holds the seeded program generator shared by the test suite and the
//! CLI's `selftest` subcommand.
//!
//! Values and computations are separate syntactic classes: terms are inert,
//! computations are where effects and recursion happen, and the two meet
//! through `thunk`/`force`. Computations come in two modes — Total ones are
//! pure-terminating by construction, Partial ones admit general recursion
//! via `fix` — and the thunk type tracks the mode (`Th` vs `PTh`).

pub mod check;
pub mod corpus;
pub mod eval;
pub mod extract;
pub mod lam;
pub mod parser;
pub mod pretty;
pub mod stdlib;
pub mod syntax;
