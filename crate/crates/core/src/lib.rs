//! Intent classification for news tweets with reinforcement-learned word selection.
//!
//! The pipeline has three trainable pieces:
//!
//! - an LSTM intent classifier (embedding, recurrent cell, critic head) trained by
//!   cross-entropy with L2 regularization,
//! - a word-selection actor trained by REINFORCE against the frozen classifier,
//!   rewarded for gold-class probability plus a masked-length bonus,
//! - an optional certainty bonus derived from subjective-logic opinions (vacuity
//!   or dissonance) formed over the critic's per-step class distributions.
//!
//! Modules:
//!
//! - [`numkit`]: dense f64 vectors/matrices, a gradient tape, Adam, a seeded
//!   portable RNG, a finite-difference gradient oracle, and the checkpoint
//!   container.
//! - [`textdata`]: corpus ingestion, tokenization, vocabulary, prefix padding,
//!   splits, and a synthetic labeled-corpus generator.
//! - [`classifier`]: the LSTM intent classifier and its training loop.
//! - [`subjlogic`]: subjective-logic opinions, vacuity maximization, dissonance,
//!   and certainty accumulation.
//! - [`policy`]: the word-selection MDP, rollouts, REINFORCE, and the DRL
//!   training loop.
//! - [`eval`]: accuracy/effectiveness/efficiency metrics and report emission.
//! - [`config`]: layered experiment configuration with the paper-default
//!   hyperparameters.
//! - [`cli`]: the subcommand implementations behind the `intentrl` binary.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod eval;
pub mod numkit;
pub mod policy;
pub mod subjlogic;
pub mod textdata;
