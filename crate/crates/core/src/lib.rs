//! Deterministic harness for studying how the prompt-level representation of
//! environment state affects LLM agents in sequential decision tasks.

pub mod env;
pub mod encoders;
pub mod environments;
pub mod eval;
pub mod llm;
pub mod memory;
pub mod prompting;
