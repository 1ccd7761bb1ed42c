// SPDX-License-Identifier: Apache-2.0

//! Oracle-guided recovery of combinational logic as prime-implicant tables.
//!
//! Each output cone is learned from input/output queries alone: a random
//! probe finds a first ON-set minterm, which is expanded into a predicted
//! prime implicant; a SAT search then proposes uncovered minterms near the
//! table, widening its radius as candidates keep answering 0.

pub mod circuit;
pub mod cone;
pub mod cube;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod netlist;
pub mod oracle;
pub mod par;
pub mod sat;

pub use circuit::{
    pit_to_sop_netlist, predict_circuit, read_pla, sop_netlist, write_pla, PredictionReport,
};
pub use cone::{predict_cone, AttackParams, ConeResult, ConeStatus};
pub use cube::{Cube, Literal, Minterm, Pit};
pub use error::{Error, Result};
pub use expansion::{expand_minterm_to_pi, expand_scalably, ExpansionBudget};
pub use netlist::{parse_bench, GateKind, Netlist, NetlistBuilder};
pub use oracle::{OracleConfig, OracleSession, OracleSource};
