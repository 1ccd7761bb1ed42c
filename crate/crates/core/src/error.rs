// SPDX-License-Identifier: Apache-2.0

use std::io;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CubeError {
    #[error("width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("invalid cube character {ch:?} at position {pos}")]
    BadChar { ch: char, pos: usize },
    #[error("empty cube string")]
    Empty,
    #[error("{0:?} contains don't-cares, expected a minterm")]
    NotAMinterm(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetlistError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undefined net `{name}`")]
    UndefinedNet { line: usize, name: String },
    #[error("line {line}: unknown gate kind `{kind}`")]
    UnknownGate { line: usize, kind: String },
    #[error("line {line}: {kind} expects {expected} input(s), found {found}")]
    Arity {
        line: usize,
        kind: String,
        expected: &'static str,
        found: usize,
    },
    #[error("line {line}: combinational cycle through net `{net}`")]
    Cycle { line: usize, net: String },
    #[error("line {line}: net `{name}` defined more than once")]
    Redefined { line: usize, name: String },
    #[error("assignment width {found} does not match {expected} inputs")]
    WidthMismatch { expected: usize, found: usize },
    #[error("output index {index} out of range ({count} outputs)")]
    InvalidOutput { index: usize, count: usize },
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("cannot read oracle netlist: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("external oracle handshake failed: {0}")]
    Handshake(String),
    #[error("external oracle protocol violation: {0}")]
    Protocol(String),
    #[error("query width {found} does not match {expected} inputs")]
    WidthMismatch { expected: usize, found: usize },
    #[error("output index {index} out of range ({count} outputs)")]
    InvalidOutput { index: usize, count: usize },
}

#[derive(Debug, Error)]
pub enum SatError {
    #[error("solver resource budget exhausted")]
    ResourceExhausted,
    #[error("external solver: {0}")]
    External(String),
    #[error("external solver I/O: {0}")]
    Io(#[from] io::Error),
    #[error("distance {d} out of range 0..={n}")]
    DistanceOutOfRange { d: usize, n: usize },
    #[error("distance ball needs a non-empty table")]
    EmptyTable,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("seed minterm {0} is not in the ON-set")]
    NotOnSet(String),
    #[error("cone has {found} effective inputs, above the cap of {cap}")]
    CapExceeded { found: usize, cap: usize },
    #[error("circuits differ in interface: {0}")]
    Interface(String),
    #[error("I/O: {0}")]
    Io(#[from] io::Error),
    #[error("PLA: {0}")]
    Pla(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
