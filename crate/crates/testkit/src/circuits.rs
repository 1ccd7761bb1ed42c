// SPDX-License-Identifier: Apache-2.0

//! Hand-written reference circuits.

use pitrec::{parse_bench, GateKind, Netlist, NetlistBuilder};

/// `a1 a2 !a4 + a4 !a6 + !a1 a6` over six inputs.
pub const EXAMPLE_F_BENCH: &str = "\
# f = a1 a2 !a4 + a4 !a6 + !a1 a6
INPUT(a1)
INPUT(a2)
INPUT(a3)
INPUT(a4)
INPUT(a5)
INPUT(a6)
OUTPUT(f)
n1 = NOT(a1)
n4 = NOT(a4)
n6 = NOT(a6)
t1 = AND(a1, a2, n4)
t2 = AND(a4, n6)
t3 = AND(n1, a6)
f = OR(t1, t2, t3)
";

/// The ISCAS-85 c17 circuit.
pub const C17_BENCH: &str = "\
# c17
INPUT(1)
INPUT(2)
INPUT(3)
INPUT(6)
INPUT(7)
OUTPUT(22)
OUTPUT(23)
10 = NAND(1, 3)
11 = NAND(3, 6)
16 = NAND(2, 11)
19 = NAND(11, 7)
22 = NAND(10, 16)
23 = NAND(16, 19)
";

pub fn example_f() -> Netlist {
    parse_bench(EXAMPLE_F_BENCH).expect("valid")
}

pub fn c17() -> Netlist {
    parse_bench(C17_BENCH).expect("valid")
}

fn inputs(b: &mut NetlistBuilder, prefix: &str, n: usize) -> Vec<String> {
    (1..=n)
        .map(|i| {
            let name = format!("{prefix}{i}");
            b.input(name.clone());
            name
        })
        .collect()
}

/// Parity of `k` inputs.
pub fn xor_n(k: usize) -> Netlist {
    let mut b = NetlistBuilder::new();
    let xs = inputs(&mut b, "x", k);
    b.output("y");
    b.gate("y", GateKind::Xor, xs);
    b.build().expect("valid")
}

/// Conjunction of `k` inputs.
pub fn and_n(k: usize) -> Netlist {
    let mut b = NetlistBuilder::new();
    let xs = inputs(&mut b, "x", k);
    b.output("y");
    b.gate("y", GateKind::And, xs);
    b.build().expect("valid")
}

/// `n` inputs; output 1 is constant 0 built as `x1 AND NOT x1`, output 2
/// constant 1 as `x1 OR NOT x1`, output 3 is `x1 XOR x2`.
pub fn constants(n: usize) -> Netlist {
    assert!(n >= 2);
    let mut b = NetlistBuilder::new();
    inputs(&mut b, "x", n);
    b.output("zero").output("one").output("mix");
    b.gate("nx1", GateKind::Not, ["x1"]);
    b.gate("zero", GateKind::And, ["x1", "nx1"]);
    b.gate("one", GateKind::Or, ["x1", "nx1"]);
    b.gate("mix", GateKind::Xor, ["x1", "x2"]);
    b.build().expect("valid")
}

/// Column of data bit `k` in the 16-bit single-error-correcting code: the
/// ten weight-2 patterns over five check bits, then one weight-3 pattern.
pub fn sec16_column(k: usize) -> u8 {
    let mut cols = Vec::new();
    for a in 0..5 {
        for b in a + 1..5 {
            cols.push((1u8 << a) | (1 << b));
        }
    }
    cols.push(0b00111);
    cols[k]
}

/// Single-error-correcting decoder over 11 data bits `d1..d11` and 5 check
/// bits `c1..c5`. Output `k` is `d_k` flipped when the syndrome equals the
/// column of bit `k`. `outputs` selects which data bits get an output.
pub fn sec16(outputs: &[usize]) -> Netlist {
    let mut b = NetlistBuilder::new();
    let d = inputs(&mut b, "d", 11);
    let c = inputs(&mut b, "c", 5);
    for &k in outputs {
        b.output(format!("o{}", k + 1));
    }
    for (j, cj) in c.iter().enumerate() {
        let mut terms = vec![cj.clone()];
        for (k, dk) in d.iter().enumerate() {
            if sec16_column(k) >> j & 1 == 1 {
                terms.push(dk.clone());
            }
        }
        b.gate(format!("s{}", j + 1), GateKind::Xor, terms);
        b.gate(
            format!("ns{}", j + 1),
            GateKind::Not,
            [format!("s{}", j + 1)],
        );
    }
    for &k in outputs {
        let col = sec16_column(k);
        let lits: Vec<String> = (0..5)
            .map(|j| {
                if col >> j & 1 == 1 {
                    format!("s{}", j + 1)
                } else {
                    format!("ns{}", j + 1)
                }
            })
            .collect();
        b.gate(format!("e{}", k + 1), GateKind::And, lits);
        b.gate(
            format!("o{}", k + 1),
            GateKind::Xor,
            [d[k].clone(), format!("e{}", k + 1)],
        );
    }
    b.build().expect("valid")
}

/// A 27-channel interrupt controller with 36 inputs and 7 outputs: request
/// buses `A`, `B`, `C` of nine lines each share the enable lines `E`. Bus
/// `A` outranks `B`, which outranks `C`. `PA`, `PB`, `PC` flag the granted
/// bus and `CH3..CH0` encode the lowest enabled requesting channel on it,
/// or `1111` when nothing is pending.
pub fn interrupt_controller() -> Netlist {
    let mut b = NetlistBuilder::new();
    let a = inputs(&mut b, "A", 9);
    let bb = inputs(&mut b, "B", 9);
    let c = inputs(&mut b, "C", 9);
    let e = inputs(&mut b, "E", 9);
    for o in ["PA", "PB", "PC", "CH3", "CH2", "CH1", "CH0"] {
        b.output(o);
    }
    for (bus, lines) in [("a", &a), ("b", &bb), ("c", &c)] {
        for i in 0..9 {
            b.gate(
                format!("r{bus}{i}"),
                GateKind::And,
                [lines[i].clone(), e[i].clone()],
            );
        }
        b.gate(
            format!("any{bus}"),
            GateKind::Or,
            (0..9).map(|i| format!("r{bus}{i}")),
        );
    }
    b.gate("PA", GateKind::Buff, ["anya"]);
    b.gate("npa", GateKind::Not, ["anya"]);
    b.gate("PB", GateKind::And, ["npa", "anyb"]);
    b.gate("npb", GateKind::Not, ["anyb"]);
    b.gate("PC", GateKind::And, ["npa", "npb", "anyc"]);
    for i in 0..9 {
        b.gate(
            format!("gb{i}"),
            GateKind::And,
            ["npa".to_string(), format!("rb{i}")],
        );
        b.gate(
            format!("gc{i}"),
            GateKind::And,
            ["npa".to_string(), "npb".to_string(), format!("rc{i}")],
        );
        b.gate(
            format!("sel{i}"),
            GateKind::Or,
            [format!("ra{i}"), format!("gb{i}"), format!("gc{i}")],
        );
        b.gate(format!("nsel{i}"), GateKind::Not, [format!("sel{i}")]);
    }
    b.gate("first0", GateKind::Buff, ["sel0"]);
    for i in 1..9 {
        let mut ins = vec![format!("sel{i}")];
        ins.extend((0..i).map(|j| format!("nsel{j}")));
        b.gate(format!("first{i}"), GateKind::And, ins);
    }
    b.gate("none", GateKind::Nor, (0..9).map(|i| format!("sel{i}")));
    for bit in 0..4 {
        let mut ins = vec!["none".to_string()];
        ins.extend(
            (0..9)
                .filter(|i| i >> bit & 1 == 1)
                .map(|i| format!("first{i}")),
        );
        b.gate(format!("CH{bit}"), GateKind::Or, ins);
    }
    b.build().expect("valid")
}
