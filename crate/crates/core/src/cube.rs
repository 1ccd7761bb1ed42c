// SPDX-License-Identifier: Apache-2.0

//! Cubes over `{0, 1, -}`, minterms, and prime-implicant tables.
//!
//! A cube is stored as a pair of bitmasks: `care` marks the fixed positions
//! and `value` holds the literal of each fixed position (always zero where
//! `care` is clear). Position `i` (0-based) corresponds to circuit input
//! `i + 1` and to the `i`-th character of the textual form.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::CubeError;

pub(crate) type Words = SmallVec<[u64; 2]>;

#[inline]
pub(crate) fn word_count(width: usize) -> usize {
    width.div_ceil(64)
}

#[inline]
fn tail_mask(width: usize, word: usize) -> u64 {
    let used = width - word * 64;
    if used >= 64 {
        u64::MAX
    } else {
        (1u64 << used) - 1
    }
}

/// One position of a cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Literal {
    Zero,
    One,
    DontCare,
}

impl Literal {
    pub fn as_char(self) -> char {
        match self {
            Literal::Zero => '0',
            Literal::One => '1',
            Literal::DontCare => '-',
        }
    }
}

/// A fully specified input assignment.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Minterm {
    width: usize,
    bits: Words,
}

impl Minterm {
    pub fn zeros(width: usize) -> Self {
        Self {
            width,
            bits: SmallVec::from_elem(0, word_count(width)),
        }
    }

    /// Builds the minterm whose textual form is the `width`-bit binary
    /// representation of `index`, input 1 being the most significant bit.
    pub fn from_index(index: u64, width: usize) -> Self {
        assert!(width <= 64, "from_index supports at most 64 inputs");
        let mut m = Self::zeros(width);
        for i in 0..width {
            if (index >> (width - 1 - i)) & 1 == 1 {
                m.set(i, true);
            }
        }
        m
    }

    /// Inverse of [`Minterm::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(self.width <= 64, "to_index supports at most 64 inputs");
        (0..self.width).fold(0u64, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut m = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            m.set(i, b);
        }
        m
    }

    pub fn random<R: rand::Rng + ?Sized>(width: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(width);
        for (k, w) in m.bits.iter_mut().enumerate() {
            *w = rng.gen::<u64>() & tail_mask(width, k);
        }
        m
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.width);
        (self.bits[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.width);
        let mask = 1u64 << (i % 64);
        if v {
            self.bits[i / 64] |= mask;
        } else {
            self.bits[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.bits[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.width).map(move |i| self.get(i))
    }

    pub fn to_cube(&self) -> Cube {
        Cube {
            width: self.width,
            care: (0..word_count(self.width))
                .map(|k| tail_mask(self.width, k))
                .collect(),
            value: self.bits.clone(),
        }
    }

    /// Hamming distance between two minterms of equal width.
    pub fn hamming(&self, other: &Minterm) -> Result<usize, CubeError> {
        check_width(self.width, other.width)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }
}

impl fmt::Display for Minterm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Minterm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Minterm({self})")
    }
}

impl FromStr for Minterm {
    type Err = CubeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cube: Cube = s.parse()?;
        cube.as_minterm()
            .ok_or(CubeError::NotAMinterm(s.to_string()))
    }
}

/// A product term over `{0, 1, -}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cube {
    width: usize,
    care: Words,
    value: Words,
}

impl Cube {
    /// The all-don't-care cube (the tautology).
    pub fn universe(width: usize) -> Self {
        Self {
            width,
            care: SmallVec::from_elem(0, word_count(width)),
            value: SmallVec::from_elem(0, word_count(width)),
        }
    }

    pub fn from_literals(lits: &[Literal]) -> Self {
        let mut c = Self::universe(lits.len());
        for (i, &l) in lits.iter().enumerate() {
            c.set(i, l);
        }
        c
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, i: usize) -> Literal {
        debug_assert!(i < self.width);
        let (k, b) = (i / 64, i % 64);
        if (self.care[k] >> b) & 1 == 0 {
            Literal::DontCare
        } else if (self.value[k] >> b) & 1 == 1 {
            Literal::One
        } else {
            Literal::Zero
        }
    }

    pub fn set(&mut self, i: usize, lit: Literal) {
        debug_assert!(i < self.width);
        let (k, mask) = (i / 64, 1u64 << (i % 64));
        match lit {
            Literal::DontCare => {
                self.care[k] &= !mask;
                self.value[k] &= !mask;
            }
            Literal::Zero => {
                self.care[k] |= mask;
                self.value[k] &= !mask;
            }
            Literal::One => {
                self.care[k] |= mask;
                self.value[k] |= mask;
            }
        }
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        (0..self.width).map(move |i| self.get(i))
    }

    pub fn dc_count(&self) -> usize {
        self.width - self.fixed_count()
    }

    pub fn fixed_count(&self) -> usize {
        self.care.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_minterm(&self) -> bool {
        self.dc_count() == 0
    }

    pub fn is_universe(&self) -> bool {
        self.care.iter().all(|&w| w == 0)
    }

    pub fn as_minterm(&self) -> Option<Minterm> {
        self.is_minterm().then(|| Minterm {
            width: self.width,
            bits: self.value.clone(),
        })
    }

    /// Positions holding a fixed literal, ascending, with their value.
    pub fn fixed_positions(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        (0..self.width).filter_map(move |i| match self.get(i) {
            Literal::DontCare => None,
            l => Some((i, l == Literal::One)),
        })
    }

    pub fn dc_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(move |&i| self.get(i) == Literal::DontCare)
    }

    /// True iff every fixed position of `self` equals the bit of `m`.
    pub fn covers(&self, m: &Minterm) -> Result<bool, CubeError> {
        check_width(self.width, m.width)?;
        Ok(self.covers_unchecked(m))
    }

    /// [`Cube::covers`] without the width check (debug-asserted).
    #[inline]
    pub fn covers_unchecked(&self, m: &Minterm) -> bool {
        debug_assert_eq!(self.width, m.width);
        self.care
            .iter()
            .zip(&self.value)
            .zip(&m.bits)
            .all(|((c, v), b)| (b ^ v) & c == 0)
    }

    /// Number of positions where one cube is fixed 0 and the other fixed 1.
    pub fn distance(&self, other: &Cube) -> Result<usize, CubeError> {
        check_width(self.width, other.width)?;
        Ok(self.distance_unchecked(other))
    }

    #[inline]
    pub fn distance_unchecked(&self, other: &Cube) -> usize {
        debug_assert_eq!(self.width, other.width);
        let mut d = 0;
        for k in 0..self.care.len() {
            d += ((self.value[k] ^ other.value[k]) & self.care[k] & other.care[k]).count_ones();
        }
        d as usize
    }

    /// Distance from a minterm: the number of fixed positions it violates.
    #[inline]
    pub fn distance_to_minterm(&self, m: &Minterm) -> usize {
        debug_assert_eq!(self.width, m.width);
        self.care
            .iter()
            .zip(&self.value)
            .zip(&m.bits)
            .map(|((c, v), b)| ((b ^ v) & c).count_ones() as usize)
            .sum()
    }

    /// True iff every minterm covered by `other` is covered by `self`.
    pub fn contains(&self, other: &Cube) -> bool {
        debug_assert_eq!(self.width, other.width);
        (0..self.care.len()).all(|k| {
            self.care[k] & !other.care[k] == 0
                && (self.value[k] ^ other.value[k]) & self.care[k] == 0
        })
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.literals() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cube({self})")
    }
}

impl FromStr for Cube {
    type Err = CubeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(CubeError::Empty);
        }
        let lits = s
            .chars()
            .enumerate()
            .map(|(i, ch)| match ch {
                '0' => Ok(Literal::Zero),
                '1' => Ok(Literal::One),
                '-' => Ok(Literal::DontCare),
                _ => Err(CubeError::BadChar { ch, pos: i }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Cube::from_literals(&lits))
    }
}

impl From<&Minterm> for Cube {
    fn from(m: &Minterm) -> Self {
        m.to_cube()
    }
}

fn check_width(expected: usize, found: usize) -> Result<(), CubeError> {
    if expected == found {
        Ok(())
    } else {
        Err(CubeError::WidthMismatch { expected, found })
    }
}

/// A prime-implicant table: an insertion-ordered, duplicate-free sum of
/// products over a fixed input width.
#[derive(Clone, Default)]
pub struct Pit {
    width: usize,
    pis: Vec<Cube>,
    seen: HashSet<Cube>,
}

impl Pit {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            pis: Vec::new(),
            seen: HashSet::new(),
        }
    }

    /// Builds a table from cubes, dropping exact duplicates.
    pub fn from_cubes<I: IntoIterator<Item = Cube>>(
        width: usize,
        cubes: I,
    ) -> Result<Self, CubeError> {
        let mut t = Self::new(width);
        for c in cubes {
            t.insert(c)?;
        }
        Ok(t)
    }

    /// Parses whitespace- or comma-separated cube strings.
    pub fn parse(width: usize, text: &str) -> Result<Self, CubeError> {
        let cubes = text
            .split(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Cube>, _>>()?;
        Self::from_cubes(width, cubes)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.pis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pis.is_empty()
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.pis
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cube> {
        self.pis.iter()
    }

    /// Appends `cube` unless an identical cube is present. Returns whether
    /// the table grew.
    pub fn insert(&mut self, cube: Cube) -> Result<bool, CubeError> {
        check_width(self.width, cube.width)?;
        if self.seen.contains(&cube) {
            return Ok(false);
        }
        self.seen.insert(cube.clone());
        self.pis.push(cube);
        Ok(true)
    }

    pub fn contains(&self, cube: &Cube) -> bool {
        self.seen.contains(cube)
    }

    /// Sum-of-products value at `m`; the empty table is constant 0.
    pub fn eval(&self, m: &Minterm) -> Result<bool, CubeError> {
        check_width(self.width, m.width)?;
        Ok(self.eval_unchecked(m))
    }

    #[inline]
    pub fn eval_unchecked(&self, m: &Minterm) -> bool {
        self.pis.iter().any(|c| c.covers_unchecked(m))
    }

    /// Smallest distance from `m` to any cube, `None` for an empty table.
    pub fn min_distance(&self, m: &Minterm) -> Option<usize> {
        self.pis.iter().map(|c| c.distance_to_minterm(m)).min()
    }

    /// Positions that are don't-care in every cube. Empty for an empty table.
    pub fn always_dc(&self) -> Vec<bool> {
        if self.pis.is_empty() {
            return vec![false; self.width];
        }
        (0..self.width)
            .map(|i| self.pis.iter().all(|c| c.get(i) == Literal::DontCare))
            .collect()
    }
}

impl PartialEq for Pit {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.pis == other.pis
    }
}

impl Eq for Pit {}

impl fmt::Display for Pit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, c) in self.pis.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Pit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pit{self}")
    }
}

impl<'a> IntoIterator for &'a Pit {
    type Item = &'a Cube;
    type IntoIter = std::slice::Iter<'a, Cube>;

    fn into_iter(self) -> Self::IntoIter {
        self.pis.iter()
    }
}
