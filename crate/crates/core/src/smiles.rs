//! SMILES reader producing a [`MolGraph`].
//!
//! Grammar subset: organic-subset atoms (aliphatic and aromatic), bracket atoms
//! with isotope, chirality, hydrogen count, charge and atom class, ring closures
//! (`1`..`9` and `%nn`), bond symbols `- = # : / \`, branches and `.`
//! component separators. Stereo markers and isotopes are read and dropped;
//! directional bonds become single bonds. Aromaticity is taken verbatim from
//! lowercase notation and no perception or kekulization is attempted.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Bond multiplicity as written in the SMILES string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Stable small integer used in fingerprint hashing.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    fn valence_contribution(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomRecord {
    pub element: String,
    pub aromatic: bool,
    pub formal_charge: i32,
    /// Bracket hydrogen count, or the implicit count from the default valence
    /// rule for organic-subset atoms.
    pub explicit_h: u32,
    /// Number of incident bonds.
    pub degree: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BondRecord {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl BondRecord {
    /// The endpoint that is not `atom`.
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Simple undirected molecular graph. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolGraph {
    atoms: Vec<AtomRecord>,
    bonds: Vec<BondRecord>,
    adjacency: Vec<Vec<(usize, BondOrder)>>,
    n_components: usize,
}

impl MolGraph {
    pub fn atoms(&self) -> &[AtomRecord] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[BondRecord] {
        &self.bonds
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// Neighbors of `atom` with the connecting bond order, in bond insertion order.
    pub fn neighbors(&self, atom: usize) -> &[(usize, BondOrder)] {
        &self.adjacency[atom]
    }

    /// Per-atom flag: the atom has at least one incident bond lying on a cycle.
    ///
    /// Computed from bridges: a bond is on a cycle iff it is not a bridge.
    pub fn ring_atoms(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut in_ring = vec![false; n];
        let bridges = self.bridges();
        for (i, bond) in self.bonds.iter().enumerate() {
            if !bridges[i] {
                in_ring[bond.a] = true;
                in_ring[bond.b] = true;
            }
        }
        in_ring
    }

    /// `bridges[i]` is true when removing bond `i` disconnects its endpoints.
    fn bridges(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (i, bond) in self.bonds.iter().enumerate() {
            incident[bond.a].push((bond.b, i));
            incident[bond.b].push((bond.a, i));
        }
        let mut is_bridge = vec![false; self.bonds.len()];
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0usize;
        // iterative DFS: (node, parent bond, next incident position)
        let mut stack: Vec<(usize, usize, usize)> = Vec::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            stack.push((root, usize::MAX, 0));
            while let Some(&mut (v, parent_edge, ref mut pos)) = stack.last_mut() {
                if *pos < incident[v].len() {
                    let (w, edge) = incident[v][*pos];
                    *pos += 1;
                    if edge == parent_edge {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, edge, 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[v]);
                        if low[v] > disc[p] {
                            is_bridge[parent_edge] = true;
                        }
                    }
                }
            }
        }
        is_bridge
    }

    /// Breadth-first topological distances from `source`, truncated at `max_depth`.
    /// Unreached atoms are `None`.
    pub fn distances_from(&self, source: usize, max_depth: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.atoms.len()];
        dist[source] = Some(0);
        let mut frontier = vec![source];
        let mut depth = 0;
        while !frontier.is_empty() && depth < max_depth {
            depth += 1;
            let mut next = Vec::new();
            for &v in &frontier {
                for &(w, _) in &self.adjacency[v] {
                    if dist[w].is_none() {
                        dist[w] = Some(depth);
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        dist
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("ring closure {label} at position {pos} is unmatched or invalid")]
    UnmatchedRingClosure { pos: usize, label: u32 },
    #[error("unbalanced parenthesis at position {pos}")]
    UnbalancedParenthesis { pos: usize },
    #[error("unknown symbol {symbol:?} at position {pos}")]
    UnknownSymbol { pos: usize, symbol: String },
    #[error("malformed charge at position {pos}")]
    InvalidCharge { pos: usize },
}

impl SmilesError {
    /// Variant name, used in reject listings.
    pub fn name(&self) -> &'static str {
        match self {
            SmilesError::UnmatchedRingClosure { .. } => "UnmatchedRingClosure",
            SmilesError::UnbalancedParenthesis { .. } => "UnbalancedParenthesis",
            SmilesError::UnknownSymbol { .. } => "UnknownSymbol",
            SmilesError::InvalidCharge { .. } => "InvalidCharge",
        }
    }
}

const ELEMENTS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

const BRACKET_AROMATIC: [&str; 8] = ["b", "c", "n", "o", "p", "s", "se", "as"];

fn default_valences(element: &str) -> &'static [u32] {
    match element {
        "B" => &[3],
        "C" => &[4],
        "N" => &[3, 5],
        "O" => &[2],
        "P" => &[3, 5],
        "S" => &[2, 4, 6],
        "F" | "Cl" | "Br" | "I" => &[1],
        _ => &[],
    }
}

struct PendingAtom {
    record: AtomRecord,
    implicit_h: bool,
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
    atoms: Vec<PendingAtom>,
    bonds: Vec<BondRecord>,
    bond_index: HashMap<(usize, usize), usize>,
    // ring label -> (atom, bond written at the opening, position)
    rings: HashMap<u32, (usize, Option<BondOrder>, usize)>,
    branch_stack: Vec<(usize, usize)>,
    prev: Option<usize>,
    pending_bond: Option<(BondOrder, usize)>,
}

/// Parse a SMILES string into a molecular graph.
pub fn parse_smiles(s: &str) -> Result<MolGraph, SmilesError> {
    if s.is_empty() {
        return Err(SmilesError::UnknownSymbol { pos: 0, symbol: String::new() });
    }
    if let Some(pos) = s.bytes().position(|b| !b.is_ascii()) {
        let symbol = s[pos..].chars().next().map(String::from).unwrap_or_default();
        return Err(SmilesError::UnknownSymbol { pos, symbol });
    }
    Parser {
        input: s.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        bond_index: HashMap::new(),
        rings: HashMap::new(),
        branch_stack: Vec::new(),
        prev: None,
        pending_bond: None,
    }
    .run()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn unknown(&self, pos: usize) -> SmilesError {
        let symbol = self
            .input
            .get(pos)
            .map(|&b| (b as char).to_string())
            .unwrap_or_default();
        SmilesError::UnknownSymbol { pos, symbol }
    }

    fn run(mut self) -> Result<MolGraph, SmilesError> {
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(SmilesError::UnbalancedParenthesis { pos: self.pos });
                    };
                    if self.pending_bond.is_some() {
                        return Err(self.unknown(self.pos));
                    }
                    self.branch_stack.push((prev, self.pos));
                    self.pos += 1;
                    if self.peek() == Some(b')') {
                        return Err(SmilesError::UnbalancedParenthesis { pos: self.pos });
                    }
                }
                b')' => {
                    let Some((anchor, _)) = self.branch_stack.pop() else {
                        return Err(SmilesError::UnbalancedParenthesis { pos: self.pos });
                    };
                    if let Some((_, p)) = self.pending_bond {
                        return Err(self.unknown(p));
                    }
                    self.prev = Some(anchor);
                    self.pos += 1;
                }
                b'.' => {
                    if self.prev.is_none() || self.pending_bond.is_some() {
                        return Err(self.unknown(self.pos));
                    }
                    if let Some(&(_, p)) = self.branch_stack.last() {
                        return Err(SmilesError::UnbalancedParenthesis { pos: p });
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending_bond.is_some() || self.prev.is_none() {
                        return Err(self.unknown(self.pos));
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        _ => BondOrder::Single,
                    };
                    self.pending_bond = Some((order, self.pos));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom)?;
                }
            }
        }
        if let Some((_, p)) = self.pending_bond {
            return Err(self.unknown(p));
        }
        if let Some(&(_, p)) = self.branch_stack.last() {
            return Err(SmilesError::UnbalancedParenthesis { pos: p });
        }
        if let Some((&label, &(_, _, pos))) = self.rings.iter().min_by_key(|(_, v)| v.2) {
            return Err(SmilesError::UnmatchedRingClosure { pos, label });
        }
        Ok(self.finish())
    }

    fn add_atom(&mut self, atom: PendingAtom) -> Result<(), SmilesError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let order = match self.pending_bond.take() {
                Some((order, _)) => order,
                None => self.implicit_order(prev, idx),
            };
            self.add_bond(prev, idx, order, self.pos)?;
        } else if let Some((_, p)) = self.pending_bond {
            return Err(self.unknown(p));
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn implicit_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].record.aromatic && self.atoms[b].record.aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn add_bond(&mut self, a: usize, b: usize, order: BondOrder, pos: usize) -> Result<(), SmilesError> {
        let key = (a.min(b), a.max(b));
        if a == b || self.bond_index.contains_key(&key) {
            return Err(SmilesError::UnmatchedRingClosure { pos, label: 0 });
        }
        self.bond_index.insert(key, self.bonds.len());
        self.bonds.push(BondRecord { a, b, order });
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let start = self.pos;
        let label = if self.peek() == Some(b'%') {
            let digits = self.input.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0')
                }
                _ => return Err(self.unknown(start)),
            }
        } else {
            let d = u32::from(self.input[self.pos] - b'0');
            self.pos += 1;
            d
        };
        let Some(atom) = self.prev else {
            return Err(SmilesError::UnmatchedRingClosure { pos: start, label });
        };
        let bond = self.pending_bond.take().map(|(o, _)| o);
        match self.rings.remove(&label) {
            None => {
                self.rings.insert(label, (atom, bond, start));
            }
            Some((partner, open_bond, _)) => {
                let order = match (open_bond, bond) {
                    (Some(o), None) | (None, Some(o)) => o,
                    (Some(o1), Some(o2)) => {
                        if o1 != o2 {
                            return Err(SmilesError::UnmatchedRingClosure { pos: start, label });
                        }
                        o1
                    }
                    (None, None) => self.implicit_order(partner, atom),
                };
                if partner == atom {
                    return Err(SmilesError::UnmatchedRingClosure { pos: start, label });
                }
                self.add_bond(partner, atom, order, start)
                    .map_err(|_| SmilesError::UnmatchedRingClosure { pos: start, label })?;
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<PendingAtom, SmilesError> {
        let start = self.pos;
        let c = self.input[self.pos];
        let next = self.input.get(self.pos + 1).copied();
        let (element, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => ("Cl", false, 2),
            (b'B', Some(b'r')) => ("Br", false, 2),
            (b'B', _) => ("B", false, 1),
            (b'C', _) => ("C", false, 1),
            (b'N', _) => ("N", false, 1),
            (b'O', _) => ("O", false, 1),
            (b'P', _) => ("P", false, 1),
            (b'S', _) => ("S", false, 1),
            (b'F', _) => ("F", false, 1),
            (b'I', _) => ("I", false, 1),
            (b'b', _) => ("B", true, 1),
            (b'c', _) => ("C", true, 1),
            (b'n', _) => ("N", true, 1),
            (b'o', _) => ("O", true, 1),
            (b'p', _) => ("P", true, 1),
            (b's', _) => ("S", true, 1),
            _ => return Err(self.unknown(start)),
        };
        self.pos += len;
        Ok(PendingAtom {
            record: AtomRecord {
                element: element.to_string(),
                aromatic,
                formal_charge: 0,
                explicit_h: 0,
                degree: 0,
            },
            implicit_h: true,
        })
    }

    fn read_number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.input[start..self.pos]).ok()?.parse().ok()
    }

    fn bracket_atom(&mut self) -> Result<PendingAtom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        // isotope, discarded
        let _ = self.read_number();

        let sym_start = self.pos;
        let (element, aromatic) = match self.peek() {
            Some(c) if c.is_ascii_uppercase() => {
                let two = self
                    .input
                    .get(self.pos..self.pos + 2)
                    .and_then(|s| std::str::from_utf8(s).ok())
                    .filter(|s| s.as_bytes()[1].is_ascii_lowercase() && ELEMENTS.contains(s));
                if let Some(sym) = two {
                    self.pos += 2;
                    (sym.to_string(), false)
                } else {
                    let one = (c as char).to_string();
                    if !ELEMENTS.contains(&one.as_str()) {
                        return Err(self.unknown(sym_start));
                    }
                    self.pos += 1;
                    (one, false)
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                let two = self
                    .input
                    .get(self.pos..self.pos + 2)
                    .and_then(|s| std::str::from_utf8(s).ok())
                    .filter(|s| BRACKET_AROMATIC.contains(s));
                let sym = match two {
                    Some(s) => s.to_string(),
                    None => {
                        let one = (c as char).to_string();
                        if !BRACKET_AROMATIC.contains(&one.as_str()) {
                            return Err(self.unknown(sym_start));
                        }
                        one
                    }
                };
                self.pos += sym.len();
                let mut chars = sym.chars();
                let first = chars.next().map(|c| c.to_ascii_uppercase()).unwrap_or('C');
                (std::iter::once(first).chain(chars).collect(), true)
            }
            _ => return Err(self.unknown(sym_start)),
        };

        // chirality, discarded
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            } else if let Some(class) = self.input.get(self.pos..self.pos + 2) {
                // @TH1, @AL1, @SP1, @TB1..20, @OH1..30; a bare `@H` is a hydrogen count
                if matches!(class, b"TH" | b"AL" | b"SP" | b"TB" | b"OH") {
                    self.pos += 2;
                    let _ = self.read_number();
                }
            }
        }

        let mut hydrogens = 0;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = self.read_number().unwrap_or(1);
        }

        let mut charge = 0i32;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let charge_pos = self.pos;
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.read_number() {
                charge = unit * i32::try_from(n).map_err(|_| SmilesError::InvalidCharge { pos: charge_pos })?;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    charge += unit;
                    self.pos += 1;
                }
            }
            if matches!(self.peek(), Some(b'+' | b'-')) || charge.abs() > 15 {
                return Err(SmilesError::InvalidCharge { pos: charge_pos });
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.read_number().is_none() {
                return Err(self.unknown(self.pos));
            }
        }

        match self.peek() {
            Some(b']') => self.pos += 1,
            None => return Err(SmilesError::UnknownSymbol { pos: open, symbol: "[".into() }),
            Some(_) => return Err(self.unknown(self.pos)),
        }

        Ok(PendingAtom {
            record: AtomRecord {
                element,
                aromatic,
                formal_charge: charge,
                explicit_h: hydrogens,
                degree: 0,
            },
            implicit_h: false,
        })
    }

    fn finish(self) -> MolGraph {
        let n = self.atoms.len();
        let mut adjacency: Vec<Vec<(usize, BondOrder)>> = vec![Vec::new(); n];
        let mut valence = vec![0u32; n];
        for bond in &self.bonds {
            adjacency[bond.a].push((bond.b, bond.order));
            adjacency[bond.b].push((bond.a, bond.order));
            valence[bond.a] += bond.order.valence_contribution();
            valence[bond.b] += bond.order.valence_contribution();
        }
        let atoms = self
            .atoms
            .into_iter()
            .enumerate()
            .map(|(i, pending)| {
                let mut record = pending.record;
                record.degree = adjacency[i].len() as u32;
                if pending.implicit_h {
                    let used = valence[i] + u32::from(record.aromatic);
                    record.explicit_h = default_valences(&record.element)
                        .iter()
                        .find(|&&v| v >= used)
                        .map_or(0, |&v| v - used);
                }
                record
            })
            .collect();

        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = n;
        for bond in &self.bonds {
            let (ra, rb) = (find(&mut parent, bond.a), find(&mut parent, bond.b));
            if ra != rb {
                parent[ra] = rb;
                components -= 1;
            }
        }

        MolGraph { atoms, bonds: self.bonds, adjacency, n_components: components }
    }
}

impl fmt::Display for BondOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => ":",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(s: &str) -> (usize, usize, usize) {
        let g = parse_smiles(s).unwrap();
        (g.n_atoms(), g.bonds().len(), g.n_components())
    }

    #[test]
    fn ethanol() {
        let g = parse_smiles("CCO").unwrap();
        let elements: Vec<_> = g.atoms().iter().map(|a| a.element.as_str()).collect();
        assert_eq!(elements, ["C", "C", "O"]);
        assert_eq!(g.bonds().len(), 2);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Single));
        assert_eq!(g.n_components(), 1);
        let hs: Vec<_> = g.atoms().iter().map(|a| a.explicit_h).collect();
        assert_eq!(hs, [3, 2, 1]);
    }

    #[test]
    fn benzene() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.n_atoms(), 6);
        assert!(g.atoms().iter().all(|a| a.aromatic && a.element == "C" && a.explicit_h == 1));
        assert_eq!(g.bonds().len(), 6);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert!(g.atoms().iter().all(|a| a.degree == 2));
        assert!(g.ring_atoms().iter().all(|&r| r));
    }

    #[test]
    fn cyclopropane_carboxylate() {
        let g = parse_smiles("C1CC1C(=O)[O-]").unwrap();
        assert_eq!(g.n_atoms(), 6);
        assert_eq!(g.bonds().len(), 6);
        let ring = g.ring_atoms();
        assert_eq!(ring, [true, true, true, false, false, false]);
        let doubles: Vec<_> = g.bonds().iter().filter(|b| b.order == BondOrder::Double).collect();
        assert_eq!(doubles.len(), 1);
        assert_eq!((doubles[0].a, doubles[0].b), (3, 4));
        assert_eq!(g.atoms()[4].element, "O");
        assert_eq!(g.atoms()[5].formal_charge, -1);
        assert_eq!(g.atoms().iter().filter(|a| a.formal_charge != 0).count(), 1);
    }

    #[test]
    fn unclosed_ring() {
        assert!(matches!(parse_smiles("C1CC"), Err(SmilesError::UnmatchedRingClosure { label: 1, .. })));
    }

    #[test]
    fn grammar_corpus_counts() {
        // (smiles, atoms, bonds, components), counted by hand
        let table: &[(&str, usize, usize, usize)] = &[
            ("C", 1, 0, 1),
            ("CC(C)C", 4, 3, 1),
            ("C=C", 2, 1, 1),
            ("C#N", 2, 1, 1),
            ("c1ccncc1", 6, 6, 1),
            ("C1CC2CCC1C2", 7, 8, 1),
            ("C%10CC%10", 3, 3, 1),
            ("[Na+].[Cl-]", 2, 0, 2),
            ("CC(=O)Oc1ccccc1C(=O)O", 13, 13, 1),
            ("[13CH4]", 1, 0, 1),
            ("N[C@@H](C)C(=O)O", 6, 5, 1),
            ("F/C=C/F", 4, 3, 1),
            ("C\\C=C\\C", 4, 3, 1),
            ("c1ccc2ccccc2c1", 10, 11, 1),
            ("[nH]1cccc1", 5, 5, 1),
            ("O=S(=O)(O)O", 5, 4, 1),
            ("CCN(CC)CC.Cl", 8, 6, 2),
            ("C(C(C(C)))", 4, 3, 1),
            ("[Fe+++]", 1, 0, 1),
            ("[O-2]", 1, 0, 1),
            ("C1.C1", 2, 1, 1),
        ];
        for &(s, a, b, c) in table {
            assert_eq!(counts(s), (a, b, c), "{s}");
        }
    }

    #[test]
    fn bracket_details() {
        let g = parse_smiles("[NH4+]").unwrap();
        assert_eq!(g.atoms()[0].explicit_h, 4);
        assert_eq!(g.atoms()[0].formal_charge, 1);
        let g = parse_smiles("[Fe+++]").unwrap();
        assert_eq!(g.atoms()[0].formal_charge, 3);
        let g = parse_smiles("[se]1cccc1").unwrap();
        assert_eq!(g.atoms()[0].element, "Se");
        assert!(g.atoms()[0].aromatic);
        let g = parse_smiles("[CH3:7]C").unwrap();
        assert_eq!(g.atoms()[0].explicit_h, 3);
        for s in ["N[C@H](C)O", "N[C@@H](C)O", "N[C@TH1H](C)O", "N[C@SP2H](C)O"] {
            assert_eq!(parse_smiles(s).unwrap().atoms()[1].explicit_h, 1, "{s}");
        }
    }

    #[test]
    fn implicit_hydrogens() {
        let g = parse_smiles("CS(=O)(=O)C").unwrap();
        assert_eq!(g.atoms()[1].explicit_h, 0);
        let g = parse_smiles("c1ccccc1C").unwrap();
        assert_eq!(g.atoms()[5].explicit_h, 0);
        assert_eq!(g.atoms()[6].explicit_h, 3);
        let g = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(g.atoms()[3].explicit_h, 0);
    }

    #[test]
    fn error_cases() {
        use SmilesError::*;
        assert!(matches!(parse_smiles("C(C"), Err(UnbalancedParenthesis { .. })));
        assert!(matches!(parse_smiles("CC)C"), Err(UnbalancedParenthesis { .. })));
        assert!(matches!(parse_smiles("(C)"), Err(UnbalancedParenthesis { .. })));
        assert!(matches!(parse_smiles("CXC"), Err(UnknownSymbol { pos: 1, .. })));
        assert!(matches!(parse_smiles("[Xx]"), Err(UnknownSymbol { .. })));
        assert!(matches!(parse_smiles("[C+-]"), Err(InvalidCharge { .. })));
        assert!(matches!(parse_smiles("[C+a]"), Err(UnknownSymbol { .. })));
        assert!(matches!(parse_smiles("C="), Err(UnknownSymbol { .. })));
        assert!(matches!(parse_smiles("[CH4"), Err(UnknownSymbol { .. })));
        assert!(matches!(parse_smiles(""), Err(UnknownSymbol { .. })));
        assert!(matches!(parse_smiles("C11"), Err(UnmatchedRingClosure { .. })));
        assert!(matches!(parse_smiles("C12CC12"), Err(UnmatchedRingClosure { .. })));
        assert!(matches!(parse_smiles("1CC"), Err(UnmatchedRingClosure { .. })));
        assert!(matches!(parse_smiles("CC.(C)"), Err(UnbalancedParenthesis { .. })));
        assert_eq!(parse_smiles("C1CC").unwrap_err().name(), "UnmatchedRingClosure");
    }

    #[test]
    fn deterministic() {
        let s = "CC(=O)Nc1ccc(O)cc1";
        assert_eq!(parse_smiles(s).unwrap(), parse_smiles(s).unwrap());
    }

    #[test]
    fn distances() {
        let g = parse_smiles("CCCC").unwrap();
        assert_eq!(g.distances_from(0, 2), [Some(0), Some(1), Some(2), None]);
    }

    proptest! {
        #[test]
        fn never_panics_on_grammar_soup(s in "[CNOSPFIBrcnosl()\\[\\]=#:/\\\\.%@+\\-H0-9]{1,30}") {
            let _ = parse_smiles(&s);
        }

        #[test]
        fn never_panics_on_ascii(s in "[ -~]{1,40}") {
            if let Ok(g) = parse_smiles(&s) {
                for (i, atom) in g.atoms().iter().enumerate() {
                    let incident = g.bonds().iter().filter(|b| b.a == i || b.b == i).count();
                    prop_assert_eq!(atom.degree as usize, incident);
                }
                prop_assert!(g.bonds().iter().all(|b| b.a != b.b));
            }
        }
    }
}
