//! SMILES reader for single-component molecules.
//!
//! Supported: organic-subset atoms (`B C N O P S F Cl Br I`, aromatic
//! `b c n o p s`, `*`), bracket atoms with isotope, chirality (`@`, `@@`),
//! hydrogen count, charge and atom class, explicit bonds `- = # : / \`,
//! branches, ring closures (`0`-`9`, `%nn`). A `.` is rejected.

use std::collections::BTreeMap;

use super::{
    elements, rings, Atom, Bond, BondOrder, BondStereo, Chirality, Molecule, NeighborSlot,
    SmilesError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondToken {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

impl BondToken {
    fn order(self) -> BondOrder {
        match self {
            BondToken::Single | BondToken::Up | BondToken::Down => BondOrder::Single,
            BondToken::Double => BondOrder::Double,
            BondToken::Triple => BondOrder::Triple,
            BondToken::Aromatic => BondOrder::Aromatic,
        }
    }

    fn direction(self) -> Option<bool> {
        match self {
            BondToken::Up => Some(true),
            BondToken::Down => Some(false),
            _ => None,
        }
    }
}

struct RingOpen {
    atom: usize,
    bond: Option<BondToken>,
    offset: usize,
    slot: usize,
}

/// A `/` or `\` mark: bond index, atom written first, true for `/`.
struct DirectionalMark {
    bond: usize,
    first: usize,
    up: bool,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    order: Vec<Vec<NeighborSlot>>,
    marks: Vec<DirectionalMark>,
}

pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    if text.is_empty() {
        return Err(SmilesError::EmptyInput);
    }
    if let Some(i) = text.bytes().position(|b| !b.is_ascii()) {
        return Err(SmilesError::NonAscii(i));
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        order: Vec::new(),
        marks: Vec::new(),
    };
    p.run()?;
    p.demote_acyclic_aromatic_bonds();
    p.assign_double_bond_stereo();
    Ok(Molecule {
        atoms: p.atoms,
        bonds: p.bonds,
        source_text: text.to_string(),
        neighbor_order: p.order,
    })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn unexpected(&self, offset: usize) -> SmilesError {
        match self.text.get(offset) {
            Some(&c) => SmilesError::UnexpectedCharacter {
                ch: c as char,
                offset,
            },
            None => SmilesError::UnexpectedEnd(offset),
        }
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut pending: Option<(BondToken, usize)> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new();
        let mut open_rings: BTreeMap<u16, RingOpen> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() || pending.is_some() {
                        return Err(self.unexpected(start));
                    }
                    branches.push((prev.unwrap(), start));
                    self.pos += 1;
                    // a branch may not be empty
                    if self.peek() == Some(b')') {
                        return Err(self.unexpected(self.pos));
                    }
                }
                b')' => {
                    if pending.is_some() {
                        return Err(self.unexpected(start));
                    }
                    let (atom, _) = branches
                        .pop()
                        .ok_or(SmilesError::UnbalancedParenthesis(start))?;
                    prev = Some(atom);
                    self.pos += 1;
                }
                b'.' => return Err(SmilesError::MultiComponentInput(start)),
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if prev.is_none() || pending.is_some() {
                        return Err(self.unexpected(start));
                    }
                    let tok = match c {
                        b'-' => BondToken::Single,
                        b'=' => BondToken::Double,
                        b'#' => BondToken::Triple,
                        b':' => BondToken::Aromatic,
                        b'/' => BondToken::Up,
                        _ => BondToken::Down,
                    };
                    pending = Some((tok, start));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let atom = prev.ok_or_else(|| self.unexpected(start))?;
                    let label = self.ring_label()?;
                    let bond_tok = pending.take().map(|(t, _)| t);
                    if let Some(open) = open_rings.remove(&label) {
                        let tok = match (open.bond, bond_tok) {
                            (Some(x), Some(y)) if x.order() != y.order() => {
                                return Err(SmilesError::BondOrderMismatch {
                                    label,
                                    offset: start,
                                })
                            }
                            (Some(x), _) => Some(x),
                            (None, y) => y,
                        };
                        if open.atom == atom {
                            return Err(SmilesError::SelfBond(start));
                        }
                        // ring-closure marks are not used for cis/trans
                        self.add_bond(open.atom, atom, tok, start)?;
                        self.order[open.atom][open.slot] = NeighborSlot::Atom(atom);
                        self.order[atom].push(NeighborSlot::Atom(open.atom));
                    } else {
                        let slot = self.order[atom].len();
                        // placeholder until the ring closes
                        self.order[atom].push(NeighborSlot::Atom(usize::MAX));
                        open_rings.insert(
                            label,
                            RingOpen {
                                atom,
                                bond: bond_tok,
                                offset: start,
                                slot,
                            },
                        );
                    }
                }
                _ => {
                    let idx = self.atom()?;
                    if let Some(p) = prev {
                        let tok = pending.take();
                        let bi = self.add_bond(p, idx, tok.map(|t| t.0), start)?;
                        if let Some((t, _)) = tok {
                            if let Some(up) = t.direction() {
                                self.marks.push(DirectionalMark {
                                    bond: bi,
                                    first: p,
                                    up,
                                });
                            }
                        }
                        self.order[p].push(NeighborSlot::Atom(idx));
                        // the new atom's first neighbor is the atom it hangs off
                        self.order[idx].insert(0, NeighborSlot::Atom(p));
                    } else if let Some((_, off)) = pending {
                        return Err(self.unexpected(off));
                    }
                    prev = Some(idx);
                }
            }
        }

        if let Some((_, off)) = pending {
            return Err(self.unexpected(off));
        }
        if let Some(&(_, off)) = branches.last() {
            return Err(SmilesError::UnbalancedParenthesis(off));
        }
        if let Some((&label, open)) = open_rings.iter().next() {
            return Err(SmilesError::UnclosedRingBond {
                label,
                offset: open.offset,
            });
        }
        if self.atoms.is_empty() {
            return Err(SmilesError::EmptyInput);
        }
        Ok(())
    }

    fn ring_label(&mut self) -> Result<u16, SmilesError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            self.pos += 1;
            let d1 = self.peek().filter(u8::is_ascii_digit);
            let d2 = self.text.get(self.pos + 1).copied().filter(u8::is_ascii_digit);
            match (d1, d2) {
                (Some(a), Some(b)) => {
                    self.pos += 2;
                    Ok(((a - b'0') * 10 + (b - b'0')) as u16)
                }
                _ => Err(self.unexpected(start)),
            }
        } else {
            let d = self.text[self.pos] - b'0';
            self.pos += 1;
            Ok(d as u16)
        }
    }

    fn add_bond(
        &mut self,
        a: usize,
        b: usize,
        tok: Option<BondToken>,
        offset: usize,
    ) -> Result<usize, SmilesError> {
        if self
            .bonds
            .iter()
            .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
        {
            return Err(SmilesError::DuplicateBond(offset));
        }
        let both_aromatic = self.atoms[a].aromatic && self.atoms[b].aromatic;
        let order = match tok {
            Some(t) => t.order(),
            None if both_aromatic => BondOrder::Aromatic,
            None => BondOrder::Single,
        };
        if order == BondOrder::Aromatic && !both_aromatic {
            return Err(SmilesError::AromaticBondMismatch(offset));
        }
        self.bonds.push(Bond::new(a, b, order));
        Ok(self.bonds.len() - 1)
    }

    fn push_atom(&mut self, atom: Atom) -> usize {
        self.atoms.push(atom);
        self.order.push(Vec::new());
        self.atoms.len() - 1
    }

    fn atom(&mut self) -> Result<usize, SmilesError> {
        let start = self.pos;
        let c = self.text[self.pos];
        if c == b'[' {
            return self.bracket_atom();
        }
        let (symbol, aromatic, len) = match c {
            b'*' => ("*", false, 1),
            b'C' if self.text.get(self.pos + 1) == Some(&b'l') => ("Cl", false, 2),
            b'B' if self.text.get(self.pos + 1) == Some(&b'r') => ("Br", false, 2),
            b'B' => ("B", false, 1),
            b'C' => ("C", false, 1),
            b'N' => ("N", false, 1),
            b'O' => ("O", false, 1),
            b'P' => ("P", false, 1),
            b'S' => ("S", false, 1),
            b'F' => ("F", false, 1),
            b'I' => ("I", false, 1),
            b'b' => ("B", true, 1),
            b'c' => ("C", true, 1),
            b'n' => ("N", true, 1),
            b'o' => ("O", true, 1),
            b'p' => ("P", true, 1),
            b's' => ("S", true, 1),
            c if c.is_ascii_alphabetic() => {
                let mut end = self.pos + 1;
                if self.text.get(end).is_some_and(u8::is_ascii_lowercase) {
                    end += 1;
                }
                return Err(SmilesError::UnknownElement {
                    symbol: String::from_utf8_lossy(&self.text[self.pos..end]).into_owned(),
                    offset: start,
                });
            }
            _ => return Err(self.unexpected(start)),
        };
        self.pos += len;
        let z = elements::atomic_number(symbol).expect("organic subset symbol");
        let mut atom = Atom::new(z);
        atom.aromatic = aromatic;
        Ok(self.push_atom(atom))
    }

    fn number(&mut self, max: u32) -> Result<Option<u32>, SmilesError> {
        let start = self.pos;
        let mut value: Option<u32> = None;
        while let Some(d) = self.peek().filter(u8::is_ascii_digit) {
            let v = value
                .unwrap_or(0)
                .checked_mul(10)
                .and_then(|v| v.checked_add((d - b'0') as u32))
                .filter(|&v| v <= max)
                .ok_or(SmilesError::Overflow(start))?;
            value = Some(v);
            self.pos += 1;
        }
        Ok(value)
    }

    fn bracket_atom(&mut self) -> Result<usize, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = self.number(u16::MAX as u32)?.unwrap_or(0) as u16;

        let sym_start = self.pos;
        let c = self.peek().ok_or(SmilesError::UnexpectedEnd(self.pos))?;
        let (symbol, aromatic): (String, bool) = if c == b'*' {
            self.pos += 1;
            ("*".into(), false)
        } else if c.is_ascii_lowercase() {
            // aromatic: two-letter forms first
            let two = self.text.get(self.pos..self.pos + 2);
            match two {
                Some(b"se") | Some(b"as") | Some(b"te") => {
                    let s = std::str::from_utf8(two.unwrap()).unwrap();
                    self.pos += 2;
                    (capitalize(s), true)
                }
                _ => {
                    let s = (c as char).to_string();
                    self.pos += 1;
                    if !matches!(c, b'b' | b'c' | b'n' | b'o' | b'p' | b's') {
                        return Err(SmilesError::UnknownElement {
                            symbol: s,
                            offset: sym_start,
                        });
                    }
                    (capitalize(&s), true)
                }
            }
        } else if c.is_ascii_uppercase() {
            let next = self.text.get(self.pos + 1).copied();
            let two = next
                .filter(u8::is_ascii_lowercase)
                .map(|n| format!("{}{}", c as char, n as char));
            match two {
                Some(s) if elements::atomic_number(&s).is_some() => {
                    self.pos += 2;
                    (s, false)
                }
                _ => {
                    let s = (c as char).to_string();
                    self.pos += 1;
                    (s, false)
                }
            }
        } else {
            return Err(self.unexpected(self.pos));
        };
        let z = elements::atomic_number(&symbol).ok_or_else(|| SmilesError::UnknownElement {
            symbol: symbol.clone(),
            offset: sym_start,
        })?;
        if aromatic && !elements::can_be_aromatic(z) {
            return Err(SmilesError::UnknownElement {
                symbol: symbol.to_lowercase(),
                offset: sym_start,
            });
        }

        let mut chirality = Chirality::None;
        if self.peek() == Some(b'@') {
            self.pos += 1;
            chirality = Chirality::Counterclockwise;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                chirality = Chirality::Clockwise;
            }
        }

        let mut hcount = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hcount = self.number(9)?.unwrap_or(1) as u8;
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.number(15)? {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                    if charge.abs() > 15 {
                        return Err(SmilesError::Overflow(self.pos));
                    }
                }
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.number(u32::MAX / 10)?.is_none() {
                return Err(self.unexpected(self.pos));
            }
        }

        match self.peek() {
            Some(b']') => self.pos += 1,
            None => return Err(SmilesError::UnexpectedEnd(open)),
            Some(_) => return Err(self.unexpected(self.pos)),
        }

        let mut atom = Atom::new(z);
        atom.isotope = isotope;
        atom.aromatic = aromatic;
        atom.chirality = chirality;
        atom.formal_charge = charge as i8;
        atom.explicit_h = Some(hcount);
        let idx = self.push_atom(atom);
        if hcount == 1 {
            self.order[idx].push(NeighborSlot::ImplicitH);
        }
        Ok(idx)
    }

    /// Implicit bonds between aromatic atoms that are not on a ring (the
    /// biaryl link in `c1ccccc1c1ccccc1`) are single bonds.
    fn demote_acyclic_aromatic_bonds(&mut self) {
        let bridges = rings::bridge_bonds(self.atoms.len(), &self.bonds);
        for (bi, bond) in self.bonds.iter_mut().enumerate() {
            if bond.order == BondOrder::Aromatic && bridges[bi] {
                bond.order = BondOrder::Single;
            }
        }
    }

    fn assign_double_bond_stereo(&mut self) {
        if self.marks.is_empty() {
            return;
        }
        // For end atom `e` and substituent `s` carrying mark m on bond s-e:
        // d = m when s was written before e, otherwise the flipped mark.
        // The substituents are trans when their normalized directions differ.
        let normalized = |marks: &[DirectionalMark], bonds: &[Bond], end: usize, skip: usize| {
            marks.iter().find_map(|m| {
                let bond = &bonds[m.bond];
                if m.bond == skip || !bond.touches(end) {
                    return None;
                }
                let sub = bond.other(end);
                let d = if m.first == sub { m.up } else { !m.up };
                Some((sub, d))
            })
        };
        for bi in 0..self.bonds.len() {
            if self.bonds[bi].order != BondOrder::Double {
                continue;
            }
            let (a, b) = (self.bonds[bi].a, self.bonds[bi].b);
            let left = normalized(&self.marks, &self.bonds, a, bi);
            let right = normalized(&self.marks, &self.bonds, b, bi);
            if let (Some((x, dx)), Some((y, dy))) = (left, right) {
                let bond = &mut self.bonds[bi];
                bond.stereo = if dx != dy {
                    BondStereo::Trans
                } else {
                    BondStereo::Cis
                };
                bond.stereo_atoms = Some((x, y));
            }
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}
