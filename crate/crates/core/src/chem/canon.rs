//! Canonical atom ranking and canonical SMILES-like writing of an atom subset.
//!
//! Bonds leaving the subset become `*` attachment atoms, so two fragments are
//! only equal when their attachment topology matches. Ranking starts from an
//! atom invariant and refines it with sorted neighbor ranks until the number
//! of classes is stable. Remaining ties are broken by promoting one member of
//! the lowest tied class and refining again; every choice is explored (up to
//! a leaf budget) and the lexicographically smallest string wins, so the
//! output does not depend on the input atom order.

use std::collections::{BTreeMap, HashMap};

use super::{
    elements, perceive, BondOrder, BondStereo, CanonError, Chirality, Molecule, NeighborSlot,
};

const LEAF_BUDGET: usize = 4096;

#[derive(Debug, Clone)]
struct Node {
    z: u8,
    charge: i8,
    isotope: u16,
    aromatic: bool,
    h: u8,
    radical: u8,
    chirality: Chirality,
    /// Atom index in the parent molecule. For attachment atoms this is the
    /// outside atom the severed bond led to.
    origin: usize,
    dummy: bool,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: usize,
    order: BondOrder,
    /// Bond index in the parent molecule.
    bond: usize,
}

struct CanonGraph<'m> {
    mol: &'m Molecule,
    nodes: Vec<Node>,
    adj: Vec<Vec<Edge>>,
    /// Number of leading nodes that are real subset atoms.
    n_real: usize,
}

fn hydrogen_counts(mol: &Molecule) -> (Vec<u8>, Vec<u8>) {
    match perceive(mol) {
        Ok(p) => (
            p.implicit_h,
            p.base.atoms.iter().map(|a| a.radical_electrons).collect(),
        ),
        Err(_) => (
            mol.atoms.iter().map(|a| a.explicit_h.unwrap_or(0)).collect(),
            mol.atoms.iter().map(|a| a.radical_electrons).collect(),
        ),
    }
}

impl<'m> CanonGraph<'m> {
    fn build(mol: &'m Molecule, subset: &[usize]) -> Result<Self, CanonError> {
        if subset.is_empty() {
            return Err(CanonError::EmptySubset);
        }
        let mut index_of: HashMap<usize, usize> = HashMap::new();
        for &a in subset {
            if a >= mol.atoms.len() {
                return Err(CanonError::AtomOutOfRange(a));
            }
            let next = index_of.len();
            index_of.entry(a).or_insert(next);
        }
        let (hs, radicals) = hydrogen_counts(mol);
        let mut members: Vec<usize> = vec![0; index_of.len()];
        for (&a, &i) in &index_of {
            members[i] = a;
        }
        let mut nodes: Vec<Node> = members
            .iter()
            .map(|&a| {
                let atom = &mol.atoms[a];
                Node {
                    z: atom.atomic_number,
                    charge: atom.formal_charge,
                    isotope: atom.isotope,
                    aromatic: atom.aromatic,
                    h: hs[a],
                    radical: radicals[a],
                    chirality: atom.chirality,
                    origin: a,
                    dummy: false,
                }
            })
            .collect();
        let n_real = nodes.len();
        let mut adj: Vec<Vec<Edge>> = vec![Vec::new(); n_real];
        for (bi, bond) in mol.bonds.iter().enumerate() {
            match (index_of.get(&bond.a), index_of.get(&bond.b)) {
                (Some(&i), Some(&j)) => {
                    adj[i].push(Edge {
                        to: j,
                        order: bond.order,
                        bond: bi,
                    });
                    adj[j].push(Edge {
                        to: i,
                        order: bond.order,
                        bond: bi,
                    });
                }
                (Some(&i), None) | (None, Some(&i)) => {
                    let outside = bond.other(members[i]);
                    let d = nodes.len();
                    nodes.push(Node {
                        z: 0,
                        charge: 0,
                        isotope: 0,
                        aromatic: false,
                        h: 0,
                        radical: 0,
                        chirality: Chirality::None,
                        origin: outside,
                        dummy: true,
                    });
                    // a severed aromatic bond is recorded as single
                    let order = if bond.order == BondOrder::Aromatic {
                        BondOrder::Single
                    } else {
                        bond.order
                    };
                    adj.push(vec![Edge {
                        to: i,
                        order,
                        bond: bi,
                    }]);
                    adj[i].push(Edge {
                        to: d,
                        order,
                        bond: bi,
                    });
                }
                (None, None) => {}
            }
        }
        let g = CanonGraph {
            mol,
            nodes,
            adj,
            n_real,
        };
        if !g.real_part_connected() {
            return Err(CanonError::DisconnectedSubset);
        }
        Ok(g)
    }

    fn real_part_connected(&self) -> bool {
        let mut seen = vec![false; self.n_real];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for e in &self.adj[u] {
                if e.to < self.n_real && !seen[e.to] {
                    seen[e.to] = true;
                    count += 1;
                    stack.push(e.to);
                }
            }
        }
        count == self.n_real
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn initial_ranks(&self) -> Vec<usize> {
        let keys: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                (
                    n.z,
                    n.charge,
                    self.adj[i].len(),
                    n.h,
                    n.aromatic,
                    n.isotope,
                    n.radical,
                )
            })
            .collect();
        ranks_from_keys(&keys)
    }

    /// Refines until the number of distinct ranks stops growing.
    fn refine(&self, mut ranks: Vec<usize>) -> Vec<usize> {
        let mut classes = count_classes(&ranks);
        loop {
            let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..self.len())
                .map(|i| {
                    let mut nb: Vec<(usize, u8)> = self.adj[i]
                        .iter()
                        .map(|e| (ranks[e.to], e.order.code()))
                        .collect();
                    nb.sort_unstable();
                    (ranks[i], nb)
                })
                .collect();
            let next = ranks_from_keys(&keys);
            let next_classes = count_classes(&next);
            ranks = next;
            if next_classes == classes {
                return ranks;
            }
            classes = next_classes;
        }
    }
}

/// Rank = number of keys strictly smaller. Tied atoms share a rank.
fn ranks_from_keys<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    for pos in 0..idx.len() {
        ranks[idx[pos]] = if pos > 0 && keys[idx[pos]] == keys[idx[pos - 1]] {
            ranks[idx[pos - 1]]
        } else {
            pos
        };
    }
    ranks
}

fn count_classes(ranks: &[usize]) -> usize {
    let mut r = ranks.to_vec();
    r.sort_unstable();
    r.dedup();
    r.len()
}

struct Search {
    best: Option<(String, Vec<usize>)>,
    leaves: usize,
}

impl Search {
    fn run(&mut self, g: &CanonGraph, ranks: Vec<usize>) {
        let ranks = g.refine(ranks);
        let n = ranks.len();
        if count_classes(&ranks) == n {
            self.leaves += 1;
            let s = emit(g, &ranks);
            if self.best.as_ref().is_none_or(|(b, _)| s < *b) {
                self.best = Some((s, ranks));
            }
            return;
        }
        // lowest rank shared by more than one atom
        let mut counts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &r) in ranks.iter().enumerate() {
            counts.entry(r).or_default().push(i);
        }
        let (&tied_rank, members) = counts
            .iter()
            .find(|(_, m)| m.len() > 1)
            .expect("a tied class exists");
        for &m in members {
            if self.leaves >= LEAF_BUDGET && self.best.is_some() {
                return;
            }
            let mut next = ranks.clone();
            for &o in members {
                if o != m {
                    next[o] = tied_rank + 1;
                }
            }
            self.run(g, next);
        }
    }
}

fn search(g: &CanonGraph) -> (String, Vec<usize>) {
    let mut s = Search {
        best: None,
        leaves: 0,
    };
    s.run(g, g.initial_ranks());
    s.best.expect("search reaches at least one leaf")
}

/// Canonical rank of every atom in `subset` (same order as `subset`), dense
/// in `0..subset.len()`. Attachment atoms are ranked internally but not
/// reported.
pub fn canonical_ranks(mol: &Molecule, subset: &[usize]) -> Result<Vec<usize>, CanonError> {
    let g = CanonGraph::build(mol, subset)?;
    let (_, ranks) = search(&g);
    let mut real: Vec<(usize, usize)> = (0..g.n_real).map(|i| (ranks[i], i)).collect();
    real.sort_unstable();
    let mut dense = vec![0usize; g.n_real];
    for (pos, &(_, i)) in real.iter().enumerate() {
        dense[i] = pos;
    }
    let pos_of: HashMap<usize, usize> = (0..g.n_real).map(|i| (g.nodes[i].origin, i)).collect();
    Ok(subset.iter().map(|a| dense[pos_of[a]]).collect())
}

/// Canonical string for the subgraph induced by `subset`, with `*` for every
/// bond that leaves the subset.
pub fn write_canonical(mol: &Molecule, subset: &[usize]) -> Result<String, CanonError> {
    let g = CanonGraph::build(mol, subset)?;
    Ok(search(&g).0)
}

// ---------------------------------------------------------------------------
// emission

enum Work {
    Enter { node: usize, via: Option<usize> },
    Text(&'static str),
}

struct Tree {
    parent_edge: Vec<Option<Edge>>,
    children: Vec<Vec<Edge>>,
    /// Ring closures written at each atom, in writing order: (partner, edge,
    /// opens_here).
    closures: Vec<Vec<(usize, Edge, bool)>>,
}

fn dfs_tree(g: &CanonGraph, ranks: &[usize], root: usize) -> Tree {
    let n = g.len();
    let mut sorted_adj: Vec<Vec<Edge>> = g.adj.clone();
    for list in &mut sorted_adj {
        list.sort_by_key(|e| ranks[e.to]);
    }
    let mut visited = vec![false; n];
    let mut used_bond: HashMap<usize, bool> = HashMap::new();
    let mut tree = Tree {
        parent_edge: vec![None; n],
        children: vec![Vec::new(); n],
        closures: vec![Vec::new(); n],
    };
    let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
    visited[root] = true;
    // ring closures discovered at the descendant; opening recorded at the
    // ancestor in discovery order
    while let Some(&mut (u, ref mut cursor)) = stack.last_mut() {
        if *cursor >= sorted_adj[u].len() {
            stack.pop();
            continue;
        }
        let e = sorted_adj[u][*cursor];
        *cursor += 1;
        if used_bond.contains_key(&e.bond) {
            continue;
        }
        used_bond.insert(e.bond, true);
        if visited[e.to] {
            tree.closures[e.to].push((u, Edge { to: u, ..e }, true));
            tree.closures[u].push((e.to, e, false));
        } else {
            visited[e.to] = true;
            tree.parent_edge[e.to] = Some(Edge { to: u, ..e });
            tree.children[u].push(e);
            stack.push((e.to, 0));
        }
    }
    tree
}

fn emit(g: &CanonGraph, ranks: &[usize]) -> String {
    let root = (0..g.len()).min_by_key(|&i| ranks[i]).unwrap();
    let tree = dfs_tree(g, ranks, root);

    // writing order of atoms, used for closure digits and stereo marks
    let mut order = Vec::with_capacity(g.len());
    {
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            order.push(u);
            for c in tree.children[u].iter().rev() {
                stack.push(c.to);
            }
        }
    }
    let mut position = vec![0usize; g.len()];
    for (p, &u) in order.iter().enumerate() {
        position[u] = p;
    }
    // Openings at an atom are written before the descendant closes them; a
    // closure must be written in the same relative order as the opening was,
    // so sort each atom's closure list: closings first (by the opener's
    // position), then openings (by the partner's position).
    let mut closures = tree.closures.clone();
    for list in &mut closures {
        list.sort_by_key(|&(partner, _, opens)| (opens, position[partner]));
    }

    let marks = stereo_marks(g, &tree, &position);

    let mut out = String::new();
    let mut digit_of: HashMap<usize, u16> = HashMap::new();
    let mut free: Vec<bool> = vec![true; 100];
    let mut work = vec![Work::Enter {
        node: root,
        via: None,
    }];
    while let Some(w) = work.pop() {
        match w {
            Work::Text(t) => out.push_str(t),
            Work::Enter { node, via } => {
                if let Some(bond) = via {
                    let parent = tree.parent_edge[node].unwrap().to;
                    out.push_str(&bond_text(g, parent, node, bond, &marks));
                }
                out.push_str(&atom_text(g, node, &tree, &closures[node]));
                for &(partner, edge, opens) in &closures[node] {
                    if opens {
                        let d = free.iter().skip(1).position(|&f| f).map(|p| p + 1).unwrap_or(0);
                        free[d] = false;
                        digit_of.insert(edge.bond, d as u16);
                        let sym = ring_bond_symbol(g, node, partner, edge.order);
                        out.push_str(sym);
                        push_digit(&mut out, d as u16);
                    } else {
                        let d = digit_of[&edge.bond];
                        free[d as usize] = true;
                        push_digit(&mut out, d);
                    }
                }
                let kids = &tree.children[node];
                for (k, child) in kids.iter().enumerate().rev() {
                    let enter = Work::Enter {
                        node: child.to,
                        via: Some(child.bond),
                    };
                    if k + 1 == kids.len() {
                        work.push(enter);
                    } else {
                        work.push(Work::Text(")"));
                        work.push(enter);
                        work.push(Work::Text("("));
                    }
                }
            }
        }
    }
    out
}

fn push_digit(out: &mut String, d: u16) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push_str(&format!("%{d:02}"));
    }
}

fn ring_bond_symbol(g: &CanonGraph, a: usize, b: usize, order: BondOrder) -> &'static str {
    plain_bond_symbol(g.nodes[a].aromatic && g.nodes[b].aromatic, order)
}

fn plain_bond_symbol(both_aromatic: bool, order: BondOrder) -> &'static str {
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single | BondOrder::Aromatic => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn bond_text(
    g: &CanonGraph,
    parent: usize,
    child: usize,
    bond: usize,
    marks: &HashMap<usize, bool>,
) -> String {
    if let Some(&up) = marks.get(&bond) {
        return if up { "/".into() } else { "\\".into() };
    }
    let order = g.adj[child]
        .iter()
        .find(|e| e.bond == bond)
        .map(|e| e.order)
        .unwrap();
    plain_bond_symbol(g.nodes[parent].aromatic && g.nodes[child].aromatic, order).into()
}

/// Hydrogens the parser would infer for a bare organic-subset atom.
fn implied_h(g: &CanonGraph, node: usize) -> Option<u8> {
    let n = &g.nodes[node];
    let vals = elements::default_valences(n.z)?;
    let mut used: u8 = g.adj[node]
        .iter()
        .map(|e| e.order.valence_contribution())
        .sum();
    let aromatic_bonds = g.adj[node]
        .iter()
        .filter(|e| e.order == BondOrder::Aromatic)
        .count();
    let lowest = vals.first().copied().unwrap_or(0);
    if n.aromatic && aromatic_bonds > 0 && matches!(n.z, 5 | 6 | 7 | 15 | 33) && used < lowest {
        used += 1;
    }
    vals.iter().copied().find(|&v| v >= used).map(|v| v - used)
}

fn atom_text(
    g: &CanonGraph,
    node: usize,
    tree: &Tree,
    closures: &[(usize, Edge, bool)],
) -> String {
    let n = &g.nodes[node];
    if n.dummy {
        return "*".into();
    }
    let symbol = elements::symbol(n.z).unwrap_or("*");
    let chirality = output_chirality(g, node, tree, closures);
    let bare_ok = elements::is_organic_subset(n.z)
        && n.z != 0
        && n.charge == 0
        && n.isotope == 0
        && n.radical == 0
        && chirality == Chirality::None
        && (!n.aromatic || matches!(n.z, 5 | 6 | 7 | 8 | 15 | 16))
        && implied_h(g, node) == Some(n.h);
    let sym = if n.aromatic {
        symbol.to_lowercase()
    } else {
        symbol.to_string()
    };
    if bare_ok {
        return sym;
    }
    let mut s = String::from("[");
    if n.isotope > 0 {
        s.push_str(&n.isotope.to_string());
    }
    s.push_str(&sym);
    match chirality {
        Chirality::Counterclockwise => s.push('@'),
        Chirality::Clockwise => s.push_str("@@"),
        Chirality::None => {}
    }
    match n.h {
        0 => {}
        1 => s.push('H'),
        h => s.push_str(&format!("H{h}")),
    }
    match n.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}

/// Chirality tag relative to the written neighbor order: the input tag,
/// inverted when the written order is an odd permutation of the input one.
fn output_chirality(
    g: &CanonGraph,
    node: usize,
    tree: &Tree,
    closures: &[(usize, Edge, bool)],
) -> Chirality {
    let n = &g.nodes[node];
    if n.chirality == Chirality::None {
        return Chirality::None;
    }
    let mut written: Vec<NeighborSlot> = Vec::new();
    if let Some(p) = tree.parent_edge[node] {
        written.push(NeighborSlot::Atom(g.nodes[p.to].origin));
    }
    if n.h == 1 {
        written.push(NeighborSlot::ImplicitH);
    }
    for &(partner, _, _) in closures {
        written.push(NeighborSlot::Atom(g.nodes[partner].origin));
    }
    for c in &tree.children[node] {
        written.push(NeighborSlot::Atom(g.nodes[c.to].origin));
    }
    let input = g.mol.chiral_neighbor_order(n.origin);
    match permutation_parity(&input, &written) {
        Some(false) => n.chirality,
        Some(true) => n.chirality.inverted(),
        None => Chirality::None,
    }
}

/// Some(true) when `b` is an odd permutation of `a`; None when they are not
/// permutations of each other.
fn permutation_parity(a: &[NeighborSlot], b: &[NeighborSlot]) -> Option<bool> {
    if a.len() != b.len() || a.len() < 3 {
        return None;
    }
    let mut perm = Vec::with_capacity(a.len());
    for x in b {
        perm.push(a.iter().position(|y| y == x)?);
    }
    let mut seen = vec![false; perm.len()];
    let mut swaps = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        swaps += len - 1;
    }
    Some(swaps % 2 == 1)
}

/// Directional marks for stereo double bonds: parent-molecule bond index to
/// `true` for `/`. Marks go on tree bonds only (closures carry no direction).
fn stereo_marks(g: &CanonGraph, tree: &Tree, position: &[usize]) -> HashMap<usize, bool> {
    let mut marks: HashMap<usize, bool> = HashMap::new();
    let mut doubles: Vec<(usize, usize, usize)> = Vec::new();
    for u in 0..g.n_real {
        for e in &g.adj[u] {
            if e.to < g.n_real && e.order == BondOrder::Double && position[u] < position[e.to] {
                let bond = &g.mol.bonds[e.bond];
                if bond.stereo != BondStereo::None && bond.stereo_atoms.is_some() {
                    doubles.push((u, e.to, e.bond));
                }
            }
        }
    }
    doubles.sort_by_key(|&(u, _, _)| position[u]);

    let tree_bond = |a: usize, b: usize| -> Option<usize> {
        if tree.parent_edge[b].is_some_and(|e| e.to == a) {
            return tree.parent_edge[b].map(|e| e.bond);
        }
        if tree.parent_edge[a].is_some_and(|e| e.to == b) {
            return tree.parent_edge[a].map(|e| e.bond);
        }
        None
    };
    // first substituent of `end` (excluding `other`) joined by a single tree bond
    let substituent = |end: usize, other: usize| -> Option<(usize, usize)> {
        let mut cands: Vec<(usize, usize)> = g.adj[end]
            .iter()
            .filter(|e| e.to != other && e.order == BondOrder::Single)
            .filter_map(|e| tree_bond(end, e.to).map(|b| (e.to, b)))
            .collect();
        cands.sort_by_key(|&(s, _)| position[s]);
        cands.first().copied()
    };

    for (a, b, bi) in doubles {
        let bond = &g.mol.bonds[bi];
        let (ref_a, ref_b) = bond.stereo_atoms.unwrap();
        // orient the reference pair to (a, b)
        let (ref_a, ref_b) = if bond.a == g.nodes[a].origin {
            (ref_a, ref_b)
        } else {
            (ref_b, ref_a)
        };
        let (Some((x, bx)), Some((y, by))) = (substituent(a, b), substituent(b, a)) else {
            continue;
        };
        let mut stereo = bond.stereo;
        if g.nodes[x].origin != ref_a {
            stereo = stereo.flipped();
        }
        if g.nodes[y].origin != ref_b {
            stereo = stereo.flipped();
        }
        // normalized direction: mark as written when the substituent comes
        // first, flipped otherwise
        let norm = |sub: usize, end: usize, mark: bool| {
            if position[sub] < position[end] {
                mark
            } else {
                !mark
            }
        };
        let dx = match marks.get(&bx) {
            Some(&m) => norm(x, a, m),
            None => {
                marks.insert(bx, norm(x, a, true));
                true
            }
        };
        let dy = if stereo == BondStereo::Trans { !dx } else { dx };
        let wanted = norm(y, b, dy);
        marks.entry(by).or_insert(wanted);
    }
    marks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn canon(s: &str) -> String {
        let m = parse_smiles(s).unwrap();
        write_canonical(&m, &m.all_atoms()).unwrap()
    }

    #[test]
    fn simple_molecules() {
        assert_eq!(canon("C"), "C");
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("c1ccccc1"), "c1ccccc1");
        assert_eq!(canon("C1CCCCC1"), "C1CCCCC1");
    }

    #[test]
    fn ranks_single_atom() {
        let m = parse_smiles("C").unwrap();
        assert_eq!(canonical_ranks(&m, &[0]).unwrap(), vec![0]);
    }

    #[test]
    fn ranks_are_a_permutation() {
        let m = parse_smiles("CC(=O)Nc1ccc(O)cc1").unwrap();
        let mut r = canonical_ranks(&m, &m.all_atoms()).unwrap();
        r.sort_unstable();
        assert_eq!(r, (0..m.atoms.len()).collect::<Vec<_>>());
    }

    #[test]
    fn disconnected_subset_rejected() {
        let m = parse_smiles("CCCC").unwrap();
        assert_eq!(
            write_canonical(&m, &[0, 3]),
            Err(CanonError::DisconnectedSubset)
        );
        assert_eq!(write_canonical(&m, &[]), Err(CanonError::EmptySubset));
    }

    #[test]
    fn attachment_points() {
        let m = parse_smiles("ClCc1ccccc1").unwrap();
        let s = write_canonical(&m, &[0, 1]).unwrap();
        assert_eq!(s.matches('*').count(), 1);
        let ring = write_canonical(&m, &[2, 3, 4, 5, 6, 7]).unwrap();
        assert_eq!(ring.matches('*').count(), 1);
    }

    #[test]
    fn chirality_is_canonical() {
        // two writings of L-alanine, and its enantiomer
        let l1 = canon("N[C@@H](C)C(=O)O");
        let l2 = canon("C[C@H](N)C(=O)O");
        let d = canon("N[C@H](C)C(=O)O");
        assert_eq!(l1, l2);
        assert_ne!(l1, d);
    }

    #[test]
    fn cis_trans_is_canonical() {
        assert_eq!(canon("F/C=C/F"), canon("F\\C=C\\F"));
        assert_eq!(canon("F/C=C/F"), canon("C(\\F)=C/F"));
        assert_ne!(canon("F/C=C/F"), canon("F/C=C\\F"));
        assert_eq!(canon("C/C=C/CC"), canon("CC/C=C/C"));
    }

    #[test]
    fn parity() {
        use NeighborSlot::Atom as A;
        let a = [A(0), A(1), A(2), A(3)];
        assert_eq!(permutation_parity(&a, &[A(1), A(0), A(2), A(3)]), Some(true));
        assert_eq!(permutation_parity(&a, &[A(1), A(2), A(0), A(3)]), Some(false));
        assert_eq!(permutation_parity(&a, &[A(1), A(2), A(0)]), None);
    }
}
