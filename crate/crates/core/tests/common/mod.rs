//! Shared helpers for integration tests: the curated molecule list, atom
//! relabeling, and a backtracking graph-isomorphism oracle that is
//! independent of the canonicalization code it checks.
#![allow(dead_code)]

pub mod checks;

use gmmlg::chem::{perceive, Molecule, NeighborSlot, PerceivedMolecule};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn curated_smiles() -> Vec<String> {
    include_str!("../../data/curated_smiles.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

/// Renumbers atoms: new index of old atom `i` is `perm[i]`.
pub fn relabel(mol: &Molecule, perm: &[usize]) -> Molecule {
    let n = mol.atoms.len();
    let mut atoms = vec![mol.atoms[0].clone(); n];
    for (old, &new) in perm.iter().enumerate() {
        atoms[new] = mol.atoms[old].clone();
    }
    let mut bonds: Vec<_> = mol
        .bonds
        .iter()
        .map(|b| {
            let mut nb = b.clone();
            nb.a = perm[b.a];
            nb.b = perm[b.b];
            nb.stereo_atoms = b.stereo_atoms.map(|(x, y)| (perm[x], perm[y]));
            nb
        })
        .collect();
    // bond order in the list is arbitrary too
    bonds.reverse();
    let mut neighbor_order = vec![Vec::new(); n];
    for (old, order) in mol.neighbor_order.iter().enumerate() {
        neighbor_order[perm[old]] = order
            .iter()
            .map(|s| match s {
                NeighborSlot::Atom(a) => NeighborSlot::Atom(perm[*a]),
                NeighborSlot::ImplicitH => NeighborSlot::ImplicitH,
            })
            .collect();
    }
    Molecule {
        atoms,
        bonds,
        source_text: mol.source_text.clone(),
        neighbor_order,
    }
}

pub fn random_perm(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

type AtomKey = (u8, i8, u16, bool, u8, bool);

fn atom_keys(p: &PerceivedMolecule) -> Vec<AtomKey> {
    (0..p.atom_count())
        .map(|i| {
            let a = &p.base.atoms[i];
            (
                a.atomic_number,
                a.formal_charge,
                a.isotope,
                a.aromatic,
                p.total_h(i),
                a.chirality != gmmlg::chem::Chirality::None,
            )
        })
        .collect()
}

fn bond_matrix(p: &PerceivedMolecule) -> Vec<Vec<Option<(u8, bool)>>> {
    let n = p.atom_count();
    let mut m = vec![vec![None; n]; n];
    for b in &p.base.bonds {
        let v = Some((b.order.code(), b.stereo != gmmlg::chem::BondStereo::None));
        m[b.a][b.b] = v;
        m[b.b][b.a] = v;
    }
    m
}

/// VF2-style backtracking: extend a partial mapping atom by atom, checking
/// atom labels and every bond to already-mapped atoms.
pub fn isomorphic(a: &Molecule, b: &Molecule) -> bool {
    let (Ok(pa), Ok(pb)) = (perceive(a), perceive(b)) else {
        return false;
    };
    if pa.atom_count() != pb.atom_count() || a.bonds.len() != b.bonds.len() {
        return false;
    }
    let ka = atom_keys(&pa);
    let kb = atom_keys(&pb);
    let mut sa = ka.clone();
    let mut sb = kb.clone();
    sa.sort();
    sb.sort();
    if sa != sb {
        return false;
    }
    let ma = bond_matrix(&pa);
    let mb = bond_matrix(&pb);
    let n = ka.len();
    // order atoms of `a` so each one (after the first) is adjacent to an
    // earlier one when possible
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    while order.len() < n {
        let next = (0..n)
            .filter(|&i| !placed[i])
            .max_by_key(|&i| order.iter().filter(|&&j| ma[i][j].is_some()).count())
            .unwrap();
        placed[next] = true;
        order.push(next);
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(
        depth: usize,
        order: &[usize],
        map: &mut [usize],
        used: &mut [bool],
        ka: &[AtomKey],
        kb: &[AtomKey],
        ma: &[Vec<Option<(u8, bool)>>],
        mb: &[Vec<Option<(u8, bool)>>],
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let u = order[depth];
        for v in 0..kb.len() {
            if used[v] || ka[u] != kb[v] {
                continue;
            }
            let ok = order[..depth].iter().all(|&w: &usize| ma[u][w] == mb[v][map[w]]);
            if !ok {
                continue;
            }
            map[u] = v;
            used[v] = true;
            if extend(depth + 1, order, map, used, ka, kb, ma, mb) {
                return true;
            }
            used[v] = false;
            map[u] = usize::MAX;
        }
        false
    }
    extend(0, &order, &mut map, &mut used, &ka, &kb, &ma, &mb)
}

/// Random drug-like SMILES built from chain atoms and substituted rings.
pub fn random_smiles(rng: &mut impl Rng) -> String {
    let mut ring_label = 10u32;
    let mut s = String::from("C");
    s.push_str(&substituent(rng, 0, &mut ring_label));
    s
}

fn substituent(rng: &mut impl Rng, depth: usize, ring_label: &mut u32) -> String {
    const CHAIN: &[&str] = &[
        "C", "C", "N", "O", "S", "C(=O)", "C(C)", "C(=O)N", "S(=O)(=O)", "C(C)(C)", "C=C",
    ];
    const TERMINAL: &[&str] = &["C", "F", "Cl", "O", "N", "C#N", "Br"];
    const RINGS: &[(&str, &str)] = &[
        ("c%1ccc(", ")cc%1"),
        ("C%1CCC(", ")CC%1"),
        ("c%1ccnc(", ")c%1"),
        ("C%1CCN(", ")CC%1"),
        ("c%1cc(", ")sc%1"),
        ("C%1CC(", ")C(=O)N%1"),
    ];
    if depth >= 4 || rng.gen_bool(0.2) {
        return TERMINAL[rng.gen_range(0..TERMINAL.len())].to_string();
    }
    if rng.gen_bool(0.35) {
        let (open, close) = RINGS[rng.gen_range(0..RINGS.len())];
        let label = format!("{}", *ring_label);
        *ring_label += 1;
        let inner = substituent(rng, depth + 1, ring_label);
        format!(
            "{}{}{}",
            open.replace("%1", &format!("%{label}")),
            inner,
            close.replace("%1", &format!("%{label}"))
        )
    } else {
        let unit = CHAIN[rng.gen_range(0..CHAIN.len())];
        format!("{unit}{}", substituent(rng, depth + 1, ring_label))
    }
}

pub struct Fixture {
    pub mols: Vec<gmmlg::model::MolInput>,
    pub assoc: gmmlg::graph::AssociationGraph,
    pub assoc_in: gmmlg::model::AssocInput,
    /// Association-graph node of each molecule, in input order.
    pub nodes: Vec<usize>,
    pub vocab: gmmlg::graph::MotifVocabulary,
}

/// Parses, fragments and featurizes `smiles` (drug ids "d0", "d1", ...)
/// and builds the vocabulary and association graph over all of them.
pub fn fixture(smiles: &[&str]) -> Fixture {
    use gmmlg::chem::parse_smiles;
    use gmmlg::frag::{fragment_molecule, BricsRuleTable};
    use gmmlg::graph::{
        build_association_graph, build_vocabulary, featurize_molecule, CorpusMolecule,
        FeatureStats,
    };
    use gmmlg::model::{AssocInput, MolInput};

    let rules = BricsRuleTable::builtin();
    let mut corpus = Vec::new();
    let mut feats = Vec::new();
    for (i, s) in smiles.iter().enumerate() {
        let p = perceive(&parse_smiles(s).unwrap()).unwrap();
        let f = fragment_molecule(&p, &rules);
        corpus.push(CorpusMolecule::from_fragmentation(&format!("d{i}"), &p, &f));
        feats.push(featurize_molecule(&p));
    }
    let stats = FeatureStats::fit(feats.iter());
    for g in &mut feats {
        stats.apply(g);
    }
    let docs: Vec<(String, Vec<String>)> = corpus
        .iter()
        .map(|c| (c.drug_id.clone(), c.motifs.clone()))
        .collect();
    let vocab = build_vocabulary(&docs).unwrap();
    let assoc = build_association_graph(&corpus, &vocab).unwrap();
    let nodes = corpus
        .iter()
        .map(|c| assoc.molecule_node(&c.drug_id).unwrap())
        .collect();
    Fixture {
        mols: feats.iter().map(|g| MolInput::new(g).unwrap()).collect(),
        assoc_in: AssocInput::new(&assoc).unwrap(),
        assoc,
        nodes,
        vocab,
    }
}

pub fn toy_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_adr.tsv")
}

/// The bundled 16-drug corpus, prepared.
pub fn toy_drugs() -> Vec<gmmlg::pipeline::PreparedDrug> {
    let data = gmmlg::pipeline::load_dataset(&toy_path()).unwrap();
    assert!(data.errors.is_empty());
    let (drugs, errors) = gmmlg::pipeline::prepare_records(&data.records);
    assert!(errors.is_empty(), "{errors:?}");
    drugs
}

/// Table 1 settings scaled to d_model 64 with batches of 4 drugs.
pub fn toy_config(epochs: usize) -> gmmlg::pipeline::RunConfig {
    gmmlg::pipeline::RunConfig {
        d_model: 64,
        batch_size: 4,
        epochs,
        ..Default::default()
    }
}
