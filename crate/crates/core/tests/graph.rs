use gmmlg::graph::{build_association_graph, build_vocabulary, AssocNode, CorpusMolecule, EdgeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<CorpusMolecule> {
    let n_mols = rng.gen_range(1..=20);
    let n_motifs = rng.gen_range(1..=15);
    (0..n_mols)
        .map(|k| {
            let len = rng.gen_range(1..=6);
            let motifs: Vec<String> =
                (0..len).map(|_| format!("M{}", rng.gen_range(0..n_motifs))).collect();
            let mut adjacent = Vec::new();
            for j in 1..len {
                if rng.gen_bool(0.7) {
                    adjacent.push((rng.gen_range(0..j), j));
                }
            }
            CorpusMolecule {
                drug_id: format!("D{k:02}"),
                motifs,
                adjacent,
            }
        })
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Count-based recomputation straight from the motif lists.
fn oracle_tfidf(corpus: &[CorpusMolecule], drug: &str, motif: &str) -> f64 {
    let n = corpus.len() as f64;
    let m = corpus.iter().find(|m| m.drug_id == drug).unwrap();
    let tf = m.motifs.iter().filter(|s| *s == motif).count() as f64;
    let df = corpus.iter().filter(|m| m.motifs.iter().any(|s| s == motif)).count() as f64;
    tf * (n / (1.0 + df)).ln()
}

fn oracle_pmi(corpus: &[CorpusMolecule], a: &str, b: &str) -> f64 {
    let n = corpus.len() as f64;
    let has = |m: &CorpusMolecule, x: &str| m.motifs.iter().any(|s| s == x);
    let ca = corpus.iter().filter(|m| has(m, a)).count() as f64;
    let cb = corpus.iter().filter(|m| has(m, b)).count() as f64;
    let cab = corpus.iter().filter(|m| has(m, a) && has(m, b)).count() as f64;
    if cab == 0.0 {
        return 0.0;
    }
    ((cab / n) / ((ca / n) * (cb / n))).ln().max(0.0)
}

#[test]
fn weights_match_count_oracle_on_random_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut clamped = 0;
    for _ in 0..1000 {
        let corpus = random_corpus(&mut rng);
        let rows: Vec<(String, Vec<String>)> =
            corpus.iter().map(|m| (m.drug_id.clone(), m.motifs.clone())).collect();
        let vocab = build_vocabulary(&rows).unwrap();
        let g = build_association_graph(&corpus, &vocab).unwrap();
        let name = |node: usize| match &g.nodes[node] {
            AssocNode::Motif { index } => vocab.entries[*index].canonical.clone(),
            AssocNode::Molecule { drug_id } => drug_id.clone(),
        };
        for e in &g.edges {
            let expected = match e.kind {
                EdgeKind::MolMotif => oracle_tfidf(&corpus, &name(e.u), &name(e.v)),
                EdgeKind::MotifMotif => {
                    let raw = oracle_pmi(&corpus, &name(e.u), &name(e.v));
                    if raw == 0.0 {
                        clamped += 1;
                    }
                    raw
                }
            };
            assert!(rel_err(e.weight, expected) <= 1e-12, "{} vs {expected}", e.weight);
            assert!(e.kind == EdgeKind::MolMotif || e.weight >= 0.0);
        }
        // bag-of-words mass equals the motif multiset size
        for m in &corpus {
            let node = g.molecule_node(&m.drug_id).unwrap();
            let mass: f64 = g.node_init[node].iter().map(|x| x.1).sum();
            assert_eq!(mass, m.motifs.len() as f64);
        }
        // one-hot motif nodes
        for (i, e) in vocab.entries.iter().enumerate() {
            assert_eq!(g.node_init[i], vec![(e.index, 1.0)]);
        }
    }
    assert!(clamped > 0, "no clamped PMI case was exercised");
}

#[test]
fn motif_edges_are_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let mut corpus = random_corpus(&mut rng);
        let rows: Vec<(String, Vec<String>)> =
            corpus.iter().map(|m| (m.drug_id.clone(), m.motifs.clone())).collect();
        let vocab = build_vocabulary(&rows).unwrap();
        let g = build_association_graph(&corpus, &vocab).unwrap();
        // reversing every adjacency pair must not change the graph
        for m in &mut corpus {
            for p in &mut m.adjacent {
                *p = (p.1, p.0);
            }
        }
        assert_eq!(build_association_graph(&corpus, &vocab).unwrap(), g);
        for e in g.edges.iter().filter(|e| e.kind == EdgeKind::MotifMotif) {
            assert!(e.u < e.v);
            let (a, b) = (&vocab.entries[e.u].canonical, &vocab.entries[e.v].canonical);
            assert_eq!(oracle_pmi(&corpus, a, b), oracle_pmi(&corpus, b, a));
        }
    }
}
