//! Canonical forms for coloured digraphs.
//!
//! Individualisation–refinement: iterated colour refinement by neighbour
//! signatures, branching over all members of the first ambiguous cell and
//! taking the least resulting code. The code is a pure function of the
//! coloured-isomorphism class.

/// A finite digraph with an initial colour key per node. Arcs are simple;
/// the causal nets this is used on never carry parallel arcs.
#[derive(Clone, Debug)]
pub struct ColoredDigraph {
    pub colors: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

pub type CanonicalCode = String;

struct Ctx {
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    color_keys: Vec<String>,
}

/// Refines classes until stable. Class ids are renumbered through sorted
/// signatures at every round, so they depend only on the partition.
fn refine(ctx: &Ctx, mut class: Vec<usize>) -> Vec<usize> {
    let n = class.len();
    loop {
        let mut sigs: Vec<(usize, Vec<usize>, Vec<usize>, usize)> = Vec::with_capacity(n);
        for v in 0..n {
            let mut outs: Vec<usize> = ctx.out_adj[v].iter().map(|&w| class[w]).collect();
            let mut ins: Vec<usize> = ctx.in_adj[v].iter().map(|&w| class[w]).collect();
            outs.sort_unstable();
            ins.sort_unstable();
            sigs.push((class[v], outs, ins, v));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| sigs[a].cmp(&sigs[b]).then(std::cmp::Ordering::Equal));
        let mut next = vec![0usize; n];
        let mut current = 0;
        for i in 0..n {
            if i > 0 {
                let (a, b) = (order[i - 1], order[i]);
                if (&sigs[a].0, &sigs[a].1, &sigs[a].2) != (&sigs[b].0, &sigs[b].1, &sigs[b].2) {
                    current += 1;
                }
            }
            next[order[i]] = current;
        }
        if next == class {
            return class;
        }
        class = next;
    }
}

fn initial_classes(ctx: &Ctx) -> Vec<usize> {
    let mut keys: Vec<&String> = ctx.color_keys.iter().collect();
    keys.sort();
    keys.dedup();
    ctx.color_keys
        .iter()
        .map(|k| keys.binary_search(&k).unwrap())
        .collect()
}

fn emit_code(ctx: &Ctx, class: &[usize]) -> CanonicalCode {
    // Discrete partition: class ids are positions.
    let n = class.len();
    let mut pos = vec![0usize; n];
    for v in 0..n {
        pos[class[v]] = v;
    }
    let mut lines = Vec::with_capacity(n);
    for c in 0..n {
        let v = pos[c];
        let mut outs: Vec<usize> = ctx.out_adj[v].iter().map(|&w| class[w]).collect();
        outs.sort_unstable();
        let outs: Vec<String> = outs.iter().map(|x| x.to_string()).collect();
        lines.push(format!("{}>{}", ctx.color_keys[v], outs.join(",")));
    }
    lines.join(";")
}

fn search(ctx: &Ctx, class: Vec<usize>) -> CanonicalCode {
    let n = class.len();
    let mut count = vec![0usize; n];
    for &c in &class {
        count[c] += 1;
    }
    // First ambiguous cell, by class id.
    let target = (0..n).find(|&c| count[c] > 1);
    match target {
        None => emit_code(ctx, &class),
        Some(cell) => {
            let members: Vec<usize> = (0..n).filter(|&v| class[v] == cell).collect();
            let mut best: Option<CanonicalCode> = None;
            for v in members {
                // Individualise v: split it off below its old cell.
                let mut next = class.clone();
                for w in 0..n {
                    if next[w] >= cell && w != v {
                        next[w] += 1;
                    }
                }
                let refined = refine(ctx, normalize(next));
                let code = search(ctx, refined);
                best = Some(match best {
                    None => code,
                    Some(b) if code < b => code,
                    Some(b) => b,
                });
            }
            best.unwrap()
        }
    }
}

fn normalize(class: Vec<usize>) -> Vec<usize> {
    let mut seen: Vec<usize> = class.clone();
    seen.sort_unstable();
    seen.dedup();
    class.into_iter().map(|c| seen.binary_search(&c).unwrap()).collect()
}

/// The canonical code of a coloured digraph.
pub fn canonical_code(g: &ColoredDigraph) -> CanonicalCode {
    let n = g.colors.len();
    let mut out_adj = vec![Vec::new(); n];
    let mut in_adj = vec![Vec::new(); n];
    for &(a, b) in &g.edges {
        out_adj[a].push(b);
        in_adj[b].push(a);
    }
    let ctx = Ctx { out_adj, in_adj, color_keys: g.colors.clone() };
    let class = refine(&ctx, initial_classes(&ctx));
    search(&ctx, class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn apply_perm(g: &ColoredDigraph, perm: &[usize]) -> ColoredDigraph {
        let mut colors = vec![String::new(); g.colors.len()];
        for (v, c) in g.colors.iter().enumerate() {
            colors[perm[v]] = c.clone();
        }
        let edges = g.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        ColoredDigraph { colors, edges }
    }

    #[test]
    fn distinguishes_chain_from_fork() {
        let chain = ColoredDigraph {
            colors: vec!["x".into(), "x".into(), "x".into()],
            edges: vec![(0, 1), (1, 2)],
        };
        let fork = ColoredDigraph {
            colors: vec!["x".into(), "x".into(), "x".into()],
            edges: vec![(0, 1), (0, 2)],
        };
        assert_ne!(canonical_code(&chain), canonical_code(&fork));
    }

    #[test]
    fn respects_colors() {
        let g1 = ColoredDigraph { colors: vec!["a".into(), "b".into()], edges: vec![(0, 1)] };
        let g2 = ColoredDigraph { colors: vec!["b".into(), "a".into()], edges: vec![(0, 1)] };
        assert_ne!(canonical_code(&g1), canonical_code(&g2));
        let g3 = ColoredDigraph { colors: vec!["b".into(), "a".into()], edges: vec![(1, 0)] };
        assert_eq!(canonical_code(&g1), canonical_code(&g3));
    }

    fn arb_graph() -> impl Strategy<Value = ColoredDigraph> {
        (1usize..7).prop_flat_map(|n| {
            let colors = proptest::collection::vec(
                proptest::sample::select(vec!["a", "b", "c"]),
                n,
            );
            let edges = proptest::collection::btree_set((0..n, 0..n), 0..(n * 2));
            (colors, edges).prop_map(|(cs, es)| ColoredDigraph {
                colors: cs.into_iter().map(String::from).collect(),
                edges: es.into_iter().collect(),
            })
        })
    }

    proptest! {
        #[test]
        fn invariant_under_permutation(g in arb_graph(), seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..g.colors.len()).collect();
            perm.shuffle(&mut rng);
            let permuted = apply_perm(&g, &perm);
            prop_assert_eq!(canonical_code(&g), canonical_code(&permuted));
        }
    }
}
