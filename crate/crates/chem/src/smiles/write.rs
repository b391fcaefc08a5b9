use std::fmt::Write as _;

use crate::canon::canonical_ranks;
use crate::graph::{implicit_hydrogens, BondOrder, MolGraph};

/// An extra ring-closure label emitted on an atom; the bond partner lives in
/// another SAFE block. Attachment bonds are always single.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttachmentLabel {
    pub atom: usize,
    pub label: u32,
}

/// Canonical SMILES of `g`.
pub fn write_smiles(g: &MolGraph) -> String {
    write_with_ranks(g, &canonical_ranks(g), &[])
}

/// Canonical SMILES with extra attachment closures (SAFE block form).
pub fn write_with_attachments(g: &MolGraph, labels: &[AttachmentLabel]) -> String {
    write_with_ranks(g, &canonical_ranks(g), labels)
}

fn format_label(out: &mut String, label: u32) {
    if label < 10 {
        let _ = write!(out, "{label}");
    } else {
        let _ = write!(out, "%{label:02}");
    }
}

fn bond_symbol(g: &MolGraph, a: usize, b: usize, order: BondOrder) -> &'static str {
    let both_aromatic = g.atom(a).aromatic && g.atom(b).aromatic;
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

fn write_atom(out: &mut String, g: &MolGraph, i: usize, attachment_count: u32) {
    let atom = g.atom(i);
    if atom.is_dummy() {
        out.push_str("[*]");
        return;
    }
    let symbol = atom.element.symbol();
    let implicit = implicit_hydrogens(atom.element, atom.aromatic, g.bond_sum(i) + attachment_count);
    if atom.charge == 0 && implicit == atom.hydrogens {
        if atom.aromatic {
            out.push_str(&symbol.to_lowercase());
        } else {
            out.push_str(symbol);
        }
        return;
    }
    out.push('[');
    if atom.aromatic {
        out.push_str(&symbol.to_lowercase());
    } else {
        out.push_str(symbol);
    }
    match atom.hydrogens {
        0 => {}
        1 => out.push('H'),
        h => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -c);
        }
    }
    out.push(']');
}

/// Writes `g` with DFS order driven by `ranks` (lower first). Components are
/// emitted in order of their lowest-ranked atom and joined with `.`.
pub fn write_with_ranks(g: &MolGraph, ranks: &[usize], labels: &[AttachmentLabel]) -> String {
    let n = g.atom_count();
    let mut out = String::new();
    if n == 0 {
        return out;
    }
    let mut attach_count = vec![0u32; n];
    for l in labels {
        attach_count[l.atom] += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    // start each component at a terminal atom where possible
    order.sort_by_key(|&i| (g.degree(i).max(1), ranks[i]));
    let sorted_neighbors: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|i| {
            let mut v = g.neighbors(i).to_vec();
            v.sort_by_key(|&(j, _)| ranks[j]);
            v
        })
        .collect();

    // First pass: DFS tree, ring closure bonds.
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    // ring bonds opened at an atom (partner, bond), in discovery order
    let mut ring_open: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    let mut tree_bond = vec![false; g.bond_count()];
    let mut visit_index = vec![usize::MAX; n];
    let mut counter = 0;
    for &start in &order {
        if visited[start] {
            continue;
        }
        roots.push(start);
        let mut stack = vec![(start, usize::MAX, 0usize)];
        visited[start] = true;
        visit_index[start] = counter;
        counter += 1;
        while let Some(top) = stack.last_mut() {
            let (u, parent_bond) = (top.0, top.1);
            if top.2 < sorted_neighbors[u].len() {
                let (v, b) = sorted_neighbors[u][top.2];
                top.2 += 1;
                if b == parent_bond || tree_bond[b] {
                    continue;
                }
                if !visited[v] {
                    visited[v] = true;
                    visit_index[v] = counter;
                    counter += 1;
                    tree_bond[b] = true;
                    children[u].push((v, b));
                    stack.push((v, b, 0));
                } else if visit_index[v] < visit_index[u]
                    && !ring_open[v].iter().any(|&(_, rb)| rb == b)
                {
                    // back edge to an ancestor: open at the ancestor
                    ring_open[v].push((u, b));
                }
            } else {
                stack.pop();
            }
        }
    }

    // Second pass: emit.
    let mut digit_in_use = [false; 100];
    let mut assigned: Vec<Option<u32>> = vec![None; g.bond_count()];
    let reserved: Vec<u32> = labels.iter().map(|l| l.label).collect();
    for (ci, &root) in roots.iter().enumerate() {
        if ci > 0 {
            out.push('.');
        }
        enum Item {
            Atom(usize),
            Open,
            Close,
            Bond(usize, usize, usize),
        }
        let mut stack = vec![Item::Atom(root)];
        while let Some(item) = stack.pop() {
            match item {
                Item::Open => out.push('('),
                Item::Close => out.push(')'),
                Item::Bond(a, b, bond) => out.push_str(bond_symbol(g, a, b, g.bond(bond).order)),
                Item::Atom(u) => {
                    write_atom(&mut out, g, u, attach_count[u]);
                    // closures ending here
                    let mut closing: Vec<(u32, usize)> = g
                        .neighbors(u)
                        .iter()
                        .filter_map(|&(_, b)| assigned[b].map(|d| (d, b)))
                        .filter(|&(d, b)| d != u32::MAX && !tree_bond[b])
                        .collect();
                    closing.sort_unstable();
                    for (d, b) in closing {
                        format_label(&mut out, d);
                        digit_in_use[d as usize] = false;
                        assigned[b] = Some(u32::MAX);
                    }
                    for &(v, b) in &ring_open[u] {
                        let d = (1..100u32)
                            .filter(|d| !(10..50).contains(d))
                            .find(|&d| !digit_in_use[d as usize] && !reserved.contains(&d))
                            .expect("ring closure labels exhausted");
                        digit_in_use[d as usize] = true;
                        assigned[b] = Some(d);
                        out.push_str(bond_symbol(g, u, v, g.bond(b).order));
                        format_label(&mut out, d);
                    }
                    for l in labels.iter().filter(|l| l.atom == u) {
                        if g.atom(u).aromatic {
                            out.push('-');
                        }
                        format_label(&mut out, l.label);
                    }
                    let kids = &children[u];
                    for (k, &(v, b)) in kids.iter().enumerate().rev() {
                        if k + 1 == kids.len() {
                            stack.push(Item::Atom(v));
                            stack.push(Item::Bond(u, v, b));
                        } else {
                            stack.push(Item::Close);
                            stack.push(Item::Atom(v));
                            stack.push(Item::Bond(u, v, b));
                            stack.push(Item::Open);
                        }
                    }
                }
            }
        }
    }
    // mark closed ring labels (u32::MAX) are fully consumed
    debug_assert!(assigned
        .iter()
        .enumerate()
        .all(|(b, a)| tree_bond[b] || *a == Some(u32::MAX)));
    out
}
