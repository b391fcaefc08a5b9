use crate::element::Element;
use crate::error::{ChemError, Result};
use crate::graph::{implicit_hydrogens, Atom, Bond, BondOrder, MolGraph};

/// A ring-closure label left open at the end of the input. In SAFE blocks
/// these are the cross-fragment attachment points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpenClosure {
    pub label: u32,
    pub atom: usize,
    pub order: Option<BondOrder>,
}

#[derive(Debug, Clone)]
pub struct PartialParse {
    pub graph: MolGraph,
    pub open: Vec<OpenClosure>,
}

/// Parses a SMILES string into a valence-checked graph. Dot-separated
/// components are allowed and ring closures may span them.
pub fn parse_smiles(text: &str) -> Result<MolGraph> {
    let parsed = parse_partial(text)?;
    if let Some(open) = parsed.open.first() {
        return Err(ChemError::parse(
            text.len(),
            format!("unmatched ring closure {}", open.label),
        ));
    }
    parsed.graph.check_valence()?;
    Ok(parsed.graph)
}

/// Parses without requiring every ring closure to be matched. Open closures
/// count as single bonds when deriving implicit hydrogens. Valence is not
/// checked.
pub fn parse_partial(text: &str) -> Result<PartialParse> {
    Parser::new(text).run()
}

struct PendingRing {
    atom: usize,
    order: Option<BondOrder>,
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    implicit: Vec<bool>,
    bonds: Vec<Bond>,
    rings: Vec<(u32, PendingRing)>,
    branch_stack: Vec<usize>,
    prev: Option<usize>,
    pending_bond: Option<BondOrder>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            implicit: Vec::new(),
            bonds: Vec::new(),
            rings: Vec::new(),
            branch_stack: Vec::new(),
            prev: None,
            pending_bond: None,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(ChemError::parse(self.pos, msg))
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(mut self) -> Result<PartialParse> {
        if self.text.is_empty() {
            return self.err("empty SMILES");
        }
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return self.err("branch without preceding atom");
                    };
                    if self.pending_bond.is_some() {
                        return self.err("bond symbol before branch");
                    }
                    self.branch_stack.push(prev);
                    self.pos += 1;
                }
                b')' => {
                    let Some(top) = self.branch_stack.pop() else {
                        return self.err("unmatched ')'");
                    };
                    if self.pending_bond.is_some() {
                        return self.err("dangling bond symbol");
                    }
                    self.prev = Some(top);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' => {
                    if self.pending_bond.is_some() {
                        return self.err("consecutive bond symbols");
                    }
                    if self.prev.is_none() {
                        return self.err("bond symbol without preceding atom");
                    }
                    self.pending_bond = Some(match c {
                        b'-' => BondOrder::Single,
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        _ => BondOrder::Aromatic,
                    });
                    self.pos += 1;
                }
                b'/' | b'\\' => return self.err("stereo bonds are not supported"),
                b'.' => {
                    if self.pending_bond.is_some() || self.prev.is_none() {
                        return self.err("misplaced '.'");
                    }
                    if !self.branch_stack.is_empty() {
                        return self.err("'.' inside a branch");
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, false)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, true)?;
                }
            }
        }
        if !self.branch_stack.is_empty() {
            return self.err("unclosed branch");
        }
        if self.pending_bond.is_some() {
            return self.err("dangling bond symbol");
        }
        if self.prev.is_none() {
            return self.err("trailing '.'");
        }
        let open: Vec<OpenClosure> = self
            .rings
            .iter()
            .map(|(label, p)| OpenClosure {
                label: *label,
                atom: p.atom,
                order: p.order,
            })
            .collect();
        let mut open_count = vec![0u32; self.atoms.len()];
        for o in &open {
            open_count[o.atom] += o.order.map(|b| b.valence()).unwrap_or(1);
        }
        let mut graph_bond_sum = vec![0u32; self.atoms.len()];
        for b in &self.bonds {
            graph_bond_sum[b.a] += b.order.valence();
            graph_bond_sum[b.b] += b.order.valence();
        }
        for i in 0..self.atoms.len() {
            if self.implicit[i] && !self.atoms[i].is_dummy() {
                let a = &mut self.atoms[i];
                a.hydrogens =
                    implicit_hydrogens(a.element, a.aromatic, graph_bond_sum[i] + open_count[i]);
            }
        }
        let graph = MolGraph::new(self.atoms, self.bonds)
            .map_err(|e| ChemError::parse(self.text.len(), e.to_string()))?;
        Ok(PartialParse { graph, open })
    }

    fn add_atom(&mut self, atom: Atom, implicit: bool) -> Result<()> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        self.implicit.push(implicit);
        if let Some(prev) = self.prev {
            let order = match self.pending_bond.take() {
                Some(o) => o,
                None => self.implicit_order(prev, idx),
            };
            self.push_bond(prev, idx, order)?;
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn implicit_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn push_bond(&mut self, a: usize, b: usize, order: BondOrder) -> Result<()> {
        if a == b {
            return self.err("ring closure onto the same atom");
        }
        if self
            .bonds
            .iter()
            .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
        {
            return self.err("duplicate bond");
        }
        self.bonds.push(Bond::new(a, b, order));
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<()> {
        let Some(atom) = self.prev else {
            return self.err("ring closure without preceding atom");
        };
        let label = if self.bytes[self.pos] == b'%' {
            let digits = self.bytes.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    ((d[0] - b'0') * 10 + (d[1] - b'0')) as u32
                }
                _ => return self.err("'%' must be followed by two digits"),
            }
        } else {
            let d = (self.bytes[self.pos] - b'0') as u32;
            self.pos += 1;
            d
        };
        let order = self.pending_bond.take();
        if let Some(slot) = self.rings.iter().position(|(l, _)| *l == label) {
            let (_, open) = self.rings.remove(slot);
            let order = match (open.order, order) {
                (Some(x), Some(y)) if x != y => {
                    return self.err(format!("conflicting bond orders on ring closure {label}"))
                }
                (Some(x), _) | (None, Some(x)) => x,
                (None, None) => self.implicit_order(open.atom, atom),
            };
            self.push_bond(open.atom, atom, order)?;
        } else {
            self.rings.push((label, PendingRing { atom, order }));
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom> {
        let rest = &self.bytes[self.pos..];
        let (element, aromatic, len) = match rest {
            [b'C', b'l', ..] => (Element::Cl, false, 2),
            [b'B', b'r', ..] => (Element::Br, false, 2),
            [b'B', ..] => (Element::B, false, 1),
            [b'C', ..] => (Element::C, false, 1),
            [b'N', ..] => (Element::N, false, 1),
            [b'O', ..] => (Element::O, false, 1),
            [b'P', ..] => (Element::P, false, 1),
            [b'S', ..] => (Element::S, false, 1),
            [b'F', ..] => (Element::F, false, 1),
            [b'I', ..] => (Element::I, false, 1),
            [b'b', ..] => (Element::B, true, 1),
            [b'c', ..] => (Element::C, true, 1),
            [b'n', ..] => (Element::N, true, 1),
            [b'o', ..] => (Element::O, true, 1),
            [b'p', ..] => (Element::P, true, 1),
            [b's', ..] => (Element::S, true, 1),
            [b'*', ..] => (Element::Dummy, false, 1),
            _ => {
                let ch = self.text[self.pos..].chars().next().unwrap_or('?');
                return self.err(format!("unexpected character '{ch}'"));
            }
        };
        self.pos += len;
        Ok(Atom {
            element,
            charge: 0,
            aromatic,
            hydrogens: 0,
        })
    }

    fn bracket_atom(&mut self) -> Result<Atom> {
        let start = self.pos;
        let Some(close) = self.text[start..].find(']') else {
            return self.err("unclosed bracket atom");
        };
        let body = &self.text[start + 1..start + close];
        self.pos = start + close + 1;
        let b = body.as_bytes();
        let mut i;
        if b.first().is_some_and(u8::is_ascii_digit) {
            return Err(ChemError::parse(start, "isotopes are not supported"));
        }
        let (element, aromatic) = {
            let two = body.get(0..2);
            let one = body.get(0..1);
            if let Some(e) = two.and_then(Element::from_symbol) {
                i = 2;
                (e, false)
            } else if let Some(s) = one {
                i = 1;
                match s {
                    "b" | "c" | "n" | "o" | "p" | "s" => {
                        (Element::from_symbol(&s.to_uppercase()).unwrap(), true)
                    }
                    _ => match Element::from_symbol(s) {
                        Some(e) => (e, false),
                        None => {
                            return Err(ChemError::parse(
                                start,
                                format!("unsupported element in [{body}]"),
                            ))
                        }
                    },
                }
            } else {
                return Err(ChemError::parse(start, "empty bracket atom"));
            }
        };
        // two-letter symbols that are not supported (e.g. "Se", "Na")
        if i == 1 && b.get(1).is_some_and(u8::is_ascii_lowercase) {
            return Err(ChemError::parse(
                start,
                format!("unsupported element in [{body}]"),
            ));
        }
        let mut hydrogens = 0u8;
        if b.get(i) == Some(&b'@') {
            return Err(ChemError::parse(start, "chirality is not supported"));
        }
        if b.get(i) == Some(&b'H') {
            i += 1;
            let digits_start = i;
            while b.get(i).is_some_and(u8::is_ascii_digit) {
                i += 1;
            }
            hydrogens = if digits_start == i {
                1
            } else {
                body[digits_start..i]
                    .parse()
                    .map_err(|_| ChemError::parse(start, "bad hydrogen count"))?
            };
        }
        let mut charge: i8 = 0;
        if let Some(&sign) = b.get(i) {
            if sign == b'+' || sign == b'-' {
                let unit: i8 = if sign == b'+' { 1 } else { -1 };
                i += 1;
                let digits_start = i;
                while b.get(i).is_some_and(u8::is_ascii_digit) {
                    i += 1;
                }
                if digits_start != i {
                    let mag: i8 = body[digits_start..i]
                        .parse()
                        .map_err(|_| ChemError::parse(start, "bad charge"))?;
                    charge = unit * mag;
                } else {
                    charge = unit;
                    while b.get(i) == Some(&sign) {
                        charge += unit;
                        i += 1;
                    }
                }
            }
        }
        if i != b.len() {
            return Err(ChemError::parse(
                start,
                format!("unsupported bracket atom syntax [{body}]"),
            ));
        }
        if element == Element::Dummy && (hydrogens != 0 || charge != 0) {
            return Err(ChemError::parse(start, "dummy atoms carry no H or charge"));
        }
        Ok(Atom {
            element,
            charge,
            aromatic,
            hydrogens,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(s: &str) -> (usize, usize) {
        let g = parse_smiles(s).unwrap();
        (g.atom_count(), g.bond_count())
    }

    #[test]
    fn single_atom() {
        let g = parse_smiles("C").unwrap();
        assert_eq!(g.atom_count(), 1);
        assert_eq!(g.bond_count(), 0);
        assert_eq!(g.atom(0).hydrogens, 4);
    }

    #[test]
    fn cyclopropane_all_ring_bonds() {
        let g = parse_smiles("C1CC1").unwrap();
        assert_eq!((g.atom_count(), g.bond_count()), (3, 3));
        assert_eq!(g.ring_bonds().count(), 3);
    }

    #[test]
    fn acetic_acid() {
        // hand expansion: C0-C1, C1=O2, C1-O3
        let g = parse_smiles("CC(=O)O").unwrap();
        assert_eq!((g.atom_count(), g.bond_count()), (4, 3));
        let doubles: Vec<_> = g
            .bonds()
            .iter()
            .filter(|b| b.order == BondOrder::Double)
            .collect();
        assert_eq!(doubles.len(), 1);
        assert_eq!((doubles[0].a, doubles[0].b), (1, 2));
        assert_eq!(g.atom(2).element, Element::O);
        assert_eq!(g.atom(0).hydrogens, 3);
        assert_eq!(g.atom(1).hydrogens, 0);
        assert_eq!(g.atom(3).hydrogens, 1);
    }

    #[test]
    fn aromatic_rings() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert!(g.atoms().iter().all(|a| a.hydrogens == 1));
        let g = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(g.atom(3).hydrogens, 0);
        let g = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(g.atom(3).hydrogens, 1);
        // biaryl single bond written explicitly
        let g = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(
            g.bonds()
                .iter()
                .filter(|b| b.order == BondOrder::Single)
                .count(),
            1
        );
    }

    #[test]
    fn charges_and_brackets() {
        let g = parse_smiles("C[N+](C)(C)C").unwrap();
        assert_eq!(g.atom(1).charge, 1);
        let g = parse_smiles("CC(=O)[O-]").unwrap();
        assert_eq!(g.atom(3).charge, -1);
        assert_eq!(g.atom(3).hydrogens, 0);
        assert_eq!(parse_smiles("[NH4+]").unwrap().atom(0).hydrogens, 4);
        assert_eq!(parse_smiles("[O--]").unwrap().atom(0).charge, -2);
    }

    #[test]
    fn percent_closures_and_dots() {
        assert_eq!(counts("C%10CC%10"), (3, 3));
        // closures may span dot-separated blocks
        assert_eq!(counts("CC%10.O%10%11.C%11C"), (5, 4));
        assert_eq!(counts("C.C"), (2, 0));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_smiles("C1CC"), Err(ChemError::Parse { .. })));
        assert!(matches!(parse_smiles("C(C"), Err(ChemError::Parse { .. })));
        assert!(matches!(parse_smiles("CX"), Err(ChemError::Parse { .. })));
        assert!(matches!(parse_smiles("[Na+]"), Err(ChemError::Parse { .. })));
        assert!(matches!(parse_smiles("C[C@H](N)O"), Err(ChemError::Parse { .. })));
        assert!(matches!(parse_smiles("F/C=C/F"), Err(ChemError::Parse { .. })));
        assert!(matches!(parse_smiles(""), Err(ChemError::Parse { .. })));
        assert!(matches!(
            parse_smiles("C(C)(C)(C)(C)C"),
            Err(ChemError::Valence { .. })
        ));
        assert!(matches!(parse_smiles("O=O=O"), Err(ChemError::Valence { .. })));
    }

    #[test]
    fn partial_parse_reports_open_closures() {
        let p = parse_partial("O%10%11").unwrap();
        assert_eq!(p.open.len(), 2);
        assert_eq!(p.graph.atom(0).hydrogens, 0);
        let p = parse_partial("CC-%10").unwrap();
        assert_eq!(p.open[0].order, Some(BondOrder::Single));
        assert_eq!(p.graph.atom(1).hydrogens, 2);
    }

    #[test]
    fn dummy_atoms() {
        let g = parse_smiles("[*]CC[*]").unwrap();
        assert_eq!(g.atom(0).element, Element::Dummy);
        assert_eq!(g.atom(1).hydrogens, 2);
        let g = parse_smiles("*O*").unwrap();
        assert_eq!(g.atom(1).hydrogens, 0);
    }
}
