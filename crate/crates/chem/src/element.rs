use std::fmt;

/// Elements accepted by the parser. `Dummy` is the `*` attachment marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Dummy,
    B,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

impl Element {
    pub const ALL: [Element; 11] = [
        Element::Dummy,
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::Dummy => "*",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Element> {
        Some(match s {
            "*" => Element::Dummy,
            "B" => Element::B,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "F" => Element::F,
            "P" => Element::P,
            "S" => Element::S,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "I" => Element::I,
            _ => return None,
        })
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::Dummy => 0,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    /// Elements that may be written in lowercase aromatic form.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        )
    }

    fn valence_electrons(self) -> i32 {
        match self {
            Element::Dummy => 1,
            Element::B => 3,
            Element::C => 4,
            Element::N | Element::P => 5,
            Element::O | Element::S => 6,
            Element::F | Element::Cl | Element::Br | Element::I => 7,
        }
    }

    fn second_row(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::F
        )
    }

    /// Allowed total valences for this element carrying `charge`.
    ///
    /// Charged atoms are treated as isoelectronic with their neighbour in the
    /// period (N+ behaves like C, O- like F).
    pub fn allowed_valences(self, charge: i8) -> &'static [u8] {
        if self == Element::Dummy {
            return &[1];
        }
        let electrons = self.valence_electrons() - charge as i32;
        if self.second_row() {
            match electrons {
                3 => &[3],
                4 => &[4],
                5 => &[3],
                6 => &[2],
                7 => &[1],
                8 => &[0],
                2 => &[2],
                _ => &[],
            }
        } else {
            match electrons {
                3 => &[3],
                4 => &[4],
                5 => &[3, 5],
                6 => &[2, 4, 6],
                7 => &[1],
                8 => &[0],
                _ => &[],
            }
        }
    }

    pub fn max_valence(self, charge: i8) -> Option<u8> {
        self.allowed_valences(charge).iter().copied().max()
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
