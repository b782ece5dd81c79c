//! Fixed periodic table: symbols, atomic numbers, standard atomic weights and
//! the default valence lists used for implicit hydrogen assignment.

/// (symbol, standard atomic weight), indexed by atomic number - 1.
const TABLE: [(&str, f64); 118] = [
    ("H", 1.008),
    ("He", 4.0026),
    ("Li", 6.94),
    ("Be", 9.0122),
    ("B", 10.81),
    ("C", 12.011),
    ("N", 14.007),
    ("O", 15.999),
    ("F", 18.998),
    ("Ne", 20.180),
    ("Na", 22.990),
    ("Mg", 24.305),
    ("Al", 26.982),
    ("Si", 28.085),
    ("P", 30.974),
    ("S", 32.06),
    ("Cl", 35.45),
    ("Ar", 39.948),
    ("K", 39.098),
    ("Ca", 40.078),
    ("Sc", 44.956),
    ("Ti", 47.867),
    ("V", 50.942),
    ("Cr", 51.996),
    ("Mn", 54.938),
    ("Fe", 55.845),
    ("Co", 58.933),
    ("Ni", 58.693),
    ("Cu", 63.546),
    ("Zn", 65.38),
    ("Ga", 69.723),
    ("Ge", 72.630),
    ("As", 74.922),
    ("Se", 78.971),
    ("Br", 79.904),
    ("Kr", 83.798),
    ("Rb", 85.468),
    ("Sr", 87.62),
    ("Y", 88.906),
    ("Zr", 91.224),
    ("Nb", 92.906),
    ("Mo", 95.95),
    ("Tc", 98.0),
    ("Ru", 101.07),
    ("Rh", 102.91),
    ("Pd", 106.42),
    ("Ag", 107.87),
    ("Cd", 112.41),
    ("In", 114.82),
    ("Sn", 118.71),
    ("Sb", 121.76),
    ("Te", 127.60),
    ("I", 126.90),
    ("Xe", 131.29),
    ("Cs", 132.91),
    ("Ba", 137.33),
    ("La", 138.91),
    ("Ce", 140.12),
    ("Pr", 140.91),
    ("Nd", 144.24),
    ("Pm", 145.0),
    ("Sm", 150.36),
    ("Eu", 151.96),
    ("Gd", 157.25),
    ("Tb", 158.93),
    ("Dy", 162.50),
    ("Ho", 164.93),
    ("Er", 167.26),
    ("Tm", 168.93),
    ("Yb", 173.05),
    ("Lu", 174.97),
    ("Hf", 178.49),
    ("Ta", 180.95),
    ("W", 183.84),
    ("Re", 186.21),
    ("Os", 190.23),
    ("Ir", 192.22),
    ("Pt", 195.08),
    ("Au", 196.97),
    ("Hg", 200.59),
    ("Tl", 204.38),
    ("Pb", 207.2),
    ("Bi", 208.98),
    ("Po", 209.0),
    ("At", 210.0),
    ("Rn", 222.0),
    ("Fr", 223.0),
    ("Ra", 226.0),
    ("Ac", 227.0),
    ("Th", 232.04),
    ("Pa", 231.04),
    ("U", 238.03),
    ("Np", 237.0),
    ("Pu", 244.0),
    ("Am", 243.0),
    ("Cm", 247.0),
    ("Bk", 247.0),
    ("Cf", 251.0),
    ("Es", 252.0),
    ("Fm", 257.0),
    ("Md", 258.0),
    ("No", 259.0),
    ("Lr", 262.0),
    ("Rf", 267.0),
    ("Db", 270.0),
    ("Sg", 269.0),
    ("Bh", 270.0),
    ("Hs", 270.0),
    ("Mt", 278.0),
    ("Ds", 281.0),
    ("Rg", 281.0),
    ("Cn", 285.0),
    ("Nh", 286.0),
    ("Fl", 289.0),
    ("Mc", 289.0),
    ("Lv", 293.0),
    ("Ts", 293.0),
    ("Og", 294.0),
];

/// Symbol used for attachment points and SMILES wildcards.
pub const WILDCARD: &str = "*";

pub fn atomic_number(symbol: &str) -> Option<u8> {
    if symbol == WILDCARD {
        return Some(0);
    }
    TABLE
        .iter()
        .position(|(s, _)| *s == symbol)
        .map(|i| (i + 1) as u8)
}

pub fn symbol(atomic_number: u8) -> Option<&'static str> {
    if atomic_number == 0 {
        return Some(WILDCARD);
    }
    TABLE.get(atomic_number as usize - 1).map(|(s, _)| *s)
}

/// Standard atomic weight; 0 for the wildcard.
pub fn standard_mass(atomic_number: u8) -> f64 {
    if atomic_number == 0 {
        return 0.0;
    }
    TABLE
        .get(atomic_number as usize - 1)
        .map(|(_, m)| *m)
        .unwrap_or(0.0)
}

/// Allowed valences of the SMILES organic subset. `None` for elements that
/// only appear in brackets and whose hydrogen count is always explicit.
pub fn default_valences(atomic_number: u8) -> Option<&'static [u8]> {
    match atomic_number {
        5 => Some(&[3]),
        6 => Some(&[4]),
        7 => Some(&[3, 5]),
        8 => Some(&[2]),
        15 => Some(&[3, 5]),
        16 => Some(&[2, 4, 6]),
        9 => Some(&[1]),
        17 | 35 | 53 => Some(&[1, 3, 5, 7]),
        // Bracket-only elements with a well-defined main-group valence.
        1 => Some(&[1]),
        14 => Some(&[4]),
        33 => Some(&[3, 5]),
        34 => Some(&[2, 4, 6]),
        52 => Some(&[2, 4, 6]),
        _ => None,
    }
}

/// Valences shifted by formal charge. Group 13/14 atoms lose a bond per unit
/// of charge in either direction (C+, C-); boron gains one as an anion
/// (BF4-); pnictogens, chalcogens and halogens follow the usual
/// isoelectronic shift (N+ behaves like C, O- like F).
pub fn charge_adjusted_valences(atomic_number: u8, charge: i8) -> Option<Vec<u8>> {
    let base = default_valences(atomic_number)?;
    let shift = |v: u8, delta: i32| -> Option<u8> {
        let shifted = v as i32 + delta;
        (shifted >= 0).then_some(shifted as u8)
    };
    let delta = match atomic_number {
        5 => -(charge as i32),
        6 | 14 => -(charge as i32).abs(),
        1 => -(charge as i32).abs(),
        _ => charge as i32,
    };
    let mut out: Vec<u8> = base.iter().filter_map(|&v| shift(v, delta)).collect();
    out.dedup();
    Some(out)
}

/// Elements written without brackets in SMILES.
pub fn is_organic_subset(atomic_number: u8) -> bool {
    matches!(atomic_number, 0 | 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
}

/// Elements that may be written as lowercase aromatic atoms.
pub fn can_be_aromatic(atomic_number: u8) -> bool {
    matches!(atomic_number, 0 | 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52)
}
