use std::collections::BTreeMap;
use std::fmt;

/// A coordinate or formal symbol. Indices are 1-based, matching the textual
/// grammar (`x_1`, `v_2_1`, ...).
///
/// Index conventions:
/// - `V(A, α)` is the velocity `v^A_α`,
/// - `P(A, α)` is the multimomentum `p^α_A`,
/// - `W(A, α, ν)` (with `α ≤ ν`) is the formal second derivative of a section,
/// - `U(A, α)` and `Q(A, α, β)` are formal first derivatives `∂ψ^A/∂x^α` and
///   `∂ψ^α_A/∂x^β` of a Hamiltonian section,
/// - `G(A, η, α)` and `H(α)` are unknown operator coefficients `g^η_{Aα}`, `h_α`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    X(u8),
    Y(u8),
    V(u8, u8),
    P(u8, u8),
    Pa,
    W(u8, u8, u8),
    U(u8, u8),
    Q(u8, u8, u8),
    G(u8, u8, u8),
    H(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Base,
    Fiber,
    Velocity,
    Momentum,
    AffineMomentum,
    /// Formal derivative symbols of a section (`w_*`, `u_*`, `q_*`).
    SectionDerivative,
    /// Unknown coefficients of a field operator (`g_*`, `h_*`).
    Coefficient,
}

impl Sym {
    /// Second-derivative symbol with symmetrized base indices.
    pub fn w(field: u8, a: u8, b: u8) -> Sym {
        Sym::W(field, a.min(b), a.max(b))
    }

    pub fn role(&self) -> Role {
        match self {
            Sym::X(_) => Role::Base,
            Sym::Y(_) => Role::Fiber,
            Sym::V(..) => Role::Velocity,
            Sym::P(..) => Role::Momentum,
            Sym::Pa => Role::AffineMomentum,
            Sym::W(..) | Sym::U(..) | Sym::Q(..) => Role::SectionDerivative,
            Sym::G(..) | Sym::H(_) => Role::Coefficient,
        }
    }

    /// Whether every index lies in range for a theory with `m` base and `n`
    /// fiber dimensions.
    pub fn in_range(&self, m: usize, n: usize) -> bool {
        let b = |i: &u8| (1..=m).contains(&(*i as usize));
        let f = |i: &u8| (1..=n).contains(&(*i as usize));
        match self {
            Sym::X(a) | Sym::H(a) => b(a),
            Sym::Y(a) => f(a),
            Sym::V(a, al) | Sym::P(a, al) | Sym::U(a, al) => f(a) && b(al),
            Sym::Pa => true,
            Sym::W(a, al, nu) => f(a) && b(al) && b(nu) && al <= nu,
            Sym::Q(a, al, be) | Sym::G(a, al, be) => f(a) && b(al) && b(be),
        }
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::X(a) => write!(f, "x_{a}"),
            Sym::Y(a) => write!(f, "y_{a}"),
            Sym::V(a, b) => write!(f, "v_{a}_{b}"),
            Sym::P(a, b) => write!(f, "p_{a}_{b}"),
            Sym::Pa => write!(f, "pa"),
            Sym::W(a, b, c) => write!(f, "w_{a}_{b}_{c}"),
            Sym::U(a, b) => write!(f, "u_{a}_{b}"),
            Sym::Q(a, b, c) => write!(f, "q_{a}_{b}_{c}"),
            Sym::G(a, b, c) => write!(f, "g_{a}_{b}_{c}"),
            Sym::H(a) => write!(f, "h_{a}"),
        }
    }
}

/// Parses a symbol name, ignoring range checks.
pub(crate) fn parse_sym_name(name: &str) -> Option<Sym> {
    if name == "pa" {
        return Some(Sym::Pa);
    }
    let mut parts = name.split('_');
    let head = parts.next()?;
    let idx: Vec<u8> = parts
        .map(|p| {
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                None
            } else {
                p.parse().ok()
            }
        })
        .collect::<Option<_>>()?;
    match (head, idx.as_slice()) {
        ("x", [a]) => Some(Sym::X(*a)),
        ("y", [a]) => Some(Sym::Y(*a)),
        ("v", [a, b]) => Some(Sym::V(*a, *b)),
        ("p", [a, b]) => Some(Sym::P(*a, *b)),
        ("w", [a, b, c]) => Some(Sym::W(*a, *b, *c)),
        ("u", [a, b]) => Some(Sym::U(*a, *b)),
        ("q", [a, b, c]) => Some(Sym::Q(*a, *b, *c)),
        ("g", [a, b, c]) => Some(Sym::G(*a, *b, *c)),
        ("h", [a]) => Some(Sym::H(*a)),
        _ => None,
    }
}

/// Ordered list of `(name, role, chart)` entries that the parser resolves
/// identifiers against.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    m: usize,
    n: usize,
    entries: BTreeMap<String, (Sym, Role, &'static str)>,
}

impl SymbolTable {
    /// Table with every coordinate of the jet and multimomentum charts of a
    /// theory with `m` base and `n` fiber dimensions.
    pub fn new(m: usize, n: usize) -> Self {
        let mut t = SymbolTable {
            m,
            n,
            entries: BTreeMap::new(),
        };
        for a in 1..=m as u8 {
            t.insert(Sym::X(a), "base");
        }
        for f in 1..=n as u8 {
            t.insert(Sym::Y(f), "fiber");
            for a in 1..=m as u8 {
                t.insert(Sym::V(f, a), "jet");
            }
        }
        for f in 1..=n as u8 {
            for a in 1..=m as u8 {
                t.insert(Sym::P(f, a), "multimomentum");
            }
        }
        t.insert(Sym::Pa, "multimomentum");
        t
    }

    /// Only the symbols belonging to `syms`, used to restrict parsing to a
    /// single chart.
    pub fn from_symbols(m: usize, n: usize, syms: &[Sym], chart: &'static str) -> Self {
        let mut t = SymbolTable {
            m,
            n,
            entries: BTreeMap::new(),
        };
        for s in syms {
            t.insert(*s, chart);
        }
        t
    }

    /// Adds the formal section-derivative and coefficient symbols.
    pub fn with_formal(mut self) -> Self {
        let (m, n) = (self.m as u8, self.n as u8);
        for f in 1..=n {
            for a in 1..=m {
                self.insert(Sym::U(f, a), "formal");
                for b in 1..=m {
                    if a <= b {
                        self.insert(Sym::W(f, a, b), "formal");
                    }
                    self.insert(Sym::Q(f, a, b), "formal");
                    self.insert(Sym::G(f, a, b), "formal");
                }
            }
        }
        for a in 1..=m {
            self.insert(Sym::H(a), "formal");
        }
        self
    }

    fn insert(&mut self, s: Sym, chart: &'static str) {
        self.entries.insert(s.to_string(), (s, s.role(), chart));
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lookup(&self, name: &str) -> Option<Sym> {
        self.entries.get(name).map(|e| e.0)
    }

    pub fn contains(&self, s: &Sym) -> bool {
        self.entries.contains_key(&s.to_string())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, Role, &'static str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.1, v.2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in [
            Sym::X(2),
            Sym::Y(1),
            Sym::V(1, 2),
            Sym::P(2, 1),
            Sym::Pa,
            Sym::W(1, 1, 2),
            Sym::U(1, 1),
            Sym::Q(1, 2, 1),
            Sym::G(1, 1, 2),
            Sym::H(3),
        ] {
            assert_eq!(parse_sym_name(&s.to_string()), Some(s));
        }
        assert_eq!(parse_sym_name("v_1"), None);
        assert_eq!(parse_sym_name("z_1"), None);
        assert_eq!(parse_sym_name("x_"), None);
    }

    #[test]
    fn table_respects_ranges() {
        let t = SymbolTable::new(2, 1);
        assert_eq!(t.lookup("v_1_2"), Some(Sym::V(1, 2)));
        assert_eq!(t.lookup("v_2_1"), None);
        assert_eq!(t.lookup("x_3"), None);
        assert_eq!(t.lookup("w_1_1_1"), None);
        let t = t.with_formal();
        assert_eq!(t.lookup("w_1_1_2"), Some(Sym::W(1, 1, 2)));
        assert_eq!(t.lookup("w_1_2_1"), None);
    }
}
