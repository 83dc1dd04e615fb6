use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::symexpr::{Sym, SymbolTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChartKind {
    /// Base manifold, coordinates `x`.
    Base,
    /// Configuration bundle, coordinates `(x, y)`.
    Bundle,
    /// First jet bundle, `(x, y, v)`.
    Jet,
    /// Extended multimomentum bundle, `(x, y, p, pa)`.
    Multimomentum,
    /// Restricted multimomentum bundle, `(x, y, p)`.
    RestrictedMultimomentum,
}

impl ChartKind {
    pub fn name(self) -> &'static str {
        match self {
            ChartKind::Base => "base",
            ChartKind::Bundle => "bundle",
            ChartKind::Jet => "jet",
            ChartKind::Multimomentum => "multimomentum",
            ChartKind::RestrictedMultimomentum => "restricted-multimomentum",
        }
    }
}

/// A coordinate system with role-tagged coordinates.
///
/// Coordinates are ordered `x`, `y`, `v` (field-major), `p` (field-major),
/// `pa`, so multi-indices of forms sort base directions first. The volume
/// form is `dx_1∧…∧dx_m`.
#[derive(Clone, Debug)]
pub struct Chart {
    kind: ChartKind,
    m: usize,
    n: usize,
    coords: Vec<Sym>,
    index: HashMap<Sym, usize>,
}

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.m == other.m && self.n == other.n && self.coords == other.coords
    }
}

impl Eq for Chart {}

impl Chart {
    fn build(kind: ChartKind, m: usize, n: usize, coords: Vec<Sym>) -> Arc<Chart> {
        let index = coords.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Arc::new(Chart {
            kind,
            m,
            n,
            coords,
            index,
        })
    }

    fn base_coords(m: usize) -> Vec<Sym> {
        (1..=m as u8).map(Sym::X).collect()
    }

    fn fiber_coords(n: usize) -> Vec<Sym> {
        (1..=n as u8).map(Sym::Y).collect()
    }

    fn grid(m: usize, n: usize, f: fn(u8, u8) -> Sym) -> Vec<Sym> {
        let mut out = Vec::with_capacity(m * n);
        for a in 1..=n as u8 {
            for al in 1..=m as u8 {
                out.push(f(a, al));
            }
        }
        out
    }

    pub fn base(m: usize) -> Arc<Chart> {
        Chart::build(ChartKind::Base, m, 0, Chart::base_coords(m))
    }

    pub fn bundle(m: usize, n: usize) -> Arc<Chart> {
        let mut c = Chart::base_coords(m);
        c.extend(Chart::fiber_coords(n));
        Chart::build(ChartKind::Bundle, m, n, c)
    }

    pub fn jet(m: usize, n: usize) -> Arc<Chart> {
        let mut c = Chart::base_coords(m);
        c.extend(Chart::fiber_coords(n));
        c.extend(Chart::grid(m, n, Sym::V));
        Chart::build(ChartKind::Jet, m, n, c)
    }

    pub fn multimomentum(m: usize, n: usize) -> Arc<Chart> {
        let mut c = Chart::base_coords(m);
        c.extend(Chart::fiber_coords(n));
        c.extend(Chart::grid(m, n, Sym::P));
        c.push(Sym::Pa);
        Chart::build(ChartKind::Multimomentum, m, n, c)
    }

    pub fn restricted_multimomentum(m: usize, n: usize) -> Arc<Chart> {
        let mut c = Chart::base_coords(m);
        c.extend(Chart::fiber_coords(n));
        c.extend(Chart::grid(m, n, Sym::P));
        Chart::build(ChartKind::RestrictedMultimomentum, m, n, c)
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Sym] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> Sym {
        self.coords[i]
    }

    pub fn index_of(&self, s: Sym) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn contains(&self, s: Sym) -> bool {
        self.index.contains_key(&s)
    }

    pub fn id(&self) -> String {
        format!("{}(m={},N={})", self.kind.name(), self.m, self.n)
    }

    /// Symbol table restricted to this chart's coordinates.
    pub fn table(&self) -> SymbolTable {
        SymbolTable::from_symbols(self.m, self.n, &self.coords, self.kind.name())
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_counts() {
        let (m, n) = (3, 2);
        assert_eq!(Chart::jet(m, n).dim(), m + n + n * m);
        assert_eq!(Chart::multimomentum(m, n).dim(), m + n + n * m + 1);
        assert_eq!(Chart::restricted_multimomentum(m, n).dim(), m + n + n * m);
        let j = Chart::jet(2, 1);
        assert_eq!(
            j.coords(),
            &[Sym::X(1), Sym::X(2), Sym::Y(1), Sym::V(1, 1), Sym::V(1, 2)]
        );
        assert_eq!(j.index_of(Sym::V(1, 2)), Some(4));
        assert!(!j.contains(Sym::Pa));
    }
}
