//! Finite topological spaces: validated open-set lattices, minimal open
//! neighbourhoods, and connected components of opens.
//!
//! Points are indices `0..n_points`; opens are bitsets over them. Opens are
//! kept in a deterministic order (cardinality, then numeric value) so every
//! report and every iteration over the space is reproducible.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub const MAX_POINTS: usize = 16;
pub const MAX_OPENS: usize = 4096;

/// A space-relative index into the sorted list of opens.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct OpenSet(pub usize);

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FiniteSpace {
    n_points: usize,
    opens: Vec<u32>,
    index: HashMap<u32, usize>,
    min_open: Vec<usize>,
}

/// The partition of an open into its connected components.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ComponentDecomposition {
    pub open: OpenSet,
    /// Disjoint nonempty bitsets covering the open, ordered by least point.
    pub components: Vec<u32>,
}

impl FiniteSpace {
    /// Validates a candidate family of opens and builds the space, or
    /// reports the first violated closure axiom.
    pub fn validate_topology(n_points: usize, candidate: &[u32]) -> Result<FiniteSpace> {
        if n_points > MAX_POINTS {
            return Err(Error::Topology(format!(
                "{n_points} points exceeds the supported maximum of {MAX_POINTS}"
            )));
        }
        let whole: u32 = if n_points == 32 { u32::MAX } else { (1u32 << n_points) - 1 };
        let mut opens: Vec<u32> = Vec::new();
        for &o in candidate {
            if o & !whole != 0 {
                return Err(Error::Topology(format!(
                    "open {} mentions a point outside 0..{n_points}",
                    format_bits(o)
                )));
            }
            if !opens.contains(&o) {
                opens.push(o);
            }
        }
        if !opens.contains(&0) {
            return Err(Error::Topology("the empty set is missing".into()));
        }
        if !opens.contains(&whole) {
            return Err(Error::Topology(format!(
                "the whole space {} is missing",
                format_bits(whole)
            )));
        }
        if opens.len() > MAX_OPENS {
            return Err(Error::Topology(format!(
                "{} opens exceeds the supported maximum of {MAX_OPENS}",
                opens.len()
            )));
        }
        for i in 0..opens.len() {
            for j in (i + 1)..opens.len() {
                let (a, b) = (opens[i], opens[j]);
                if !opens.contains(&(a | b)) {
                    return Err(Error::Topology(format!(
                        "union {} of {} and {} is missing",
                        format_bits(a | b),
                        format_bits(a),
                        format_bits(b)
                    )));
                }
                if !opens.contains(&(a & b)) {
                    return Err(Error::Topology(format!(
                        "intersection {} of {} and {} is missing",
                        format_bits(a & b),
                        format_bits(a),
                        format_bits(b)
                    )));
                }
            }
        }
        opens.sort_by_key(|&o| (o.count_ones(), o));
        let index: HashMap<u32, usize> = opens.iter().enumerate().map(|(i, &o)| (o, i)).collect();
        let mut min_open = Vec::with_capacity(n_points);
        for x in 0..n_points {
            let bit = 1u32 << x;
            let m = opens
                .iter()
                .filter(|&&o| o & bit != 0)
                .fold(whole, |acc, &o| acc & o);
            // closure under pairwise intersections makes m itself an open
            min_open.push(index[&m]);
        }
        Ok(FiniteSpace {
            n_points,
            opens,
            index,
            min_open,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_opens(&self) -> usize {
        self.opens.len()
    }

    pub fn opens(&self) -> impl Iterator<Item = OpenSet> + '_ {
        (0..self.opens.len()).map(OpenSet)
    }

    pub fn bits(&self, u: OpenSet) -> u32 {
        self.opens[u.0]
    }

    pub fn empty_open(&self) -> OpenSet {
        OpenSet(self.index[&0])
    }

    pub fn whole_open(&self) -> OpenSet {
        OpenSet(self.opens.len() - 1)
    }

    pub fn open_of_bits(&self, bits: u32) -> Option<OpenSet> {
        self.index.get(&bits).copied().map(OpenSet)
    }

    pub fn check_open(&self, u: OpenSet) -> Result<()> {
        if u.0 < self.opens.len() {
            Ok(())
        } else {
            Err(Error::BadOpen(u.0))
        }
    }

    pub fn points(&self, u: OpenSet) -> impl Iterator<Item = usize> + '_ {
        let bits = self.bits(u);
        (0..self.n_points).filter(move |&x| bits & (1 << x) != 0)
    }

    pub fn min_open(&self, x: usize) -> OpenSet {
        OpenSet(self.min_open[x])
    }

    pub fn is_subset(&self, v: OpenSet, u: OpenSet) -> bool {
        self.bits(v) & !self.bits(u) == 0
    }

    /// All pairs (u, v) of opens with v strictly contained in u.
    pub fn strict_inclusions(&self) -> Vec<(OpenSet, OpenSet)> {
        let mut out = Vec::new();
        for u in self.opens() {
            for v in self.opens() {
                if v != u && self.is_subset(v, u) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Connected components of an open. Two points are connected when a
    /// chain of points of `u` joins them whose minimal opens overlap
    /// pairwise; this is the subspace-topology component relation.
    pub fn components(&self, u: OpenSet) -> Result<ComponentDecomposition> {
        self.check_open(u)?;
        let pts: Vec<usize> = self.points(u).collect();
        let mut parent: HashMap<usize, usize> = pts.iter().map(|&x| (x, x)).collect();
        fn find(parent: &mut HashMap<usize, usize>, x: usize) -> usize {
            let p = parent[&x];
            if p == x {
                x
            } else {
                let r = find(parent, p);
                parent.insert(x, r);
                r
            }
        }
        for (i, &x) in pts.iter().enumerate() {
            for &y in &pts[i + 1..] {
                let ux = self.bits(self.min_open(x)) & self.bits(u);
                let uy = self.bits(self.min_open(y)) & self.bits(u);
                if ux & uy != 0 {
                    let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                    if rx != ry {
                        parent.insert(rx, ry);
                    }
                }
            }
        }
        let mut comps: HashMap<usize, u32> = HashMap::new();
        for &x in &pts {
            let r = find(&mut parent, x);
            *comps.entry(r).or_insert(0) |= 1 << x;
        }
        let mut components: Vec<u32> = comps.into_values().collect();
        components.sort_by_key(|c| c.trailing_zeros());
        Ok(ComponentDecomposition {
            open: u,
            components,
        })
    }

    pub fn n_components(&self, u: OpenSet) -> usize {
        self.components(u).expect("valid open").components.len()
    }

    /// For `v ⊆ u`, the total map sending each component of `v` to the
    /// component of `u` containing it.
    pub fn component_refinement(&self, u: OpenSet, v: OpenSet) -> Result<Vec<usize>> {
        self.check_open(u)?;
        self.check_open(v)?;
        if !self.is_subset(v, u) {
            return Err(Error::NotSubOpen { sub: v.0, sup: u.0 });
        }
        let cu = self.components(u)?;
        let cv = self.components(v)?;
        cv.components
            .iter()
            .map(|&cvb| {
                cu.components
                    .iter()
                    .position(|&cub| cvb & !cub == 0)
                    .ok_or_else(|| {
                        Error::Invalid("component of v not contained in one component of u".into())
                    })
            })
            .collect()
    }

    pub fn describe_open(&self, u: OpenSet) -> String {
        format_bits(self.bits(u))
    }
}

fn format_bits(bits: u32) -> String {
    let pts: Vec<String> = (0..32)
        .filter(|x| bits & (1 << x) != 0)
        .map(|x| x.to_string())
        .collect();
    format!("{{{}}}", pts.join(" "))
}

impl fmt::Display for OpenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{}", self.0)
    }
}

/// The Sierpinski space: opens ∅, {0}, {0,1}.
pub fn sierpinski() -> FiniteSpace {
    FiniteSpace::validate_topology(2, &[0b00, 0b01, 0b11]).expect("valid by construction")
}

/// The discrete topology on two points.
pub fn discrete2() -> FiniteSpace {
    FiniteSpace::validate_topology(2, &[0b00, 0b01, 0b10, 0b11]).expect("valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent union-find oracle for the component relation: repeatedly
    /// merge any two parts joined by a point whose minimal open meets both.
    fn component_count_oracle(space: &FiniteSpace, u: OpenSet) -> usize {
        let pts: Vec<usize> = space.points(u).collect();
        let mut parts: Vec<u32> = pts.iter().map(|&x| 1 << x).collect();
        loop {
            let mut merged = false;
            'outer: for i in 0..parts.len() {
                for j in (i + 1)..parts.len() {
                    let touch = pts.iter().any(|&x| {
                        let m = space.bits(space.min_open(x)) & space.bits(u);
                        m & parts[i] != 0 && m & parts[j] != 0
                    });
                    if touch {
                        let pj = parts.remove(j);
                        parts[i] |= pj;
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                return parts.len();
            }
        }
    }

    #[test]
    fn sierpinski_valid() {
        let s = sierpinski();
        assert_eq!(s.n_opens(), 3);
        assert_eq!(s.bits(s.min_open(0)), 0b01);
        assert_eq!(s.bits(s.min_open(1)), 0b11);
        assert_eq!(component_count_oracle(&s, s.whole_open()), 1);
        assert_eq!(s.n_components(s.whole_open()), 1);
    }

    #[test]
    fn discrete_two_components() {
        let s = discrete2();
        assert_eq!(s.n_components(s.whole_open()), 2);
        assert_eq!(component_count_oracle(&s, s.whole_open()), 2);
        assert_eq!(s.n_components(s.empty_open()), 0);
    }

    #[test]
    fn missing_union_rejected() {
        let err = FiniteSpace::validate_topology(2, &[0b00, 0b01, 0b10]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("whole space") || msg.contains("union"), "{msg}");
    }

    #[test]
    fn missing_intersection_rejected() {
        // {0,1} and {1,2} present but {1} absent
        let err =
            FiniteSpace::validate_topology(3, &[0b000, 0b011, 0b110, 0b111]).unwrap_err();
        assert!(err.to_string().contains("intersection"), "{err}");
    }

    #[test]
    fn refinement_three_point() {
        // opens: ∅, {0}, {2}, {0,2}, {0,1,2}
        let s =
            FiniteSpace::validate_topology(3, &[0b000, 0b001, 0b100, 0b101, 0b111]).unwrap();
        let u = s.whole_open();
        let v = s.open_of_bits(0b101).unwrap();
        assert_eq!(s.n_components(v), 2);
        assert_eq!(component_count_oracle(&s, v), 2);
        assert_eq!(s.n_components(u), 1);
        let map = s.component_refinement(u, v).unwrap();
        assert_eq!(map, vec![0, 0]);
    }

    #[test]
    fn refinement_composes() {
        let s =
            FiniteSpace::validate_topology(3, &[0b000, 0b001, 0b100, 0b101, 0b111]).unwrap();
        for (u, v) in s.strict_inclusions() {
            for w in s.opens() {
                if w != v && s.is_subset(w, v) {
                    let uv = s.component_refinement(u, v).unwrap();
                    let vw = s.component_refinement(v, w).unwrap();
                    let uw = s.component_refinement(u, w).unwrap();
                    let composed: Vec<usize> = vw.iter().map(|&d| uv[d]).collect();
                    assert_eq!(composed, uw);
                }
            }
        }
    }

    #[test]
    fn min_open_properties() {
        let s =
            FiniteSpace::validate_topology(3, &[0b000, 0b001, 0b011, 0b101, 0b111]).unwrap();
        for u in s.opens() {
            let union = s.points(u).fold(0u32, |acc, x| acc | s.bits(s.min_open(x)));
            assert_eq!(union, s.bits(u));
        }
        for x in 0..s.n_points() {
            assert_eq!(s.n_components(s.min_open(x)), 1);
        }
    }
}
