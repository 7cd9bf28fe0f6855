//! Dyadic hierarchical-B coding orders over a sequence of planes.
//!
//! Anchor (key) pictures sit every `span` planes and at the final plane.
//! Between two anchors `span = b − a` planes, a dyadic tree over the next
//! power of two `G ≥ span` is built and `G − span` pictures of its lowest
//! level are dropped, alternating from the first and last end. For 31 bands
//! and [`GopKind::Gop30`] this is the 32-picture random-access hierarchy with
//! its first and last lowest-level pictures removed.

use crate::error::{Error, Result};

pub const KEY_QP_OFFSET: i8 = -3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GopKind {
    /// Anchors 30 planes apart.
    Gop30,
    /// Anchors 2 planes apart.
    Gop2,
}

impl GopKind {
    pub fn span(self) -> usize {
        match self {
            GopKind::Gop30 => 30,
            GopKind::Gop2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredMode {
    Key,
    Bi { ref_a: usize, ref_b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GopEntry {
    pub plane: usize,
    pub mode: PredMode,
    pub qp_offset: i8,
    /// Hierarchy depth; 0 for key pictures.
    pub level: u32,
}

impl GopEntry {
    /// Effective QP for a base `qp`, clamped at 0.
    pub fn qp(&self, qp: u8) -> u8 {
        (qp as i32 + self.qp_offset as i32).max(0) as u8
    }
}

/// Entries in coding order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GopSchedule {
    entries: Vec<GopEntry>,
}

impl GopSchedule {
    pub fn entries(&self) -> &[GopEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn coding_order(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.plane).collect()
    }

    /// Checks the permutation, reference-order and QP-offset invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.entries.len();
        let mut coded = vec![false; n];
        for e in &self.entries {
            if e.plane >= n || coded[e.plane] {
                return Err(Error::Validation(format!(
                    "plane {} repeated or out of range",
                    e.plane
                )));
            }
            match e.mode {
                PredMode::Key if e.qp_offset != KEY_QP_OFFSET => {
                    return Err(Error::Validation("key picture without -3 offset".into()));
                }
                PredMode::Bi { ref_a, ref_b } => {
                    if e.qp_offset != 0 {
                        return Err(Error::Validation("B picture with qp offset".into()));
                    }
                    if ref_a >= n || ref_b >= n || !coded[ref_a] || !coded[ref_b] {
                        return Err(Error::Validation(format!(
                            "plane {} references uncoded planes",
                            e.plane
                        )));
                    }
                }
                PredMode::Key => {}
            }
            coded[e.plane] = true;
        }
        Ok(())
    }
}

/// Interior nodes of one anchor interval: (level, position, ref_a, ref_b).
fn segment(a: usize, b: usize) -> Vec<(u32, usize, usize, usize)> {
    let span = b - a;
    if span < 2 {
        return Vec::new();
    }
    let g = span.next_power_of_two();
    let depth = g.trailing_zeros();
    let mut dropped = vec![false; g + 1];
    let (mut lo, mut hi) = (1, g - 1);
    for k in 0..(g - span) {
        if k % 2 == 0 {
            dropped[lo] = true;
            lo += 2;
        } else {
            dropped[hi] = true;
            hi -= 2;
        }
    }
    let mut position = vec![0; g + 1];
    let mut next = a;
    for v in 0..=g {
        if !dropped[v] {
            position[v] = next;
            next += 1;
        }
    }
    debug_assert_eq!(next, b + 1);
    (1..g)
        .filter(|&v| !dropped[v])
        .map(|v| {
            let tz = v.trailing_zeros();
            let half = 1 << tz;
            (
                depth - tz,
                position[v],
                position[v - half],
                position[v + half],
            )
        })
        .collect()
}

pub fn gop_schedule(plane_count: usize, kind: GopKind) -> Result<GopSchedule> {
    if plane_count == 0 {
        return Err(Error::InvalidParameter("GOP over zero planes".into()));
    }
    let last = plane_count - 1;
    let mut anchors: Vec<usize> = (0..last).step_by(kind.span()).collect();
    anchors.push(last);

    let mut entries: Vec<GopEntry> = anchors
        .iter()
        .map(|&p| GopEntry {
            plane: p,
            mode: PredMode::Key,
            qp_offset: KEY_QP_OFFSET,
            level: 0,
        })
        .collect();
    let mut interior: Vec<(u32, usize, usize, usize)> = anchors
        .windows(2)
        .flat_map(|w| segment(w[0], w[1]))
        .collect();
    interior.sort_unstable();
    entries.extend(
        interior
            .into_iter()
            .map(|(level, plane, ref_a, ref_b)| GopEntry {
                plane,
                mode: PredMode::Bi { ref_a, ref_b },
                qp_offset: 0,
                level,
            }),
    );
    Ok(GopSchedule { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bi(e: &GopEntry) -> (usize, usize) {
        match e.mode {
            PredMode::Bi { ref_a, ref_b } => (ref_a, ref_b),
            PredMode::Key => panic!("key"),
        }
    }

    #[test]
    fn gop30_over_31_bands() {
        let s = gop_schedule(31, GopKind::Gop30).unwrap();
        s.validate().unwrap();
        let e = s.entries();
        assert_eq!((e[0].plane, e[0].mode), (0, PredMode::Key));
        assert_eq!((e[1].plane, e[1].mode), (30, PredMode::Key));
        assert_eq!((e[2].plane, bi(&e[2])), (15, (0, 30)));
        assert_eq!((e[3].plane, bi(&e[3])), (7, (0, 15)));
        assert_eq!((e[4].plane, bi(&e[4])), (23, (15, 30)));
        let keys: Vec<usize> = e
            .iter()
            .filter(|x| x.mode == PredMode::Key)
            .map(|x| x.plane)
            .collect();
        assert_eq!(keys, vec![0, 30]);
        // virtual positions 4, 12, 20, 28 follow
        let level3: Vec<usize> = e[5..9].iter().map(|x| x.plane).collect();
        assert_eq!(level3, vec![3, 11, 19, 27]);
        assert_eq!(e.iter().map(|x| x.level).max(), Some(5));
    }

    #[test]
    fn gop2_over_three_channels() {
        let s = gop_schedule(3, GopKind::Gop2).unwrap();
        assert_eq!(s.coding_order(), vec![0, 2, 1]);
        assert_eq!(bi(&s.entries()[2]), (0, 2));
        assert_eq!(s.entries()[1].qp_offset, -3);
    }

    #[test]
    fn tiny_sequences() {
        let one = gop_schedule(1, GopKind::Gop30).unwrap();
        assert_eq!(one.entries().len(), 1);
        assert_eq!(one.entries()[0].mode, PredMode::Key);
        assert_eq!(
            gop_schedule(2, GopKind::Gop30).unwrap().coding_order(),
            vec![0, 1]
        );
        assert!(gop_schedule(0, GopKind::Gop2).is_err());
    }

    #[test]
    fn key_qp_clamps() {
        let s = gop_schedule(3, GopKind::Gop2).unwrap();
        assert_eq!(s.entries()[0].qp(2), 0);
        assert_eq!(s.entries()[0].qp(25), 22);
        assert_eq!(s.entries()[2].qp(25), 25);
    }

    proptest! {
        #[test]
        fn invariants_hold(p in 1usize..=64, gop30 in any::<bool>()) {
            let kind = if gop30 { GopKind::Gop30 } else { GopKind::Gop2 };
            let s = gop_schedule(p, kind).unwrap();
            prop_assert_eq!(s.len(), p);
            prop_assert!(s.validate().is_ok());
            // bi refs bracket the plane
            for e in s.entries() {
                if let PredMode::Bi { ref_a, ref_b } = e.mode {
                    prop_assert!(ref_a < e.plane && e.plane < ref_b);
                }
            }
        }
    }
}
