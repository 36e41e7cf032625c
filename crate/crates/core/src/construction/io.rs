use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::schedule::RadiiSchedule;
use super::tree::{BuildError, ConstructionTree};
use crate::geometry::ComplexPoint;

/// On-disk form of a tree:
///
/// ```json
/// { "schedule": [128, 128], "depth": 2,
///   "nodes": [[0, 0, [0.0, 0.0]], [1, 0, [x, y]], ...] }
/// ```
///
/// `schedule` holds the successive integer ratios `r_{j−1}/r_j`; each node
/// is `[level, index, [re, im]]` of its core-disc centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    pub schedule: Vec<u64>,
    pub depth: usize,
    pub nodes: Vec<(usize, usize, [f64; 2])>,
}

#[derive(Debug, Error)]
pub enum TreeFileError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("node ({level}, {index}) is out of range or duplicated")]
    BadNode { level: usize, index: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl TreeFile {
    pub fn from_tree(tree: &ConstructionTree) -> Self {
        let mut nodes = Vec::new();
        for n in 0..=tree.depth() {
            nodes.extend(tree.centers(n).iter().enumerate().map(|(j, z)| (n, j, [z.re, z.im])));
        }
        Self {
            schedule: tree.schedule().ratios().to_vec(),
            depth: tree.depth(),
            nodes,
        }
    }

    pub fn into_tree(self) -> Result<ConstructionTree, TreeFileError> {
        let schedule = RadiiSchedule::from_ratios(&self.schedule).map_err(BuildError::from)?;
        schedule.check_depth(self.depth).map_err(BuildError::from)?;
        let mut centers: Vec<Vec<Option<ComplexPoint>>> =
            (0..=self.depth).map(|n| vec![None; schedule.count(n) as usize]).collect();
        for (level, index, [re, im]) in self.nodes {
            let slot = centers
                .get_mut(level)
                .and_then(|l| l.get_mut(index))
                .filter(|s| s.is_none())
                .ok_or(TreeFileError::BadNode { level, index })?;
            *slot = Some(ComplexPoint::new(re, im));
        }
        let mut full = Vec::with_capacity(centers.len());
        for (level, l) in centers.into_iter().enumerate() {
            let got = l.iter().filter(|z| z.is_some()).count();
            let expected = l.len() as u64;
            let l: Option<Vec<_>> = l.into_iter().collect();
            full.push(l.ok_or(BuildError::WrongCount { level, got, expected })?);
        }
        Ok(ConstructionTree::from_centers(schedule, self.depth, full)?)
    }

    pub fn to_json(&self) -> Result<String, TreeFileError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, TreeFileError> {
        Ok(serde_json::from_str(s)?)
    }
}

/// SVG picture of one node's interior: its enlarged disc, its core disc
/// (dashed), the child squares and the child core discs.
pub fn render_node_svg(tree: &ConstructionTree, level: usize, index: usize) -> String {
    let node = tree.node(level, index);
    let c = node.center();
    let big = node.enlarged_disc().radius;
    // Viewport in units of the enlarged radius, y pointing up.
    let size = 800.0;
    let scale = size / (2.2 * big);
    let px = |z: ComplexPoint| (size / 2.0 + (z.re - c.re) * scale, size / 2.0 - (z.im - c.im) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (cx, cy) = px(c);
    let _ = writeln!(
        s,
        r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        big * scale
    );
    let _ = writeln!(
        s,
        r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" fill="none" stroke="black" stroke-dasharray="6 4"/>"#,
        node.core_disc().radius * scale
    );
    for child in node.children() {
        if let Some(sq) = child.square() {
            let [ll, _, ur, _] = sq.vertices();
            let (x0, y1) = px(ll);
            let (x1, y0) = px(ur);
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="steelblue" stroke-width="0.6"/>"#,
                x1 - x0,
                y1 - y0
            );
        }
        let (x, y) = px(child.center());
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="{:.3}" fill="gray" stroke="none"/>"#,
            (child.core_disc().radius * scale).max(0.5)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::build_hierarchy;

    #[test]
    fn json_roundtrip() {
        let t = build_hierarchy(&RadiiSchedule::from_ratios(&[128, 128]).unwrap(), 1).unwrap();
        let f = TreeFile::from_tree(&t);
        assert_eq!(f.nodes.len(), 129);
        let back = TreeFile::from_json(&f.to_json().unwrap()).unwrap().into_tree().unwrap();
        assert_eq!(back.centers(1), t.centers(1));
        assert_eq!(back.schedule(), t.schedule());

        let mut dup = f.clone();
        dup.nodes[2].1 = 0;
        assert!(matches!(dup.into_tree(), Err(TreeFileError::BadNode { level: 1, index: 0 })));
        let mut short = f;
        short.nodes.pop();
        assert!(matches!(short.into_tree(), Err(TreeFileError::Build(BuildError::WrongCount { .. }))));
    }

    #[test]
    fn svg_has_every_child() {
        let t = build_hierarchy(&RadiiSchedule::from_ratios(&[128, 128]).unwrap(), 1).unwrap();
        let svg = render_node_svg(&t, 0, 0);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<rect x=").count(), 128);
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
    }
}
