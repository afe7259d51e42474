//! Canonical example rules used throughout the tests, docs, and CLI examples.
//!
//! Every fixture is built as a [`RuleDoc`] and run through [`validate_rule`],
//! so constructing a fixture also exercises the validation path.

use crate::subdivision::{
    validate_rule, CorrespondenceDoc, EndDoc, FaceDoc, PolygonDoc, RuleDoc, SphereDoc, SphereFaceDoc,
    SubdivisionRule, TemplateDoc,
};
use std::collections::BTreeMap;

fn b(p: usize) -> EndDoc {
    EndDoc::B(p)
}

fn iv(id: u64) -> EndDoc {
    EndDoc::I(id)
}

fn face(cycle: Vec<EndDoc>, type_name: &str) -> FaceDoc {
    FaceDoc {
        cycle,
        type_name: type_name.to_string(),
        correspondence: CorrespondenceDoc::default(),
        alternatives: Vec::new(),
    }
}

fn polygon(name: &str, sides: usize) -> PolygonDoc {
    PolygonDoc { name: name.to_string(), sides }
}

/// Triangle split by a center vertex into three triangles. Iterating it on the
/// sphere double produces the familiar nested tangent-circle gasket.
pub fn apollonian_doc() -> RuleDoc {
    let template = TemplateDoc {
        interior_vertices: vec![0],
        edges: vec![(b(0), iv(0)), (b(1), iv(0)), (b(2), iv(0))],
        faces: vec![
            face(vec![b(0), b(1), iv(0)], "T"),
            face(vec![b(1), b(2), iv(0)], "T"),
            face(vec![b(2), b(0), iv(0)], "T"),
        ],
    };
    RuleDoc {
        polygons: vec![polygon("T", 3)],
        subdivisions: BTreeMap::from([("T".to_string(), template)]),
        sphere: Some(SphereDoc {
            faces: vec![
                SphereFaceDoc { cycle: vec![0, 1, 2], type_name: "T".into() },
                SphereFaceDoc { cycle: vec![2, 1, 0], type_name: "T".into() },
            ],
            external: 1,
        }),
    }
}

pub fn apollonian() -> SubdivisionRule {
    validate_rule(&apollonian_doc()).expect("apollonian fixture is valid")
}

/// Square subdivided into a rotated inner square and eight triangles; the
/// triangles subdivide like the apollonian rule.
pub fn inner_square_doc() -> RuleDoc {
    let mut edges = Vec::new();
    let mut faces = Vec::new();
    for i in 0..4u64 {
        let j = (i + 1) % 4;
        edges.push((iv(i), b(i as usize)));
        edges.push((iv(i), b(j as usize)));
        edges.push((iv(i), iv(j)));
        faces.push(face(vec![b(i as usize), b(j as usize), iv(i)], "T"));
        faces.push(face(vec![iv(i), b(j as usize), iv(j)], "T"));
    }
    faces.push(face(vec![iv(0), iv(1), iv(2), iv(3)], "Q"));
    let square_template = TemplateDoc { interior_vertices: vec![0, 1, 2, 3], edges, faces };
    let triangle_template = apollonian_doc().subdivisions.remove("T").unwrap();
    RuleDoc {
        polygons: vec![polygon("Q", 4), polygon("T", 3)],
        subdivisions: BTreeMap::from([
            ("Q".to_string(), square_template),
            ("T".to_string(), triangle_template),
        ]),
        sphere: Some(SphereDoc {
            faces: vec![
                SphereFaceDoc { cycle: vec![0, 1, 2, 3], type_name: "Q".into() },
                SphereFaceDoc { cycle: vec![3, 2, 1, 0], type_name: "Q".into() },
            ],
            external: 1,
        }),
    }
}

pub fn inner_square() -> SubdivisionRule {
    validate_rule(&inner_square_doc()).expect("inner-square fixture is valid")
}

/// Asymmetric variant of the inner-square rule: three sides carry two
/// triangles each, the fourth side carries a single quadrilateral flap. The
/// broken symmetry leaves the quadrilateral moduli free to drift with depth,
/// so finite packings of this rule stabilize at a measurable exponential
/// rate instead of being exactly constant.
pub fn skew_square_doc() -> RuleDoc {
    let mut edges = Vec::new();
    let mut faces = Vec::new();
    for i in 0..4u64 {
        let j = (i + 1) % 4;
        edges.push((iv(i), iv(j)));
        if i < 3 {
            edges.push((iv(i), b(i as usize)));
            edges.push((iv(i), b(j as usize)));
            faces.push(face(vec![b(i as usize), b(j as usize), iv(i)], "T"));
            if i < 2 {
                faces.push(face(vec![iv(i), b(j as usize), iv(j)], "T"));
            }
        }
    }
    edges.push((iv(3), b(3)));
    // side 2→3 keeps its second triangle, side 3→0 becomes a quadrilateral
    faces.push(face(vec![iv(2), b(3), iv(3)], "T"));
    faces.push(face(vec![b(3), b(0), iv(0), iv(3)], "Q"));
    faces.push(face(vec![iv(0), iv(1), iv(2), iv(3)], "Q"));
    let square_template = TemplateDoc { interior_vertices: vec![0, 1, 2, 3], edges, faces };
    RuleDoc {
        polygons: vec![polygon("Q", 4), polygon("T", 3)],
        subdivisions: BTreeMap::from([
            ("Q".to_string(), square_template),
            ("T".to_string(), apollonian_doc().subdivisions.remove("T").unwrap()),
        ]),
        sphere: None,
    }
}

pub fn skew_square() -> SubdivisionRule {
    validate_rule(&skew_square_doc()).expect("skew-square fixture is valid")
}

/// Square split by an interior path from side 1 to side 3 into two squares.
/// The pair of split vertices is carried into a child square forever, so the
/// rule is cylindrical.
pub fn pillow_doc() -> RuleDoc {
    let template = TemplateDoc {
        interior_vertices: vec![0],
        edges: vec![(b(1), iv(0)), (iv(0), b(3))],
        faces: vec![
            face(vec![b(0), b(1), iv(0), b(3)], "Q"),
            face(vec![b(1), b(2), b(3), iv(0)], "Q"),
        ],
    };
    RuleDoc {
        polygons: vec![polygon("Q", 4)],
        subdivisions: BTreeMap::from([("Q".to_string(), template)]),
        sphere: None,
    }
}

pub fn pillow() -> SubdivisionRule {
    validate_rule(&pillow_doc()).expect("pillow fixture is valid")
}

/// Pillow rule with the second child glued by a reflection; exercises the
/// orientation bookkeeping of correspondences.
pub fn pillow_reflected() -> SubdivisionRule {
    let mut doc = pillow_doc();
    let template = doc.subdivisions.get_mut("Q").unwrap();
    template.faces[1].correspondence = CorrespondenceDoc { rotation: 0, reflect: true };
    validate_rule(&doc).expect("reflected pillow fixture is valid")
}

/// Square coned to a hub of four triangles.
pub fn cone_square_doc() -> RuleDoc {
    let template = TemplateDoc {
        interior_vertices: vec![0],
        edges: (0..4).map(|i| (b(i), iv(0))).collect(),
        faces: (0..4).map(|i| face(vec![b(i), b((i + 1) % 4), iv(0)], "T")).collect(),
    };
    RuleDoc {
        polygons: vec![polygon("Q", 4), polygon("T", 3)],
        subdivisions: BTreeMap::from([
            ("Q".to_string(), template),
            ("T".to_string(), apollonian_doc().subdivisions.remove("T").unwrap()),
        ]),
        sphere: None,
    }
}

pub fn cone_square() -> SubdivisionRule {
    validate_rule(&cone_square_doc()).expect("cone-square fixture is valid")
}

/// Square cut by the diagonal chord (0,2) into two triangles; the chord makes
/// the rule reducible.
pub fn square_diagonal() -> SubdivisionRule {
    let template = TemplateDoc {
        interior_vertices: vec![],
        edges: vec![(b(0), b(2))],
        faces: vec![face(vec![b(0), b(1), b(2)], "T"), face(vec![b(0), b(2), b(3)], "T")],
    };
    let doc = RuleDoc {
        polygons: vec![polygon("Q", 4), polygon("T", 3)],
        subdivisions: BTreeMap::from([
            ("Q".to_string(), template),
            ("T".to_string(), apollonian_doc().subdivisions.remove("T").unwrap()),
        ]),
        sphere: None,
    };
    validate_rule(&doc).expect("diagonal fixture is valid")
}

/// Triangle template containing a doubled edge between the boundary vertex 0
/// and the interior hub; its level-1 graph is not simple.
pub fn multi_edge() -> SubdivisionRule {
    let template = TemplateDoc {
        interior_vertices: vec![0, 1],
        edges: vec![
            (b(0), iv(0)),
            (b(0), iv(0)),
            (b(1), iv(0)),
            (b(2), iv(0)),
            (iv(0), iv(1)),
            (iv(1), b(0)),
        ],
        faces: vec![
            face(vec![b(0), b(1), iv(0)], "T"),
            face(vec![b(1), b(2), iv(0)], "T"),
            face(vec![b(2), b(0), iv(0)], "T"),
            face(vec![b(0), iv(0), iv(1)], "T"),
            face(vec![iv(0), b(0), iv(1)], "T"),
        ],
    };
    let doc = RuleDoc {
        polygons: vec![polygon("T", 3)],
        subdivisions: BTreeMap::from([("T".to_string(), template)]),
        sphere: None,
    };
    validate_rule(&doc).expect("multi-edge fixture is valid")
}

/// Square rule with one pinched (non-Jordan) template face: a hexagonal cell
/// whose boundary passes twice through the interior vertex carrying a pendant
/// edge. The hexagon splits along an interior path into two coned pentagons,
/// which keeps every level simple. Input fixture for the Jordan-face
/// refinement.
pub fn pinched_doc() -> RuleDoc {
    // interior vertices of the square template: 0 = pinch vertex, 1 = pendant tip
    let square = TemplateDoc {
        interior_vertices: vec![0, 1],
        edges: vec![(b(1), iv(0)), (iv(0), b(3)), (iv(0), iv(1))],
        faces: vec![
            face(vec![b(0), b(1), iv(0), iv(1), iv(0), b(3)], "H"),
            face(vec![b(1), b(2), b(3), iv(0)], "Q"),
        ],
    };
    let hexagon = TemplateDoc {
        interior_vertices: vec![0],
        edges: vec![(b(0), iv(0)), (iv(0), b(3))],
        faces: vec![
            face(vec![b(0), b(1), b(2), b(3), iv(0)], "P"),
            face(vec![b(3), b(4), b(5), b(0), iv(0)], "P"),
        ],
    };
    let pentagon = TemplateDoc {
        interior_vertices: vec![0],
        edges: (0..5).map(|i| (b(i), iv(0))).collect(),
        faces: (0..5).map(|i| face(vec![b(i), b((i + 1) % 5), iv(0)], "T")).collect(),
    };
    RuleDoc {
        polygons: vec![polygon("Q", 4), polygon("H", 6), polygon("P", 5), polygon("T", 3)],
        subdivisions: BTreeMap::from([
            ("Q".to_string(), square),
            ("H".to_string(), hexagon),
            ("P".to_string(), pentagon),
            ("T".to_string(), apollonian_doc().subdivisions.remove("T").unwrap()),
        ]),
        sphere: None,
    }
}

pub fn pinched() -> SubdivisionRule {
    validate_rule(&pinched_doc()).expect("pinched fixture is valid")
}

/// All rule documents by name, for writing example files.
pub fn all_docs() -> Vec<(&'static str, RuleDoc)> {
    vec![
        ("apollonian", apollonian_doc()),
        ("inner_square", inner_square_doc()),
        ("pillow", pillow_doc()),
        ("cone_square", cone_square_doc()),
        ("pinched", pinched_doc()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixture_docs_validate() {
        for (name, doc) in all_docs() {
            validate_rule(&doc).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        multi_edge();
        square_diagonal();
        pillow_reflected();
    }

    #[test]
    fn multi_edge_level1_is_not_simple() {
        let rule = multi_edge();
        let c = crate::subdivision::iterate(&rule, "T", 1, &Default::default()).unwrap();
        assert!(!c.is_simple());
    }

    #[test]
    fn pinched_template_has_non_jordan_face() {
        let rule = pinched();
        let c = rule.template_complex(0);
        let non_jordan: Vec<usize> =
            (0..c.face_count()).filter(|&f| !c.face_is_jordan(f)).collect();
        assert_eq!(non_jordan.len(), 1);
    }
}
