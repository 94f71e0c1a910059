use approx::assert_abs_diff_eq;
use ncstokes::element::{
    bubble_basis, element_def, face_constraint_nullity, face_moments, reduced_bubble, ElementKind,
};
use ncstokes::mesh::TetGeometry;
use ncstokes::polyquad::{BaryPoly, Simplex};
use proptest::prelude::*;

fn tet_strategy() -> impl Strategy<Value = TetGeometry> {
    prop::array::uniform4(prop::array::uniform3(-1.0f64..1.0))
        .prop_filter_map("degenerate tetrahedron", |v| {
            TetGeometry::from_vertices(v, 0).ok().filter(|g| g.volume > 1e-2)
        })
}

fn kind_strategy() -> impl Strategy<Value = ElementKind> {
    prop::sample::select(ElementKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bubble_dimensions_are_affine_invariant(geom in tet_strategy()) {
        prop_assert_eq!(face_constraint_nullity(&geom, 2, 3).unwrap(), 8);
        prop_assert_eq!(face_constraint_nullity(&geom, 3, 4).unwrap(), 11);
        prop_assert_eq!(face_constraint_nullity(&geom, 2, 2).unwrap(), 1);
        prop_assert_eq!(face_constraint_nullity(&geom, 3, 3).unwrap(), 1);
    }

    #[test]
    fn physical_gradients_match_finite_differences(
        geom in tet_strategy(),
        kind in kind_strategy(),
        raw in prop::array::uniform4(0.05f64..1.0),
    ) {
        let s: f64 = raw.iter().sum();
        let bary = raw.map(|x| x / s);
        let def = element_def(kind).unwrap();
        let grads = def.grad_nodal(&geom, &bary);
        let x = geom.point(&bary);
        let h = 1e-6;
        for d in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += h;
            xm[d] -= h;
            let vp = def.eval_nodal(&geom.barycentric(xp));
            let vm = def.eval_nodal(&geom.barycentric(xm));
            for j in 0..def.dim() {
                let fd = (vp[j] - vm[j]) / (2.0 * h);
                prop_assert!((fd - grads[j][d]).abs() < 1e-5 * (1.0 + grads[j][d].abs()), "{kind} {j} {d}");
            }
        }
    }

    #[test]
    fn interpolation_reproduces_shape_functions(
        kind in kind_strategy(),
        coeffs in prop::collection::vec(-2.0f64..2.0, 35),
    ) {
        let def = element_def(kind).unwrap();
        let p = def
            .shape
            .iter()
            .zip(&coeffs)
            .fold(BaryPoly::zero(Simplex::Tet, kind.shape_degree()), |acc, (s, c)| acc + s.scale(*c));
        let dofs = def.interpolate_fn(&|b| p.eval(b), 2 * kind.shape_degree()).unwrap();
        for b in [[0.25; 4], [0.1, 0.2, 0.3, 0.4], [0.7, 0.1, 0.1, 0.1]] {
            let v: f64 = def.eval_nodal(&b).iter().zip(&dofs).map(|(a, c)| a * c).sum();
            prop_assert!((v - p.eval(&b)).abs() < 1e-9);
        }
    }
}

#[test]
fn bubbles_have_vanishing_face_moments() {
    for k in [2, 3] {
        let basis = bubble_basis(k).unwrap();
        assert_eq!(basis.len(), if k == 2 { 8 } else { 11 });
        for b in &basis {
            for m in face_moments(b, k).unwrap() {
                assert_abs_diff_eq!(m, 0.0, epsilon = 1e-12);
            }
        }
        for m in face_moments(&reduced_bubble(k).unwrap(), k).unwrap() {
            assert_abs_diff_eq!(m, 0.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn nodal_basis_is_dual_to_the_functionals() {
    for kind in ElementKind::ALL {
        let def = element_def(kind).unwrap();
        assert_eq!(def.dim(), kind.local_dim());
        assert!(def.condition < 1e6);
        for (i, dof) in def.dofs.iter().enumerate() {
            for (j, phi) in def.nodal.iter().enumerate() {
                let v = dof.apply_poly(phi).unwrap();
                assert_abs_diff_eq!(v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-9);
            }
        }
    }
}
