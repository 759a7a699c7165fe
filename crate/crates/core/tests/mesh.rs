use iim_core::mesh::{build_uniform_mesh, BoundaryTag};
use proptest::prelude::*;

#[test]
fn default_grid_counts() {
    let mesh = build_uniform_mesh(254, 108, 6.8, 2.9).unwrap();
    assert_eq!(mesh.node_count(), 255 * 109);
    assert_eq!(mesh.triangle_count(), 2 * 254 * 108);
    let corners = [mesh.node_index(0, 0), mesh.node_index(254, 0), mesh.node_index(0, 108), mesh.node_index(254, 108)];
    let tags = mesh.boundary_tags();
    assert_eq!(tags[corners[0]], BoundaryTag::Bottom);
    assert_eq!(tags[corners[3]], BoundaryTag::Top);
}

#[test]
fn degenerate_sizes_rejected() {
    assert!(build_uniform_mesh::<f64>(0, 4, 1.0, 1.0).is_err());
    assert!(build_uniform_mesh::<f64>(4, 4, 0.0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triangles_tile_the_rectangle(nx in 1usize..30, ny in 1usize..30, lx in 0.1f64..10.0, ly in 0.1f64..10.0) {
        let mesh = build_uniform_mesh(nx, ny, lx, ly).unwrap();
        let mut total = 0.0;
        for t in 0..mesh.triangle_count() {
            let a = mesh.signed_area(t);
            prop_assert!(a > 0.0);
            total += a;
        }
        prop_assert!((total - lx * ly).abs() <= 1e-12 * lx * ly * mesh.triangle_count() as f64);
    }

    #[test]
    fn located_points_have_barycentric_weights(nx in 1usize..20, ny in 1usize..20, fx in 0.0f64..=1.0, fy in 0.0f64..=1.0) {
        let mesh = build_uniform_mesh(nx, ny, 6.8, 2.9).unwrap();
        let p = [fx * 6.8, fy * 2.9];
        let hit = mesh.locate_point(p).expect("inside points are located");
        let w = hit.weights;
        prop_assert!(w.iter().all(|&v| v >= -1e-12));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let tri = mesh.triangles()[hit.triangle];
        let nodes = mesh.nodes();
        for c in 0..2 {
            let q: f64 = (0..3).map(|k| w[k] * nodes[tri[k]][c]).sum();
            prop_assert!((q - p[c]).abs() <= 1e-9);
        }
    }

    #[test]
    fn outside_points_not_located(dx in 0.001f64..5.0) {
        let mesh = build_uniform_mesh(8, 4, 6.8, 2.9).unwrap();
        prop_assert!(mesh.locate_point([6.8 + dx, 1.0]).is_none());
        prop_assert!(mesh.locate_point([1.0, -dx]).is_none());
    }
}
