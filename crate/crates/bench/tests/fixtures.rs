use sphere_degree_bench::{pairs, tuples};

#[test]
fn fixtures_are_deterministic_unit_points() {
    let a = tuples(2, 5, 16, 3);
    assert_eq!(a, tuples(2, 5, 16, 3));
    assert_eq!(a.len(), 16);
    for t in &a {
        assert_eq!(t.len(), 5);
        for p in t {
            let r: f64 = p.z.iter().map(|c| c.norm_sqr()).sum();
            assert!((r - 1.0).abs() < 1e-12);
        }
    }
    let p = pairs(3, 8, 1);
    assert_eq!(p.len(), 8);
    assert!(p.iter().all(|(a, b)| a.n() == 3 && b.n() == 3 && a != b));
}
