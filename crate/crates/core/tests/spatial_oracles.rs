mod common;

use common::oracle;
use hapticmap_core::fixtures::{dataset_of, rect_zone, seattle_center_dataset, synthetic_dataset, SEATTLE_CENTER};
use hapticmap_core::ingest::{build_dataset, FixtureSource, RawFeatureSource};
use hapticmap_core::{CanvasPoint, GeoPoint, MapWorld, ZoneCategory};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn filtering_world() -> MapWorld {
    let src = FixtureSource::from_path(std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/filtering_overpass.json"))).unwrap();
    let raw = src.fetch_raw(SEATTLE_CENTER, 400.0).unwrap();
    MapWorld::new(build_dataset(&raw.features, SEATTLE_CENTER, 400.0, "", src.source_kind()))
}

fn worlds() -> Vec<(&'static str, MapWorld)> {
    vec![
        ("seattle", MapWorld::new(seattle_center_dataset())),
        ("filtering", filtering_world()),
        ("synthetic", MapWorld::new(synthetic_dataset(SEATTLE_CENTER, 400.0, 2000, 7))),
    ]
}

fn random_point(rng: &mut ChaCha8Rng, world: &MapWorld) -> CanvasPoint {
    let p = world.projection();
    CanvasPoint::new(rng.gen_range(0.0..p.width_px as f64), rng.gen_range(0.0..p.height_px as f64))
}

#[test]
fn hit_test_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, world) in worlds() {
        let mut hits = 0;
        for _ in 0..10_000 {
            let p = random_point(&mut rng, &world);
            let got = world.hit_test(p).map(|z| z.zone_id.clone());
            assert_eq!(got, oracle::hit_test(&world, p), "{name} at {p:?}");
            hits += got.is_some() as usize;
        }
        assert!(hits > 0, "{name}: no random point landed in a zone");
    }
}

#[test]
fn hit_test_off_canvas_is_none() {
    let world = MapWorld::new(seattle_center_dataset());
    for p in [(-0.5, 400.0), (400.0, 800.5), (-100.0, -100.0), (1e9, 0.0)] {
        assert!(world.hit_test(CanvasPoint::new(p.0, p.1)).is_none());
    }
}

#[test]
fn nearest_ten_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (name, world) in worlds() {
        for _ in 0..100 {
            let p = random_point(&mut rng, &world);
            let got: Vec<(String, f64)> = world
                .nearest_zones(p, 10)
                .iter()
                .map(|n| (n.zone.zone_id.clone(), n.distance_m))
                .collect();
            let want = oracle::nearest(&world, p, 10);
            let ids = |v: &[(String, f64)]| v.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
            assert_eq!(ids(&got), ids(&want), "{name} at {p:?}");
            for (g, w) in got.iter().zip(&want) {
                assert!((g.1 - w.1).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn nearest_off_canvas_cursor_still_ranks_everything() {
    let world = MapWorld::new(seattle_center_dataset());
    for p in [CanvasPoint::new(-50.0, 400.0), CanvasPoint::new(900.0, 900.0)] {
        let got: Vec<String> = world.nearest_zones(p, 10).iter().map(|n| n.zone.zone_id.clone()).collect();
        let want: Vec<String> = oracle::nearest(&world, p, 10).into_iter().map(|x| x.0).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn uniform_scale_over_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let world = MapWorld::new(seattle_center_dataset());
    let proj = world.projection();
    let mut checked = 0;
    while checked < 1000 {
        let (a, b) = (random_point(&mut rng, &world), random_point(&mut rng, &world));
        let pixels = a.distance_to(b);
        if pixels < 1.0 {
            continue;
        }
        let meters = oracle::haversine(proj.unproject(a), proj.unproject(b));
        let rel = (pixels * proj.meters_per_pixel - meters).abs() / meters;
        assert!(rel < 0.005, "{a:?} {b:?}: {rel}");
        checked += 1;
    }
}

#[test]
fn constructed_layout_line_is_byte_exact() {
    // A 50×40 m building whose centroid sits 170 m away on a 135° bearing.
    let d = 170.0 / 2f64.sqrt();
    let zones = vec![
        rect_zone("way/1", "MoPOP", ZoneCategory::Building, SEATTLE_CENTER, (d, -d), (50.0, 40.0)),
        rect_zone("way/2", "Space Needle", ZoneCategory::Building, SEATTLE_CENTER, (0.0, 0.0), (30.0, 30.0)),
    ];
    let world = MapWorld::new(dataset_of(SEATTLE_CENTER, 400.0, zones));
    let layout = hapticmap_core::context::describe_position(&world, world.projection().center_px()).unwrap();
    assert_eq!(layout.current_zone_line, "Current zone: Space Needle (building)");
    assert_eq!(layout.neighbor_lines, ["- MoPOP (building) is to your SE about 170 m away"]);
}

#[test]
fn seattle_layout_from_the_needle() {
    let world = MapWorld::new(seattle_center_dataset());
    let layout = hapticmap_core::context::describe_position(&world, world.projection().center_px()).unwrap();
    assert_eq!(layout.current_zone_line, "Current zone: Space Needle (building)");
    assert_eq!(layout.neighbor_lines.len(), 10);
    assert!(
        layout
            .neighbor_lines
            .iter()
            .any(|l| l == "- Museum of Pop Culture (building) is to your SE about 170 m away"),
        "{:#?}",
        layout.neighbor_lines
    );
    // Lines are ordered by distance.
    let d: Vec<u32> = layout
        .neighbor_lines
        .iter()
        .map(|l| l.rsplit(" about ").next().unwrap().trim_end_matches(" m away").parse().unwrap_or(0))
        .collect();
    assert!(d.windows(2).all(|w| w[0] <= w[1]), "{d:?}");
}

proptest! {
    #[test]
    fn projection_round_trips(lat in -60.0f64..60.0, lon in -179.0f64..179.0, dx in -400.0f64..400.0, dy in -400.0f64..400.0) {
        let proj = hapticmap_core::CanvasProjection::new(GeoPoint::new(lat, lon));
        let p = CanvasPoint::new(400.0 + dx, 400.0 + dy);
        let back = proj.project(proj.unproject(p));
        prop_assert!((back.x - p.x).abs() < 1e-6 && (back.y - p.y).abs() < 1e-6);
    }

    #[test]
    fn north_is_up_and_east_is_right(lat in -60.0f64..60.0, lon in -179.0f64..179.0, step in 1e-5f64..1e-3) {
        let c = GeoPoint::new(lat, lon);
        let proj = hapticmap_core::CanvasProjection::new(c);
        let n = proj.project(GeoPoint::new(lat + step, lon));
        let e = proj.project(GeoPoint::new(lat, lon + step));
        prop_assert!(n.y < 400.0 && (n.x - 400.0).abs() < 1e-9);
        prop_assert!(e.x > 400.0 && (e.y - 400.0).abs() < 1e-9);
    }

    #[test]
    fn sector_matches_oracle(lat in -60.0f64..60.0, lon in -179.0f64..179.0, e in -400.0f64..400.0, n in -400.0f64..400.0) {
        prop_assume!(e.abs() + n.abs() > 1.0);
        let plane = hapticmap_core::geo::LocalPlane::new(GeoPoint::new(lat, lon));
        let to = plane.to_geo(e, n);
        let b = hapticmap_core::geo::compass_bearing(plane.origin(), to).unwrap();
        let deg = b.degrees;
        // Skip the hair-thin bands where the two formulas may round apart.
        prop_assume!(((deg - 22.5).rem_euclid(45.0)).min(45.0 - (deg - 22.5).rem_euclid(45.0)) > 1e-6);
        prop_assert_eq!(b.sector, oracle::sector(plane.origin(), to));
    }

    #[test]
    fn haversine_agrees(lat in -60.0f64..60.0, lon in -179.0f64..179.0, e in -2000.0f64..2000.0, n in -2000.0f64..2000.0) {
        let plane = hapticmap_core::geo::LocalPlane::new(GeoPoint::new(lat, lon));
        let to = plane.to_geo(e, n);
        let d = hapticmap_core::geo::geo_distance_m(plane.origin(), to);
        prop_assert!((d - oracle::haversine(plane.origin(), to)).abs() < 1e-6);
        prop_assert!((d - (e * e + n * n).sqrt()).abs() < 1e-3 * d.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bearings_are_antisymmetric(lat in -60.0f64..60.0, lon in -179.0f64..179.0, e in -700.0f64..700.0, n in -700.0f64..700.0) {
        prop_assume!(e.abs() + n.abs() > 1.0);
        let plane = hapticmap_core::geo::LocalPlane::new(GeoPoint::new(lat, lon));
        let (a, b) = (plane.origin(), plane.to_geo(e, n));
        let ab = hapticmap_core::geo::compass_bearing(a, b).unwrap().degrees;
        let ba = hapticmap_core::geo::compass_bearing(b, a).unwrap().degrees;
        let diff = (ab - ba).rem_euclid(360.0);
        prop_assert!((diff - 180.0).abs() < 0.1, "{ab} {ba}");
    }

    #[test]
    fn interior_geo_points_hit_their_zone(seed in 0u64..1000) {
        // Sample inside a random synthetic zone in geo space, then project.
        let world = MapWorld::new(synthetic_dataset(SEATTLE_CENTER, 300.0, 40, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = &world.zones()[rng.gen_range(0..world.zones().len())];
        let ring = &z.outer_ring;
        // Points between the centroid and a vertex; the oracle confirms containment.
        let v = ring[rng.gen_range(0..ring.len() - 1)];
        let t = rng.gen_range(0.0..0.9);
        let g = GeoPoint::new(z.centroid.lat + t * (v.lat - z.centroid.lat), z.centroid.lon + t * (v.lon - z.centroid.lon));
        let p = world.projection().project(g);
        let rings: Vec<Vec<CanvasPoint>> = vec![ring.iter().map(|v| world.projection().project(*v)).collect()];
        prop_assume!(oracle::point_in_rings(p, &rings));
        let hit = world.hit_test(p).expect("inside some zone");
        // Overlaps may put a smaller zone on top, which must still contain the point.
        prop_assert!(hit.area_m2 <= z.area_m2);
        let hit_rings: Vec<Vec<CanvasPoint>> =
            hit.geo_rings().map(|r| r.iter().map(|v| world.projection().project(*v)).collect()).collect();
        prop_assert!(oracle::point_in_rings(p, &hit_rings));
    }

    #[test]
    fn nearest_is_sorted_and_unique(x in 0.0f64..800.0, y in 0.0f64..800.0, k in 0usize..30) {
        let world = MapWorld::new(synthetic_dataset(SEATTLE_CENTER, 400.0, 200, 3));
        let near = world.nearest_zones(CanvasPoint::new(x, y), k);
        prop_assert_eq!(near.len(), k.min(world.zones().len() - world.hit_test(CanvasPoint::new(x, y)).is_some() as usize));
        prop_assert!(near.windows(2).all(|w| w[0].distance_m <= w[1].distance_m));
        let ids: std::collections::BTreeSet<_> = near.iter().map(|n| &n.zone.zone_id).collect();
        prop_assert_eq!(ids.len(), near.len());
    }
}
