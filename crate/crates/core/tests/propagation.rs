use egofields::geometry::{SparsePoint, TrackObservation};
use egofields::metrics::jaccard;
use egofields::propagation::*;
use egofields::synthetic::presets;
use nalgebra::Point3;

#[test]
fn hidden_points_do_not_pull_the_plane() {
    // Wall points behind the object project into its mask but are not
    // observed in the reference frame.
    let scene = presets::vos_static(20, 3);
    let recon = scene.reconstruction(0.05, 4).unwrap();
    let frame = &recon.frames[0];
    let mask = scene.render(0).unwrap().masks.remove(0);
    let lifted = lift_mask(
        &mask,
        frame,
        &recon.cameras[&1],
        &recon.points,
        &PropagationConfig::default(),
    )
    .unwrap();
    let LiftSurface::Plane { normal, offset } = lifted.surface else {
        panic!("{:?}", lifted.surface)
    };
    assert!(normal.z.abs() > 1.0 - 1e-9);
    assert!((offset.abs() - 2.5).abs() < 1e-9, "plane at {offset}");
    assert!(lifted.anchor_points.iter().all(|p| (p.z - 2.5).abs() < 1e-9));
}

#[test]
fn untracked_points_count_by_projection() {
    let scene = presets::vos_static(2, 3);
    let recon = scene.reconstruction(0.05, 4).unwrap();
    let mask = scene.render(0).unwrap().masks.remove(0);
    let mut p = SparsePoint::new(1, Point3::new(0.0, 0.0, 2.5));
    let cfg = PropagationConfig::default();
    let lifted = lift_mask(&mask, &recon.frames[0], &recon.cameras[&1], &[p.clone()], &cfg).unwrap();
    assert_eq!(lifted.surface, LiftSurface::ConstantDepth { depth: 2.5 });

    p.track = vec![TrackObservation {
        frame: recon.frames[1].name.clone(),
        pixel: Default::default(),
    }];
    assert!(matches!(
        lift_mask(&mask, &recon.frames[0], &recon.cameras[&1], &[p], &cfg),
        Err(PropagationError::LiftFailed { .. })
    ));
}

#[test]
fn fixed_3d_beats_fixed_2d_under_translation() {
    let scene = presets::vos_static(12, 4);
    let recon = scene.reconstruction(0.05, 4).unwrap();
    let gts: Vec<BinaryMask> = (0..scene.len())
        .map(|i| scene.render(i).unwrap().masks.remove(0))
        .collect();
    let out = propagate_fixed_3d(&gts[0], &scene.frame_name(0), &recon, &PropagationConfig::default()).unwrap();
    assert_eq!(out.len(), scene.len());
    for (i, p) in out.iter().enumerate().skip(1) {
        assert!(p.visible);
        let j3 = jaccard(&p.mask, &gts[i]).unwrap();
        let j2 = jaccard(&gts[0], &gts[i]).unwrap();
        assert!(j3 > j2, "frame {i}: {j3} vs {j2}");
    }
}

#[test]
fn leaving_object_is_flagged_invisible() {
    let scene = presets::vos_leaving(30, 8);
    let recon = scene.reconstruction(0.05, 4).unwrap();
    let reference = scene.render(0).unwrap().masks.remove(0);
    let out = propagate_fixed_3d(&reference, &scene.frame_name(0), &recon, &PropagationConfig::default()).unwrap();
    for (i, p) in out.iter().enumerate() {
        let gt = &scene.render(i).unwrap().masks[0];
        if gt.is_empty() {
            assert!(!p.visible, "frame {i}");
        }
    }
    assert!(out[0].visible);
}

#[test]
fn unknown_reference_frame() {
    let scene = presets::vos_static(2, 1);
    let recon = scene.reconstruction(0.1, 8).unwrap();
    let m = BinaryMask::empty(456, 256, 1);
    assert!(matches!(
        propagate_fixed_3d(&m, "nope.png", &recon, &PropagationConfig::default()),
        Err(PropagationError::UnknownFrame(_))
    ));
}
