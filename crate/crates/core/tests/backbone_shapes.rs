//! Forward-shape checks for each backbone against its published layer table,
//! plus the determinism contract of seeded initialization.

use fundusnet::backbone::{Backbone, BackboneSpec};
use ndarray::Array4;

fn gray_images(batch: usize) -> Array4<f64> {
    Array4::from_elem((batch, 256, 256, 3), 0.5)
}

#[test]
fn densenet121_emits_8x8x1024() {
    let spec = BackboneSpec::named("densenet121").unwrap();
    let backbone = Backbone::build(&spec, 42).unwrap();
    let f_enc = backbone.forward_eval(&gray_images(2));
    assert_eq!(f_enc.dim(), (2, 8, 8, 1024));
}

#[test]
fn resnet50_emits_8x8x2048() {
    let spec = BackboneSpec::named("resnet50").unwrap();
    let backbone = Backbone::build(&spec, 42).unwrap();
    let f_enc = backbone.forward_eval(&gray_images(1));
    assert_eq!(f_enc.dim(), (1, 8, 8, 2048));
}

#[test]
fn mobilenetv2_emits_8x8x1280() {
    let spec = BackboneSpec::named("mobilenetv2").unwrap();
    let backbone = Backbone::build(&spec, 42).unwrap();
    let f_enc = backbone.forward_eval(&gray_images(1));
    assert_eq!(f_enc.dim(), (1, 8, 8, 1280));
}

#[test]
fn inceptionv3_emits_6x6x2048() {
    let spec = BackboneSpec::named("inceptionv3").unwrap();
    let backbone = Backbone::build(&spec, 42).unwrap();
    let f_enc = backbone.forward_eval(&gray_images(1));
    assert_eq!(f_enc.dim(), (1, 6, 6, 2048));
}

#[test]
fn same_seed_builds_identical_backbones() {
    let mut spec = BackboneSpec::named("stub").unwrap();
    spec.output_channels = 8;
    let mut a = Backbone::build(&spec, 7).unwrap();
    let mut b = Backbone::build(&spec, 7).unwrap();
    let mut values_a = Vec::new();
    a.visit_params("backbone", &mut |_, p| values_a.push(p.data.clone()));
    let mut i = 0;
    b.visit_params("backbone", &mut |_, p| {
        assert_eq!(p.data, values_a[i]);
        i += 1;
    });
    assert!(i > 0);

    let mut c = Backbone::build(&spec, 8).unwrap();
    let mut any_differs = false;
    let mut j = 0;
    c.visit_params("backbone", &mut |_, p| {
        if p.data != values_a[j] {
            any_differs = true;
        }
        j += 1;
    });
    assert!(any_differs);
}
