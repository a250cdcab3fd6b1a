use std::collections::HashSet;

use magneto_perceptron::pattern::{build_dataset, Bitmaps, ClassLabel, Role};

/// Builds the expected set from the bitmap strings by direct character
/// flipping, without going through the library's bit arrays.
fn oracle() -> Vec<(String, String, Role)> {
    let ideals = [("z", "110010011"), ("v", "101101010"), ("n", "010101101")];
    let mut out = Vec::new();
    for (class, bits) in ideals {
        out.push((format!("{class}0"), bits.to_string(), Role::Train));
        for k in 1..=8 {
            let flipped: String = bits
                .char_indices()
                .map(|(i, c)| {
                    if i == k {
                        if c == '0' {
                            '1'
                        } else {
                            '0'
                        }
                    } else {
                        c
                    }
                })
                .collect();
            let role = if k == 1 { Role::Test } else { Role::Train };
            out.push((format!("{class}{k}"), flipped, role));
        }
    }
    out
}

fn bits(inputs: &[u8; 9]) -> String {
    inputs.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}

#[test]
fn default_dataset_matches_oracle() {
    let ds = build_dataset(&Bitmaps::default());
    assert_eq!(ds.training.len(), 24);
    assert_eq!(ds.testing.len(), 3);
    assert_eq!(ds.desired_class_above_threshold, ClassLabel::V);
    let got: Vec<(String, String, Role)> = ds.bar_order().iter().map(|p| (p.id(), bits(&p.inputs), p.role)).collect();
    let mut want = oracle();
    // bar order: per class, training variants then the held-out variant 1
    for block in want.chunks_mut(9) {
        let test = block[1].clone();
        block[1..].rotate_left(1);
        block[8] = test;
    }
    assert_eq!(got, want);
    let distinct: HashSet<String> = got.iter().map(|g| g.1.clone()).collect();
    assert_eq!(distinct.len(), 27);
}

#[test]
fn training_order_is_class_blocked() {
    let ds = build_dataset(&Bitmaps::default());
    let ids: Vec<String> = ds.training.iter().map(|p| p.id()).collect();
    let want: Vec<String> =
        ["z", "v", "n"].iter().flat_map(|c| [0, 2, 3, 4, 5, 6, 7, 8].map(|k| format!("{c}{k}"))).collect();
    assert_eq!(ids, want);
}

#[test]
fn csv_export_has_27_rows() {
    let mut out = Vec::new();
    build_dataset(&Bitmaps::default()).write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "pattern_id,class,variant,role,x1,x2,x3,x4,x5,x6,x7,x8,x9");
    assert_eq!(lines.clone().count(), 27);
    assert_eq!(lines.next().unwrap(), "z0,z,0,train,1,1,0,0,1,0,0,1,1");
    assert_eq!(text.lines().nth(2).unwrap(), "z1,z,1,test,1,0,0,0,1,0,0,1,1");
}
