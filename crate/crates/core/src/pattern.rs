//! The 27-pattern z/v/n dataset: ideal 3×3 bitmaps, their single-bit noisy
//! variants and the 24/3 train/test split.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_SIDE: usize = 3;
pub const N_INPUTS: usize = GRID_SIDE * GRID_SIDE;
pub const N_VARIANTS: usize = N_INPUTS - 1;

/// Input vector of one pattern, row-wise flattening of the 3×3 grid.
pub type Inputs = [u8; N_INPUTS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Z,
    V,
    N,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Z, ClassLabel::V, ClassLabel::N];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Z => "z",
            ClassLabel::V => "v",
            ClassLabel::N => "n",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "z" => Ok(ClassLabel::Z),
            "v" => Ok(ClassLabel::V),
            "n" => Ok(ClassLabel::N),
            other => Err(Error::config(format!("unknown class label '{other}' (expected z, v or n)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Train => "train",
            Role::Test => "test",
        })
    }
}

/// A 3×3 binary grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bitmap([[u8; GRID_SIDE]; GRID_SIDE]);

impl Bitmap {
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        if rows.len() != GRID_SIDE {
            return Err(Error::config(format!("bitmap must have {GRID_SIDE} rows, got {}", rows.len())));
        }
        let mut grid = [[0u8; GRID_SIDE]; GRID_SIDE];
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != GRID_SIDE {
                return Err(Error::config(format!(
                    "bitmap row {} must have {GRID_SIDE} entries, got {}",
                    r + 1,
                    row.len()
                )));
            }
            for (c, &bit) in row.iter().enumerate() {
                if bit > 1 {
                    return Err(Error::config(format!("bitmap entry ({}, {}) is {bit}, not 0 or 1", r + 1, c + 1)));
                }
                grid[r][c] = bit;
            }
        }
        Ok(Bitmap(grid))
    }

    pub fn from_flat(inputs: &Inputs) -> Result<Self> {
        let rows: Vec<&[u8]> = inputs.chunks(GRID_SIDE).collect();
        Self::from_rows(&rows)
    }

    /// Row-wise flattening: grid (r, c) lands at index 3r + c.
    pub fn flatten(&self) -> Inputs {
        let mut out = [0u8; N_INPUTS];
        for (r, row) in self.0.iter().enumerate() {
            out[r * GRID_SIDE..(r + 1) * GRID_SIDE].copy_from_slice(row);
        }
        out
    }

    pub fn rows(&self) -> &[[u8; GRID_SIDE]; GRID_SIDE] {
        &self.0
    }
}

/// The three class bitmaps, in z, v, n order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bitmaps {
    pub z: Bitmap,
    pub v: Bitmap,
    pub n: Bitmap,
}

impl Default for Bitmaps {
    fn default() -> Self {
        Bitmaps {
            z: Bitmap([[1, 1, 0], [0, 1, 0], [0, 1, 1]]),
            v: Bitmap([[1, 0, 1], [1, 0, 1], [0, 1, 0]]),
            n: Bitmap([[0, 1, 0], [1, 0, 1], [1, 0, 1]]),
        }
    }
}

impl Bitmaps {
    pub fn get(&self, class: ClassLabel) -> &Bitmap {
        match class {
            ClassLabel::Z => &self.z,
            ClassLabel::V => &self.v,
            ClassLabel::N => &self.n,
        }
    }

    /// Parses three 3-line blocks of `0`/`1` characters (z, v, n order).
    /// Blank lines and `#` comments are ignored; spaces inside a row are allowed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<u8>)> = Vec::with_capacity(N_INPUTS);
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(GRID_SIDE);
            for ch in line.chars().filter(|c| !c.is_whitespace()) {
                match ch {
                    '0' => row.push(0),
                    '1' => row.push(1),
                    other => {
                        return Err(Error::config_at(lineno, format!("bitmap character '{other}' is not 0 or 1")));
                    }
                }
            }
            if row.len() != GRID_SIDE {
                return Err(Error::config_at(
                    lineno,
                    format!("bitmap row must have {GRID_SIDE} cells, got {}", row.len()),
                ));
            }
            if rows.len() == N_INPUTS {
                return Err(Error::config_at(lineno, "more than three 3-row bitmap blocks"));
            }
            rows.push((lineno, row));
        }
        if rows.len() != N_INPUTS {
            return Err(Error::config(format!(
                "expected {N_INPUTS} bitmap rows (three 3×3 blocks), found {}",
                rows.len()
            )));
        }
        let block = |i: usize| -> Result<Bitmap> {
            let chunk: Vec<&[u8]> =
                rows[i * GRID_SIDE..(i + 1) * GRID_SIDE].iter().map(|(_, r)| r.as_slice()).collect();
            Bitmap::from_rows(&chunk).map_err(|e| match e {
                Error::Config { message, .. } => Error::config_at(rows[i * GRID_SIDE].0, message),
                other => other,
            })
        };
        Ok(Bitmaps { z: block(0)?, v: block(1)?, n: block(2)? })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for class in ClassLabel::ALL {
            out.push_str(&format!("# {class}\n"));
            for row in self.get(class).rows() {
                for bit in row {
                    out.push(if *bit == 1 { '1' } else { '0' });
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub inputs: Inputs,
    pub class_label: ClassLabel,
    /// 0 for the ideal pattern, k ≥ 1 for the variant with input k+1 flipped.
    pub variant_index: u8,
    pub role: Role,
}

impl Pattern {
    pub fn id(&self) -> String {
        format!("{}{}", self.class_label, self.variant_index)
    }

    /// Indices (0-based) of inputs that are 1.
    pub fn active_inputs(&self) -> Vec<usize> {
        self.inputs.iter().enumerate().filter(|(_, &x)| x == 1).map(|(i, _)| i).collect()
    }

    pub fn ones(&self) -> usize {
        self.inputs.iter().filter(|&&x| x == 1).count()
    }
}

pub fn hamming(a: &Inputs, b: &Inputs) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub fn ideal_patterns(bitmaps: &Bitmaps) -> [Pattern; 3] {
    ClassLabel::ALL.map(|class| Pattern {
        inputs: bitmaps.get(class).flatten(),
        class_label: class,
        variant_index: 0,
        role: Role::Train,
    })
}

/// Eight noisy versions of an ideal pattern: variant k flips input k+1
/// (1-based), so the first input is never tossed. Variant 1 is held out.
pub fn generate_variants(ideal: &Pattern) -> Result<[Pattern; N_VARIANTS]> {
    if ideal.variant_index != 0 {
        return Err(Error::usage(format!("variants can only be generated from an ideal pattern, got {}", ideal.id())));
    }
    Ok(std::array::from_fn(|i| {
        let k = i + 1;
        let mut inputs = ideal.inputs;
        inputs[k] ^= 1;
        Pattern {
            inputs,
            class_label: ideal.class_label,
            variant_index: k as u8,
            role: if k == 1 { Role::Test } else { Role::Train },
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub training: Vec<Pattern>,
    pub testing: Vec<Pattern>,
    pub desired_class_above_threshold: ClassLabel,
}

impl Dataset {
    /// All 27 patterns in bar-plot order: per class, the 8 training patterns
    /// followed by that class's test pattern.
    pub fn bar_order(&self) -> Vec<Pattern> {
        let mut out = Vec::with_capacity(self.training.len() + self.testing.len());
        for class in ClassLabel::ALL {
            out.extend(self.training.iter().filter(|p| p.class_label == class).copied());
            out.extend(self.testing.iter().filter(|p| p.class_label == class).copied());
        }
        out
    }

    /// Dataset export: one row per pattern, class-major, variant-minor.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut all: Vec<Pattern> = self.training.iter().chain(&self.testing).copied().collect();
        all.sort_by_key(|p| (p.class_label, p.variant_index));
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["pattern_id".to_string(), "class".into(), "variant".into(), "role".into()];
        header.extend((1..=N_INPUTS).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for p in &all {
            let mut rec = vec![p.id(), p.class_label.to_string(), p.variant_index.to_string(), p.role.to_string()];
            rec.extend(p.inputs.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the 24 training patterns (class-blocked z, v, n; ideal first, then
/// variants 2..8) and the 3 held-out variant-1 patterns.
pub fn build_dataset(bitmaps: &Bitmaps) -> Dataset {
    let mut training = Vec::with_capacity(24);
    let mut testing = Vec::with_capacity(3);
    for ideal in ideal_patterns(bitmaps) {
        training.push(ideal);
        let variants = generate_variants(&ideal).expect("ideal pattern has variant index 0");
        for v in variants {
            match v.role {
                Role::Test => testing.push(v),
                Role::Train => training.push(v),
            }
        }
    }
    Dataset { training, testing, desired_class_above_threshold: ClassLabel::V }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_is_row_wise() {
        let ones = Bitmap::from_rows(&[[1, 1, 1], [1, 1, 1], [1, 1, 1]]).unwrap();
        assert_eq!(ones.flatten(), [1; 9]);
        let single = Bitmap::from_rows(&[[0, 0, 0], [1, 0, 0], [0, 0, 0]]).unwrap();
        assert_eq!(single.flatten(), [0, 0, 0, 1, 0, 0, 0, 0, 0]);
        assert_eq!(Bitmap::from_flat(&single.flatten()).unwrap(), single);
    }

    #[test]
    fn bad_bitmaps_are_config_errors() {
        assert!(matches!(Bitmap::from_rows(&[[0, 2, 0], [0, 0, 0], [0, 0, 0]]), Err(Error::Config { .. })));
        assert!(matches!(Bitmap::from_rows(&[vec![0, 0], vec![0, 0, 0], vec![0, 0, 0]]), Err(Error::Config { .. })));
        assert!(matches!(Bitmap::from_rows(&[[0, 0, 0], [0, 0, 0]]), Err(Error::Config { .. })));
    }

    #[test]
    fn variant_examples() {
        let zero = Pattern { inputs: [0; 9], class_label: ClassLabel::Z, variant_index: 0, role: Role::Train };
        let v = generate_variants(&zero).unwrap();
        assert_eq!(v[0].inputs, [0, 1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(v[0].role, Role::Test);
        let ones = Pattern { inputs: [1; 9], ..zero };
        let v = generate_variants(&ones).unwrap();
        assert_eq!(v[7].inputs, [1, 1, 1, 1, 1, 1, 1, 1, 0]);
        assert!(v.iter().all(|p| hamming(&p.inputs, &ones.inputs) == 1));
        assert!(v[1..].iter().all(|p| p.role == Role::Train));
    }

    #[test]
    fn variants_of_variant_rejected() {
        let ideal = ideal_patterns(&Bitmaps::default())[0];
        let v = generate_variants(&ideal).unwrap();
        assert!(matches!(generate_variants(&v[2]), Err(Error::Usage(_))));
    }

    #[test]
    fn default_dataset_shape() {
        let ds = build_dataset(&Bitmaps::default());
        assert_eq!(ds.training.len(), 24);
        assert_eq!(ds.testing.len(), 3);
        for (block, class) in ClassLabel::ALL.iter().enumerate() {
            assert!(ds.training[block * 8..(block + 1) * 8].iter().all(|p| p.class_label == *class));
            assert_eq!(ds.testing[block].class_label, *class);
            assert_eq!(ds.testing[block].variant_index, 1);
        }
        for t in &ds.testing {
            assert!(!ds.training.contains(t));
        }
        let bars = ds.bar_order();
        assert_eq!(bars.len(), 27);
        assert_eq!(bars[8].role, Role::Test);
        assert_eq!(bars[17].role, Role::Test);
        assert_eq!(bars[26].role, Role::Test);
    }

    #[test]
    fn parse_roundtrip_and_diagnostics() {
        let b = Bitmaps::default();
        assert_eq!(Bitmaps::parse(&b.to_text()).unwrap(), b);
        let text = "110\n010\n011\n\n101\n1x1\n010\n010\n101\n101\n";
        match Bitmaps::parse(text) {
            Err(Error::Config { line: Some(6), .. }) => {}
            other => panic!("expected line-6 config error, got {other:?}"),
        }
        assert!(Bitmaps::parse("110\n010\n").is_err());
        assert!(Bitmaps::parse("1 1 0\n0 1 0\n0 1 1\n101\n101\n010\n010\n101\n101\n").is_ok());
    }

    #[test]
    fn csv_has_27_rows() {
        let ds = build_dataset(&Bitmaps::default());
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 28);
        assert_eq!(lines[0], "pattern_id,class,variant,role,x1,x2,x3,x4,x5,x6,x7,x8,x9");
        assert_eq!(lines[1], "z0,z,0,train,1,1,0,0,1,0,0,1,1");
        assert_eq!(lines[2], "z1,z,1,test,1,0,0,0,1,0,0,1,1");
    }
}
