//! Directory layout:
//!
//! ```text
//! ensemble.txt            set_size,<s> / partitions,<L>
//! global.model            soft-label model over all training classes
//! partition_<l>.txt       membership, calibration table and linear rule
//! partition_<l>.model     soft-label model over the presumed-known classes
//! ```
//!
//! Partition files hold one `name,index...,value` line per entry:
//! `index,<l>`, `known,<class>`, `novel,<class>`, `theta,<class>,<v>`,
//! `w,<0|1>,<v>`, `b,<v>`, `mean,<0|1>,<v>`, `std,<0|1>,<v>`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{BinaryNoveltyClassifier, EnsembleModel, LinearSeparator, Partition, Standardizer};
use crate::dataset::ClassIndex;
use crate::error::{Error, Result};
use crate::softlabel::SoftLabelModel;

fn write(path: PathBuf, text: String) -> Result<()> {
    fs::write(&path, text).map_err(|source| Error::Io { path, source })
}

fn read(path: PathBuf) -> Result<String> {
    fs::read_to_string(&path).map_err(|source| Error::Io { path, source })
}

fn partition_text(h: &BinaryNoveltyClassifier, classes: &ClassIndex) -> String {
    let mut out = String::new();
    let p = &h.partition;
    let _ = writeln!(out, "index,{}", p.index);
    for &c in &p.known {
        let _ = writeln!(out, "known,{}", classes.name(c));
    }
    for &c in &p.novel {
        let _ = writeln!(out, "novel,{}", classes.name(c));
    }
    for (&c, theta) in p.known.iter().zip(&h.theta_table) {
        let _ = writeln!(out, "theta,{},{theta:?}", classes.name(c));
    }
    let sep = &h.separator;
    for j in 0..2 {
        let _ = writeln!(out, "w,{j},{:?}", sep.w[j]);
    }
    let _ = writeln!(out, "b,{:?}", sep.b);
    for j in 0..2 {
        let _ = writeln!(out, "mean,{j},{:?}", sep.standardizer.mean[j]);
    }
    for j in 0..2 {
        let _ = writeln!(out, "std,{j},{:?}", sep.standardizer.std[j]);
    }
    out
}

fn parse_partition(
    text: &str,
    classes: &ClassIndex,
    model: SoftLabelModel,
) -> Result<BinaryNoveltyClassifier> {
    let bad = |msg: String| Error::invalid(format!("partition file: {msg}"));
    let class = |name: &str| {
        classes
            .index_of(name)
            .ok_or_else(|| bad(format!("unknown class `{name}`")))
    };
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| bad(format!("bad number `{s}`")))
    };
    let slot = |s: &str| match s {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(bad(format!("bad coordinate `{s}`"))),
    };

    let mut index = None;
    let (mut known, mut novel, mut thetas) = (Vec::new(), Vec::new(), Vec::new());
    let (mut w, mut mean, mut std) = ([f64::NAN; 2], [f64::NAN; 2], [f64::NAN; 2]);
    let mut b = f64::NAN;
    for line in text.lines().filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        match (f[0], f.len()) {
            ("index", 2) => index = Some(f[1].parse::<usize>().map_err(|_| bad(line.into()))?),
            ("known", 2) => known.push(class(f[1])?),
            ("novel", 2) => novel.push(class(f[1])?),
            ("theta", 3) => thetas.push((class(f[1])?, num(f[2])?)),
            ("w", 3) => w[slot(f[1])?] = num(f[2])?,
            ("b", 2) => b = num(f[1])?,
            ("mean", 3) => mean[slot(f[1])?] = num(f[2])?,
            ("std", 3) => std[slot(f[1])?] = num(f[2])?,
            _ => return Err(bad(format!("unrecognized line `{line}`"))),
        }
    }
    let index = index.ok_or_else(|| bad("missing index".into()))?;
    if w.iter()
        .chain(&mean)
        .chain(&std)
        .chain([&b])
        .any(|v| v.is_nan())
    {
        return Err(bad("missing separator parameters".into()));
    }
    let partition = Partition::new(index, known, novel)?;
    let mut theta_table = vec![f64::NAN; partition.known.len()];
    for (c, theta) in thetas {
        let pos = partition
            .known_position(c)
            .ok_or_else(|| bad(format!("theta for non-known class {c}")))?;
        theta_table[pos] = theta;
    }
    if theta_table.iter().any(|t| t.is_nan()) {
        return Err(bad("theta table does not cover every known class".into()));
    }
    let expected: Vec<&str> = partition.known.iter().map(|&c| classes.name(c)).collect();
    if model.classes().names() != expected.as_slice() {
        return Err(bad(
            "partition model classes differ from the known set".into()
        ));
    }
    Ok(BinaryNoveltyClassifier {
        partition,
        model,
        theta_table,
        separator: LinearSeparator {
            w,
            b,
            standardizer: Standardizer { mean, std },
        },
    })
}

impl EnsembleModel {
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let classes = self.global_model.classes();
        write(
            dir.join("ensemble.txt"),
            format!("set_size,{}\npartitions,{}\n", self.set_size, self.len()),
        )?;
        write(dir.join("global.model"), self.global_model.to_text())?;
        for (l, h) in self.classifiers.iter().enumerate() {
            write(
                dir.join(format!("partition_{l}.txt")),
                partition_text(h, classes),
            )?;
            write(dir.join(format!("partition_{l}.model")), h.model.to_text())?;
        }
        Ok(())
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let header = read(dir.join("ensemble.txt"))?;
        let (mut set_size, mut count) = (None, None);
        for line in header.lines() {
            match line.split_once(',') {
                Some(("set_size", v)) => set_size = v.parse().ok(),
                Some(("partitions", v)) => count = v.parse().ok(),
                _ => {}
            }
        }
        let (set_size, count): (usize, usize) = set_size
            .zip(count)
            .ok_or_else(|| Error::invalid("ensemble.txt lacks set_size or partitions"))?;
        let global_model = SoftLabelModel::from_text(&read(dir.join("global.model"))?)?;
        let classifiers = (0..count)
            .map(|l| {
                let model =
                    SoftLabelModel::from_text(&read(dir.join(format!("partition_{l}.model")))?)?;
                parse_partition(
                    &read(dir.join(format!("partition_{l}.txt")))?,
                    global_model.classes(),
                    model,
                )
                .map_err(|e| e.context(format!("partition {l}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            global_model,
            classifiers,
            set_size,
        })
    }
}
