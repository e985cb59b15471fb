//! Versioned line-oriented text serialization for all model kinds.
//! Floats are printed with 17 significant digits, so save/load round-trips
//! reproduce parameters bit for bit. Lines starting with `#` are comments.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::Scaler;
use crate::mtnam::MtNamModel;
use crate::nam::baselines::{DnnModel, LrModel};
use crate::nam::{Activation, FeatureNet, NamArch, NamModel};
use crate::tree::{RegressionTree, TreeNode};
use crate::util::fmt_g17;

fn vec_line(name: &str, values: &[f64]) -> String {
    let mut s = String::from(name);
    for v in values {
        s.push(' ');
        s.push_str(&fmt_g17(*v));
    }
    s.push('\n');
    s
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    context: String,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, context: &str) -> Lines<'a> {
        Lines {
            iter: text.lines(),
            context: context.to_string(),
            lineno: 0,
        }
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Format(format!("{} line {}: {msg}", self.context, self.lineno))
    }

    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            self.lineno += 1;
            match self.iter.next() {
                None => {
                    return Err(Error::Format(format!(
                        "{}: unexpected end of file",
                        self.context
                    )))
                }
                Some(l) => {
                    let t = l.trim();
                    if t.is_empty() || t.starts_with('#') {
                        continue;
                    }
                    return Ok(t);
                }
            }
        }
    }

    /// Next line must be `key <rest>`; returns the rest.
    fn expect_key(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.strip_prefix(key) {
            Some(rest) if rest.is_empty() || rest.starts_with(' ') => Ok(rest.trim()),
            _ => Err(self.err(format!("expected {key:?}, found {line:?}"))),
        }
    }

    fn expect_usize(&mut self, key: &str) -> Result<usize> {
        let v = self.expect_key(key)?;
        v.parse()
            .map_err(|_| self.err(format!("bad integer for {key}: {v:?}")))
    }

    fn expect_f64(&mut self, key: &str) -> Result<f64> {
        let v = self.expect_key(key)?;
        v.parse()
            .map_err(|_| self.err(format!("bad float for {key}: {v:?}")))
    }

    fn expect_f64_vec(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let rest = self.expect_key(key)?;
        let vals: Vec<f64> = rest
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| self.err(format!("bad float vector for {key}")))?;
        if vals.len() != len {
            return Err(self.err(format!(
                "{key}: expected {len} values, found {}",
                vals.len()
            )));
        }
        Ok(vals)
    }
}

fn header(kind: &str, comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&format!("format {kind} v1\n"));
    out
}

fn expect_format(lines: &mut Lines, kind: &str) -> Result<()> {
    let rest = lines.expect_key("format")?;
    if rest != format!("{kind} v1") {
        return Err(lines.err(format!("expected 'format {kind} v1', found {rest:?}")));
    }
    Ok(())
}

fn scaler_block(s: &Scaler) -> String {
    let mut out = vec_line("scaler_mean", &s.mean);
    out.push_str(&vec_line("scaler_std", &s.std));
    out
}

fn read_scaler(lines: &mut Lines, m: usize) -> Result<Scaler> {
    Ok(Scaler {
        mean: lines.expect_f64_vec("scaler_mean", m)?,
        std: lines.expect_f64_vec("scaler_std", m)?,
    })
}

pub fn nam_to_string(model: &NamModel, comment: Option<&str>) -> String {
    let mut out = header("nam", comment);
    out.push_str(&format!("m {}\n", model.m()));
    out.push_str(&format!("hidden {}\n", model.arch.hidden));
    out.push_str(&format!("activation {}\n", model.arch.activation.as_str()));
    out.push_str(&format!("seed {}\n", model.init_seed));
    out.push_str(&scaler_block(&model.scaler));
    for (j, net) in model.nets.iter().enumerate() {
        out.push_str(&format!("net {j}\n"));
        out.push_str(&vec_line("w", &net.w));
        out.push_str(&vec_line("b", &net.b));
        out.push_str(&vec_line("v", &net.v));
        out.push_str(&format!("c {}\n", fmt_g17(net.c)));
    }
    out.push_str("end\n");
    out
}

pub fn nam_from_str(text: &str, context: &str) -> Result<NamModel> {
    let mut lines = Lines::new(text, context);
    expect_format(&mut lines, "nam")?;
    let m = lines.expect_usize("m")?;
    let hidden = lines.expect_usize("hidden")?;
    let activation = Activation::parse(lines.expect_key("activation")?)?;
    let seed: u64 = lines
        .expect_key("seed")?
        .parse()
        .map_err(|_| lines.err("bad seed"))?;
    let scaler = read_scaler(&mut lines, m)?;
    let mut nets = Vec::with_capacity(m);
    for j in 0..m {
        let idx = lines.expect_usize("net")?;
        if idx != j {
            return Err(lines.err(format!("expected net {j}, found {idx}")));
        }
        nets.push(FeatureNet {
            activation,
            w: lines.expect_f64_vec("w", hidden)?,
            b: lines.expect_f64_vec("b", hidden)?,
            v: lines.expect_f64_vec("v", hidden)?,
            c: lines.expect_f64("c")?,
        });
    }
    lines.expect_key("end")?;
    Ok(NamModel {
        nets,
        arch: NamArch { hidden, activation },
        scaler,
        init_seed: seed,
    })
}

fn tree_lines(node: &TreeNode, out: &mut String) {
    match node {
        TreeNode::Leaf { value } => out.push_str(&format!("L {}\n", fmt_g17(*value))),
        TreeNode::Split {
            threshold,
            left,
            right,
        } => {
            out.push_str(&format!("I {}\n", fmt_g17(*threshold)));
            tree_lines(left, out);
            tree_lines(right, out);
        }
    }
}

fn read_tree_node(lines: &mut Lines) -> Result<TreeNode> {
    let line = lines.next_line()?;
    if let Some(v) = line.strip_prefix("L ") {
        let value = v
            .trim()
            .parse::<f64>()
            .map_err(|_| lines.err(format!("bad leaf value {v:?}")))?;
        Ok(TreeNode::Leaf { value })
    } else if let Some(t) = line.strip_prefix("I ") {
        let threshold = t
            .trim()
            .parse::<f64>()
            .map_err(|_| lines.err(format!("bad threshold {t:?}")))?;
        let left = Box::new(read_tree_node(lines)?);
        let right = Box::new(read_tree_node(lines)?);
        Ok(TreeNode::Split {
            threshold,
            left,
            right,
        })
    } else {
        Err(lines.err(format!("expected tree node line, found {line:?}")))
    }
}

/// Pre-order node listing per tree: `I threshold` / `L value` lines.
pub fn mtnam_to_string(model: &MtNamModel, comment: Option<&str>) -> String {
    let mut out = header("mtnam", comment);
    out.push_str(&format!("m {}\n", model.m()));
    out.push_str(&format!("depth {}\n", model.depth()));
    out.push_str(&format!("teacher_hash {:016x}\n", model.teacher_hash()));
    out.push_str(&scaler_block(model.scaler()));
    for (j, tree) in model.trees().iter().enumerate() {
        out.push_str(&format!("tree {j}\n"));
        tree_lines(&tree.root, &mut out);
    }
    out.push_str("end\n");
    out
}

pub fn mtnam_from_str(text: &str, context: &str) -> Result<MtNamModel> {
    let mut lines = Lines::new(text, context);
    expect_format(&mut lines, "mtnam")?;
    let m = lines.expect_usize("m")?;
    let depth = lines.expect_usize("depth")?;
    let hash_hex = lines.expect_key("teacher_hash")?;
    let teacher_hash = u64::from_str_radix(hash_hex, 16)
        .map_err(|_| lines.err(format!("bad teacher hash {hash_hex:?}")))?;
    let scaler = read_scaler(&mut lines, m)?;
    let mut trees = Vec::with_capacity(m);
    for j in 0..m {
        let idx = lines.expect_usize("tree")?;
        if idx != j {
            return Err(lines.err(format!("expected tree {j}, found {idx}")));
        }
        trees.push(RegressionTree {
            root: read_tree_node(&mut lines)?,
            max_depth: depth,
        });
    }
    lines.expect_key("end")?;
    MtNamModel::new(trees, depth, teacher_hash, scaler)
}

pub fn lr_to_string(model: &LrModel, comment: Option<&str>) -> String {
    let mut out = header("lr", comment);
    out.push_str(&format!("m {}\n", model.m()));
    out.push_str(&format!("lambda {}\n", fmt_g17(model.lambda)));
    out.push_str(&scaler_block(&model.scaler));
    out.push_str(&vec_line("weights", &model.weights));
    out.push_str(&format!("bias {}\n", fmt_g17(model.bias)));
    out.push_str("end\n");
    out
}

pub fn lr_from_str(text: &str, context: &str) -> Result<LrModel> {
    let mut lines = Lines::new(text, context);
    expect_format(&mut lines, "lr")?;
    let m = lines.expect_usize("m")?;
    let lambda = lines.expect_f64("lambda")?;
    let scaler = read_scaler(&mut lines, m)?;
    let weights = lines.expect_f64_vec("weights", m)?;
    let bias = lines.expect_f64("bias")?;
    lines.expect_key("end")?;
    Ok(LrModel {
        weights,
        bias,
        lambda,
        scaler,
    })
}

pub fn dnn_to_string(model: &DnnModel, comment: Option<&str>) -> String {
    let mut out = header("dnn", comment);
    out.push_str(&format!("m {}\n", model.m));
    out.push_str(&format!("hidden {}\n", model.hidden));
    out.push_str(&scaler_block(&model.scaler));
    for u in 0..model.hidden {
        out.push_str(&vec_line("w1", &model.w1[u * model.m..(u + 1) * model.m]));
    }
    out.push_str(&vec_line("b1", &model.b1));
    out.push_str(&vec_line("v", &model.v));
    out.push_str(&format!("c {}\n", fmt_g17(model.c)));
    out.push_str("end\n");
    out
}

pub fn dnn_from_str(text: &str, context: &str) -> Result<DnnModel> {
    let mut lines = Lines::new(text, context);
    expect_format(&mut lines, "dnn")?;
    let m = lines.expect_usize("m")?;
    let hidden = lines.expect_usize("hidden")?;
    let scaler = read_scaler(&mut lines, m)?;
    let mut w1 = Vec::with_capacity(hidden * m);
    for _ in 0..hidden {
        w1.extend(lines.expect_f64_vec("w1", m)?);
    }
    let b1 = lines.expect_f64_vec("b1", hidden)?;
    let v = lines.expect_f64_vec("v", hidden)?;
    let c = lines.expect_f64("c")?;
    lines.expect_key("end")?;
    Ok(DnnModel {
        m,
        hidden,
        w1,
        b1,
        v,
        c,
        scaler,
    })
}

macro_rules! file_io {
    ($save:ident, $load:ident, $to_string:ident, $from_str:ident, $ty:ty) => {
        pub fn $save(path: &Path, model: &$ty, comment: Option<&str>) -> Result<()> {
            fs::write(path, $to_string(model, comment)).map_err(|e| Error::io(path, e))
        }

        pub fn $load(path: &Path) -> Result<$ty> {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            $from_str(&text, &path.display().to_string())
        }
    };
}

file_io!(save_nam, load_nam, nam_to_string, nam_from_str, NamModel);
file_io!(
    save_mtnam,
    load_mtnam,
    mtnam_to_string,
    mtnam_from_str,
    MtNamModel
);
file_io!(save_lr, load_lr, lr_to_string, lr_from_str, LrModel);
file_io!(save_dnn, load_dnn, dnn_to_string, dnn_from_str, DnnModel);
