use std::fmt::Write as _;
use std::path::Path;

use super::{MlpModel, NnetError, Stat};
use crate::lang::VarKind;

const MAGIC: &str = "nsxmodel";
const VERSION: &str = "v1";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn kind_of(s: &str) -> Option<VarKind> {
    match s {
        "int" => Some(VarKind::Int),
        "real" => Some(VarKind::Real),
        _ => None,
    }
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<Vec<&'a str>, NnetError> {
        loop {
            let Some((i, l)) = self.it.next() else {
                return Err(NnetError::Malformed { line: self.line + 1, msg: format!("unexpected end of file, expected {what}") });
            };
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Ok(l.split_whitespace().collect());
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> NnetError {
        NnetError::Malformed { line: self.line, msg: msg.into() }
    }

    fn keyword(&mut self, kw: &str) -> Result<Vec<&'a str>, NnetError> {
        let t = self.next(kw)?;
        if t[0] != kw {
            return Err(self.err(format!("expected `{kw}`, found `{}`", t[0])));
        }
        Ok(t[1..].to_vec())
    }

    fn float(&self, s: &str) -> Result<f64, NnetError> {
        s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| self.err(format!("`{s}` is not a finite number")))
    }

    fn usize(&self, s: &str) -> Result<usize, NnetError> {
        s.parse::<usize>().map_err(|_| self.err(format!("`{s}` is not a size")))
    }

    fn floats(&mut self, n: usize, what: &str) -> Result<Vec<f64>, NnetError> {
        let t = self.next(what)?;
        if t.len() != n {
            return Err(NnetError::Shape(format!("line {}: {what} has {} values, declared {n}", self.line, t.len())));
        }
        t.iter().map(|s| self.float(s)).collect()
    }
}

impl MlpModel {
    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC} {VERSION}\nlayers");
        for l in &self.layer_sizes {
            write!(s, " {l}").unwrap();
        }
        s.push('\n');
        let io = [
            ("input", &self.input_names, &self.input_kinds, &self.input_stats),
            ("output", &self.output_names, &self.output_kinds, &self.output_stats),
        ];
        for (tag, names, kinds, stats) in io {
            for ((n, k), st) in names.iter().zip(kinds).zip(stats) {
                writeln!(s, "{tag} {n} {} {} {}", k.keyword(), num(st.mean), num(st.std)).unwrap();
            }
        }
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            writeln!(s, "weights {l} {n_out} {n_in}").unwrap();
            for row in w.chunks(n_in) {
                s.push_str(&row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "));
                s.push('\n');
            }
            writeln!(s, "bias {l} {n_out}").unwrap();
            s.push_str(&b.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "));
            s.push('\n');
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<MlpModel, NnetError> {
        let mut ln = Lines { it: text.lines().enumerate(), line: 0 };
        let head = ln.next("header")?;
        if head.first() != Some(&MAGIC) || head.len() != 2 {
            return Err(ln.err("missing `nsxmodel` header"));
        }
        if head[1] != VERSION {
            return Err(NnetError::Version(head[1].to_string()));
        }
        let sizes = ln.keyword("layers")?;
        let layer_sizes = sizes.iter().map(|s| ln.usize(s)).collect::<Result<Vec<_>, _>>()?;
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(NnetError::Shape(format!("layer sizes {layer_sizes:?}")));
        }
        let n_out = *layer_sizes.last().unwrap();
        let mut m = MlpModel {
            layer_sizes: layer_sizes.clone(),
            weights: Vec::new(),
            biases: Vec::new(),
            input_names: Vec::new(),
            input_kinds: Vec::new(),
            output_names: Vec::new(),
            output_kinds: Vec::new(),
            input_stats: Vec::new(),
            output_stats: Vec::new(),
        };
        for (tag, count) in [("input", layer_sizes[0]), ("output", n_out)] {
            for _ in 0..count {
                let t = ln.keyword(tag)?;
                if t.len() != 4 {
                    return Err(ln.err(format!("`{tag}` needs name, kind, mean and std")));
                }
                let kind = kind_of(t[1]).ok_or_else(|| ln.err(format!("unknown kind `{}`", t[1])))?;
                let st = Stat { mean: ln.float(t[2])?, std: ln.float(t[3])? };
                let (names, kinds, stats) = if tag == "input" {
                    (&mut m.input_names, &mut m.input_kinds, &mut m.input_stats)
                } else {
                    (&mut m.output_names, &mut m.output_kinds, &mut m.output_stats)
                };
                names.push(t[0].to_string());
                kinds.push(kind);
                stats.push(st);
            }
        }
        for l in 0..layer_sizes.len() - 1 {
            let (n_in, n_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let t = ln.keyword("weights")?;
            let dims = t.iter().map(|s| ln.usize(s)).collect::<Result<Vec<_>, _>>()?;
            if dims != [l, n_out, n_in] {
                return Err(NnetError::Shape(format!("line {}: weight block {dims:?}, expected [{l}, {n_out}, {n_in}]", ln.line)));
            }
            let mut w = Vec::with_capacity(n_in * n_out);
            for _ in 0..n_out {
                w.extend(ln.floats(n_in, "weight row")?);
            }
            let t = ln.keyword("bias")?;
            let dims = t.iter().map(|s| ln.usize(s)).collect::<Result<Vec<_>, _>>()?;
            if dims != [l, n_out] {
                return Err(NnetError::Shape(format!("line {}: bias block {dims:?}, expected [{l}, {n_out}]", ln.line)));
            }
            m.weights.push(w);
            m.biases.push(ln.floats(n_out, "bias")?);
        }
        ln.keyword("end")?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NnetError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<MlpModel, NnetError> {
        MlpModel::from_text(&std::fs::read_to_string(path)?)
    }
}
