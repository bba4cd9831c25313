use std::process::Command;

use crate::lang::{VarDecl, VarKind};
use crate::value::{Assignment, Value};

use super::{SampleRun, TargetProgram};

/// A program run as a subprocess.
///
/// Each argument of `command` may contain `{name}` placeholders, replaced by
/// the input values; inputs are also exported as `NSX_IN_<name>`. The program
/// reports state on stdout with lines `OBS cnt=<int> name=value ...`; any
/// other output is ignored, and a non-zero exit skips the run.
#[derive(Debug, Clone)]
pub struct ExternalProgram {
    pub name: String,
    pub command: Vec<String>,
    pub inputs: Vec<VarDecl>,
    pub observed: Vec<VarDecl>,
    pub step_limit: usize,
}

fn raw(v: &Value) -> String {
    match v {
        Value::Str(s) => s.clone(),
        v => v.to_string(),
    }
}

impl ExternalProgram {
    fn render(&self, inputs: &Assignment) -> Vec<String> {
        self.command
            .iter()
            .map(|arg| {
                let mut s = arg.clone();
                for (k, v) in inputs.iter() {
                    s = s.replace(&format!("{{{k}}}"), &raw(v));
                }
                s
            })
            .collect()
    }

    fn parse_line(&self, line: &str) -> Result<(usize, Assignment), String> {
        let mut cnt = None;
        let mut obs = Assignment::new();
        for tok in line.split_whitespace().skip(1) {
            let (k, v) = tok.split_once('=').ok_or_else(|| format!("malformed observation `{tok}`"))?;
            if k == "cnt" {
                cnt = Some(v.parse::<usize>().map_err(|_| format!("bad cnt `{v}`"))?);
                continue;
            }
            let Some(d) = self.observed.iter().find(|d| d.name == k) else { continue };
            let x: f64 = v.parse().map_err(|_| format!("bad value `{v}` for {k}"))?;
            let val = match d.kind {
                VarKind::Int if x.fract() == 0.0 => Value::Int(x as i64),
                VarKind::Int => return Err(format!("non-integer value `{v}` for {k}")),
                _ => Value::Real(x),
            };
            obs.insert(k, val);
        }
        let cnt = cnt.ok_or("observation without cnt")?;
        if let Some(d) = self.observed.iter().find(|d| !obs.contains(&d.name)) {
            return Err(format!("observation at cnt={cnt} lacks `{}`", d.name));
        }
        Ok((cnt, obs))
    }
}

impl TargetProgram for ExternalProgram {
    fn name(&self) -> &str {
        &self.name
    }

    fn inputs(&self) -> &[VarDecl] {
        &self.inputs
    }

    fn observed(&self) -> &[VarDecl] {
        &self.observed
    }

    fn step_limit(&self) -> usize {
        self.step_limit
    }

    fn run(&self, inputs: &Assignment) -> Result<SampleRun, String> {
        let argv = self.render(inputs);
        let (prog, args) = argv.split_first().ok_or("empty command")?;
        let mut cmd = Command::new(prog);
        cmd.args(args);
        for (k, v) in inputs.iter() {
            cmd.env(format!("NSX_IN_{k}"), raw(v));
        }
        let out = cmd.output().map_err(|e| format!("spawning `{prog}`: {e}"))?;
        if !out.status.success() {
            return Err(format!("`{prog}` exited with {}", out.status));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let mut rows: Vec<(usize, Assignment)> = Vec::new();
        for line in text.lines().filter(|l| l.starts_with("OBS ")) {
            let (cnt, obs) = self.parse_line(line)?;
            if cnt != rows.len() {
                return Err(format!("expected cnt={}, got cnt={cnt}", rows.len()));
            }
            if cnt > self.step_limit {
                break;
            }
            rows.push((cnt, obs));
        }
        if rows.is_empty() {
            return Err("no observations".into());
        }
        Ok(SampleRun { inputs: inputs.clone(), rows })
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    fn prog(script: &str) -> ExternalProgram {
        ExternalProgram {
            name: "ext".into(),
            command: vec!["sh".into(), "-c".into(), script.into(), "sh".into(), "{n}".into()],
            inputs: vec![VarDecl::new("n", VarKind::Int).with_range(0.0, 5.0)],
            observed: vec![VarDecl::new("i", VarKind::Int)],
            step_limit: 3,
        }
    }

    fn input(n: i64) -> Assignment {
        [("n".to_string(), Value::Int(n))].into_iter().collect()
    }

    #[test]
    fn reads_observation_lines() {
        let p = prog("i=0; while [ $i -le $1 ]; do echo \"OBS cnt=$i i=$((i*NSX_IN_n))\"; echo noise; i=$((i+1)); done");
        let r = p.run(&input(2)).unwrap();
        let got: Vec<_> = r.rows.iter().map(|(c, a)| (*c, a.num("i").unwrap())).collect();
        assert_eq!(got, [(0, 0.0), (1, 2.0), (2, 4.0)]);
        assert_eq!(p.run(&input(5)).unwrap().rows.len(), 4);
    }

    #[test]
    fn failures_skip_the_run() {
        assert!(prog("exit 3").run(&input(1)).is_err());
        assert!(prog("echo 'OBS cnt=1 i=0'").run(&input(1)).is_err());
        assert!(prog("echo 'OBS cnt=0'").run(&input(1)).is_err());
        let (d, s) = super::super::sample(&prog("echo \"OBS cnt=0 i=$1\"; [ $1 -lt 3 ]"), 40, 1).unwrap();
        assert_eq!(s.rows + s.skipped, 40);
        assert!(s.skipped > 0 && s.rows > 0);
        assert!(d.rows.iter().all(|r| r[0] < 3.0));
    }
}
