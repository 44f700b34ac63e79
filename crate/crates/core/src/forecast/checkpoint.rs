//! Text checkpoints: named parameter tensors with shapes plus the model
//! config. Floats are written with 17 significant digits, which round-trip
//! `f64` exactly.

use std::io::{BufRead, Write};

use super::cgru::{CGruConfig, CGruModel};
use super::time_gru::TimeGruModel;
use super::{ForecastError, UpdateRule};

const MAGIC: &str = "freqcast-checkpoint v1";

pub fn save_cgru<W: Write>(model: &CGruModel<f64>, mut out: W) -> Result<(), ForecastError> {
    let cfg = model.config();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "model cgru")?;
    writeln!(out, "hidden {}", cfg.hidden)?;
    writeln!(out, "window {}", cfg.window)?;
    writeln!(out, "horizon {}", cfg.horizon)?;
    let rule = match cfg.rule {
        UpdateRule::StandardGru => "standard",
        UpdateRule::SigmoidWrapped => "sigmoid-wrapped",
    };
    writeln!(out, "rule {rule}")?;
    write_tensors(&model.tensors(), out)
}

pub fn save_time_gru<W: Write>(model: &TimeGruModel<f64>, mut out: W) -> Result<(), ForecastError> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "model time-gru")?;
    writeln!(out, "hidden {}", model.hidden())?;
    writeln!(out, "horizon {}", model.horizon())?;
    write_tensors(&model.tensors(), out)
}

fn write_tensors<W: Write>(
    tensors: &[(&'static str, &[f64])],
    mut out: W,
) -> Result<(), ForecastError> {
    for (name, data) in tensors {
        writeln!(out, "tensor {name} {}", data.len())?;
        for v in *data {
            writeln!(out, "{v:.16e}")?;
        }
    }
    Ok(())
}

pub fn load_cgru<R: BufRead>(input: R) -> Result<CGruModel<f64>, ForecastError> {
    let mut lines = Lines::new(input)?;
    lines.expect(MAGIC)?;
    lines.expect("model cgru")?;
    let hidden = lines.keyed_usize("hidden")?;
    let window = lines.keyed_usize("window")?;
    let horizon = lines.keyed_usize("horizon")?;
    let rule = match lines.keyed_value("rule")?.as_str() {
        "standard" => UpdateRule::StandardGru,
        "sigmoid-wrapped" => UpdateRule::SigmoidWrapped,
        other => {
            return Err(ForecastError::Checkpoint(format!(
                "unknown update rule `{other}`"
            )))
        }
    };
    let mut model = CGruModel::zeros(CGruConfig {
        hidden,
        window,
        horizon,
        rule,
    })?;
    lines.read_tensors(model.tensors_mut())?;
    Ok(model)
}

pub fn load_time_gru<R: BufRead>(input: R) -> Result<TimeGruModel<f64>, ForecastError> {
    let mut lines = Lines::new(input)?;
    lines.expect(MAGIC)?;
    lines.expect("model time-gru")?;
    let hidden = lines.keyed_usize("hidden")?;
    let horizon = lines.keyed_usize("horizon")?;
    let mut model = TimeGruModel::zeros(hidden, horizon)?;
    lines.read_tensors(model.tensors_mut())?;
    Ok(model)
}

struct Lines {
    lines: std::vec::IntoIter<String>,
}

impl Lines {
    fn new<R: BufRead>(input: R) -> Result<Self, ForecastError> {
        let lines: Vec<String> = input.lines().collect::<Result<_, _>>()?;
        Ok(Self {
            lines: lines.into_iter(),
        })
    }

    fn next(&mut self) -> Result<String, ForecastError> {
        self.lines
            .next()
            .ok_or_else(|| ForecastError::Checkpoint("unexpected end of file".into()))
    }

    fn expect(&mut self, want: &str) -> Result<(), ForecastError> {
        let got = self.next()?;
        if got != want {
            return Err(ForecastError::Checkpoint(format!(
                "expected `{want}`, found `{got}`"
            )));
        }
        Ok(())
    }

    fn keyed_value(&mut self, key: &str) -> Result<String, ForecastError> {
        let line = self.next()?;
        line.strip_prefix(&format!("{key} "))
            .map(str::to_string)
            .ok_or_else(|| ForecastError::Checkpoint(format!("expected `{key} ...`, found `{line}`")))
    }

    fn keyed_usize(&mut self, key: &str) -> Result<usize, ForecastError> {
        let value = self.keyed_value(key)?;
        value
            .parse()
            .map_err(|_| ForecastError::Checkpoint(format!("bad {key} `{value}`")))
    }

    fn read_tensors(&mut self, tensors: Vec<(&'static str, &mut [f64])>) -> Result<(), ForecastError> {
        for (name, data) in tensors {
            let header = self.next()?;
            let expected = format!("tensor {name} {}", data.len());
            if header != expected {
                return Err(ForecastError::Checkpoint(format!(
                    "expected `{expected}`, found `{header}`"
                )));
            }
            for v in data.iter_mut() {
                let line = self.next()?;
                *v = line
                    .parse()
                    .map_err(|_| ForecastError::Checkpoint(format!("bad float `{line}` in {name}")))?;
            }
        }
        if let Some(extra) = self.lines.next() {
            if !extra.trim().is_empty() {
                return Err(ForecastError::Checkpoint(format!(
                    "trailing content `{extra}`"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cgru_checkpoint_roundtrips_exactly() {
        let model = CGruModel::<f64>::seeded(
            CGruConfig {
                hidden: 5,
                window: 3,
                horizon: 8,
                rule: UpdateRule::SigmoidWrapped,
            },
            1234,
        )
        .unwrap();
        let mut buf = Vec::new();
        save_cgru(&model, &mut buf).unwrap();
        let loaded = load_cgru(buf.as_slice()).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn time_gru_checkpoint_roundtrips_exactly() {
        let model = TimeGruModel::<f64>::seeded(7, 12, 99).unwrap();
        let mut buf = Vec::new();
        save_time_gru(&model, &mut buf).unwrap();
        let loaded = load_time_gru(buf.as_slice()).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn corrupted_header_rejected() {
        let model = TimeGruModel::<f64>::seeded(2, 4, 1).unwrap();
        let mut buf = Vec::new();
        save_time_gru(&model, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("time-gru", "lstm");
        assert!(load_time_gru(text.as_bytes()).is_err());
    }

    #[test]
    fn truncated_file_rejected() {
        let model = TimeGruModel::<f64>::seeded(2, 4, 1).unwrap();
        let mut buf = Vec::new();
        save_time_gru(&model, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(load_time_gru(cut.as_bytes()).is_err());
    }
}
