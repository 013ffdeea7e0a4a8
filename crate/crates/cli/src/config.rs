use std::path::Path;

use smooth_convolve_core::lab::{ConfigDocument, ExperimentConfig};

use crate::error::{io, CliError, Result};

/// Reads a JSON file holding one config object or an array of them and
/// returns the validated, `p`-expanded configs.
pub fn parse_config(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    parse_config_str(&text, path)
}

/// [`parse_config`] on an in-memory document; `origin` only labels errors.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<Vec<ExperimentConfig>> {
    Ok(parse_documents(text, origin)?.into_iter().flatten().collect())
}

/// Like [`parse_config_str`] but keeps the expansion of each document
/// together, so callers can tell which document a config came from.
pub fn parse_documents(text: &str, origin: &Path) -> Result<Vec<Vec<ExperimentConfig>>> {
    let syntax = |e: serde_json::Error| CliError::Syntax {
        path: origin.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    let docs: Vec<ConfigDocument> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(syntax)?
    } else {
        vec![serde_json::from_str(text).map_err(syntax)?]
    };
    docs.into_iter()
        .map(|doc| {
            let cfgs = doc.expand();
            for c in &cfgs {
                c.validate().map_err(|source| CliError::Invalid { path: origin.to_path_buf(), source })?;
            }
            Ok(cfgs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"name":"m","experiment":"maximal","n":2,"q":2,"p":2,"horizon":1,
        "g":{"recipe":"constant","matrix":[[1],[0]]}}"#;

    #[test]
    fn minimal_config_parses() {
        let v = parse_config_str(MINIMAL, Path::new("m.json")).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].trajectories, 10_000);
    }

    #[test]
    fn q_below_two_is_rejected_with_reason() {
        let e = parse_config_str(&MINIMAL.replace(r#""q":2"#, r#""q":1.5"#), Path::new("m.json")).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("2-smooth") && msg.contains("`q`"), "{msg}");
    }

    #[test]
    fn p_list_expands() {
        let v = parse_config_str(&MINIMAL.replace(r#""p":2"#, r#""p":[0.5,1,2,4]"#), Path::new("m.json")).unwrap();
        assert_eq!(v.iter().map(|c| c.p).collect::<Vec<_>>(), vec![0.5, 1.0, 2.0, 4.0]);
        assert_eq!(v[3].name, "m[p=4]");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_config_str("[\n  {\"name\": }\n]", Path::new("bad.json")).unwrap_err();
        match e {
            CliError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
        let e = parse_config_str(&MINIMAL.replace("\"n\":2", "\"n\":2,\"bogus\":1"), Path::new("m.json")).unwrap_err();
        assert!(e.to_string().contains("bogus"));
    }

    #[test]
    fn uncertifiable_generator_is_rejected() {
        let doc = MINIMAL.replace(
            r#""horizon":1,"#,
            r#""horizon":1,"generator":{"type":"dense","matrix":[[0,5],[-5,0.5]]},"#,
        );
        assert!(matches!(parse_config_str(&doc, Path::new("m.json")), Err(CliError::Invalid { .. })));
    }
}
