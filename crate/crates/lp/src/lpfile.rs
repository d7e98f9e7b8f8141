//! Writer for the CPLEX-style LP text format.

use std::fmt::Write as _;

use crate::model::{is_valid_name, ConstraintSense, LinearModel, ModelError, VarId, VarKind};

const TERMS_PER_LINE: usize = 8;

/// Format a number like C's `%.17g`.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "+inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..17).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_expr(out: &mut String, model: &LinearModel, terms: &[(VarId, f64)]) {
    if terms.is_empty() {
        // The format has no empty expression; a zero multiple of any column stands in.
        let name = model.variables().first().map(|v| v.name.as_str()).unwrap_or("");
        let _ = write!(out, " 0 {name}");
        return;
    }
    for (k, (v, c)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if *c < 0.0 { '-' } else { '+' };
        let mag = format_g17(c.abs());
        let name = &model.variable(*v).name;
        if k == 0 && sign == '+' {
            let _ = write!(out, " {mag} {name}");
        } else {
            let _ = write!(out, " {sign} {mag} {name}");
        }
    }
}

/// Serialise a model to LP text. Output depends only on the model contents, so
/// identical models give identical bytes.
pub fn emit_lp_file(model: &LinearModel) -> Result<String, ModelError> {
    model.validate()?;
    for v in model.variables() {
        if !is_valid_name(&v.name) {
            return Err(ModelError::InvalidName(v.name.clone()));
        }
    }
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    write_expr(&mut out, model, model.objective());
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}:", c.name);
        write_expr(&mut out, model, &c.terms);
        let op = match c.sense {
            ConstraintSense::Le => "<=",
            ConstraintSense::Ge => ">=",
            ConstraintSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", format_g17(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.variables() {
        if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", v.name, format_g17(v.lower));
        } else if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", format_g17(v.lower), v.name, format_g17(v.upper));
        }
    }
    out.push_str("Binaries\n");
    for v in model.variables().iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_formatting() {
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(2.0), "2");
        assert_eq!(format_g17(-3.5), "-3.5");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(480.0), "480");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(1.25e-7), "1.2499999999999999e-07");
        assert_eq!(format_g17(123456789.0), "123456789");
        assert_eq!(format_g17(f64::INFINITY), "+inf");
    }

    #[test]
    fn g17_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.0 / 7.0, 1e-300, 6.02e23, 7.5, 12345.678901234567] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn golden_single_variable() {
        let mut m = LinearModel::new();
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        m.set_objective([(x, 1.0)]).unwrap();
        let text = emit_lp_file(&m).unwrap();
        assert_eq!(
            text,
            "Minimize\n obj: 1 x\nSubject To\nBounds\n 0 <= x <= 1\nBinaries\nEnd\n"
        );
        assert_eq!(text, emit_lp_file(&m).unwrap());
    }

    #[test]
    fn binaries_and_signs() {
        let mut m = LinearModel::new();
        let b = m.add_binary("b").unwrap();
        let y = m.add_continuous("y", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let z = m.add_continuous("z", 2.0, 2.0).unwrap();
        m.set_objective([(y, -1.0), (b, 2.5)]).unwrap();
        m.add_constraint("c1", [(b, -1.0), (y, 1.0), (z, 1.0)], ConstraintSense::Le, 4.0).unwrap();
        let text = emit_lp_file(&m).unwrap();
        assert!(text.contains(" obj: - 1 y + 2.5 b\n"));
        assert!(text.contains(" c1: - 1 b + 1 y + 1 z <= 4\n"));
        assert!(text.contains(" y free\n"));
        assert!(text.contains(" z = 2\n"));
        assert!(text.ends_with("Binaries\n b\nEnd\n"));
    }

    #[test]
    fn long_rows_wrap() {
        let mut m = LinearModel::new();
        let vars: Vec<_> = (0..20).map(|k| m.add_continuous(format!("v{k}"), 0.0, 1.0).unwrap()).collect();
        m.add_constraint("row", vars.iter().map(|v| (*v, 1.0)), ConstraintSense::Ge, 1.0).unwrap();
        let text = emit_lp_file(&m).unwrap();
        assert!(text.lines().all(|l| l.len() < 255));
    }
}
