use std::path::Path;

use crate::Failure;

/// Shortest decimal that parses back to `x` (never more than 17
/// significant digits), in exponent form outside `[1e-5, 1e16)`.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Writes to `dest`, or stdout when it is `None`.
pub fn write_text(dest: Option<&Path>, text: &str) -> Result<(), Failure> {
    match dest {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Numerical(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Numerical(format!("stdout: {e}")))
        }
    }
}
