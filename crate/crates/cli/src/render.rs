/// Left-aligned plain-text table; the last column is not padded.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, cell) in cells.enumerate() {
            if i + 1 < cols {
                s.push_str(&format!("{cell:<w$}  ", w = widths[i]));
            } else {
                s.push_str(cell);
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&mut headers.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

/// Scientific notation, with a bare `0` for bitwise-equal results.
pub fn score(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.6e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligns_columns() {
        let t = table(
            &["name", "score"],
            &[vec!["kahan.cpp".into(), "1".into()], vec!["io.cpp".into(), "0".into()]],
        );
        assert_eq!(t, "name       score\nkahan.cpp  1\nio.cpp     0\n");
    }

    #[test]
    fn formats_scores() {
        assert_eq!(score(0.0), "0");
        assert_eq!(score(1.4210854715202004e-14), "1.421085e-14");
    }
}
