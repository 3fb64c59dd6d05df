//! Threshold grids: `0,0.1,0.5` or inclusive `start:stop:step`.

pub const DEFAULT_T_GRID: &str = "0,0.1,0.25,0.5";
pub const DEFAULT_R_GRID: &str = "0:1:0.05";

pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(format!("range `{text}` must be start:stop:step"));
        };
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        if step <= 0.0 {
            return Err(format!("range step must be positive in `{text}`"));
        }
        if stop < start {
            return Err(format!("range `{text}` has stop below start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        // snap to 1e-9 so 0.05 * 3 prints as 0.15
        (0..=n).map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        text.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("empty grid".into());
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(format!("grid value {v} outside [0, 1]"));
    }
    Ok(values)
}

fn number(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_grid("0,0.1,0.5").unwrap(), vec![0.0, 0.1, 0.5]);
        let r = parse_grid(DEFAULT_R_GRID).unwrap();
        assert_eq!(r.len(), 21);
        assert_eq!(r[3], 0.15);
        assert_eq!(r[20], 1.0);
        assert_eq!(parse_grid("0.2:0.2:0.1").unwrap(), vec![0.2]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(parse_grid("").is_err());
        assert!(parse_grid("0,1.5").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a,b").is_err());
    }
}
